#pragma once

#include <polydawg/engines/catalog.hpp>

#include <atomic>

namespace polydawg {

/** How to convert a table between data models. Associative arrays travel as (row, col, val) triples; arrays as
 * their export form (dimension columns first) plus dimension options. */
struct CastSpec
{
    Model source = Model::relational;
    Model target = Model::relational;
    std::vector<std::string> key;      ///< relation -> associative array
    std::vector<std::string> dim_cols; ///< relation -> array
    /// Row and column maps for associative array <-> array.
    std::optional<std::vector<std::vector<std::string>>> dim_maps;
    /// Restores column order and tags when casting back to a relation.
    Schema relation_schema;

    bool operator==(const CastSpec&) const = default;
};

/// A table read in its data model: relations as is, associative arrays as triples, arrays with their dimensions.
struct LogicalTable
{
    Model model = Model::relational;
    CanonicalTable table;
    LoadOptions options;
};

struct CastResult
{
    LogicalTable value;
    std::optional<CastSpec> inverse;
    bool dropped_nulls = false;
};

CastResult cast_table(const LogicalTable &input, const CastSpec &spec);
/// Convenience for callers holding a bare table.
CastResult cast_table(const CanonicalTable &table, const CastSpec &spec, const LoadOptions &options = {});

/// Joins key parts with `|`, escaping `|` and `\` inside parts.
std::string join_key(const std::vector<std::string> &parts);
std::vector<std::string> split_key(std::string_view key);

/// Reads a payload stored on an engine of `engine_model` as data of `logical` model.
LogicalTable decode(const ObjectPayload &payload, Model engine_model, Model logical);
/// Stores logical data on an engine of `engine_model`: associative arrays become (r, c, v) relations or keyed
/// 2-d arrays. Throws a `cast` error for unsupported placements.
ObjectPayload encode(const LogicalTable &value, Model engine_model);

/// Data movement into a temporary object: decode at the source, apply user casts, encode at the target.
struct MigrationSpec
{
    Model logical = Model::relational; ///< model of the source data
    std::vector<CastSpec> casts;

    Model result_model() const { return casts.empty() ? logical : casts.back().target; }
    bool operator==(const MigrationSpec&) const = default;
};

/** Copies `object` to `to_engine` as a temporary `__mig_<16 hex>` object and returns its name. Lossy steps
 * append a message to `warnings` when given. */
std::string migrate(EngineCatalog &catalog, const std::string &object, const std::string &to_engine,
                    const MigrationSpec &spec, std::vector<std::string> *warnings = nullptr);

std::string describe(const CastSpec &spec);

}
