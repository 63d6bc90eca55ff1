#pragma once

#include <polydawg/engines/assoc.hpp>
#include <polydawg/engines/engine.hpp>

#include <map>

namespace polydawg {

/** Sparse n-dimensional array. Every dim has a length; absent cells are empty. */
struct NDArray
{
    std::vector<DimSpec> dims;
    Schema attrs;
    std::map<std::vector<std::int64_t>, Row> cells;

    /// Builds from a table whose `options.dims` name integer columns; all other columns become attributes.
    static NDArray from_table(const CanonicalTable &table, const LoadOptions &options);
    /// Dims first, then attributes; rows sorted by index vector.
    CanonicalTable to_table() const;
    LoadOptions options() const;

    /// Reads a 2-d, single-attribute array as an associative array; keys come from dim maps or decimal coordinates.
    AssociativeArray to_assoc() const;
    /// Dims (r, c) with maps built from the sorted distinct keys; attribute v.
    static NDArray from_assoc(const AssociativeArray &a, std::optional<Tag> tag = std::nullopt);
};

/** Array engine.
 *
 * Native language:
 *   SUBARRAY obj [dim=lo:hi{,dim=lo:hi}]      inclusive ranges; coordinates are kept
 *   FILTER obj predicate                       over dims and attributes
 *   AGG fn(attr) obj BY (dim, ...)             fn in count, sum, avg, min, max
 * and, for 2-d single-attribute arrays read as associative arrays:
 *   SCAN obj [ROWS "lo":"hi"] [COLS "lo":"hi"]
 *   MATMUL A B [SEMIRING s]    EWISE A B op    TRANSPOSE A
 */
class ArrayEngine final : public Engine
{
    std::map<std::string, NDArray> arrays_;

    const NDArray & get(const std::string &name) const;

    public:
    explicit ArrayEngine(std::string id = "arr") : Engine(std::move(id)) { }

    Model model() const override { return Model::array; }
    using Engine::load;
    void load(const std::string &name, const CanonicalTable &table, const LoadOptions &options) override;
    ObjectPayload export_payload(const std::string &name) const override;
    ObjectPayload evaluate(std::string_view native) const override;
    bool drop(const std::string &name) override;
    bool contains(const std::string &name) const override;
    std::vector<std::string> object_names() const override;
    ObjectInfo describe(const std::string &name) const override;
};

}
