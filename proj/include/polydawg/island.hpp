#pragma once

#include <polydawg/engines/assoc.hpp>
#include <polydawg/engines/catalog.hpp>
#include <polydawg/sql.hpp>

#include <functional>
#include <map>
#include <set>

namespace polydawg {

enum class IslandOp { select, scan, grep, subarray, filter, agg, matmul, ewise, transpose, native_passthrough };

const char * to_string(IslandOp op);
std::optional<IslandOp> parse_island_op(std::string_view name);
/// Number of leading object arguments the operator consumes.
std::size_t input_arity(IslandOp op);

/** One island operator applied to named objects, with its parameters decoded. */
struct OpCall
{
    IslandOp op = IslandOp::native_passthrough;
    std::vector<std::string> inputs;

    std::optional<sql::Query> query; ///< relational select
    std::string native;              ///< passthrough text
    std::optional<KeyRange> rows;
    std::optional<KeyRange> cols;
    std::string needle;
    std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> ranges;
    std::optional<sql::Expr> predicate;
    std::string agg_fn;
    std::string agg_attr; ///< empty for count(*)
    std::vector<std::string> agg_by;
    Semiring semiring = Semiring::plus_times;
    EwiseOp ewise = EwiseOp::plus;
};

/** Decodes the parameters of a functional operator call such as `matmul(A, B, semiring = min.plus)`. The first
 * `input_arity(op)` arguments are replaced by `inputs`. Throws a validation error on malformed parameters. */
OpCall bind_op_call(IslandOp op, const sql::Call &call, std::vector<std::string> inputs);

struct Island
{
    std::string name;
    Model model;
    std::set<IslandOp> operators;
    std::vector<std::string> members;

    bool degenerate() const { return members.size() == 1 and operators == std::set{IslandOp::native_passthrough}; }
    const std::string & default_engine() const { return members.front(); }
};

struct Shim
{
    std::set<IslandOp> operators;
    std::function<std::string(const OpCall&)> translate;
};

class IslandRegistry
{
    std::map<std::string, Island> islands_;
    std::map<std::pair<std::string, std::string>, Shim> shims_;

    public:
    /// Islands relational, text, array, d4m and raw.rel, raw.kv, raw.arr over engines rel, kv, arr.
    static IslandRegistry register_defaults(const EngineCatalog &catalog);

    void add_island(Island island);
    void add_shim(const std::string &island, const std::string &engine, Shim shim);

    bool has_island(const std::string &name) const { return islands_.contains(name); }
    /// Throws `not_found` for an unknown island.
    const Island & island(const std::string &name) const;
    std::vector<std::string> island_names() const;

    /// Throws `not_found` for an unknown island.
    bool supports(const std::string &island, const std::string &engine, IslandOp op) const;
    /// Throws a `plan` error when the (island, engine, operator) triple has no shim.
    std::string translate(const std::string &island, const OpCall &call, const std::string &engine) const;
};

/// Schema check for associative-array data held by the relational engine: (r:text, c:text, v:any).
bool is_triple_relation(const Schema &schema);

/// Double-quoted native string literal.
std::string quote_native(std::string_view s);

}
