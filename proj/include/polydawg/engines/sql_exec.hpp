#pragma once

#include <polydawg/sql.hpp>

#include <functional>

namespace polydawg::sql {

/// Static type of a compiled expression. `boolean` values are represented as integer 0/1 or null (unknown).
enum class Type { integer, real, text, boolean };

const char * type_name(Type t);

struct BoundColumn
{
    std::string qualifier;
    std::string name;
    Tag tag;
};

struct Compiled
{
    std::function<Value(const Row&)> eval;
    Type type;
};

/// Compiles an aggregate-free expression against `columns`; resolves names and checks types statically.
Compiled compile_scalar(const Expr &e, const std::vector<BoundColumn> &columns);

/// True only for a known-true boolean.
inline bool truthy(const Value &v) { return v.tag() == Tag::integer and v.as_int() != 0; }

/// SQL `LIKE` with `%` and `_` wildcards.
bool like_match(std::string_view text, std::string_view pattern);

/// Returns the named table, or null if it does not exist.
using TableResolver = std::function<const CanonicalTable*(const std::string&)>;

/** Evaluates `q`. Deterministic: joins keep left-major input order, groups appear in first-seen order, and ORDER BY
 * breaks ties by the full output tuple. */
CanonicalTable execute(const Query &q, const TableResolver &tables);

}
