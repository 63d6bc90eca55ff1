#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace polydawg {

/// Value tags. `null` is a value, never a column tag.
enum class Tag : std::uint8_t { null, integer, real, text };

const char * tag_name(Tag tag);
/// Parses `int`, `real`, `text`.
std::optional<Tag> parse_tag(std::string_view name);

class Value
{
    std::variant<std::monostate, std::int64_t, double, std::string> v_;

    public:
    Value() = default;
    Value(std::int64_t i) : v_(i) { }
    Value(int i) : v_(std::int64_t(i)) { }
    Value(double d) : v_(d) { }
    Value(std::string s) : v_(std::move(s)) { }
    Value(const char *s) : v_(std::string(s)) { }

    Tag tag() const { return Tag(v_.index()); }
    bool is_null() const { return v_.index() == 0; }
    bool is_numeric() const { return v_.index() == 1 or v_.index() == 2; }

    std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
    double as_real() const { return std::get<double>(v_); }
    const std::string & as_text() const { return std::get<std::string>(v_); }
    /// Integer or real as double; throws a type error otherwise.
    double as_number() const;

    /// Exact structural equality (tag and payload).
    bool operator==(const Value &other) const = default;
};

/** Query-semantics comparison. Null sorts before everything; integers and reals compare numerically; text versus a
 * number is a type error. */
std::strong_ordering compare(const Value &a, const Value &b);

/// A total order that never throws: by tag, then payload. Used for container keys.
struct TotalLess
{
    bool operator()(const Value &a, const Value &b) const;
    bool operator()(const std::vector<Value> &a, const std::vector<Value> &b) const;
};

/// Shortest round-trip decimal form, always containing `.` or an exponent.
std::string format_real(double d);
/// Canonical rendering: integers in decimal, reals via `format_real`, text raw, null as `null`.
std::string to_string(const Value &v);

struct Column
{
    std::string name;
    Tag tag;

    bool operator==(const Column&) const = default;
};

using Schema = std::vector<Column>;
using Row = std::vector<Value>;

/// Index of the column called `name`, if any.
std::optional<std::size_t> find_column(const Schema &schema, std::string_view name);
std::string to_string(const Schema &schema);

/** The interchange value passed between engines, casts, and the executor. */
struct CanonicalTable
{
    Schema schema;
    std::vector<Row> rows;

    /// Throws a schema error unless every row has one value per column with a matching tag (or null) and no NaN.
    void check_conformance() const;
};

/** Multiset comparison of two tables' rows, ignoring column names. Integers and reals compare numerically; numbers
 * match within `rel_tol` relative difference. Returns a description of the first difference, or nothing. */
std::optional<std::string> bag_diff(const CanonicalTable &a, const CanonicalTable &b, double rel_tol = 0.0);
inline bool bag_equal(const CanonicalTable &a, const CanonicalTable &b, double rel_tol = 0.0)
{
    return not bag_diff(a, b, rel_tol).has_value();
}

/// Sorts rows by `TotalLess`.
void sort_rows(std::vector<Row> &rows);

}
