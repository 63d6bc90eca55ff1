#include <polydawg/value.hpp>

#include <polydawg/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace polydawg {

const char * tag_name(Tag tag)
{
    switch (tag) {
        case Tag::null:    return "null";
        case Tag::integer: return "int";
        case Tag::real:    return "real";
        case Tag::text:    return "text";
    }
    return "?";
}

std::optional<Tag> parse_tag(std::string_view name)
{
    if (name == "int") return Tag::integer;
    if (name == "real") return Tag::real;
    if (name == "text") return Tag::text;
    return std::nullopt;
}

double Value::as_number() const
{
    switch (tag()) {
        case Tag::integer: return double(as_int());
        case Tag::real:    return as_real();
        default:
            throw Error(ErrorKind::type, std::string("expected a number, got ") + tag_name(tag()));
    }
}

std::strong_ordering compare(const Value &a, const Value &b)
{
    if (a.is_null() or b.is_null())
        return int(not a.is_null()) <=> int(not b.is_null());
    if (a.tag() == Tag::integer and b.tag() == Tag::integer)
        return a.as_int() <=> b.as_int();
    if (a.is_numeric() and b.is_numeric()) {
        const double x = a.as_number(), y = b.as_number();
        if (x < y) return std::strong_ordering::less;
        if (y < x) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    if (a.tag() == Tag::text and b.tag() == Tag::text)
        return a.as_text().compare(b.as_text()) <=> 0;
    throw Error(ErrorKind::type,
                std::string("cannot compare ") + tag_name(a.tag()) + " with " + tag_name(b.tag()));
}

bool TotalLess::operator()(const Value &a, const Value &b) const
{
    if (a.tag() != b.tag()) return a.tag() < b.tag();
    switch (a.tag()) {
        case Tag::null:    return false;
        case Tag::integer: return a.as_int() < b.as_int();
        case Tag::real:    return a.as_real() < b.as_real();
        case Tag::text:    return a.as_text() < b.as_text();
    }
    return false;
}

bool TotalLess::operator()(const std::vector<Value> &a, const std::vector<Value> &b) const
{
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), TotalLess{});
}

std::string format_real(double d)
{
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d < 0 ? "-inf" : "inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d);
    std::string s(buf, end);
    if (s.find_first_of(".e") == std::string::npos)
        s += ".0";
    return s;
}

std::string to_string(const Value &v)
{
    switch (v.tag()) {
        case Tag::null:    return "null";
        case Tag::integer: return std::to_string(v.as_int());
        case Tag::real:    return format_real(v.as_real());
        case Tag::text:    return v.as_text();
    }
    return {};
}

std::optional<std::size_t> find_column(const Schema &schema, std::string_view name)
{
    for (std::size_t i = 0; i != schema.size(); ++i)
        if (schema[i].name == name) return i;
    return std::nullopt;
}

std::string to_string(const Schema &schema)
{
    std::string out = "(";
    for (std::size_t i = 0; i != schema.size(); ++i) {
        if (i) out += ", ";
        out += schema[i].name + ":" + tag_name(schema[i].tag);
    }
    return out + ")";
}

void CanonicalTable::check_conformance() const
{
    for (std::size_t r = 0; r != rows.size(); ++r) {
        const auto &row = rows[r];
        if (row.size() != schema.size())
            throw Error(ErrorKind::schema, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                           " values, schema has " + std::to_string(schema.size()) + " columns");
        for (std::size_t c = 0; c != row.size(); ++c) {
            const auto &v = row[c];
            if (v.is_null()) continue;
            if (v.tag() != schema[c].tag)
                throw Error(ErrorKind::schema, "row " + std::to_string(r) + ", column " + schema[c].name + ": " +
                                               tag_name(v.tag()) + " value in " + tag_name(schema[c].tag) +
                                               " column");
            if (v.tag() == Tag::real and std::isnan(v.as_real()))
                throw Error(ErrorKind::schema, "row " + std::to_string(r) + ", column " + schema[c].name +
                                               ": NaN is not a storable value");
        }
    }
}

namespace {

/// Orders numbers numerically regardless of integer/real tag so that equal numbers land next to each other.
bool numeric_less(const Row &a, const Row &b)
{
    for (std::size_t i = 0; i != a.size(); ++i) {
        const auto &x = a[i], &y = b[i];
        auto rank = [](const Value &v) { return v.is_null() ? 0 : v.is_numeric() ? 1 : 2; };
        if (rank(x) != rank(y)) return rank(x) < rank(y);
        if (x.is_numeric()) {
            const double p = x.as_number(), q = y.as_number();
            if (p != q) return p < q;
        } else if (x.tag() == Tag::text and x.as_text() != y.as_text()) {
            return x.as_text() < y.as_text();
        }
    }
    return false;
}

bool values_match(const Value &x, const Value &y, double rel_tol)
{
    if (x.is_numeric() and y.is_numeric()) {
        if (x.tag() == Tag::integer and y.tag() == Tag::integer) return x.as_int() == y.as_int();
        const double p = x.as_number(), q = y.as_number();
        if (p == q) return true;
        return std::abs(p - q) <= rel_tol * std::max(std::abs(p), std::abs(q));
    }
    return x == y;
}

bool rows_match(const Row &a, const Row &b, double rel_tol)
{
    for (std::size_t i = 0; i != a.size(); ++i)
        if (not values_match(a[i], b[i], rel_tol)) return false;
    return true;
}

std::string render(const Row &row)
{
    std::string out = "(";
    for (std::size_t i = 0; i != row.size(); ++i) {
        if (i) out += ", ";
        out += row[i].tag() == Tag::text ? "'" + row[i].as_text() + "'" : to_string(row[i]);
    }
    return out + ")";
}

}

std::optional<std::string> bag_diff(const CanonicalTable &a, const CanonicalTable &b, double rel_tol)
{
    if (a.schema.size() != b.schema.size())
        return "arity differs: " + to_string(a.schema) + " vs " + to_string(b.schema);
    if (a.rows.size() != b.rows.size())
        return "row count differs: " + std::to_string(a.rows.size()) + " vs " + std::to_string(b.rows.size());

    auto left = a.rows, right = b.rows;
    std::sort(left.begin(), left.end(), numeric_less);
    std::sort(right.begin(), right.end(), numeric_less);
    bool pairwise = true;
    for (std::size_t i = 0; pairwise and i != left.size(); ++i)
        pairwise = rows_match(left[i], right[i], rel_tol);
    if (pairwise) return std::nullopt;

    /* Tolerance can reorder near-equal rows; fall back to greedy matching. */
    std::vector<bool> used(right.size(), false);
    for (const auto &row : left) {
        bool found = false;
        for (std::size_t j = 0; j != right.size() and not found; ++j) {
            if (not used[j] and rows_match(row, right[j], rel_tol))
                used[j] = found = true;
        }
        if (not found) return "row " + render(row) + " has no counterpart";
    }
    return std::nullopt;
}

void sort_rows(std::vector<Row> &rows)
{
    std::sort(rows.begin(), rows.end(), TotalLess{});
}

}
