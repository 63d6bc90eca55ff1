#include <polydawg/engines/assoc.hpp>

#include <polydawg/error.hpp>

#include <exception>
#include <mutex>
#include <vector>

namespace polydawg {

void AssociativeArray::insert(std::string row, std::string col, Value value)
{
    if (row.empty() or col.empty())
        throw Error(ErrorKind::schema, "associative array keys must be non-empty");
    if (value.is_null())
        throw Error(ErrorKind::schema, "associative array entry (" + row + ", " + col + ") has a null value");
    auto [it, inserted] = entries_.emplace(AssocKey{std::move(row), std::move(col)}, std::move(value));
    if (not inserted)
        throw Error(ErrorKind::duplicate,
                    "duplicate associative array key (" + it->first.first + ", " + it->first.second + ")");
}

void AssociativeArray::assign(const std::string &row, const std::string &col, Value value)
{
    entries_.insert_or_assign(AssocKey{row, col}, std::move(value));
}

const Value * AssociativeArray::find(const std::string &row, const std::string &col) const
{
    auto it = entries_.find(AssocKey{row, col});
    return it == entries_.end() ? nullptr : &it->second;
}

Tag AssociativeArray::value_tag(Tag if_empty) const
{
    if (entries_.empty()) return if_empty;
    bool any_int = false, any_real = false, any_text = false;
    for (const auto &[key, v] : entries_) {
        any_int |= v.tag() == Tag::integer;
        any_real |= v.tag() == Tag::real;
        any_text |= v.tag() == Tag::text;
    }
    if (any_text) return Tag::text;
    if (any_real) return Tag::real;
    return any_int ? Tag::integer : if_empty;
}

namespace {

Value convert(const Value &v, Tag tag)
{
    if (v.tag() == tag) return v;
    if (tag == Tag::real) return Value(v.as_number());
    if (tag == Tag::text) return Value(to_string(v));
    throw Error(ErrorKind::type, std::string("cannot convert ") + tag_name(v.tag()) + " to " + tag_name(tag));
}

}

CanonicalTable AssociativeArray::to_table(const std::string &row_name, const std::string &col_name,
                                          const std::string &val_name, std::optional<Tag> val_tag) const
{
    const Tag tag = val_tag.value_or(value_tag());
    CanonicalTable t{{{row_name, Tag::text}, {col_name, Tag::text}, {val_name, tag}}, {}};
    t.rows.reserve(entries_.size());
    for (const auto &[key, v] : entries_)
        t.rows.push_back({Value(key.first), Value(key.second), convert(v, tag)});
    return t;
}

AssociativeArray AssociativeArray::from_table(const CanonicalTable &table)
{
    if (table.schema.size() != 3 or table.schema[0].tag != Tag::text or table.schema[1].tag != Tag::text)
        throw Error(ErrorKind::schema, "associative arrays need a (row:text, col:text, val:any) table, got " +
                                       to_string(table.schema));
    AssociativeArray a;
    for (const auto &row : table.rows) {
        if (row[0].is_null() or row[1].is_null())
            throw Error(ErrorKind::schema, "associative array keys must not be null");
        a.insert(row[0].as_text(), row[1].as_text(), row[2]);
    }
    return a;
}

const char * to_string(Semiring s)
{
    switch (s) {
        case Semiring::plus_times: return "plus.times";
        case Semiring::min_plus:   return "min.plus";
        case Semiring::max_times:  return "max.times";
    }
    return "?";
}

std::optional<Semiring> parse_semiring(std::string_view s)
{
    if (s == "plus.times") return Semiring::plus_times;
    if (s == "min.plus") return Semiring::min_plus;
    if (s == "max.times") return Semiring::max_times;
    return std::nullopt;
}

const char * to_string(EwiseOp op)
{
    switch (op) {
        case EwiseOp::plus: return "plus";
        case EwiseOp::min:  return "min";
        case EwiseOp::max:  return "max";
    }
    return "?";
}

std::optional<EwiseOp> parse_ewise_op(std::string_view s)
{
    if (s == "plus") return EwiseOp::plus;
    if (s == "min") return EwiseOp::min;
    if (s == "max") return EwiseOp::max;
    return std::nullopt;
}

namespace {

void require_numeric(const Value &v)
{
    if (not v.is_numeric())
        throw Error(ErrorKind::type, "non-numeric value " + to_string(v) + " in associative array arithmetic");
}

bool both_int(const Value &a, const Value &b) { return a.tag() == Tag::integer and b.tag() == Tag::integer; }

}

Value add_values(const Value &a, const Value &b)
{
    require_numeric(a);
    require_numeric(b);
    if (both_int(a, b)) {
        std::int64_t r;
        if (__builtin_add_overflow(a.as_int(), b.as_int(), &r))
            throw Error(ErrorKind::execution, "integer overflow in addition");
        return Value(r);
    }
    return Value(a.as_number() + b.as_number());
}

Value mul_values(const Value &a, const Value &b)
{
    require_numeric(a);
    require_numeric(b);
    if (both_int(a, b)) {
        std::int64_t r;
        if (__builtin_mul_overflow(a.as_int(), b.as_int(), &r))
            throw Error(ErrorKind::execution, "integer overflow in multiplication");
        return Value(r);
    }
    return Value(a.as_number() * b.as_number());
}

Value min_values(const Value &a, const Value &b)
{
    require_numeric(a);
    require_numeric(b);
    if (both_int(a, b)) return Value(std::min(a.as_int(), b.as_int()));
    return Value(std::min(a.as_number(), b.as_number()));
}

Value max_values(const Value &a, const Value &b)
{
    require_numeric(a);
    require_numeric(b);
    if (both_int(a, b)) return Value(std::max(a.as_int(), b.as_int()));
    return Value(std::max(a.as_number(), b.as_number()));
}

namespace {

struct SemiringOps
{
    Value (*plus)(const Value&, const Value&);
    Value (*times)(const Value&, const Value&);
};

SemiringOps ops_of(Semiring s)
{
    switch (s) {
        case Semiring::plus_times: return {add_values, mul_values};
        case Semiring::min_plus:   return {min_values, add_values};
        case Semiring::max_times:  return {max_values, mul_values};
    }
    return {add_values, mul_values};
}

using RowResult = std::vector<std::pair<std::string, Value>>;

/// Computes row `row` of the product, entries of A's row given by [first, last).
RowResult multiply_row(AssociativeArray::const_iterator first, AssociativeArray::const_iterator last,
                       const AssociativeArray &b, SemiringOps ops)
{
    std::map<std::string, Value> acc;
    for (auto it = first; it != last; ++it) {
        const auto &k = it->first.second;
        auto bit = b.row_begin(k);
        if (bit == b.end() or bit->first.first != k) continue;
        require_numeric(it->second);
        for (; bit != b.end() and bit->first.first == k; ++bit) {
            auto term = ops.times(it->second, bit->second);
            auto [slot, fresh] = acc.try_emplace(bit->first.second, term);
            if (not fresh) slot->second = ops.plus(slot->second, term);
        }
    }
    return RowResult(std::make_move_iterator(acc.begin()), std::make_move_iterator(acc.end()));
}

}

AssociativeArray assoc_matmul(const AssociativeArray &a, const AssociativeArray &b, Semiring semiring)
{
    const auto ops = ops_of(semiring);

    /* Row boundaries of A. */
    std::vector<AssociativeArray::const_iterator> starts;
    for (auto it = a.begin(); it != a.end(); ++it)
        if (starts.empty() or starts.back()->first.first != it->first.first) starts.push_back(it);
    const auto n = static_cast<std::ptrdiff_t>(starts.size());

    std::vector<RowResult> rows(starts.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;

#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            auto last = i + 1 < n ? starts[i + 1] : a.end();
            rows[i] = multiply_row(starts[i], last, b, ops);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (not failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    AssociativeArray c;
    for (std::ptrdiff_t i = 0; i < n; ++i)
        for (auto &[col, v] : rows[i]) c.assign(starts[i]->first.first, col, std::move(v));
    return c;
}

AssociativeArray assoc_matmul_serial(const AssociativeArray &a, const AssociativeArray &b, Semiring semiring)
{
    const auto ops = ops_of(semiring);
    AssociativeArray c;
    for (const auto &[ak, av] : a) {
        for (const auto &[bk, bv] : b) {
            if (ak.second != bk.first) continue;
            auto term = ops.times(av, bv);
            if (auto existing = c.find(ak.first, bk.second))
                c.assign(ak.first, bk.second, ops.plus(*existing, term));
            else
                c.assign(ak.first, bk.second, term);
        }
    }
    return c;
}

AssociativeArray assoc_ewise(const AssociativeArray &a, const AssociativeArray &b, EwiseOp op)
{
    auto combine = op == EwiseOp::plus ? add_values : op == EwiseOp::min ? min_values : max_values;
    AssociativeArray c;
    auto i = a.begin(), j = b.begin();
    while (i != a.end() or j != b.end()) {
        if (j == b.end() or (i != a.end() and i->first < j->first)) {
            c.assign(i->first.first, i->first.second, i->second);
            ++i;
        } else if (i == a.end() or j->first < i->first) {
            c.assign(j->first.first, j->first.second, j->second);
            ++j;
        } else {
            c.assign(i->first.first, i->first.second, combine(i->second, j->second));
            ++i;
            ++j;
        }
    }
    return c;
}

AssociativeArray assoc_transpose(const AssociativeArray &a)
{
    AssociativeArray t;
    for (const auto &[k, v] : a) t.assign(k.second, k.first, v);
    return t;
}

AssociativeArray assoc_select(const AssociativeArray &a, const std::optional<KeyRange> &rows,
                              const std::optional<KeyRange> &cols)
{
    AssociativeArray s;
    auto it = rows ? a.row_begin(rows->lo) : a.begin();
    for (; it != a.end(); ++it) {
        if (rows and it->first.first > rows->hi) break;
        if (cols and not cols->contains(it->first.second)) continue;
        s.assign(it->first.first, it->first.second, it->second);
    }
    return s;
}

}
