#pragma once

#include <polydawg/value.hpp>

#include <map>
#include <optional>
#include <string>
#include <utility>

namespace polydawg {

using AssocKey = std::pair<std::string, std::string>;

/** Inclusive key range `[lo, hi]`; an empty range (lo > hi) selects nothing. */
struct KeyRange
{
    std::string lo;
    std::string hi;

    bool contains(const std::string &key) const { return lo <= key and key <= hi; }
    bool operator==(const KeyRange&) const = default;
};

/** A sparse map from (row-key, col-key) to a value, iterated row-major lexicographically. */
class AssociativeArray
{
    std::map<AssocKey, Value> entries_;

    public:
    using const_iterator = std::map<AssocKey, Value>::const_iterator;

    /// Adds an entry. Throws on empty keys, null values, or a key pair that is already present.
    void insert(std::string row, std::string col, Value value);
    /// Adds or replaces an entry; no duplicate check.
    void assign(const std::string &row, const std::string &col, Value value);
    const Value * find(const std::string &row, const std::string &col) const;

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const_iterator begin() const { return entries_.begin(); }
    const_iterator end() const { return entries_.end(); }
    /// First entry of row `row`, or the first entry after it.
    const_iterator row_begin(const std::string &row) const { return entries_.lower_bound({row, std::string()}); }

    bool operator==(const AssociativeArray&) const = default;

    /// Unified tag of the stored values: the common tag; integer+real gives real; any text gives text.
    Tag value_tag(Tag if_empty = Tag::real) const;
    /// Triples `(row:text, col:text, val:tag)` in row-major order. Values are converted to the unified tag.
    CanonicalTable to_table(const std::string &row_name = "row", const std::string &col_name = "col",
                            const std::string &val_name = "val", std::optional<Tag> val_tag = std::nullopt) const;
    /// Reads a three-column triple table `(text, text, any)`.
    static AssociativeArray from_table(const CanonicalTable &table);
};

enum class Semiring { plus_times, min_plus, max_times };
enum class EwiseOp { plus, min, max };

const char * to_string(Semiring s);
std::optional<Semiring> parse_semiring(std::string_view s);
const char * to_string(EwiseOp op);
std::optional<EwiseOp> parse_ewise_op(std::string_view s);

/// Semiring arithmetic on numeric values; integer inputs stay integers.
Value add_values(const Value &a, const Value &b);
Value mul_values(const Value &a, const Value &b);
Value min_values(const Value &a, const Value &b);
Value max_values(const Value &a, const Value &b);

/** C(r,c) = ⊕_k A(r,k) ⊗ B(k,c) over the inner keys present in both row r of A and column c of B. Rows of A are
 * processed in parallel; the per-entry reduction order (ascending inner key) matches the serial kernel exactly. */
AssociativeArray assoc_matmul(const AssociativeArray &a, const AssociativeArray &b,
                              Semiring semiring = Semiring::plus_times);
/// Single-threaded reference for `assoc_matmul`.
AssociativeArray assoc_matmul_serial(const AssociativeArray &a, const AssociativeArray &b,
                                     Semiring semiring = Semiring::plus_times);

/// Union of keys; `op` on overlapping keys, the present value elsewhere.
AssociativeArray assoc_ewise(const AssociativeArray &a, const AssociativeArray &b, EwiseOp op);
AssociativeArray assoc_transpose(const AssociativeArray &a);
AssociativeArray assoc_select(const AssociativeArray &a, const std::optional<KeyRange> &rows,
                              const std::optional<KeyRange> &cols);

}
