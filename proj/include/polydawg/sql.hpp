#pragma once

#include <polydawg/box.hpp>
#include <polydawg/lexer.hpp>
#include <polydawg/value.hpp>

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

/** Expression and SELECT-query syntax shared by the relational engine, array predicates, and the polystore
 * language. */
namespace polydawg::sql {

/// Source location of a node. Never participates in structural equality.
struct NodeSpan
{
    Span span;

    friend bool operator==(const NodeSpan&, const NodeSpan&) { return true; }
};

struct Expr;

struct Literal
{
    Value value;

    bool operator==(const Literal&) const = default;
};

struct ColumnRef
{
    std::string qualifier; ///< empty when unqualified
    std::string name;

    bool operator==(const ColumnRef&) const = default;
};

struct Unary
{
    enum Op { neg, logical_not } op;
    Box<Expr> operand;

    bool operator==(const Unary&) const = default;
};

struct Binary
{
    enum Op { add, sub, mul, div, eq, ne, lt, le, gt, ge, like, logical_and, logical_or } op;
    Box<Expr> lhs;
    Box<Expr> rhs;

    bool operator==(const Binary&) const = default;
};

struct IsNull
{
    Box<Expr> operand;
    bool negated = false;

    bool operator==(const IsNull&) const = default;
};

/// Function application. Names are stored lower-case. `star` marks `COUNT(*)`.
struct Call
{
    std::string name;
    std::vector<Expr> args;
    bool star = false;

    bool operator==(const Call&) const = default;
};

/// `lo:hi`, used by range arguments of island operators.
struct Range
{
    Box<Expr> lo;
    Box<Expr> hi;

    bool operator==(const Range&) const = default;
};

/// Reference to the `index`-th cast of the enclosing polystore scope.
struct CastRef
{
    std::size_t index = 0;

    bool operator==(const CastRef&) const = default;
};

struct Expr
{
    std::variant<Literal, ColumnRef, Unary, Binary, IsNull, Call, Range, CastRef> node;
    NodeSpan loc;

    bool operator==(const Expr&) const = default;

    template<typename T> bool is() const { return std::holds_alternative<T>(node); }
    template<typename T> const T & as() const { return std::get<T>(node); }
    template<typename T> T & as() { return std::get<T>(node); }
};

Expr make_literal(Value v);
Expr make_column(std::string name, std::string qualifier = {});
Expr make_binary(Binary::Op op, Expr lhs, Expr rhs);

bool is_aggregate(std::string_view function_name);
bool is_comparison(Binary::Op op);

struct Query;

struct TableRef
{
    std::variant<std::string, Box<Query>, CastRef> source;
    std::string alias; ///< empty when absent
    NodeSpan loc;

    bool operator==(const TableRef&) const = default;

    /// The name columns are qualified with: the alias, else the table name.
    std::string binding_name() const;
};

struct Join
{
    TableRef table;
    Expr on;

    bool operator==(const Join&) const = default;
};

struct SelectItem
{
    std::optional<Expr> expr; ///< empty for `*`
    std::string alias;

    bool operator==(const SelectItem&) const = default;
};

struct SelectCore
{
    bool distinct = false;
    std::vector<SelectItem> items;
    TableRef from;
    std::vector<Join> joins;
    std::optional<Expr> where;
    std::vector<Expr> group_by;

    bool operator==(const SelectCore&) const = default;
};

struct OrderItem
{
    Expr expr;
    bool descending = false;

    bool operator==(const OrderItem&) const = default;
};

/** `core (UNION ALL core)* [ORDER BY ...] [LIMIT n]`. */
struct Query
{
    std::vector<SelectCore> cores;
    std::vector<OrderItem> order_by;
    std::optional<std::int64_t> limit;
    NodeSpan loc;

    bool operator==(const Query&) const = default;
};

/// Invoked with the lexer positioned on the `cast` keyword; parses the cast and returns its reference.
using CastParser = std::function<CastRef(Lexer&)>;
/// Renders the cast with the given index.
using CastPrinter = std::function<std::string(std::size_t)>;

Expr parse_expr(Lexer &lex, const CastParser *casts = nullptr);
Query parse_query(Lexer &lex, const CastParser *casts = nullptr);
/// Parses a complete native query; trailing input is an error.
Query parse_native_query(std::string_view text);
/// Parses a complete native expression; trailing input is an error.
Expr parse_native_expr(std::string_view text);

std::string print(const Expr &e, const CastPrinter *casts = nullptr);
std::string print(const Query &q, const CastPrinter *casts = nullptr);
/// Quotes a string literal with single quotes.
std::string quote(std::string_view s);

/// Visits every table reference of `q`, recursing into subqueries.
void for_each_table(Query &q, const std::function<void(TableRef&)> &fn);
void for_each_table(const Query &q, const std::function<void(const TableRef&)> &fn);
/// Visits `e` and all sub-expressions, pre-order.
void for_each_expr(const Expr &e, const std::function<void(const Expr&)> &fn);
/// Visits every expression in `q` (select items, join conditions, predicates, grouping, ordering) and recurses
/// into subqueries.
void for_each_expr(const Query &q, const std::function<void(const Expr&)> &fn);

}
