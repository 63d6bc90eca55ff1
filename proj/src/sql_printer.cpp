#include <polydawg/sql.hpp>

#include <cctype>

namespace polydawg::sql {

namespace {

enum Prec { p_or = 1, p_and, p_not, p_cmp, p_range, p_add, p_mul, p_neg, p_primary };

int precedence(const Expr &e)
{
    if (auto b = std::get_if<Binary>(&e.node)) {
        switch (b->op) {
            case Binary::logical_or:  return p_or;
            case Binary::logical_and: return p_and;
            case Binary::add:
            case Binary::sub:         return p_add;
            case Binary::mul:
            case Binary::div:         return p_mul;
            default:                  return p_cmp;
        }
    }
    if (auto u = std::get_if<Unary>(&e.node)) return u->op == Unary::neg ? p_neg : p_not;
    if (e.is<IsNull>()) return p_cmp;
    if (e.is<Range>()) return p_range;
    return p_primary;
}

const char * op_text(Binary::Op op)
{
    switch (op) {
        case Binary::add:         return "+";
        case Binary::sub:         return "-";
        case Binary::mul:         return "*";
        case Binary::div:         return "/";
        case Binary::eq:          return "=";
        case Binary::ne:          return "!=";
        case Binary::lt:          return "<";
        case Binary::le:          return "<=";
        case Binary::gt:          return ">";
        case Binary::ge:          return ">=";
        case Binary::like:        return "LIKE";
        case Binary::logical_and: return "AND";
        case Binary::logical_or:  return "OR";
    }
    return "?";
}

std::string upper(std::string s)
{
    for (auto &c : s) c = char(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

struct Printer
{
    const CastPrinter *casts;

    std::string wrap(const Expr &e, bool parens) { return parens ? "(" + expr(e) + ")" : expr(e); }

    std::string expr(const Expr &e)
    {
        return std::visit([&](const auto &n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Literal>) {
                return n.value.tag() == Tag::text ? quote(n.value.as_text()) : to_string(n.value);
            } else if constexpr (std::is_same_v<T, ColumnRef>) {
                return n.qualifier.empty() ? n.name : n.qualifier + "." + n.name;
            } else if constexpr (std::is_same_v<T, Unary>) {
                if (n.op == Unary::logical_not) return "NOT " + wrap(*n.operand, precedence(*n.operand) < p_not);
                const bool number = n.operand->template is<Literal>() and n.operand->template as<Literal>().value.is_numeric();
                auto inner = wrap(*n.operand, number or precedence(*n.operand) < p_neg);
                return (inner.front() == '-' ? "- " : "-") + inner;
            } else if constexpr (std::is_same_v<T, Binary>) {
                const int p = precedence(e);
                const bool non_assoc = p == p_cmp;
                auto lhs = wrap(*n.lhs, precedence(*n.lhs) < p or (non_assoc and precedence(*n.lhs) <= p));
                auto rhs = wrap(*n.rhs, precedence(*n.rhs) <= p);
                return lhs + " " + op_text(n.op) + " " + rhs;
            } else if constexpr (std::is_same_v<T, IsNull>) {
                return wrap(*n.operand, precedence(*n.operand) <= p_cmp) + (n.negated ? " IS NOT NULL" : " IS NULL");
            } else if constexpr (std::is_same_v<T, Call>) {
                std::string out = (is_aggregate(n.name) ? upper(n.name) : n.name) + "(";
                if (n.star) out += "*";
                for (std::size_t i = 0; i != n.args.size(); ++i) out += (i ? ", " : "") + expr(n.args[i]);
                return out + ")";
            } else if constexpr (std::is_same_v<T, Range>) {
                return wrap(*n.lo, precedence(*n.lo) <= p_range) + ":" + wrap(*n.hi, precedence(*n.hi) <= p_range);
            } else {
                if (not casts) return "cast#" + std::to_string(n.index);
                return (*casts)(n.index);
            }
        }, e.node);
    }

    std::string table(const TableRef &t)
    {
        std::string out;
        if (auto name = std::get_if<std::string>(&t.source)) out = *name;
        else if (auto sub = std::get_if<Box<Query>>(&t.source)) out = "(" + query(**sub) + ")";
        else out = casts ? (*casts)(std::get<CastRef>(t.source).index)
                         : "cast#" + std::to_string(std::get<CastRef>(t.source).index);
        if (not t.alias.empty()) out += " " + t.alias;
        return out;
    }

    std::string core(const SelectCore &c)
    {
        std::string out = c.distinct ? "SELECT DISTINCT " : "SELECT ";
        for (std::size_t i = 0; i != c.items.size(); ++i) {
            if (i) out += ", ";
            const auto &item = c.items[i];
            out += item.expr ? expr(*item.expr) : "*";
            if (not item.alias.empty()) out += " AS " + item.alias;
        }
        out += " FROM " + table(c.from);
        for (const auto &j : c.joins) out += " JOIN " + table(j.table) + " ON " + expr(j.on);
        if (c.where) out += " WHERE " + expr(*c.where);
        if (not c.group_by.empty()) {
            out += " GROUP BY ";
            for (std::size_t i = 0; i != c.group_by.size(); ++i) out += (i ? ", " : "") + expr(c.group_by[i]);
        }
        return out;
    }

    std::string query(const Query &q)
    {
        std::string out;
        for (std::size_t i = 0; i != q.cores.size(); ++i) out += (i ? " UNION ALL " : "") + core(q.cores[i]);
        if (not q.order_by.empty()) {
            out += " ORDER BY ";
            for (std::size_t i = 0; i != q.order_by.size(); ++i) {
                out += (i ? ", " : "") + expr(q.order_by[i].expr);
                if (q.order_by[i].descending) out += " DESC";
            }
        }
        if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
        return out;
    }
};

}

std::string quote(std::string_view s)
{
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

std::string print(const Expr &e, const CastPrinter *casts) { return Printer{casts}.expr(e); }
std::string print(const Query &q, const CastPrinter *casts) { return Printer{casts}.query(q); }

}
