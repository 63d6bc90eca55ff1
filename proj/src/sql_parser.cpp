#include <polydawg/sql.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>

namespace polydawg::sql {

namespace {

constexpr std::string_view reserved[] = {
    "select", "from", "where", "group", "by", "order", "limit", "join", "inner", "on", "as", "and", "or", "not",
    "asc", "desc", "union", "all", "distinct", "is", "null", "like",
};

bool is_reserved(const Token &t)
{
    return t.kind == TokenKind::ident and
           std::any_of(std::begin(reserved), std::end(reserved), [&](auto kw) { return t.is_keyword(kw); });
}

std::string lower(std::string s)
{
    for (auto &c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

Span join(Span a, Span b) { return {std::min(a.begin, b.begin), std::max(a.end, b.end)}; }

struct Parser
{
    Lexer &lex;
    const CastParser *casts;

    Expr with_span(auto node, Span span) { return Expr{std::move(node), {span}}; }

    Expr or_expr()
    {
        auto lhs = and_expr();
        while (lex.peek().is_keyword("or")) {
            lex.next();
            auto rhs = and_expr();
            auto span = join(lhs.loc.span, rhs.loc.span);
            lhs = with_span(Binary{Binary::logical_or, std::move(lhs), std::move(rhs)}, span);
        }
        return lhs;
    }

    Expr and_expr()
    {
        auto lhs = not_expr();
        while (lex.peek().is_keyword("and")) {
            lex.next();
            auto rhs = not_expr();
            auto span = join(lhs.loc.span, rhs.loc.span);
            lhs = with_span(Binary{Binary::logical_and, std::move(lhs), std::move(rhs)}, span);
        }
        return lhs;
    }

    Expr not_expr()
    {
        if (lex.peek().is_keyword("not")) {
            auto tok = lex.next();
            auto operand = not_expr();
            auto span = join(tok.span, operand.loc.span);
            return with_span(Unary{Unary::logical_not, std::move(operand)}, span);
        }
        return comparison();
    }

    Expr comparison()
    {
        auto lhs = range();
        const auto &t = lex.peek();
        if (t.is_keyword("is")) {
            lex.next();
            const bool negated = lex.accept_keyword("not");
            auto null_tok = lex.expect_keyword("null");
            auto span = join(lhs.loc.span, null_tok.span);
            return with_span(IsNull{std::move(lhs), negated}, span);
        }
        std::optional<Binary::Op> op;
        if (t.is_punct("=")) op = Binary::eq;
        else if (t.is_punct("!=")) op = Binary::ne;
        else if (t.is_punct("<")) op = Binary::lt;
        else if (t.is_punct("<=")) op = Binary::le;
        else if (t.is_punct(">")) op = Binary::gt;
        else if (t.is_punct(">=")) op = Binary::ge;
        else if (t.is_keyword("like")) op = Binary::like;
        if (not op) return lhs;
        lex.next();
        auto rhs = range();
        auto span = join(lhs.loc.span, rhs.loc.span);
        return with_span(Binary{*op, std::move(lhs), std::move(rhs)}, span);
    }

    Expr range()
    {
        auto lo = additive();
        if (not lex.peek().is_punct(":")) return lo;
        lex.next();
        auto hi = additive();
        auto span = join(lo.loc.span, hi.loc.span);
        return with_span(Range{std::move(lo), std::move(hi)}, span);
    }

    Expr additive()
    {
        auto lhs = multiplicative();
        for (;;) {
            Binary::Op op;
            if (lex.peek().is_punct("+")) op = Binary::add;
            else if (lex.peek().is_punct("-")) op = Binary::sub;
            else return lhs;
            lex.next();
            auto rhs = multiplicative();
            auto span = join(lhs.loc.span, rhs.loc.span);
            lhs = with_span(Binary{op, std::move(lhs), std::move(rhs)}, span);
        }
    }

    Expr multiplicative()
    {
        auto lhs = unary();
        for (;;) {
            Binary::Op op;
            if (lex.peek().is_punct("*")) op = Binary::mul;
            else if (lex.peek().is_punct("/")) op = Binary::div;
            else return lhs;
            lex.next();
            auto rhs = unary();
            auto span = join(lhs.loc.span, rhs.loc.span);
            lhs = with_span(Binary{op, std::move(lhs), std::move(rhs)}, span);
        }
    }

    Expr unary()
    {
        if (lex.peek().is_punct("-")) {
            auto tok = lex.next();
            /* A minus sign directly before a number token is part of the literal. */
            const auto &next = lex.peek();
            if (next.is(TokenKind::integer) or next.is(TokenKind::real)) {
                auto num = lex.next();
                num.text.insert(0, "-");
                auto lit = number(num);
                lit.loc.span = join(tok.span, num.span);
                return lit;
            }
            auto operand = unary();
            auto span = join(tok.span, operand.loc.span);
            return with_span(Unary{Unary::neg, std::move(operand)}, span);
        }
        return primary();
    }

    Expr number(const Token &tok)
    {
        const char *first = tok.text.data(), *last = first + tok.text.size();
        if (tok.kind == TokenKind::integer) {
            std::int64_t i;
            auto [p, ec] = std::from_chars(first, last, i);
            if (ec != std::errc() or p != last) lex.fail("integer literal out of range", tok);
            return with_span(Literal{Value(i)}, tok.span);
        }
        double d;
        auto [p, ec] = std::from_chars(first, last, d);
        if (ec != std::errc() or p != last) lex.fail("malformed real literal", tok);
        return with_span(Literal{Value(d)}, tok.span);
    }

    Expr primary()
    {
        const auto &t = lex.peek();
        switch (t.kind) {
            case TokenKind::integer:
            case TokenKind::real:
                return number(lex.next());
            case TokenKind::string: {
                auto tok = lex.next();
                return with_span(Literal{Value(tok.text)}, tok.span);
            }
            case TokenKind::punct:
                if (t.is_punct("(")) {
                    auto open = lex.next();
                    auto e = or_expr();
                    auto close = lex.expect(")");
                    e.loc.span = join(open.span, close.span);
                    return e;
                }
                break;
            case TokenKind::ident: {
                if (is_reserved(t) and not (t.is_keyword("select") and lex.peek(1).is_punct("("))) break;
                if (casts and t.is_keyword("cast") and lex.peek(1).is_punct("(")) {
                    const auto begin = t.span.begin;
                    auto ref = (*casts)(lex);
                    return with_span(ref, Span{begin, lex.last_end()});
                }
                auto name = lex.next();
                if (lex.peek().is_punct("(")) return call(name);
                if (lex.peek().is_punct(".")) {
                    lex.next();
                    auto column = lex.expect_ident("column name");
                    return with_span(ColumnRef{name.text, column.text}, join(name.span, column.span));
                }
                return with_span(ColumnRef{{}, name.text}, name.span);
            }
            case TokenKind::end:
                break;
        }
        lex.fail("unexpected " + describe(t), t, {"expression"});
    }

    Expr call(const Token &name)
    {
        lex.expect("(");
        Call c{lower(name.text), {}, false};
        if (lex.peek().is_punct("*")) {
            lex.next();
            c.star = true;
        } else if (not lex.peek().is_punct(")")) {
            do c.args.push_back(or_expr()); while (lex.accept(","));
        }
        auto close = lex.expect(")");
        return with_span(std::move(c), join(name.span, close.span));
    }

    /*----- queries ---------------------------------------------------------------------------------------------*/

    std::string optional_alias(bool allow_bare = true)
    {
        if (lex.accept_keyword("as")) return lex.expect_ident("alias").text;
        if (allow_bare and lex.peek().is(TokenKind::ident) and not is_reserved(lex.peek()))
            return lex.next().text;
        return {};
    }

    TableRef table_ref()
    {
        const auto &t = lex.peek();
        TableRef ref{std::string{}, {}, {t.span}};
        const auto begin = t.span.begin;
        if (casts and t.is_keyword("cast") and lex.peek(1).is_punct("(")) {
            ref.source = (*casts)(lex);
        } else if (t.is_punct("(")) {
            lex.next();
            ref.source = Box<Query>(query());
            lex.expect(")");
        } else {
            if (not t.is(TokenKind::ident) or is_reserved(t))
                lex.fail("unexpected " + describe(t), t, {"table name", "'('"});
            ref.source = lex.next().text;
        }
        ref.alias = optional_alias();
        ref.loc.span = {begin, std::max(begin, lex.last_end())};
        return ref;
    }

    SelectCore core()
    {
        lex.expect_keyword("select");
        SelectCore c{};
        c.distinct = lex.accept_keyword("distinct");
        do {
            SelectItem item;
            if (lex.peek().is_punct("*")) {
                lex.next();
            } else {
                item.expr = or_expr();
                item.alias = optional_alias(false);
            }
            c.items.push_back(std::move(item));
        } while (lex.accept(","));
        lex.expect_keyword("from");
        c.from = table_ref();
        for (;;) {
            if (lex.peek().is_keyword("inner") and lex.peek(1).is_keyword("join")) lex.next();
            if (not lex.accept_keyword("join")) break;
            auto table = table_ref();
            lex.expect_keyword("on");
            c.joins.push_back(Join{std::move(table), or_expr()});
        }
        if (lex.accept_keyword("where")) c.where = or_expr();
        if (lex.peek().is_keyword("group")) {
            lex.next();
            lex.expect_keyword("by");
            do c.group_by.push_back(or_expr()); while (lex.accept(","));
        }
        return c;
    }

    Query query()
    {
        const auto begin = lex.peek().span.begin;
        Query q;
        q.cores.push_back(core());
        while (lex.peek().is_keyword("union")) {
            lex.next();
            lex.expect_keyword("all");
            q.cores.push_back(core());
        }
        if (lex.peek().is_keyword("order")) {
            lex.next();
            lex.expect_keyword("by");
            do {
                OrderItem item{or_expr(), false};
                if (lex.accept_keyword("desc")) item.descending = true;
                else lex.accept_keyword("asc");
                q.order_by.push_back(std::move(item));
            } while (lex.accept(","));
        }
        if (lex.accept_keyword("limit")) {
            auto tok = lex.peek();
            if (not tok.is(TokenKind::integer)) lex.fail("unexpected " + describe(tok), tok, {"integer"});
            q.limit = number(lex.next()).as<Literal>().value.as_int();
        }
        q.loc.span = {begin, std::max(begin, lex.last_end())};
        return q;
    }
};

}

Expr make_literal(Value v) { return Expr{Literal{std::move(v)}, {}}; }
Expr make_column(std::string name, std::string qualifier)
{
    return Expr{ColumnRef{std::move(qualifier), std::move(name)}, {}};
}
Expr make_binary(Binary::Op op, Expr lhs, Expr rhs) { return Expr{Binary{op, std::move(lhs), std::move(rhs)}, {}}; }

bool is_aggregate(std::string_view name)
{
    return name == "count" or name == "sum" or name == "avg" or name == "min" or name == "max";
}

bool is_comparison(Binary::Op op)
{
    return op == Binary::eq or op == Binary::ne or op == Binary::lt or op == Binary::le or op == Binary::gt or
           op == Binary::ge or op == Binary::like;
}

std::string TableRef::binding_name() const
{
    if (not alias.empty()) return alias;
    if (auto name = std::get_if<std::string>(&source)) return *name;
    return {};
}

Expr parse_expr(Lexer &lex, const CastParser *casts)
{
    Parser p{lex, casts};
    return p.or_expr();
}

Query parse_query(Lexer &lex, const CastParser *casts)
{
    Parser p{lex, casts};
    return p.query();
}

Query parse_native_query(std::string_view text)
{
    Lexer lex(text);
    auto q = parse_query(lex);
    if (not lex.peek().is(TokenKind::end)) lex.fail("unexpected " + describe(lex.peek()), lex.peek(), {"end of input"});
    return q;
}

Expr parse_native_expr(std::string_view text)
{
    Lexer lex(text);
    auto e = parse_expr(lex);
    if (not lex.peek().is(TokenKind::end)) lex.fail("unexpected " + describe(lex.peek()), lex.peek(), {"end of input"});
    return e;
}

void for_each_table(Query &q, const std::function<void(TableRef&)> &fn)
{
    auto visit = [&](TableRef &t) {
        fn(t);
        if (auto sub = std::get_if<Box<Query>>(&t.source)) for_each_table(**sub, fn);
    };
    for (auto &c : q.cores) {
        visit(c.from);
        for (auto &j : c.joins) visit(j.table);
    }
}

void for_each_table(const Query &q, const std::function<void(const TableRef&)> &fn)
{
    for_each_table(const_cast<Query&>(q), [&](TableRef &t) { fn(t); });
}

void for_each_expr(const Expr &e, const std::function<void(const Expr&)> &fn)
{
    fn(e);
    std::visit([&](const auto &n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Unary>) for_each_expr(*n.operand, fn);
        else if constexpr (std::is_same_v<T, Binary>) { for_each_expr(*n.lhs, fn); for_each_expr(*n.rhs, fn); }
        else if constexpr (std::is_same_v<T, IsNull>) for_each_expr(*n.operand, fn);
        else if constexpr (std::is_same_v<T, Call>) { for (auto &a : n.args) for_each_expr(a, fn); }
        else if constexpr (std::is_same_v<T, Range>) { for_each_expr(*n.lo, fn); for_each_expr(*n.hi, fn); }
    }, e.node);
}

void for_each_expr(const Query &q, const std::function<void(const Expr&)> &fn)
{
    auto table = [&](const TableRef &t) {
        if (auto sub = std::get_if<Box<Query>>(&t.source)) for_each_expr(**sub, fn);
    };
    for (auto &c : q.cores) {
        for (auto &item : c.items)
            if (item.expr) for_each_expr(*item.expr, fn);
        table(c.from);
        for (auto &j : c.joins) {
            table(j.table);
            for_each_expr(j.on, fn);
        }
        if (c.where) for_each_expr(*c.where, fn);
        for (auto &g : c.group_by) for_each_expr(g, fn);
    }
    for (auto &o : q.order_by) for_each_expr(o.expr, fn);
}

}
