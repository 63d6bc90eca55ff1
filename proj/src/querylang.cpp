#include <polydawg/querylang.hpp>

#include <polydawg/error.hpp>

#include <algorithm>

namespace polydawg::ql {

namespace {

bool is_raw_island(std::string_view island) { return island.starts_with("raw."); }

class Parser
{
    Lexer lex_;

    std::string dotted_name(const char *what)
    {
        auto first = lex_.expect_ident(what);
        std::string name = first.text;
        while (lex_.peek().is_punct(".") and lex_.peek(1).is(TokenKind::ident)) {
            lex_.next();
            name += "." + lex_.next().text;
        }
        return name;
    }

    CastNode cast_node()
    {
        auto kw = lex_.expect_keyword("cast");
        lex_.expect("(");
        CastNode c{scope(), {}, {}, {}, {}};
        lex_.expect(",");
        c.target = dotted_name("target island");
        while (lex_.accept(",")) {
            const auto &t = lex_.peek();
            if (t.is_keyword("key") and lex_.peek(1).is_punct("=")) {
                lex_.next();
                lex_.next();
                do c.key.push_back(lex_.expect_ident("key column").text);
                while (lex_.accept(","));
                break;
            }
            if (not c.alias.empty() or not c.key.empty())
                lex_.fail("unexpected " + describe(t), t, {"key", "')'"});
            c.alias = lex_.expect_ident("alias").text;
        }
        auto close = lex_.expect(")");
        c.loc.span = {kw.span.begin, close.span.end};
        return c;
    }

    public:
    explicit Parser(std::string_view text) : lex_(text) { }

    /// `select(...)` spanning the whole body is the d4m operator rather than SQL.
    bool select_call_body()
    {
        if (not lex_.peek(1).is_punct("(")) return false;
        int depth = 0;
        for (std::size_t k = 1;; ++k) {
            const auto &t = lex_.peek(k);
            if (t.is(TokenKind::end)) return false;
            if (t.is_punct("(")) ++depth;
            else if (t.is_punct(")") and --depth == 0) return lex_.peek(k + 1).is_punct(")");
        }
    }

    ScopeNode scope()
    {
        const auto begin = lex_.peek().span.begin;
        ScopeNode s;
        s.island = dotted_name("island name");
        lex_.expect("(");
        sql::CastParser hook = [&](Lexer&) -> sql::CastRef {
            auto c = cast_node();
            s.casts.push_back(std::move(c));
            return {s.casts.size() - 1};
        };
        if (is_raw_island(s.island)) {
            Span span;
            s.body = RawBody{std::string(lex_.raw_until_close(span))};
        } else if (lex_.peek().is_keyword("select") and not select_call_body()) {
            s.body = sql::parse_query(lex_, &hook);
        } else {
            s.body = sql::parse_expr(lex_, &hook);
        }
        auto close = lex_.expect(")");
        s.loc.span = {begin, close.span.end};
        return s;
    }

    QueryAST query()
    {
        QueryAST q{scope()};
        const auto &t = lex_.peek();
        if (not t.is(TokenKind::end)) lex_.fail("unexpected " + describe(t), t, {"end of input"});
        return q;
    }
};

}

QueryAST parse(std::string_view text)
{
    return Parser(text).query();
}

std::string pretty_print(const ScopeNode &scope)
{
    sql::CastPrinter casts = [&](std::size_t i) {
        const auto &c = scope.casts.at(i);
        std::string out = "cast(" + pretty_print(*c.inner) + ", " + c.target;
        if (not c.alias.empty()) out += ", " + c.alias;
        if (not c.key.empty()) {
            out += ", key = ";
            for (std::size_t k = 0; k != c.key.size(); ++k) out += (k ? ", " : "") + c.key[k];
        }
        return out + ")";
    };
    std::string body = std::visit([&](const auto &b) -> std::string {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, RawBody>) return b.text;
        else return sql::print(b, &casts);
    }, scope.body);
    return scope.island + "(" + body + ")";
}

std::string pretty_print(const QueryAST &ast) { return pretty_print(ast.root); }

bool d4m_compatible(Model model, const ObjectInfo &info)
{
    switch (model) {
        case Model::keyvalue:   return true;
        case Model::relational: return is_triple_relation(info.schema);
        case Model::array:
            return info.options.dims.size() == 2 and info.schema.size() == 3 and
                   (info.schema[2].tag == Tag::integer or info.schema[2].tag == Tag::real);
    }
    return false;
}

namespace {

[[noreturn]] void invalid(const std::string &msg) { throw Error(ErrorKind::validation, msg); }

struct Validator
{
    const IslandRegistry &registry;
    const EngineCatalog &catalog;

    ResolvedScope scope(const ScopeNode &s)
    {
        const auto &island = registry.island(s.island);
        ResolvedScope r{s.island, island.model, {}, {}};

        std::map<std::string, std::size_t> aliases;
        for (std::size_t i = 0; i != s.casts.size(); ++i) {
            const auto &c = s.casts[i];
            const auto &target = registry.island(c.target);
            if (target.model != island.model)
                invalid("cast to island " + c.target + " yields " + to_string(target.model) + " data, but scope " +
                        s.island + " uses " + to_string(island.model) + " data");
            if (target.degenerate()) invalid("cannot cast into degenerate island " + c.target);
            r.casts.push_back(scope(*c.inner));
            if (not c.alias.empty() and not aliases.emplace(c.alias, i).second)
                invalid("cast alias " + c.alias + " defined twice");
        }

        auto leaf = [&](const std::string &name) {
            if (r.leaves.contains(name)) return;
            if (auto it = aliases.find(name); it != aliases.end()) {
                r.leaves[name] = {Leaf::alias, name, {}, island.model, it->second, s.casts[it->second].inner->island};
                return;
            }
            auto engine = catalog.locate(name);
            if (not engine) throw Error(ErrorKind::not_found, "unknown object " + name);
            const auto model = catalog.engine(*engine).model();
            const auto &members = island.members;
            if (s.island == "d4m") {
                if (not d4m_compatible(model, catalog.describe(name)))
                    invalid("object " + name + " on " + *engine + " is not an associative array");
            } else if (std::find(members.begin(), members.end(), *engine) == members.end()) {
                invalid("object " + name + " lives on engine " + *engine + " (" + to_string(model) +
                        "), outside island " + s.island + "; cast it first");
            }
            r.leaves[name] = {Leaf::object, name, *engine, model, 0, {}};
        };

        if (std::holds_alternative<RawBody>(s.body)) {
            if (not island.degenerate()) invalid("island " + s.island + " does not accept native text");
            return r;
        }
        if (island.degenerate()) invalid("degenerate island " + s.island + " takes native text only");

        if (auto q = std::get_if<sql::Query>(&s.body)) {
            if (not island.operators.contains(IslandOp::select) or island.model != Model::relational)
                invalid("island " + s.island + " does not accept SELECT queries");
            sql::for_each_table(*q, [&](const sql::TableRef &t) {
                if (auto name = std::get_if<std::string>(&t.source)) leaf(*name);
            });
            sql::for_each_expr(*q, [&](const sql::Expr &e) {
                if (e.is<sql::CastRef>()) invalid("cast used as a value inside a SELECT");
            });
            return r;
        }

        const auto &body = std::get<sql::Expr>(s.body);
        std::function<void(const sql::Expr&)> input = [&](const sql::Expr &e) {
            if (auto ref = std::get_if<sql::ColumnRef>(&e.node)) {
                if (not ref->qualifier.empty()) invalid("object name " + ref->qualifier + "." + ref->name +
                                                        " may not be qualified");
                leaf(ref->name);
                return;
            }
            if (e.is<sql::CastRef>()) return;
            auto call = std::get_if<sql::Call>(&e.node);
            if (not call) invalid("expected an operator, object, or cast, got " + sql::print(e));
            auto op = parse_island_op(call->name);
            if (not op or not island.operators.contains(*op))
                invalid("operator " + call->name + " is not in island " + s.island);
            if (*op == IslandOp::select and island.model == Model::relational)
                invalid("island " + s.island + " takes a SELECT query, not select(...)");
            bind_op_call(*op, *call, std::vector<std::string>(input_arity(*op)));
            for (std::size_t i = 0; i != input_arity(*op); ++i) input(call->args[i]);
        };
        input(body);
        return r;
    }
};

}

ResolvedAST validate(QueryAST ast, const IslandRegistry &registry, const EngineCatalog &catalog)
{
    auto root = Validator{registry, catalog}.scope(ast.root);
    return {std::move(ast), std::move(root)};
}

}
