#include "native_d4m.hpp"

#include <polydawg/error.hpp>

namespace polydawg::detail {

namespace {

KeyRange parse_key_range(Lexer &lex)
{
    auto lo = lex.next();
    if (not lo.is(TokenKind::string)) lex.fail("expected quoted key", lo, {"string"});
    lex.expect(":");
    auto hi = lex.next();
    if (not hi.is(TokenKind::string)) lex.fail("expected quoted key", hi, {"string"});
    return {lo.text, hi.text};
}

std::string object_name(Lexer &lex) { return lex.expect_ident("object name").text; }

}

void expect_end(Lexer &lex)
{
    const auto &t = lex.peek();
    if (not t.is(TokenKind::end)) lex.fail("unexpected " + describe(t), t, {"end of input"});
}

std::optional<D4mCommand> parse_d4m_command(Lexer &lex, bool allow_grep)
{
    D4mCommand cmd{};
    if (lex.accept_keyword("SCAN")) {
        cmd.kind = D4mCommand::scan;
        cmd.a = object_name(lex);
        if (lex.accept_keyword("ROWS")) cmd.rows = parse_key_range(lex);
        if (lex.accept_keyword("COLS")) cmd.cols = parse_key_range(lex);
    } else if (allow_grep and lex.accept_keyword("GREP")) {
        cmd.kind = D4mCommand::grep;
        cmd.a = object_name(lex);
        auto s = lex.next();
        if (not s.is(TokenKind::string)) lex.fail("expected quoted substring", s, {"string"});
        cmd.needle = s.text;
    } else if (lex.accept_keyword("MATMUL")) {
        cmd.kind = D4mCommand::matmul;
        cmd.a = object_name(lex);
        cmd.b = object_name(lex);
        if (lex.accept_keyword("SEMIRING")) {
            auto first = lex.expect_ident("semiring");
            lex.expect(".");
            auto second = lex.expect_ident("semiring");
            auto s = parse_semiring(first.text + "." + second.text);
            if (not s) lex.fail("unknown semiring " + first.text + "." + second.text, first,
                                {"plus.times", "min.plus", "max.times"});
            cmd.semiring = *s;
        }
    } else if (lex.accept_keyword("EWISE")) {
        cmd.kind = D4mCommand::ewise;
        cmd.a = object_name(lex);
        cmd.b = object_name(lex);
        auto t = lex.expect_ident("element-wise operator");
        auto op = parse_ewise_op(t.text);
        if (not op) lex.fail("unknown element-wise operator " + t.text, t, {"plus", "min", "max"});
        cmd.op = *op;
    } else if (lex.accept_keyword("TRANSPOSE")) {
        cmd.kind = D4mCommand::transpose;
        cmd.a = object_name(lex);
    } else {
        return std::nullopt;
    }
    expect_end(lex);
    return cmd;
}

AssociativeArray run_d4m_command(const D4mCommand &cmd, const AssocLookup &lookup)
{
    switch (cmd.kind) {
        case D4mCommand::scan:
            return assoc_select(lookup(cmd.a), cmd.rows, cmd.cols);
        case D4mCommand::grep: {
            AssociativeArray out;
            for (const auto &[k, v] : lookup(cmd.a))
                if (v.tag() == Tag::text and v.as_text().find(cmd.needle) != std::string::npos)
                    out.assign(k.first, k.second, v);
            return out;
        }
        case D4mCommand::matmul:
            return assoc_matmul(lookup(cmd.a), lookup(cmd.b), cmd.semiring);
        case D4mCommand::ewise:
            return assoc_ewise(lookup(cmd.a), lookup(cmd.b), cmd.op);
        case D4mCommand::transpose:
            return assoc_transpose(lookup(cmd.a));
    }
    throw Error(ErrorKind::execution, "unreachable d4m command");
}

}
