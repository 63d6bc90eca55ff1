#pragma once

#include <polydawg/engines/assoc.hpp>
#include <polydawg/lexer.hpp>

#include <functional>
#include <optional>

namespace polydawg::detail {

/// Associative-array operations shared by the key-value and array native languages.
struct D4mCommand
{
    enum Kind { scan, grep, matmul, ewise, transpose } kind;
    std::string a;
    std::string b;
    std::optional<KeyRange> rows;
    std::optional<KeyRange> cols;
    std::string needle;
    Semiring semiring = Semiring::plus_times;
    EwiseOp op = EwiseOp::plus;
};

/// Parses one command if the input starts with one of `allowed`'s keywords; otherwise leaves the lexer untouched.
std::optional<D4mCommand> parse_d4m_command(Lexer &lex, bool allow_grep);

/// Expects end of input.
void expect_end(Lexer &lex);

using AssocLookup = std::function<const AssociativeArray&(const std::string&)>;
AssociativeArray run_d4m_command(const D4mCommand &cmd, const AssocLookup &lookup);

}
