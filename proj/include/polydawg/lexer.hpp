#pragma once

#include <polydawg/error.hpp>

#include <deque>
#include <string>
#include <string_view>

namespace polydawg {

enum class TokenKind { end, ident, integer, real, string, punct };

struct Token
{
    TokenKind kind = TokenKind::end;
    std::string text; ///< identifier as written, unescaped string contents, number lexeme, or punctuation
    Span span;

    bool is(TokenKind k) const { return kind == k; }
    bool is_punct(std::string_view p) const { return kind == TokenKind::punct and text == p; }
    /// Case-insensitive identifier match.
    bool is_keyword(std::string_view kw) const;
};

/// `end of input`, `identifier 'x'`, `'('`, ...
std::string describe(const Token &t);

/** On-demand tokenizer shared by the polystore language and the native mini-languages. Strings may use single or
 * double quotes, with the quote doubled inside. */
class Lexer
{
    std::string_view src_;
    std::size_t pos_;
    std::deque<Token> ahead_;
    std::size_t last_end_ = 0;

    Token lex();

    public:
    explicit Lexer(std::string_view src, std::size_t offset = 0) : src_(src), pos_(offset) { }

    std::string_view source() const { return src_; }

    /// End offset of the most recently consumed token.
    std::size_t last_end() const { return last_end_; }

    const Token & peek(std::size_t k = 0);
    Token next();

    /// Consumes the next token if it is punctuation `p`.
    bool accept(std::string_view p);
    /// Consumes the next token if it is keyword `kw`.
    bool accept_keyword(std::string_view kw);
    Token expect(std::string_view p);
    Token expect_keyword(std::string_view kw);
    Token expect_ident(const char *what = "identifier");

    [[noreturn]] void fail(const std::string &message, const Token &at, std::vector<std::string> expected = {});

    /** Returns the raw text from the current position up to (excluding) the `)` that closes an already-consumed
     * `(`, honouring quotes and nesting. The closing parenthesis is left as the next token. */
    std::string_view raw_until_close(Span &span);
};

}
