#include <polydawg/lexer.hpp>

#include <cctype>

namespace polydawg {

bool Token::is_keyword(std::string_view kw) const
{
    if (kind != TokenKind::ident or text.size() != kw.size()) return false;
    for (std::size_t i = 0; i != kw.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(text[i])) != std::tolower(static_cast<unsigned char>(kw[i])))
            return false;
    return true;
}

std::string describe(const Token &t)
{
    switch (t.kind) {
        case TokenKind::end:     return "end of input";
        case TokenKind::ident:   return "identifier '" + t.text + "'";
        case TokenKind::integer:
        case TokenKind::real:    return "number " + t.text;
        case TokenKind::string:  return "string literal";
        case TokenKind::punct:   return "'" + t.text + "'";
    }
    return "token";
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) or c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) or c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

}

Token Lexer::lex()
{
    while (pos_ < src_.size() and std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    Token tok;
    const auto start = pos_;
    if (pos_ >= src_.size()) {
        tok.span = {start, start};
        return tok;
    }
    const char c = src_[pos_];
    if (ident_start(c)) {
        while (pos_ < src_.size() and ident_char(src_[pos_])) ++pos_;
        tok.kind = TokenKind::ident;
    } else if (digit(c)) {
        while (pos_ < src_.size() and digit(src_[pos_])) ++pos_;
        tok.kind = TokenKind::integer;
        if (pos_ + 1 < src_.size() and src_[pos_] == '.' and digit(src_[pos_ + 1])) {
            tok.kind = TokenKind::real;
            ++pos_;
            while (pos_ < src_.size() and digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() and (src_[pos_] == 'e' or src_[pos_] == 'E')) {
            auto p = pos_ + 1;
            if (p < src_.size() and (src_[p] == '+' or src_[p] == '-')) ++p;
            if (p < src_.size() and digit(src_[p])) {
                tok.kind = TokenKind::real;
                pos_ = p;
                while (pos_ < src_.size() and digit(src_[pos_])) ++pos_;
            }
        }
    } else if (c == '\'' or c == '"') {
        ++pos_;
        for (;;) {
            if (pos_ >= src_.size()) {
                Token at;
                at.span = {start, src_.size()};
                fail("unterminated string literal", at);
            }
            if (src_[pos_] == c) {
                if (pos_ + 1 < src_.size() and src_[pos_ + 1] == c) {
                    tok.text += c;
                    pos_ += 2;
                    continue;
                }
                ++pos_;
                break;
            }
            tok.text += src_[pos_++];
        }
        tok.kind = TokenKind::string;
        tok.span = {start, pos_};
        return tok;
    } else {
        static constexpr std::string_view two[] = {"<=", ">=", "!=", "<>"};
        tok.kind = TokenKind::punct;
        for (auto p : two) {
            if (src_.substr(pos_, 2) == p) {
                pos_ += 2;
                tok.text = p == "<>" ? "!=" : std::string(p);
                tok.span = {start, pos_};
                return tok;
            }
        }
        static constexpr std::string_view one = "(),.=<>+-*/:;|";
        if (one.find(c) == std::string_view::npos) {
            Token at;
            at.span = {start, start + 1};
            fail(std::string("unexpected character '") + c + "'", at);
        }
        ++pos_;
    }
    tok.span = {start, pos_};
    if (tok.text.empty()) tok.text = std::string(src_.substr(start, pos_ - start));
    return tok;
}

const Token & Lexer::peek(std::size_t k)
{
    while (ahead_.size() <= k) ahead_.push_back(lex());
    return ahead_[k];
}

Token Lexer::next()
{
    peek();
    Token t = std::move(ahead_.front());
    ahead_.pop_front();
    last_end_ = t.span.end;
    return t;
}

bool Lexer::accept(std::string_view p)
{
    if (peek().is_punct(p)) {
        next();
        return true;
    }
    return false;
}

bool Lexer::accept_keyword(std::string_view kw)
{
    if (peek().is_keyword(kw)) {
        next();
        return true;
    }
    return false;
}

Token Lexer::expect(std::string_view p)
{
    if (not peek().is_punct(p)) fail("unexpected " + describe(peek()), peek(), {"'" + std::string(p) + "'"});
    return next();
}

Token Lexer::expect_keyword(std::string_view kw)
{
    if (not peek().is_keyword(kw)) fail("unexpected " + describe(peek()), peek(), {std::string(kw)});
    return next();
}

Token Lexer::expect_ident(const char *what)
{
    if (not peek().is(TokenKind::ident)) fail("unexpected " + describe(peek()), peek(), {what});
    return next();
}

void Lexer::fail(const std::string &message, const Token &at, std::vector<std::string> expected)
{
    Span span = at.span;
    span.begin = std::min(span.begin, src_.size());
    span.end = std::min(std::max(span.end, span.begin), src_.size());
    throw ParseError(message, span, std::move(expected));
}

std::string_view Lexer::raw_until_close(Span &span)
{
    /* Only valid when nothing has been looked ahead past the opening parenthesis. */
    std::size_t pos = ahead_.empty() ? pos_ : ahead_.front().span.begin;
    ahead_.clear();
    const auto start = pos;
    int depth = 0;
    while (pos < src_.size()) {
        const char c = src_[pos];
        if (c == '\'' or c == '"') {
            ++pos;
            while (pos < src_.size()) {
                if (src_[pos] == c) {
                    if (pos + 1 < src_.size() and src_[pos + 1] == c) { pos += 2; continue; }
                    break;
                }
                ++pos;
            }
            if (pos >= src_.size()) {
                Token at;
                at.span = {start, src_.size()};
                fail("unterminated string literal in raw query", at);
            }
            ++pos;
            continue;
        }
        if (c == '(') ++depth;
        if (c == ')') {
            if (depth == 0) break;
            --depth;
        }
        ++pos;
    }
    pos_ = pos;
    if (pos >= src_.size()) {
        Token at;
        at.span = {src_.size(), src_.size()};
        fail("unexpected end of input in raw query", at, {"')'"});
    }
    span = {start, pos};
    return src_.substr(start, pos - start);
}

}
