#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace polydawg {

enum class ErrorKind
{
    parse,
    validation,
    type,
    not_found,
    duplicate,
    schema,
    cast,
    plan,
    execution,
    storage,
    config,
    consistency, ///< plans of one query disagreed; never a user error
};

const char * to_string(ErrorKind kind);

/** Byte range `[begin, end)` into a query text. */
struct Span
{
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const Span&) const = default;
};

class Error : public std::runtime_error
{
    ErrorKind kind_;

    public:
    Error(ErrorKind kind, const std::string &message) : std::runtime_error(message), kind_(kind) { }

    ErrorKind kind() const noexcept { return kind_; }
};

class ParseError : public Error
{
    Span span_;
    std::vector<std::string> expected_;

    public:
    ParseError(const std::string &message, Span span, std::vector<std::string> expected = {})
        : Error(ErrorKind::parse, message), span_(span), expected_(std::move(expected))
    { }

    Span span() const noexcept { return span_; }
    const std::vector<std::string> & expected() const noexcept { return expected_; }
};

/// Renders `err` followed by the offending line of `text` with a caret marker under the span.
std::string annotate(const ParseError &err, const std::string &text);

}
