#include <polydawg/error.hpp>

#include <algorithm>
#include <sstream>

namespace polydawg {

const char * to_string(ErrorKind kind)
{
    switch (kind) {
        case ErrorKind::parse:       return "parse error";
        case ErrorKind::validation:  return "validation error";
        case ErrorKind::type:        return "type error";
        case ErrorKind::not_found:   return "not found";
        case ErrorKind::duplicate:   return "duplicate";
        case ErrorKind::schema:      return "schema error";
        case ErrorKind::cast:        return "cast error";
        case ErrorKind::plan:        return "planning error";
        case ErrorKind::execution:   return "execution error";
        case ErrorKind::storage:     return "storage error";
        case ErrorKind::config:      return "configuration error";
        case ErrorKind::consistency: return "internal consistency error";
    }
    return "error";
}

std::string annotate(const ParseError &err, const std::string &text)
{
    const auto begin = std::min(err.span().begin, text.size());
    const auto end = std::max(begin, std::min(err.span().end, text.size()));
    const auto line_begin = text.rfind('\n', begin == 0 ? 0 : begin - 1);
    const std::size_t first = (line_begin == std::string::npos or line_begin >= begin) ? 0 : line_begin + 1;
    auto line_end = text.find('\n', begin);
    if (line_end == std::string::npos) line_end = text.size();

    std::ostringstream out;
    out << to_string(err.kind()) << " at offset " << begin << ": " << err.what();
    if (not err.expected().empty()) {
        out << " (expected ";
        for (std::size_t i = 0; i != err.expected().size(); ++i)
            out << (i ? ", " : "") << err.expected()[i];
        out << ')';
    }
    out << '\n' << text.substr(first, line_end - first) << '\n'
        << std::string(begin - first, ' ') << '^'
        << std::string(end > begin + 1 ? std::min(end, line_end) - begin - 1 : 0, '~') << '\n';
    return out.str();
}

}
