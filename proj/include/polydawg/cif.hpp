#pragma once

#include <polydawg/value.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

/** Canonical table file format: a `#schema:name:tag[,name:tag...]` header, then one comma-separated line per row.
 * Text is double-quoted with `""` escaping; an empty field is null. */
namespace polydawg::cif {

void write(std::ostream &out, const CanonicalTable &table);
std::string to_string(const CanonicalTable &table);

/// Parses CIF text. Errors are parse errors whose message starts with `<source>:<line>:`.
CanonicalTable parse(std::string_view text, const std::string &source = "<input>");

CanonicalTable read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, const CanonicalTable &table);

}
