#include <polydawg/cif.hpp>

#include <polydawg/error.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace polydawg::cif {

namespace {

std::string quote(const std::string &s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

[[noreturn]] void fail(const std::string &source, std::size_t line, const std::string &what)
{
    throw ParseError(source + ":" + std::to_string(line) + ": " + what, Span{});
}

struct Field
{
    std::string text;
    bool quoted = false;
};

std::vector<Field> split_fields(std::string_view line, const std::string &source, std::size_t lineno)
{
    std::vector<Field> fields;
    std::size_t i = 0;
    for (;;) {
        Field f;
        if (i < line.size() and line[i] == '"') {
            f.quoted = true;
            ++i;
            for (;;) {
                if (i >= line.size()) fail(source, lineno, "unterminated string");
                if (line[i] == '"') {
                    if (i + 1 < line.size() and line[i + 1] == '"') {
                        f.text += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                f.text += line[i++];
            }
            if (i < line.size() and line[i] != ',')
                fail(source, lineno, "unexpected character after closing quote");
        } else {
            while (i < line.size() and line[i] != ',') f.text += line[i++];
        }
        fields.push_back(std::move(f));
        if (i >= line.size()) break;
        ++i; // ','
    }
    return fields;
}

Value parse_field(const Field &f, const Column &col, const std::string &source, std::size_t lineno)
{
    if (f.quoted) {
        if (col.tag != Tag::text)
            fail(source, lineno, "quoted value in " + std::string(tag_name(col.tag)) + " column " + col.name);
        return Value(f.text);
    }
    if (f.text.empty()) return Value();
    const char *first = f.text.data(), *last = f.text.data() + f.text.size();
    switch (col.tag) {
        case Tag::integer: {
            std::int64_t i;
            auto [p, ec] = std::from_chars(first, last, i);
            if (ec != std::errc() or p != last)
                fail(source, lineno, "bad integer '" + f.text + "' in column " + col.name);
            return Value(i);
        }
        case Tag::real: {
            double d;
            auto [p, ec] = std::from_chars(first, last, d);
            if (ec != std::errc() or p != last)
                fail(source, lineno, "bad real '" + f.text + "' in column " + col.name);
            if (std::isnan(d)) fail(source, lineno, "NaN in column " + col.name);
            return Value(d);
        }
        case Tag::text:
            return Value(f.text);
        case Tag::null:
            break;
    }
    fail(source, lineno, "bad column tag");
}

}

void write(std::ostream &out, const CanonicalTable &table)
{
    out << "#schema:";
    for (std::size_t i = 0; i != table.schema.size(); ++i)
        out << (i ? "," : "") << table.schema[i].name << ':' << tag_name(table.schema[i].tag);
    out << '\n';
    for (const auto &row : table.rows) {
        for (std::size_t i = 0; i != row.size(); ++i) {
            if (i) out << ',';
            const auto &v = row[i];
            if (v.tag() == Tag::text) out << quote(v.as_text());
            else if (not v.is_null()) out << polydawg::to_string(v);
        }
        out << '\n';
    }
}

std::string to_string(const CanonicalTable &table)
{
    std::ostringstream out;
    write(out, table);
    return out.str();
}

CanonicalTable parse(std::string_view text, const std::string &source)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        if (not line.empty() and line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    if (lines.empty()) fail(source, 1, "missing #schema header");

    constexpr std::string_view prefix = "#schema:";
    auto header = lines[0];
    if (header.substr(0, prefix.size()) != prefix) fail(source, 1, "missing #schema header");
    header.remove_prefix(prefix.size());

    CanonicalTable table;
    std::size_t start = 0;
    while (start <= header.size()) {
        auto comma = header.find(',', start);
        if (comma == std::string_view::npos) comma = header.size();
        auto item = header.substr(start, comma - start);
        auto colon = item.find(':');
        if (colon == std::string_view::npos or colon == 0)
            fail(source, 1, "malformed column declaration '" + std::string(item) + "'");
        auto tag = parse_tag(item.substr(colon + 1));
        if (not tag) fail(source, 1, "unknown tag '" + std::string(item.substr(colon + 1)) + "'");
        std::string name(item.substr(0, colon));
        if (find_column(table.schema, name)) fail(source, 1, "duplicate column " + name);
        table.schema.push_back({std::move(name), *tag});
        start = comma + 1;
    }

    for (std::size_t l = 1; l != lines.size(); ++l) {
        auto fields = split_fields(lines[l], source, l + 1);
        if (fields.size() != table.schema.size())
            fail(source, l + 1, "expected " + std::to_string(table.schema.size()) + " fields, found " +
                                std::to_string(fields.size()));
        Row row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c != fields.size(); ++c)
            row.push_back(parse_field(fields[c], table.schema[c], source, l + 1));
        table.rows.push_back(std::move(row));
    }
    return table;
}

CanonicalTable read_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (not in) throw Error(ErrorKind::storage, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

void write_file(const std::filesystem::path &path, const CanonicalTable &table)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (not out) throw Error(ErrorKind::storage, "cannot write " + path.string());
    write(out, table);
    if (not out) throw Error(ErrorKind::storage, "write failed for " + path.string());
}

}
