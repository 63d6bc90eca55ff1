#include <polydawg/engines/array.hpp>

#include <polydawg/engines/sql_exec.hpp>
#include <polydawg/error.hpp>

#include "native_d4m.hpp"

#include <algorithm>
#include <charconv>
#include <mutex>
#include <set>

namespace polydawg {

namespace {

[[noreturn]] void schema_error(const std::string &msg) { throw Error(ErrorKind::schema, msg); }

Value convert_to(const Value &v, Tag tag)
{
    if (v.is_null() or v.tag() == tag) return v;
    if (tag == Tag::real and v.tag() == Tag::integer) return Value(v.as_number());
    if (tag == Tag::text) return Value(to_string(v));
    throw Error(ErrorKind::type, std::string("cannot store ") + tag_name(v.tag()) + " as " + tag_name(tag));
}

}

NDArray NDArray::from_table(const CanonicalTable &table, const LoadOptions &options)
{
    table.check_conformance();
    if (options.dims.empty()) schema_error("array objects need at least one dimension column");
    if (not options.key.empty()) schema_error("array objects take dimension columns, not key columns");

    NDArray a;
    std::vector<std::size_t> dim_index;
    std::set<std::string> dim_names;
    for (const auto &d : options.dims) {
        auto idx = find_column(table.schema, d.name);
        if (not idx) schema_error("dimension column " + d.name + " not in schema " + to_string(table.schema));
        if (table.schema[*idx].tag != Tag::integer)
            schema_error("dimension column " + d.name + " must be int, got " + tag_name(table.schema[*idx].tag));
        if (not dim_names.insert(d.name).second) schema_error("dimension " + d.name + " listed twice");
        if (d.keys and not std::is_sorted(d.keys->begin(), d.keys->end()))
            schema_error("dimension map of " + d.name + " is not sorted");
        if (d.keys and std::adjacent_find(d.keys->begin(), d.keys->end()) != d.keys->end())
            schema_error("dimension map of " + d.name + " has duplicates");
        dim_index.push_back(*idx);
        a.dims.push_back(d);
    }
    std::vector<std::size_t> attr_index;
    for (std::size_t i = 0; i != table.schema.size(); ++i) {
        if (std::find(dim_index.begin(), dim_index.end(), i) != dim_index.end()) continue;
        attr_index.push_back(i);
        a.attrs.push_back(table.schema[i]);
    }

    for (const auto &row : table.rows) {
        std::vector<std::int64_t> coord;
        for (std::size_t d = 0; d != dim_index.size(); ++d) {
            const auto &v = row[dim_index[d]];
            if (v.is_null()) schema_error("null coordinate in dimension " + a.dims[d].name);
            if (v.as_int() < 0) schema_error("negative coordinate in dimension " + a.dims[d].name);
            coord.push_back(v.as_int());
        }
        Row attrs;
        for (auto i : attr_index) attrs.push_back(row[i]);
        auto [it, fresh] = a.cells.emplace(std::move(coord), std::move(attrs));
        if (not fresh) {
            std::string where;
            for (auto c : it->first) where += (where.empty() ? "" : ",") + std::to_string(c);
            schema_error("duplicate cell (" + where + ")");
        }
    }

    for (std::size_t d = 0; d != a.dims.size(); ++d) {
        auto &dim = a.dims[d];
        std::int64_t extent = 0;
        for (const auto &[coord, _] : a.cells) extent = std::max(extent, coord[d] + 1);
        if (dim.keys) extent = std::max<std::int64_t>(extent, std::int64_t(dim.keys->size()));
        if (not dim.length) dim.length = std::max<std::int64_t>(extent, 1);
        if (*dim.length < 1) schema_error("dimension " + dim.name + " needs a positive length");
        if (dim.keys and std::int64_t(dim.keys->size()) > *dim.length)
            schema_error("dimension map of " + dim.name + " is longer than the dimension");
        if (extent > *dim.length)
            schema_error("coordinate " + std::to_string(extent - 1) + " out of bounds for dimension " + dim.name +
                         " of length " + std::to_string(*dim.length));
    }
    return a;
}

CanonicalTable NDArray::to_table() const
{
    CanonicalTable t;
    for (const auto &d : dims) t.schema.push_back({d.name, Tag::integer});
    t.schema.insert(t.schema.end(), attrs.begin(), attrs.end());
    t.rows.reserve(cells.size());
    for (const auto &[coord, values] : cells) {
        Row row(coord.begin(), coord.end());
        row.insert(row.end(), values.begin(), values.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

LoadOptions NDArray::options() const
{
    return {{}, dims};
}

AssociativeArray NDArray::to_assoc() const
{
    if (dims.size() != 2 or attrs.size() != 1)
        throw Error(ErrorKind::schema, "associative-array view needs 2 dimensions and 1 attribute");
    auto key = [&](std::size_t d, std::int64_t c) {
        const auto &keys = dims[d].keys;
        if (not keys) return std::to_string(c);
        if (std::size_t(c) >= keys->size())
            throw Error(ErrorKind::schema, "coordinate " + std::to_string(c) + " has no key in map of " +
                                           dims[d].name);
        return (*keys)[std::size_t(c)];
    };
    AssociativeArray out;
    for (const auto &[coord, values] : cells)
        if (not values[0].is_null()) out.insert(key(0, coord[0]), key(1, coord[1]), values[0]);
    return out;
}

NDArray NDArray::from_assoc(const AssociativeArray &a, std::optional<Tag> tag)
{
    const Tag t = tag.value_or(a.value_tag());
    std::set<std::string> rows, cols;
    for (const auto &[k, _] : a) {
        rows.insert(k.first);
        cols.insert(k.second);
    }
    std::vector<std::string> row_keys(rows.begin(), rows.end()), col_keys(cols.begin(), cols.end());
    auto rank = [](const std::vector<std::string> &keys, const std::string &k) {
        return std::int64_t(std::lower_bound(keys.begin(), keys.end(), k) - keys.begin());
    };
    NDArray out;
    out.dims = {{"r", std::max<std::int64_t>(1, std::int64_t(row_keys.size())), row_keys},
                {"c", std::max<std::int64_t>(1, std::int64_t(col_keys.size())), col_keys}};
    out.attrs = {{"v", t}};
    for (const auto &[k, v] : a)
        out.cells.emplace(std::vector<std::int64_t>{rank(row_keys, k.first), rank(col_keys, k.second)},
                          Row{convert_to(v, t)});
    return out;
}

namespace {

struct Fold
{
    std::string fn;
    std::int64_t count = 0;
    double sum = 0.0;
    Value acc;

    explicit Fold(std::string f) : fn(std::move(f)) { }

    void add(const Value &v)
    {
        if (v.is_null()) return;
        ++count;
        if (fn == "sum") acc = acc.is_null() ? v : add_values(acc, v);
        else if (fn == "avg") sum += v.as_number();
        else if (fn == "min" and (acc.is_null() or compare(v, acc) < 0)) acc = v;
        else if (fn == "max" and (acc.is_null() or compare(v, acc) > 0)) acc = v;
    }

    Value result() const
    {
        if (fn == "count") return Value(count);
        if (fn == "avg") return count ? Value(sum / double(count)) : Value();
        return acc;
    }
};

std::int64_t parse_coordinate(Lexer &lex)
{
    const bool negative = lex.accept("-");
    auto t = lex.next();
    if (not t.is(TokenKind::integer)) lex.fail("expected integer coordinate", t, {"integer"});
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc()) lex.fail("coordinate out of range", t);
    return negative ? -v : v;
}

}

const NDArray & ArrayEngine::get(const std::string &name) const
{
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw_unknown_object(id(), name);
    return it->second;
}

void ArrayEngine::load(const std::string &name, const CanonicalTable &table, const LoadOptions &options)
{
    auto array = NDArray::from_table(table, options);
    std::unique_lock lock(mutex_);
    if (arrays_.contains(name)) throw Error(ErrorKind::duplicate, "object " + name + " already exists");
    arrays_.emplace(name, std::move(array));
}

ObjectPayload ArrayEngine::export_payload(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    const auto &a = get(name);
    return {a.to_table(), a.options()};
}

ObjectPayload ArrayEngine::evaluate(std::string_view native) const
{
    Lexer lex(native);
    if (auto cmd = detail::parse_d4m_command(lex, false)) {
        std::shared_lock lock(mutex_);
        std::map<std::string, AssociativeArray> views;
        auto lookup = [&](const std::string &n) -> const AssociativeArray& {
            auto it = views.find(n);
            if (it == views.end()) it = views.emplace(n, get(n).to_assoc()).first;
            return it->second;
        };
        std::optional<Tag> tag;
        if (cmd->kind != detail::D4mCommand::matmul and cmd->kind != detail::D4mCommand::ewise)
            tag = get(cmd->a).attrs[0].tag;
        auto result = NDArray::from_assoc(detail::run_d4m_command(*cmd, lookup), tag);
        return {result.to_table(), result.options()};
    }

    if (lex.accept_keyword("SUBARRAY")) {
        const auto name = lex.expect_ident("object name").text;
        std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> ranges;
        if (not lex.peek().is(TokenKind::end)) {
            do {
                auto dim = lex.expect_ident("dimension").text;
                lex.expect("=");
                auto lo = parse_coordinate(lex);
                lex.expect(":");
                auto hi = parse_coordinate(lex);
                ranges.push_back({dim, {lo, hi}});
            } while (lex.accept(","));
        }
        detail::expect_end(lex);
        std::shared_lock lock(mutex_);
        const auto &a = get(name);
        std::vector<std::pair<std::size_t, std::pair<std::int64_t, std::int64_t>>> bounds;
        for (const auto &[dim, range] : ranges) {
            auto it = std::find_if(a.dims.begin(), a.dims.end(), [&](const DimSpec &d) { return d.name == dim; });
            if (it == a.dims.end()) throw Error(ErrorKind::not_found, "unknown dimension " + dim + " of " + name);
            bounds.push_back({std::size_t(it - a.dims.begin()), range});
        }
        NDArray out{a.dims, a.attrs, {}};
        for (const auto &[coord, values] : a.cells) {
            bool inside = std::all_of(bounds.begin(), bounds.end(), [&](const auto &b) {
                return b.second.first <= coord[b.first] and coord[b.first] <= b.second.second;
            });
            if (inside) out.cells.emplace(coord, values);
        }
        return {out.to_table(), out.options()};
    }

    if (lex.accept_keyword("FILTER")) {
        const auto name = lex.expect_ident("object name").text;
        auto pred_expr = sql::parse_expr(lex);
        detail::expect_end(lex);
        std::shared_lock lock(mutex_);
        const auto &a = get(name);
        auto layout = a.to_table();
        std::vector<sql::BoundColumn> columns;
        for (const auto &c : layout.schema) columns.push_back({name, c.name, c.tag});
        auto pred = sql::compile_scalar(pred_expr, columns);
        if (pred.type != sql::Type::boolean) throw Error(ErrorKind::type, "FILTER predicate must be boolean");
        NDArray out{a.dims, a.attrs, {}};
        auto cell = a.cells.begin();
        for (const auto &row : layout.rows) {
            if (sql::truthy(pred.eval(row))) out.cells.emplace(cell->first, cell->second);
            ++cell;
        }
        return {out.to_table(), out.options()};
    }

    if (lex.accept_keyword("AGG")) {
        auto fn_tok = lex.expect_ident("aggregate function");
        std::string fn = fn_tok.text;
        std::transform(fn.begin(), fn.end(), fn.begin(), [](unsigned char c) { return char(std::tolower(c)); });
        if (not sql::is_aggregate(fn)) lex.fail("unknown aggregate " + fn_tok.text, fn_tok,
                                                {"count", "sum", "avg", "min", "max"});
        lex.expect("(");
        std::string attr;
        bool star = false;
        if (lex.accept("*")) {
            if (fn != "count") lex.fail(fn + "(*) is not supported", lex.peek());
            star = true;
        } else {
            attr = lex.expect_ident("attribute").text;
        }
        lex.expect(")");
        const auto name = lex.expect_ident("object name").text;
        lex.expect_keyword("BY");
        lex.expect("(");
        std::vector<std::string> by;
        if (not lex.peek().is_punct(")")) {
            do by.push_back(lex.expect_ident("dimension").text);
            while (lex.accept(","));
        }
        lex.expect(")");
        detail::expect_end(lex);

        std::shared_lock lock(mutex_);
        const auto &a = get(name);
        std::optional<std::size_t> attr_index;
        Tag attr_tag = Tag::integer;
        if (not star) {
            auto idx = find_column(a.attrs, attr);
            if (not idx) throw Error(ErrorKind::not_found, "unknown attribute " + attr + " of " + name);
            attr_index = *idx;
            attr_tag = a.attrs[*idx].tag;
        }
        Tag out_tag = attr_tag;
        if (fn == "count") out_tag = Tag::integer;
        else if ((fn == "sum" or fn == "avg") and attr_tag == Tag::text)
            throw Error(ErrorKind::type, fn + " over text attribute " + attr);
        else if (fn == "avg") out_tag = Tag::real;

        std::vector<std::size_t> by_index;
        NDArray out;
        for (const auto &d : by) {
            auto it = std::find_if(a.dims.begin(), a.dims.end(), [&](const DimSpec &x) { return x.name == d; });
            if (it == a.dims.end()) throw Error(ErrorKind::not_found, "unknown dimension " + d + " of " + name);
            by_index.push_back(std::size_t(it - a.dims.begin()));
            out.dims.push_back(*it);
        }
        const std::string out_name = star ? "count" : fn + "_" + attr;
        out.attrs = {{out_name, out_tag}};

        std::map<std::vector<std::int64_t>, Fold> groups;
        if (by.empty()) groups.emplace(std::vector<std::int64_t>{}, Fold(fn));
        for (const auto &[coord, values] : a.cells) {
            std::vector<std::int64_t> key;
            for (auto i : by_index) key.push_back(coord[i]);
            auto &f = groups.try_emplace(std::move(key), Fold(fn)).first->second;
            f.add(star ? Value(std::int64_t(1)) : values[*attr_index]);
        }
        CanonicalTable table;
        for (const auto &d : out.dims) table.schema.push_back({d.name, Tag::integer});
        table.schema.push_back(out.attrs[0]);
        for (const auto &[key, f] : groups) {
            Row row(key.begin(), key.end());
            row.push_back(f.result());
            table.rows.push_back(std::move(row));
        }
        return {std::move(table), out.dims.empty() ? LoadOptions{} : out.options()};
    }

    lex.fail("unknown array command " + polydawg::describe(lex.peek()), lex.peek(),
             {"SUBARRAY", "FILTER", "AGG", "SCAN", "MATMUL", "EWISE", "TRANSPOSE"});
}

bool ArrayEngine::drop(const std::string &name)
{
    std::unique_lock lock(mutex_);
    return arrays_.erase(name) != 0;
}

bool ArrayEngine::contains(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    return arrays_.contains(name);
}

std::vector<std::string> ArrayEngine::object_names() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto &[n, _] : arrays_) out.push_back(n);
    return out;
}

ObjectInfo ArrayEngine::describe(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    const auto &a = get(name);
    Schema schema;
    for (const auto &d : a.dims) schema.push_back({d.name, Tag::integer});
    schema.insert(schema.end(), a.attrs.begin(), a.attrs.end());
    return {schema, a.options(), a.cells.size()};
}

}
