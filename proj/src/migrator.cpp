#include <polydawg/migrator.hpp>

#include <polydawg/engines/array.hpp>
#include <polydawg/engines/keyvalue.hpp>
#include <polydawg/error.hpp>
#include <polydawg/hash.hpp>
#include <polydawg/island.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace polydawg {

namespace {

[[noreturn]] void cast_error(const std::string &msg) { throw Error(ErrorKind::cast, msg); }

std::size_t column(const Schema &schema, const std::string &name, const char *role)
{
    auto idx = find_column(schema, name);
    if (not idx) cast_error(std::string(role) + " column " + name + " not in " + to_string(schema));
    return *idx;
}

/// Parses canonical text back into a value of `tag`.
Value parse_as(const std::string &text, Tag tag)
{
    switch (tag) {
        case Tag::text: return Value(text);
        case Tag::integer: {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() or p != text.data() + text.size()) cast_error("'" + text + "' is not an int");
            return Value(v);
        }
        case Tag::real: {
            double v = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() or p != text.data() + text.size()) cast_error("'" + text + "' is not a real");
            return Value(v);
        }
        case Tag::null: break;
    }
    cast_error("null tag");
}

Value convert(const Value &v, Tag tag)
{
    if (v.is_null() or v.tag() == tag) return v;
    if (tag == Tag::real and v.tag() == Tag::integer) return Value(v.as_number());
    if (tag == Tag::text) return Value(to_string(v));
    if (v.tag() == Tag::text) return parse_as(v.as_text(), tag);
    if (tag == Tag::integer and v.tag() == Tag::real) {
        const double d = v.as_real();
        if (std::trunc(d) == d and std::abs(d) <= 0x1p53) return Value(std::int64_t(d));
    }
    cast_error(std::string("cannot convert ") + tag_name(v.tag()) + " to " + tag_name(tag));
}

Tag unify(const std::vector<Tag> &tags)
{
    if (tags.empty()) return Tag::real;
    bool text = false, real = false;
    for (auto t : tags) {
        text |= t == Tag::text;
        real |= t == Tag::real;
    }
    if (text) return Tag::text;
    return real ? Tag::real : Tag::integer;
}

/*----- (a) relation -> associative array ---------------------------------------------------------------------*/

CastResult relation_to_assoc(const CanonicalTable &t, const CastSpec &spec)
{
    CastResult out;
    out.value.model = Model::keyvalue;
    const bool triple_form =
        is_triple_relation(t.schema) and (spec.key.empty() or spec.key == std::vector<std::string>{"r"});
    if (triple_form) {
        AssociativeArray a;
        for (const auto &row : t.rows) {
            if (row[0].is_null() or row[1].is_null()) cast_error("null key in triple relation");
            if (row[2].is_null()) {
                out.dropped_nulls = true;
                continue;
            }
            a.insert(row[0].as_text(), row[1].as_text(), row[2]);
        }
        out.value.table = a.to_table("row", "col", "val", t.schema[2].tag);
        out.inverse = CastSpec{Model::keyvalue, Model::relational, {}, {}, std::nullopt, t.schema};
        return out;
    }
    if (spec.key.empty()) cast_error("casting a relation to an associative array needs key = <columns>");

    std::vector<std::size_t> key_idx;
    for (const auto &k : spec.key) key_idx.push_back(column(t.schema, k, "key"));
    std::vector<std::size_t> val_idx;
    std::vector<Tag> val_tags;
    for (std::size_t i = 0; i != t.schema.size(); ++i) {
        if (std::find(key_idx.begin(), key_idx.end(), i) != key_idx.end()) continue;
        val_idx.push_back(i);
        val_tags.push_back(t.schema[i].tag);
    }
    const Tag tag = unify(val_tags);
    AssociativeArray a;
    for (const auto &row : t.rows) {
        std::vector<std::string> parts;
        for (auto i : key_idx) {
            if (row[i].is_null()) cast_error("null in key column " + t.schema[i].name);
            parts.push_back(to_string(row[i]));
        }
        const auto row_key = join_key(parts);
        for (auto i : val_idx) {
            if (row[i].is_null()) {
                out.dropped_nulls = true;
                continue;
            }
            a.insert(row_key, t.schema[i].name, convert(row[i], tag));
        }
    }
    out.value.table = a.to_table("row", "col", "val", tag);
    out.inverse = CastSpec{Model::keyvalue, Model::relational, spec.key, {}, std::nullopt, t.schema};
    return out;
}

/*----- (b) associative array -> relation ---------------------------------------------------------------------*/

CastResult assoc_to_relation(const CanonicalTable &t, const CastSpec &spec)
{
    if (t.schema.size() != 3) cast_error("associative array data must be a triple table");
    CastResult out;
    out.value.model = Model::relational;
    const auto &wide = spec.relation_schema;
    if (wide.empty() or is_triple_relation(wide)) {
        const Tag tag = wide.empty() ? t.schema[2].tag : wide[2].tag;
        out.value.table.schema = {{"r", Tag::text}, {"c", Tag::text}, {"v", tag}};
        for (const auto &row : t.rows) out.value.table.rows.push_back({row[0], row[1], convert(row[2], tag)});
        out.inverse = CastSpec{Model::relational, Model::keyvalue, {"r"}, {}, std::nullopt, {}};
        return out;
    }

    /* Inverse of a keyed cast: regroup triples into rows of the recorded schema. */
    std::vector<std::size_t> key_idx;
    for (const auto &k : spec.key) key_idx.push_back(column(wide, k, "key"));
    std::map<std::string, Row> rows;
    for (const auto &triple : t.rows) {
        const auto &row_key = triple[0].as_text();
        auto [it, fresh] = rows.try_emplace(row_key, Row(wide.size()));
        if (fresh) {
            auto parts = split_key(row_key);
            if (parts.size() != key_idx.size()) cast_error("row key '" + row_key + "' has wrong arity");
            for (std::size_t k = 0; k != key_idx.size(); ++k)
                it->second[key_idx[k]] = parse_as(parts[k], wide[key_idx[k]].tag);
        }
        auto col = column(wide, triple[1].as_text(), "attribute");
        if (std::find(key_idx.begin(), key_idx.end(), col) != key_idx.end())
            cast_error("triple column " + wide[col].name + " is a key column");
        it->second[col] = convert(triple[2], wide[col].tag);
    }
    out.value.table.schema = wide;
    for (auto &[k, row] : rows) out.value.table.rows.push_back(std::move(row));
    out.inverse = CastSpec{Model::relational, Model::keyvalue, spec.key, {}, std::nullopt, {}};
    return out;
}

/*----- (c) relation -> array, (d) array -> relation ----------------------------------------------------------*/

CastResult relation_to_array(const CanonicalTable &t, const CastSpec &spec)
{
    const auto &dims = spec.dim_cols.empty() ? spec.key : spec.dim_cols;
    if (dims.empty()) cast_error("casting a relation to an array needs dimension columns (key = <columns>)");
    std::vector<std::size_t> dim_idx;
    for (const auto &d : dims) {
        auto i = column(t.schema, d, "dimension");
        if (t.schema[i].tag != Tag::integer)
            cast_error("dimension column " + d + " must be int, got " + tag_name(t.schema[i].tag));
        dim_idx.push_back(i);
    }
    std::vector<std::size_t> order = dim_idx;
    for (std::size_t i = 0; i != t.schema.size(); ++i)
        if (std::find(dim_idx.begin(), dim_idx.end(), i) == dim_idx.end()) order.push_back(i);

    CastResult out;
    out.value.model = Model::array;
    for (auto i : order) out.value.table.schema.push_back(t.schema[i]);
    std::set<std::vector<std::int64_t>> seen;
    for (const auto &row : t.rows) {
        std::vector<std::int64_t> coord;
        for (auto i : dim_idx) {
            if (row[i].is_null()) cast_error("null coordinate in " + t.schema[i].name);
            if (row[i].as_int() < 0) cast_error("negative coordinate in " + t.schema[i].name);
            coord.push_back(row[i].as_int());
        }
        if (not seen.insert(coord).second) cast_error("duplicate coordinates in relation to array cast");
        Row r;
        for (auto i : order) r.push_back(row[i]);
        out.value.table.rows.push_back(std::move(r));
    }
    std::sort(out.value.table.rows.begin(), out.value.table.rows.end(), TotalLess{});
    for (const auto &d : dims) out.value.options.dims.push_back({d, std::nullopt, std::nullopt});
    out.inverse = CastSpec{Model::array, Model::relational, {}, {}, std::nullopt, t.schema};
    return out;
}

CastResult array_to_relation(const LogicalTable &in, const CastSpec &spec)
{
    CastResult out;
    out.value.model = Model::relational;
    std::vector<std::string> dims;
    for (const auto &d : in.options.dims) dims.push_back(d.name);
    if (spec.relation_schema.empty()) {
        out.value.table = in.table;
    } else {
        std::vector<std::size_t> order;
        for (const auto &c : spec.relation_schema) order.push_back(column(in.table.schema, c.name, "relation"));
        out.value.table.schema = spec.relation_schema;
        for (const auto &row : in.table.rows) {
            Row r;
            for (auto i : order) r.push_back(row[i]);
            out.value.table.rows.push_back(std::move(r));
        }
    }
    out.inverse = CastSpec{Model::relational, Model::array, {}, dims, std::nullopt, {}};
    return out;
}

/*----- (e) associative array -> array, (f) array -> associative array ----------------------------------------*/

CastResult assoc_to_array(const CanonicalTable &t, const CastSpec &spec)
{
    if (t.schema.size() != 3) cast_error("associative array data must be a triple table");
    std::vector<std::vector<std::string>> maps(2);
    if (spec.dim_maps) {
        if (spec.dim_maps->size() != 2) cast_error("associative array to array needs two dimension maps");
        maps = *spec.dim_maps;
        for (const auto &m : maps)
            if (not std::is_sorted(m.begin(), m.end()) or std::adjacent_find(m.begin(), m.end()) != m.end())
                cast_error("dimension maps must be sorted and duplicate-free");
    } else {
        std::set<std::string> rows, cols;
        for (const auto &r : t.rows) {
            rows.insert(r[0].as_text());
            cols.insert(r[1].as_text());
        }
        maps = {{rows.begin(), rows.end()}, {cols.begin(), cols.end()}};
    }
    auto rank = [&](std::size_t d, const std::string &k) {
        auto it = std::lower_bound(maps[d].begin(), maps[d].end(), k);
        if (it == maps[d].end() or *it != k) cast_error("key '" + k + "' missing from dimension map");
        return std::int64_t(it - maps[d].begin());
    };
    CastResult out;
    out.value.model = Model::array;
    out.value.table.schema = {{"r", Tag::integer}, {"c", Tag::integer}, {"v", t.schema[2].tag}};
    for (const auto &r : t.rows)
        out.value.table.rows.push_back({Value(rank(0, r[0].as_text())), Value(rank(1, r[1].as_text())), r[2]});
    std::sort(out.value.table.rows.begin(), out.value.table.rows.end(), TotalLess{});
    out.value.options.dims = {{"r", std::max<std::int64_t>(1, std::int64_t(maps[0].size())), maps[0]},
                              {"c", std::max<std::int64_t>(1, std::int64_t(maps[1].size())), maps[1]}};
    out.inverse = CastSpec{Model::array, Model::keyvalue, {}, {}, maps, {}};
    return out;
}

CastResult array_to_assoc(const LogicalTable &in, const CastSpec &spec)
{
    const auto &t = in.table;
    const bool numeric = t.schema.size() == 3 and (t.schema[2].tag == Tag::integer or t.schema[2].tag == Tag::real);
    if (in.options.dims.size() != 2 or not numeric)
        cast_error("array to associative array needs 2 dimensions and 1 numeric attribute, got " +
                   to_string(t.schema));
    std::vector<std::optional<std::vector<std::string>>> maps(2);
    if (spec.dim_maps) {
        if (spec.dim_maps->size() != 2) cast_error("array to associative array needs two dimension maps");
        maps = {(*spec.dim_maps)[0], (*spec.dim_maps)[1]};
    } else {
        maps = {in.options.dims[0].keys, in.options.dims[1].keys};
    }
    auto key = [&](std::size_t d, const Value &coord) {
        if (coord.is_null()) cast_error("null coordinate");
        const auto c = coord.as_int();
        if (not maps[d]) return std::to_string(c);
        if (c < 0 or std::size_t(c) >= maps[d]->size())
            cast_error("coordinate " + std::to_string(c) + " outside dimension map");
        return (*maps[d])[std::size_t(c)];
    };
    CastResult out;
    out.value.model = Model::keyvalue;
    AssociativeArray a;
    for (const auto &row : t.rows) {
        if (row[2].is_null()) {
            out.dropped_nulls = true;
            continue;
        }
        a.insert(key(0, row[0]), key(1, row[1]), row[2]);
    }
    out.value.table = a.to_table("row", "col", "val", t.schema[2].tag);
    if (maps[0] and maps[1])
        out.inverse = CastSpec{Model::keyvalue, Model::array, {}, {}, std::vector{*maps[0], *maps[1]}, {}};
    return out;
}

}

std::string join_key(const std::vector<std::string> &parts)
{
    std::string out;
    for (std::size_t i = 0; i != parts.size(); ++i) {
        if (i) out += '|';
        for (char c : parts[i]) {
            if (c == '|' or c == '\\') out += '\\';
            out += c;
        }
    }
    return out;
}

std::vector<std::string> split_key(std::string_view key)
{
    std::vector<std::string> parts(1);
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (key[i] == '\\' and i + 1 < key.size()) parts.back() += key[++i];
        else if (key[i] == '|') parts.emplace_back();
        else parts.back() += key[i];
    }
    return parts;
}

CastResult cast_table(const LogicalTable &input, const CastSpec &spec)
{
    if (input.model != spec.source)
        cast_error(std::string("cast expects ") + to_string(spec.source) + " data, got " + to_string(input.model));
    input.table.check_conformance();
    using enum Model;
    if (spec.source == spec.target) {
        if (spec.source == relational and not spec.relation_schema.empty() and spec.relation_schema != input.table.schema)
            return array_to_relation(input, spec);
        return {input, spec, false};
    }
    if (spec.source == relational and spec.target == keyvalue) return relation_to_assoc(input.table, spec);
    if (spec.source == keyvalue and spec.target == relational) return assoc_to_relation(input.table, spec);
    if (spec.source == relational and spec.target == array) return relation_to_array(input.table, spec);
    if (spec.source == array and spec.target == relational) return array_to_relation(input, spec);
    if (spec.source == keyvalue and spec.target == array) return assoc_to_array(input.table, spec);
    return array_to_assoc(input, spec);
}

CastResult cast_table(const CanonicalTable &table, const CastSpec &spec, const LoadOptions &options)
{
    return cast_table(LogicalTable{spec.source, table, options}, spec);
}

LogicalTable decode(const ObjectPayload &payload, Model engine_model, Model logical)
{
    LogicalTable stored{engine_model, payload.table, payload.options};
    if (engine_model == logical) return stored;
    if (logical != Model::keyvalue)
        cast_error(std::string("cannot read ") + to_string(engine_model) + " storage as " + to_string(logical));
    return cast_table(stored, CastSpec{engine_model, Model::keyvalue, {}, {}, std::nullopt, {}}).value;
}

ObjectPayload encode(const LogicalTable &value, Model engine_model)
{
    if (value.model == engine_model) return {value.table, value.options};
    if (value.model != Model::keyvalue)
        cast_error(std::string("cannot store ") + to_string(value.model) + " data on a " + to_string(engine_model) +
                   " engine");
    auto r = cast_table(value, CastSpec{Model::keyvalue, engine_model, {}, {}, std::nullopt, {}});
    return {std::move(r.value.table), std::move(r.value.options)};
}

namespace {

std::atomic<std::uint64_t> migration_counter{0};

}

std::string describe(const CastSpec &spec)
{
    std::string out = std::string(to_string(spec.source)) + "->" + to_string(spec.target);
    auto list = [](const std::vector<std::string> &xs) {
        std::string s;
        for (const auto &x : xs) s += (s.empty() ? "" : ",") + x;
        return s;
    };
    if (not spec.key.empty()) out += " key=" + list(spec.key);
    if (not spec.dim_cols.empty()) out += " dims=" + list(spec.dim_cols);
    if (spec.dim_maps) out += " maps=" + std::to_string((*spec.dim_maps)[0].size()) + "x" +
                              std::to_string((*spec.dim_maps)[1].size());
    return out;
}

std::string migrate(EngineCatalog &catalog, const std::string &object, const std::string &to_engine,
                    const MigrationSpec &spec, std::vector<std::string> *warnings)
{
    const auto from = catalog.engine_of(object);
    auto &target = catalog.engine(to_engine);
    auto value = decode(catalog.export_payload(object), catalog.engine(from).model(), spec.logical);
    for (const auto &c : spec.casts) {
        auto r = cast_table(value, c);
        if (r.dropped_nulls and warnings)
            warnings->push_back("lossy cast " + describe(c) + " of " + object + ": null values dropped");
        value = std::move(r.value);
    }
    auto payload = encode(value, target.model());

    std::string seed = object + '\0' + from + '\0' + to_engine + '\0' +
                       std::to_string(migration_counter.fetch_add(1)) + '\0';
    for (const auto &c : spec.casts) seed += describe(c) + '\0';
    auto name = "__mig_" + content_hash(seed);
    catalog.load(to_engine, name, payload, true);
    return name;
}

}
