#include <doctest.h>

#include <polydawg/cif.hpp>
#include <polydawg/engines/keyvalue.hpp>
#include <polydawg/error.hpp>
#include <polydawg/migrator.hpp>

#include "support/generators.hpp"

#include <functional>

using namespace polydawg;

namespace {

LogicalTable rel(CanonicalTable t) { return {Model::relational, std::move(t), {}}; }

LogicalTable assoc(const AssociativeArray &a) { return {Model::keyvalue, a.to_table("row", "col", "val"), {}}; }

CastSpec spec(Model from, Model to, std::vector<std::string> key = {}, std::vector<std::string> dims = {})
{
    CastSpec s;
    s.source = from;
    s.target = to;
    s.key = std::move(key);
    s.dim_cols = std::move(dims);
    return s;
}

LogicalTable round_trip(const LogicalTable &in, const CastSpec &forward)
{
    auto there = cast_table(in, forward);
    REQUIRE(there.inverse.has_value());
    CHECK_FALSE(there.dropped_nulls);
    return cast_table(there.value, *there.inverse).value;
}

}

TEST_CASE("keyed relation becomes one triple per non-key value")
{
    CanonicalTable patients{{{"id", Tag::integer}, {"age", Tag::integer}}, {{7, 70}}};
    auto out = cast_table(rel(patients), spec(Model::relational, Model::keyvalue, {"id"}));
    REQUIRE(out.value.table.rows.size() == 1);
    CHECK(out.value.table.rows[0] == Row{Value("7"), Value("age"), Value(std::int64_t(70))});
}

TEST_CASE("associative array to array ranks keys")
{
    AssociativeArray a;
    a.insert("b", "x", Value(std::int64_t(1)));
    a.insert("a", "x", Value(std::int64_t(2)));
    auto out = cast_table(assoc(a), spec(Model::keyvalue, Model::array));
    const auto &dims = out.value.options.dims;
    REQUIRE(dims.size() == 2);
    CHECK(dims[0].keys == std::vector<std::string>{"a", "b"});
    CHECK(dims[1].keys == std::vector<std::string>{"x"});
    CHECK(*dims[0].length == 2);
    CHECK(*dims[1].length == 1);
    // cell (1, 0) holds the value of ("b", "x")
    const auto it = std::find_if(out.value.table.rows.begin(), out.value.table.rows.end(), [](const Row &r) {
        return r[0] == Value(std::int64_t(1)) and r[1] == Value(std::int64_t(0));
    });
    REQUIRE(it != out.value.table.rows.end());
    CHECK((*it)[2] == Value(std::int64_t(1)));
}

TEST_CASE("round trips on generated tables are bag identities")
{
    gen::Rng rng(5);
    for (int i = 0; i < 60; ++i) {
        auto t = gen::random_table(rng, 1 + rng() % 30, 2 + rng() % 4);
        INFO("table " << i);
        CHECK(bag_equal(round_trip(rel(t), spec(Model::relational, Model::keyvalue, {"k0"})).table, t));
        CHECK(bag_equal(round_trip(rel(t), spec(Model::relational, Model::array, {}, {"k0"})).table, t));

        auto a = gen::random_assoc(rng, 1 + int(rng() % 12), 1 + int(rng() % 12), 0.4, i % 2 == 0);
        const auto triples = assoc(a);
        CHECK(bag_equal(round_trip(triples, spec(Model::keyvalue, Model::relational)).table, triples.table));
        CHECK(bag_equal(round_trip(triples, spec(Model::keyvalue, Model::array)).table, triples.table));
        auto arr = cast_table(triples, spec(Model::keyvalue, Model::array)).value;
        auto back = cast_table(arr, *cast_table(triples, spec(Model::keyvalue, Model::array)).inverse).value;
        CHECK(bag_equal(round_trip(arr, spec(Model::array, Model::relational)).table, arr.table));
        CHECK(bag_equal(back.table, triples.table));
    }
}

TEST_CASE("composite keys escape the separator")
{
    CanonicalTable t{{{"a", Tag::text}, {"b", Tag::text}, {"x", Tag::integer}}, {{"p|q", "r\\s", 1}, {"p", "q|r\\s", 2}}};
    auto out = cast_table(rel(t), spec(Model::relational, Model::keyvalue, {"a", "b"}));
    CHECK(out.value.table.rows.size() == 2);
    CHECK(split_key(join_key({"p|q", "r\\s"})) == std::vector<std::string>{"p|q", "r\\s"});
    CHECK(bag_equal(cast_table(out.value, *out.inverse).value.table, t));
}

TEST_CASE("nulls are dropped only by the relation to associative array rule")
{
    CanonicalTable t{{{"id", Tag::integer}, {"x", Tag::integer}}, {{1, Value()}, {2, 5}}};
    auto out = cast_table(rel(t), spec(Model::relational, Model::keyvalue, {"id"}));
    CHECK(out.dropped_nulls);
    CHECK(out.value.table.rows.size() == 1);
    auto arr = cast_table(rel(t), spec(Model::relational, Model::array, {}, {"id"}));
    CHECK_FALSE(arr.dropped_nulls);
    CHECK(arr.value.table.rows.size() == 2);
}

TEST_CASE("cast errors")
{
    CanonicalTable t{{{"id", Tag::integer}, {"name", Tag::text}}, {{1, "a"}, {1, "b"}}};
    auto kind = [](const std::function<void()> &fn) {
        try { fn(); } catch (const Error &e) { return e.kind(); }
        return ErrorKind::storage;
    };
    CHECK(kind([&] { cast_table(rel(t), spec(Model::relational, Model::keyvalue)); }) == ErrorKind::cast);
    CHECK(kind([&] { cast_table(rel(t), spec(Model::relational, Model::array)); }) == ErrorKind::cast);
    CHECK(kind([&] { cast_table(rel(t), spec(Model::relational, Model::array, {}, {"id"})); }) == ErrorKind::cast);
    CHECK(kind([&] { cast_table(rel(t), spec(Model::relational, Model::array, {}, {"name"})); }) == ErrorKind::cast);
    CHECK(kind([&] { cast_table(rel(t), spec(Model::relational, Model::keyvalue, {"nope"})); }) == ErrorKind::cast);
}

TEST_CASE("migrate loads a temporary copy and reports the missing field")
{
    auto cat = EngineCatalog::with_default_engines();
    AssociativeArray a;
    a.insert("r1", "c1", Value(std::int64_t(3)));
    cat->load("kv", "A", a.to_table("row", "col", "val"));
    auto name = migrate(*cat, "A", "rel", {Model::keyvalue, {spec(Model::keyvalue, Model::relational)}});
    CHECK(name.starts_with("__mig_"));
    CHECK(name.size() == 6 + 16);
    CHECK(cat->engine_of(name) == "rel");
    auto t = cat->export_table(name);
    CHECK(t.schema.size() == 3);
    CHECK(t.schema[0].name == "r");
    CHECK(cat->temporaries() == std::vector<std::string>{name});

    CanonicalTable p{{{"id", Tag::integer}, {"age", Tag::integer}}, {{1, 2}}};
    cat->load("rel", "P", p);
    try {
        migrate(*cat, "P", "arr", {Model::relational, {spec(Model::relational, Model::array)}});
        FAIL("no error");
    } catch (const Error &e) {
        CHECK(std::string(e.what()).find("dim") != std::string::npos);
    }
    CHECK(cat->drop_temporaries() == 1);
}

TEST_CASE("casts are deterministic")
{
    gen::Rng rng(9);
    auto t = gen::random_table(rng, 20, 4);
    auto a = cast_table(rel(t), spec(Model::relational, Model::keyvalue, {"k0"}));
    auto b = cast_table(rel(t), spec(Model::relational, Model::keyvalue, {"k0"}));
    CHECK(cif::to_string(a.value.table) == cif::to_string(b.value.table));
}
