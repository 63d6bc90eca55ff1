#include <doctest.h>

#include <polydawg/cif.hpp>
#include <polydawg/config.hpp>
#include <polydawg/datagen.hpp>
#include <polydawg/error.hpp>

#include <set>

using namespace polydawg;

TEST_CASE("config files")
{
    auto cfg = parse_config("# tuning\n"
                            "data_dir = /tmp/pd\n"
                            "plan_cap = 4   \n"
                            "\n"
                            "similarity_threshold=0.75\n"
                            "seed = 9\n"
                            "weight_structure = 0.5\nweight_objects = 0.4\n");
    CHECK(cfg.data_dir == "/tmp/pd");
    CHECK(cfg.monitor_log_path() == "/tmp/pd/monitor.log");
    CHECK(cfg.system.plan_cap == 4);
    CHECK(cfg.system.threshold == 0.75);
    CHECK(cfg.system.seed == 9);
    CHECK(cfg.system.weights.constants == doctest::Approx(0.1));

    CHECK(parse_config("monitor_log = x.log").monitor_log_path() == "x.log");

    auto message = [](std::string_view text) {
        try {
            parse_config(text, {}, "pd.conf");
        } catch (const Error &e) {
            CHECK(e.kind() == ErrorKind::config);
            return std::string(e.what());
        }
        return std::string("accepted");
    };
    CHECK(message("a = 1\n").find("pd.conf:1") != std::string::npos);
    CHECK(message("plan_cap = 3\nbogus\n").find("pd.conf:2") != std::string::npos);
    CHECK(message("plan_cap = three") .find("not a valid number") != std::string::npos);
    CHECK(message("plan_cap = 0") != "accepted");
    CHECK(message("weight_constants = 0.5") .find("sum to 1") != std::string::npos);
    CHECK(message("similarity_threshold = 1.5") != "accepted");
    CHECK_THROWS_AS(load_config("/nonexistent/pd.conf"), Error);
}

TEST_CASE("generated dataset shape")
{
    const auto objects = generate_dataset(1, 42);
    REQUIRE(objects.size() == 4);
    std::map<std::string, const GeneratedObject*> by_name;
    for (const auto &o : objects) {
        o.table.check_conformance();
        by_name[o.name] = &o;
    }
    CHECK(by_name.at("patients")->table.rows.size() == 100);
    CHECK(by_name.at("meds")->table.rows.size() == 300);
    CHECK(by_name.at("notes")->table.rows.size() == 200);
    CHECK(by_name.at("waveform")->table.rows.size() == 1000);
    CHECK(by_name.at("waveform")->engine == "arr");
    CHECK(by_name.at("notes")->engine == "kv");

    std::set<std::string> ids;
    for (const auto &row : by_name.at("patients")->table.rows) {
        ids.insert(row[0].as_text());
        CHECK(row[1].as_int() >= 18);
        CHECK(row[1].as_int() <= 95);
    }
    CHECK(ids.size() == 100);
    for (const auto &row : by_name.at("meds")->table.rows) CHECK(ids.contains(row[0].as_text()));

    CHECK(generate_dataset(3, 1)[0].table.rows.size() == 300);
    CHECK_THROWS_AS(generate_dataset(0, 1), Error);
}

TEST_CASE("generation is deterministic in the seed")
{
    auto text = [](std::uint64_t seed) {
        std::string out;
        for (const auto &o : generate_dataset(2, seed)) out += cif::to_string(o.table);
        return out;
    };
    CHECK(text(5) == text(5));
    CHECK(text(5) != text(6));
}

TEST_CASE("generated objects load into their engines")
{
    auto catalog = EngineCatalog::with_default_engines();
    for (const auto &o : generate_dataset(1, 3)) catalog->load(o.engine, o.name, o.table, o.options);
    CHECK(catalog->engine_of("waveform") == "arr");
    CHECK(catalog->export_table("patients").rows.size() == 100);
}
