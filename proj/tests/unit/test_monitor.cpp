#include <doctest.h>

#include <polydawg/error.hpp>
#include <polydawg/monitor.hpp>

#include "support/generators.hpp"

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <thread>

using namespace polydawg;

namespace {

Signature sig(std::string structure, std::vector<std::string> objects, std::vector<std::string> constants)
{
    return {std::move(structure), std::move(objects), std::move(constants)};
}

PerfRecord rec(const Signature &s, std::string plan, double ms, std::int64_t ts = 0)
{
    PerfRecord r;
    r.signature = s;
    r.plan_id = std::move(plan);
    r.runtime_ms = ms;
    r.timestamp_ms = ts;
    r.usage.busy = {{"kv", 0.25}, {"rel", 0}};
    return r;
}

struct TempDir
{
    std::filesystem::path path;

    TempDir()
    {
        static std::atomic<int> n{0};
        path = std::filesystem::temp_directory_path() /
               ("polydawg-monitor-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

const Signature base = sig("00000000000000aa", {"kv.N", "rel.T"}, {"'a'", "5"});

}

TEST_CASE("similarity formula")
{
    CHECK(similarity(base, base) == 1.0);
    CHECK(similarity(base, sig(base.structure, base.objects, {"'z'"})) == 0.9);
    CHECK(similarity(base, sig("00000000000000bb", base.objects, base.constants)) == doctest::Approx(0.4));
    CHECK(similarity(sig("s", {}, {}), sig("s", {}, {})) == 1.0);
    CHECK(similarity(sig("s", {}, {}), sig("t", {"x"}, {})) == doctest::Approx(0.1));

    gen::Rng rng(2);
    auto random_sig = [&] {
        std::vector<std::string> objs, consts;
        for (int i = 0; i < 4; ++i) {
            if (rng() % 2) objs.push_back("o" + std::to_string(i));
            if (rng() % 2) consts.push_back(std::to_string(rng() % 3));
        }
        std::sort(objs.begin(), objs.end());
        std::sort(consts.begin(), consts.end());
        return sig(rng() % 2 ? "a" : "b", objs, consts);
    };
    for (int i = 0; i < 200; ++i) {
        auto a = random_sig(), b = random_sig();
        const double s = similarity(a, b);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(s == similarity(b, a));
        CHECK(similarity(a, a) == 1.0);
    }
}

TEST_CASE("log lines round-trip with escaped separators")
{
    auto r = rec(sig("0123456789abcdef", {"kv.a;b", "rel.T"}, {"'x\ty'", "'50%'", "'a,b=c'"}), "p1", 12.5, 99);
    r.phase = Phase::background;
    const auto line = format_record(r);
    CHECK(std::count(line.begin(), line.end(), '\t') == 7);
    CHECK(line == "99\tbackground\t0123456789abcdef\tkv.a%3Bb;rel.T\t'x%09y';'50%25';'a%2Cb%3Dc'\tp1\t12.5\tkv=0.25,rel=0");
    CHECK(parse_record(line) == [&] {
        auto expected = r;
        expected.usage.timestamp_ms = 99;
        return expected;
    }());
    CHECK_THROWS_AS(parse_record("1\ttraining\tabc"), Error);
    CHECK_THROWS_AS(parse_record("1\twhenever\ts\t\t\tp\t1\t"), Error);
}

TEST_CASE("nearest and best plan")
{
    MonitorDB db;
    CHECK_FALSE(db.nearest(base).has_value());
    CHECK_THROWS_AS(db.best_plan(base), Error);

    db.record(rec(base, "A", 100));
    db.record(rec(base, "A", 140));
    db.record(rec(base, "B", 80));
    CHECK(db.best_plan(base) == "B");
    db.record(rec(base, "B", 160));
    CHECK(db.best_plan(base) == "A"); // means 120 vs 120, tie by id
    db.record(rec(base, "C", 0));
    CHECK(db.best_plan(base) == "C");

    auto exact = db.nearest(base);
    REQUIRE(exact);
    CHECK(exact->first == base);
    CHECK(exact->second == 1.0);

    auto sibling = db.nearest(sig(base.structure, base.objects, {"'q'"}));
    REQUIRE(sibling);
    CHECK(sibling->second == doctest::Approx(0.9));
    CHECK(sibling->second >= 0.8);

    // equal similarity: most recent wins
    const auto other = sig(base.structure, base.objects, {"'b'"});
    db.record(rec(other, "A", 1));
    auto probe = db.nearest(sig(base.structure, base.objects, {"'q'"}));
    CHECK(probe->first == other);
}

TEST_CASE("nearest never decreases as records are added")
{
    gen::Rng rng(6);
    MonitorDB db;
    const auto probe = sig("s1", {"o1", "o2"}, {"1"});
    double last = 0;
    for (int i = 0; i < 60; ++i) {
        std::vector<std::string> objs{"o" + std::to_string(rng() % 4)};
        db.record(rec(sig(rng() % 3 ? "s0" : "s1", objs, {std::to_string(rng() % 3)}), "p", 1));
        const double now = db.nearest(probe)->second;
        CHECK(now >= last);
        last = now;
    }
}

TEST_CASE("usage-restricted best plan")
{
    MonitorDB db;
    auto fast = rec(base, "fast", 10);
    fast.usage.busy = {{"kv", 0.9}};
    auto slow = rec(base, "slow", 30);
    slow.usage.busy = {{"kv", 0.1}};
    db.record(fast);
    db.record(slow);
    UsageSnapshot quiet;
    quiet.busy = {{"kv", 0.0}};
    CHECK(db.best_plan(base) == "fast");
    CHECK(db.best_plan_near(base, quiet, 0.5) == std::optional<std::string>("slow"));
    UsageSnapshot odd;
    odd.busy = {{"rel", 1.0}};
    CHECK_FALSE(db.best_plan_near(base, odd, 0.5).has_value());
    CHECK(usage_distance(fast.usage, slow.usage) == doctest::Approx(0.8));
}

TEST_CASE("the log is the source of truth")
{
    TempDir dir;
    const auto path = dir.path / "monitor.log";
    gen::Rng rng(1);
    std::string expected_dump;
    std::map<std::string, std::vector<PerfRecord>> expected_index;
    {
        MonitorDB db(path);
        for (int i = 0; i < 200; ++i) {
            auto r = rec(sig(i % 2 ? "aaaaaaaaaaaaaaaa" : "bbbbbbbbbbbbbbbb", {"rel.x"}, {std::to_string(i % 7)}),
                         "p" + std::to_string(i % 3), double(rng() % 1000) / 8.0, i);
            r.phase = Phase(i % 3);
            db.record(r);
        }
        expected_dump = db.dump();
        expected_index = db.index_snapshot();
    }
    MonitorDB reopened(path);
    CHECK(reopened.size() == 200);
    CHECK(reopened.dump() == expected_dump);
    CHECK(reopened.index_snapshot() == expected_index);
    std::ifstream in(path);
    std::stringstream file;
    file << in.rdbuf();
    CHECK(file.str() == expected_dump);

    // a torn final line is discarded and the log keeps working
    {
        std::ofstream out(path, std::ios::app);
        out << "123\ttrain";
    }
    MonitorDB recovered(path);
    CHECK(recovered.size() == 200);
    recovered.record(rec(base, "late", 1));
    CHECK(MonitorDB(path).size() == 201);

    std::ofstream(path, std::ios::app) << "garbage line\n";
    CHECK_THROWS_AS(MonitorDB{path}, Error);
}

TEST_CASE("background drain")
{
    MonitorDB db;
    auto ok = [](const PendingPlan &p) { return rec(p.signature, p.plan_id, 5); };
    CHECK(db.drain_background(ok, [] { return true; }) == 0);

    for (auto id : {"a", "b", "c"}) db.enqueue({base, id, "q"});
    db.enqueue({base, "a", "q"});
    CHECK(db.pending().size() == 3);
    CHECK(db.drain_background(ok, [] { return false; }) == 0);
    CHECK(db.drain_background(ok, [] { return true; }) == 3);
    CHECK(db.size() == 3);
    CHECK(db.pending().empty());
    for (const auto &r : db.records()) CHECK(r.phase == Phase::background);

    db.enqueue({base, "boom", "q"});
    CHECK(db.drain_background([](const PendingPlan&) -> PerfRecord { throw Error(ErrorKind::execution, "x"); },
                              [] { return true; }) == 1);
    CHECK(db.records().back().failed);
    CHECK(db.best_plan(base) != "boom");
}

TEST_CASE("a foreground query stops the drain before the next pop")
{
    MonitorDB db;
    for (auto id : {"a", "b", "c"}) db.enqueue({base, id, "q"});
    std::mutex m;
    std::condition_variable cv;
    bool started = false, release = false;
    std::atomic<bool> foreground{false};

    std::thread drainer([&] {
        auto blocking = [&](const PendingPlan &p) {
            std::unique_lock lock(m);
            started = true;
            cv.notify_all();
            cv.wait(lock, [&] { return release; });
            return rec(p.signature, p.plan_id, 1);
        };
        CHECK(db.drain_background(blocking, [&] { return not foreground.load(); }) == 1);
    });
    {
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return started; });
        foreground = true;
        release = true;
    }
    cv.notify_all();
    drainer.join();
    CHECK(db.pending().size() == 2);
}
