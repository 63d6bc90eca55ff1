#include <doctest.h>

#include <polydawg/error.hpp>
#include <polydawg/executor.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace polydawg;

namespace {

std::string site_of(const CandidatePlan &plan)
{
    for (const auto &s : plan.steps)
        if (s.kind == PlanStep::cross_op) return s.engine;
    return {};
}

struct Rig
{
    std::shared_ptr<VirtualClock> clock = std::make_shared<VirtualClock>();
    std::unique_ptr<System> sys;

    explicit Rig(SystemConfig config = {}) : sys(fixture::matmul_system(clock, std::move(config)))
    {
        sys->latency.ms = {{{"kv", StepKind::cross_op}, 80},
                           {{"rel", StepKind::cross_op}, 120},
                           {{"arr", StepKind::cross_op}, 200}};
    }

    std::vector<CandidatePlan> plans(const Decomposition &d) const
    {
        return enumerate_plans(d, sys->registry(), sys->catalog());
    }
    Decomposition decomposition(std::string_view q = fixture::matmul_query) const
    {
        return plan_query(q, sys->registry(), sys->catalog());
    }
    std::string plan_on(const std::string &site) const
    {
        for (const auto &p : plans(decomposition()))
            if (site_of(p) == site) return p.id;
        FAIL("no plan on " << site);
        return {};
    }
    bool no_temporaries() const
    {
        for (const auto &[name, engine] : sys->catalog().objects())
            if (name.starts_with("__mig_")) return false;
        return sys->catalog().temporaries().empty();
    }
};

CanonicalTable expected_matmul(System &sys)
{
    auto n = AssociativeArray::from_table(sys.catalog().export_table("N"));
    auto t = AssociativeArray::from_table(sys.catalog().export_table("T"));
    return oracle::dense_matmul(n, t, Semiring::plus_times).to_table();
}

}

TEST_CASE("usage fractions over the window")
{
    UsageTracker u(10'000);
    auto zero = u.snapshot(0, {"kv", "rel"});
    CHECK(zero.busy == std::map<std::string, double>{{"kv", 0.0}, {"rel", 0.0}});

    u.add("kv", 0, 10'000);
    CHECK(u.snapshot(10'000, {"kv"}).busy.at("kv") == doctest::Approx(1.0));
    u.add("kv", 2'000, 8'000);
    CHECK(u.snapshot(10'000, {"kv"}).busy.at("kv") == 1.0);
    CHECK(u.snapshot(15'000, {"kv"}).busy.at("kv") == doctest::Approx(0.5));
    u.add("rel", 19'000, 21'000);
    CHECK(u.snapshot(20'000, {"rel"}).busy.at("rel") == doctest::Approx(0.1));
    CHECK(u.snapshot(40'000, {"kv", "rel"}).busy.at("rel") == 0.0);
}

TEST_CASE("a single-container plan matches the engine's native answer")
{
    Rig rig;
    auto d = rig.decomposition("relational(SELECT r, c, v FROM T WHERE v > 3)");
    REQUIRE(d.containers.size() == 1);
    auto plans = rig.plans(d);
    REQUIRE(plans.size() == 1);
    auto run = execute_plan(*rig.sys, d, plans[0]);
    CHECK_FALSE(bag_diff(run.result, rig.sys->catalog().execute_native("rel", d.containers[0].native), 0));
    CHECK(run.runtime_ms == 0);
}

TEST_CASE("every plan agrees with the oracle and runtimes follow the latency model")
{
    Rig rig;
    auto d = rig.decomposition();
    const auto expected = expected_matmul(*rig.sys);
    std::map<std::string, double> runtimes;
    for (const auto &plan : rig.plans(d)) {
        auto run = execute_plan(*rig.sys, d, plan);
        CHECK_FALSE(bag_diff(run.result, expected, 1e-9));
        runtimes[site_of(plan)] = run.runtime_ms;
        CHECK(rig.no_temporaries());
    }
    CHECK(runtimes == std::map<std::string, double>{{"arr", 200}, {"kv", 80}, {"rel", 120}});
}

TEST_CASE("a failing step leaves no temporaries behind")
{
    Rig rig;
    auto d = rig.decomposition();
    for (auto plan : rig.plans(d)) {
        auto last_migrate = std::find_if(plan.steps.rbegin(), plan.steps.rend(),
                                         [](const PlanStep &s) { return s.kind == PlanStep::migrate; });
        if (last_migrate == plan.steps.rend()) continue;
        plan.steps.erase(std::next(last_migrate).base());
        CHECK_THROWS_AS(execute_plan(*rig.sys, d, plan), Error);
        CHECK(rig.no_temporaries());
    }
}

TEST_CASE("training runs and records every plan")
{
    Rig rig;
    auto report = run_training(fixture::matmul_query, *rig.sys);
    CHECK(report.phase == Phase::training);
    CHECK(report.plan_id == rig.plan_on("kv"));
    CHECK(report.runtime_ms == 80);
    CHECK(report.plan_runtimes.size() == 3);
    CHECK_FALSE(bag_diff(report.result, expected_matmul(*rig.sys), 1e-9));

    const auto records = rig.sys->monitor().records();
    REQUIRE(records.size() == 3);
    std::set<std::string> ids;
    for (const auto &r : records) {
        ids.insert(r.plan_id);
        CHECK(r.phase == Phase::training);
        CHECK(r.signature == report.signature);
    }
    CHECK(ids.size() == 3);

    run_training(fixture::matmul_query, *rig.sys);
    CHECK(rig.sys->monitor().size() == 6);
    CHECK(rig.no_temporaries());
}

TEST_CASE("production reuses the best recorded plan")
{
    Rig rig;
    run_training(fixture::matmul_query, *rig.sys);
    auto report = run_production(fixture::matmul_query, *rig.sys);
    CHECK(report.plan_id == rig.plan_on("kv"));
    CHECK(report.similarity == 1.0);
    CHECK_FALSE(report.retrain_recommended);
    CHECK(rig.sys->monitor().pending().empty());
    CHECK(rig.sys->monitor().records().back().phase == Phase::production);
}

TEST_CASE("production under different usage")
{
    Rig rig;
    run_training(fixture::matmul_query, *rig.sys);
    rig.clock->advance(60'000);
    const double now = rig.clock->now_ms();

    SUBCASE("no recorded plan fits: keep the best and recommend retraining")
    {
        rig.sys->usage().add("kv", now - 10'000, now);
        auto report = run_production(fixture::matmul_query, *rig.sys);
        CHECK(report.plan_id == rig.plan_on("kv"));
        CHECK(report.retrain_recommended);
        CHECK(render(report).find("retrain-recommended=true\n") != std::string::npos);
    }
    SUBCASE("a plan recorded under similar usage is preferred")
    {
        rig.sys->usage().add("kv", now - 10'000, now);
        PerfRecord busy;
        busy.signature = rig.sys->monitor().records().front().signature;
        busy.plan_id = rig.plan_on("rel");
        busy.runtime_ms = 150;
        busy.usage = current_usage(*rig.sys);
        rig.sys->monitor().record(busy);

        auto report = run_production(fixture::matmul_query, *rig.sys);
        CHECK(report.plan_id == rig.plan_on("rel"));
        CHECK_FALSE(report.retrain_recommended);
    }
}

TEST_CASE("cold start, background drain, then the fastest plan")
{
    Rig rig;
    auto first = run_production(fixture::matmul_query, *rig.sys);
    CHECK_FALSE(first.similarity.has_value());
    CHECK(first.notes == std::vector<std::string>{"untrained signature; randomly selected plan"});
    CHECK(rig.sys->monitor().size() == 1);
    CHECK(rig.sys->monitor().pending().size() == 2);

    CHECK_FALSE(is_idle(*rig.sys));
    CHECK(drain_background(*rig.sys) == 0);
    rig.clock->advance(6'000);
    CHECK(is_idle(*rig.sys));
    CHECK(drain_background(*rig.sys) == 2);
    CHECK(rig.sys->monitor().size() == 3);
    CHECK(rig.sys->monitor().records().back().phase == Phase::background);

    auto second = run_production(fixture::matmul_query, *rig.sys);
    CHECK(second.plan_id == rig.plan_on("kv"));
    CHECK(second.runtime_ms == 80);
}

TEST_CASE("the random pick is reproducible from the seed")
{
    auto pick = [](std::uint64_t seed) {
        SystemConfig c;
        c.seed = seed;
        Rig rig(c);
        std::vector<std::string> ids;
        for (const char *q : {"d4m(matmul(N, T))", "d4m(matmul(N, T, 'min.plus'))", "d4m(transpose(matmul(N, T)))"}) {
            try {
                ids.push_back(run_production(q, *rig.sys).plan_id);
            } catch (const Error &e) {
                ids.push_back(e.what());
            }
        }
        return ids;
    };
    CHECK(pick(7) == pick(7));
    CHECK(pick(42) == pick(42));
}

TEST_CASE("system configuration is validated")
{
    auto make = [](SystemConfig c) { Rig rig(c); };
    SystemConfig c;
    c.plan_cap = 0;
    CHECK_THROWS_AS(make(c), Error);
    c = {};
    c.weights.structure = 0.9;
    CHECK_THROWS_AS(make(c), Error);
    c = {};
    c.threshold = 0;
    CHECK_THROWS_AS(make(c), Error);
}
