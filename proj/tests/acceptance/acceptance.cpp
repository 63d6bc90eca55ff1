// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <polydawg/datagen.hpp>
#include <polydawg/error.hpp>
#include <polydawg/executor.hpp>

#include "support/ast_gen.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace polydawg;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

/// Collects the first few failure messages of a criterion.
struct Failures
{
    std::size_t count = 0;
    std::vector<std::string> shown;

    void add(std::string msg)
    {
        if (++count <= 3) shown.push_back(std::move(msg));
    }
    Outcome outcome(std::string ok_detail) const
    {
        if (count == 0) return {true, std::move(ok_detail)};
        std::string d = std::to_string(count) + " failure(s)";
        for (const auto &s : shown) d += "\n      " + s;
        return {false, d};
    }
};

std::int64_t draw(gen::Rng &rng, std::int64_t lo, std::int64_t hi)
{
    return lo + std::int64_t(rng() % std::uint64_t(hi - lo + 1));
}

template <class T>
const T & pick(gen::Rng &rng, const std::vector<T> &xs) { return xs[std::size_t(draw(rng, 0, std::int64_t(xs.size()) - 1))]; }

std::string lit(const std::string &s) { return "'" + s + "'"; }

/*----- 1: oracle equivalence ---------------------------------------------------------------------------------*/

/// Every query is stated twice: once across islands, once as plain SQL over relational copies of the data.
struct OracleCase
{
    std::string query;
    std::string oracle;
};

/// Inclusive range of patient-id keys in text order, a handful of patients wide.
std::pair<std::string, std::string> id_range(gen::Rng &rng)
{
    const auto x = draw(rng, 0, 99);
    auto lo = std::to_string(x), hi = std::to_string(std::min<std::int64_t>(99, x + draw(rng, 0, 12)));
    if (hi < lo) std::swap(lo, hi);
    return {lo, hi};
}

std::string text_between(const std::string &col, const std::pair<std::string, std::string> &r)
{
    return col + " >= " + lit(r.first) + " AND " + col + " <= " + lit(r.second);
}

std::string real_constant(gen::Rng &rng, int lo, int hi) { return std::to_string(draw(rng, lo, hi)) + ".5"; }

OracleCase random_case(gen::Rng &rng)
{
    static const std::vector<std::string> words{"stable", "febrile", "sedated", "alert", "hypo", "improv", "tub", "wean"};
    switch (draw(rng, 0, 7)) {
        case 0: { // d4m product of waveform slices joined back to patients
            const auto a = id_range(rng), b = id_range(rng);
            const auto age = std::to_string(draw(rng, 18, 90));
            const std::vector<std::pair<std::string, std::string>> semirings{
                {"plus.times", "SUM(x.v * y.v)"}, {"min.plus", "MIN(x.v + y.v)"}, {"max.times", "MAX(x.v * y.v)"}};
            const auto &[semiring, reduce] = pick(rng, semirings);
            return {"relational(SELECT p.id, p.age, m.c, m.v FROM patients p JOIN cast(d4m(matmul(select(waveform, "
                    "rows = " + lit(a.first) + ":" + lit(a.second) + "), transpose(select(waveform, rows = " +
                        lit(b.first) + ":" + lit(b.second) + ")), semiring = " + semiring +
                        ")), relational, m) ON m.r = p.id WHERE p.age > " + age + ")",
                    "SELECT p.id, p.age, m.c, m.v FROM patients p JOIN (SELECT x.r AS r, y.r AS c, " + reduce +
                        " AS v FROM wave_t x JOIN wave_t y ON x.c = y.c WHERE " + text_between("x.r", a) + " AND " +
                        text_between("y.r", b) + " GROUP BY x.r, y.r) m ON m.r = p.id WHERE p.age > " + age};
        }
        case 1: { // element-wise combination, filtered relationally
            const auto a = id_range(rng), b = id_range(rng);
            std::pair<std::string, std::string> t{std::to_string(draw(rng, 0, 5)), std::to_string(draw(rng, 5, 9))};
            const std::vector<std::pair<std::string, std::string>> ops{{"plus", "SUM"}, {"min", "MIN"}, {"max", "MAX"}};
            const auto &[op, reduce] = pick(rng, ops);
            const auto k = real_constant(rng, 60, 160);
            return {"relational(SELECT e.r, e.c, e.v FROM cast(d4m(ewise(select(waveform, rows = " + lit(a.first) +
                        ":" + lit(a.second) + "), select(waveform, rows = " + lit(b.first) + ":" +
                        lit(b.second) + ", cols = " + lit(t.first) + ":" + lit(t.second) + "), " + op +
                        ")), relational, e) WHERE e.v > " + k + ")",
                    "SELECT u.r, u.c, u.v FROM (SELECT r, c, " + reduce + "(v) AS v FROM (SELECT r, c, v FROM wave_t "
                        "WHERE " + text_between("r", a) + " UNION ALL SELECT r, c, v FROM wave_t WHERE " +
                        text_between("r", b) + " AND " + text_between("c", t) +
                        ") w GROUP BY r, c) u WHERE u.v > " + k};
        }
        case 2: { // text scan joined to patients
            const auto a = id_range(rng);
            const auto age = std::to_string(draw(rng, 20, 95));
            return {"relational(SELECT p.id, p.sex, n.c, n.v FROM patients p JOIN cast(text(scan(notes, rows = " +
                        lit(a.first) + ":" + lit(a.second) + ")), relational, n) ON n.r = p.id WHERE p.age < " +
                        age + ")",
                    "SELECT p.id, p.sex, n.c, n.v FROM patients p JOIN notes_t n ON n.r = p.id WHERE " +
                        text_between("n.r", a) + " AND p.age < " + age};
        }
        case 3: { // grep hits aggregated over medications
            const auto &w = pick(rng, words);
            return {"relational(SELECT m.drug, COUNT(*) AS k, SUM(m.dose) AS d FROM meds m JOIN cast(text(grep(notes, " +
                        lit(w) + ")), relational, n) ON n.r = m.patient_id GROUP BY m.drug)",
                    "SELECT m.drug, COUNT(*) AS k, SUM(m.dose) AS d FROM meds m JOIN notes_t n ON n.r = m.patient_id "
                    "WHERE n.v LIKE '%" + w + "%' GROUP BY m.drug"};
        }
        case 4: { // array aggregate surfaced relationally
            const auto lo = draw(rng, 0, 90), hi = lo + draw(rng, 0, 9);
            const auto k = real_constant(rng, 60, 110);
            const std::vector<std::string> fns{"sum", "avg", "min", "max", "count"};
            const auto &fn = pick(rng, fns);
            const std::string by = draw(rng, 0, 1) ? "patient" : "t";
            return {"relational(SELECT * FROM cast(array(agg(filter(subarray(waveform, patient = " +
                        std::to_string(lo) + ":" + std::to_string(hi) + "), v > " + k + "), " + fn + "(v), " + by +
                        ")), relational, w))",
                    "SELECT " + by + ", " + fn + "(v) FROM waveform WHERE patient >= " + std::to_string(lo) +
                        " AND patient <= " + std::to_string(hi) + " AND v > " + k + " GROUP BY " + by};
        }
        case 5: { // medication pivot multiplied with waveform
            const auto a = id_range(rng);
            const auto dose = real_constant(rng, 0, 40);
            return {"d4m(matmul(transpose(cast(relational(SELECT patient_id AS r, drug AS c, SUM(dose) AS v FROM meds "
                    "WHERE dose > " + dose + " GROUP BY patient_id, drug), d4m)), select(waveform, rows = " +
                        lit(a.first) + ":" + lit(a.second) + ")))",
                    "SELECT m.c, w.c, SUM(m.v * w.v) FROM (SELECT patient_id AS r, drug AS c, SUM(dose) AS v FROM meds "
                    "WHERE dose > " + dose + " GROUP BY patient_id, drug) m JOIN wave_t w ON m.r = w.r WHERE " +
                        text_between("w.r", a) + " GROUP BY m.c, w.c"};
        }
        case 6: { // keyed relation casts combined element-wise
            const auto age = std::to_string(draw(rng, 18, 95));
            const std::string sex = draw(rng, 0, 1) ? "F" : "M";
            return {"d4m(ewise(cast(relational(SELECT id, age FROM patients WHERE sex = " + lit(sex) +
                        "), d4m, key = id), cast(relational(SELECT id, age FROM patients WHERE age > " + age +
                        "), d4m, key = id), max))",
                    "SELECT u.id, 'age', MAX(u.age) FROM (SELECT id, age FROM patients WHERE sex = " + lit(sex) +
                        " UNION ALL SELECT id, age FROM patients WHERE age > " + age + ") u GROUP BY u.id"};
        }
        default: { // relation cast into an array and filtered there
            const auto n = std::to_string(draw(rng, 0, 3));
            return {"array(filter(cast(relational(SELECT age, COUNT(*) AS n FROM patients GROUP BY age), array, "
                    "key = age), n > " + n + "))",
                    "SELECT g.age, g.n FROM (SELECT age, COUNT(*) AS n FROM patients GROUP BY age) g WHERE g.n > " + n};
        }
    }
}

/// Relational copies of every dataset object: associative arrays as (r, c, v), arrays in export form and as
/// triples keyed by decimal coordinates.
std::unique_ptr<EngineCatalog> oracle_catalog(const std::vector<GeneratedObject> &objects)
{
    auto cat = EngineCatalog::with_default_engines();
    for (const auto &o : objects) {
        if (o.name == "notes") {
            auto t = o.table;
            t.schema = {{"r", Tag::text}, {"c", Tag::text}, {"v", Tag::text}};
            cat->load("rel", "notes_t", t);
        } else if (o.name == "waveform") {
            cat->load("rel", "waveform", o.table);
            CanonicalTable t{{{"r", Tag::text}, {"c", Tag::text}, {"v", Tag::real}}, {}};
            for (const auto &row : o.table.rows)
                t.rows.push_back({Value(std::to_string(row[0].as_int())), Value(std::to_string(row[1].as_int())), row[2]});
            cat->load("rel", "wave_t", t);
        } else {
            cat->load("rel", o.name, o.table);
        }
    }
    return cat;
}

Outcome oracle_equivalence()
{
    const auto objects = generate_dataset(1, 2024);
    auto catalog = EngineCatalog::with_default_engines();
    for (const auto &o : objects) catalog->load(o.engine, o.name, o.table, o.options);
    System sys({}, std::move(catalog), std::make_shared<VirtualClock>());
    const auto oracle = oracle_catalog(objects);

    gen::Rng rng(77);
    Failures failures;
    std::size_t plans_checked = 0, nonempty = 0, multi = 0;
    for (int i = 0; i < 200; ++i) {
        const auto c = random_case(rng);
        try {
            const auto expected = oracle->execute_native("rel", c.oracle);
            if (not expected.rows.empty()) ++nonempty;
            const auto d = plan_query(c.query, sys.registry(), sys.catalog());
            const auto plans = enumerate_plans(d, sys.registry(), sys.catalog(), 16);
            if (plans.size() > 1) ++multi;
            for (const auto &plan : plans) {
                const auto run = execute_plan(sys, d, plan);
                ++plans_checked;
                if (auto diff = bag_diff(run.result, expected, 1e-9))
                    failures.add("plan " + plan.id + " of " + c.query + ": " + *diff);
            }
        } catch (const std::exception &e) {
            failures.add(c.query + ": " + e.what());
        }
    }
    return failures.outcome("200 queries, " + std::to_string(plans_checked) + " plans bag-equal to the oracle; " +
                            std::to_string(multi) + " queries with several plans, " + std::to_string(nonempty) +
                            " with non-empty results");
}

/*----- 2: shim coherence -------------------------------------------------------------------------------------*/

std::string site_of(const CandidatePlan &plan)
{
    for (const auto &s : plan.steps)
        if (s.kind == PlanStep::cross_op) return s.engine;
    return {};
}

Outcome shim_coherence()
{
    gen::Rng rng(31);
    Failures failures;
    const Semiring semirings[] = {Semiring::plus_times, Semiring::min_plus, Semiring::max_times};
    for (int i = 0; i < 50; ++i) {
        const int n = int(draw(rng, 1, 20)), k = int(draw(rng, 1, 20)), m = int(draw(rng, 1, 20));
        const double density = 0.05 + double(draw(rng, 0, 45)) / 100.0;
        const auto a = gen::random_assoc(rng, n, k, density, false, "r", "k");
        const auto b = gen::random_assoc(rng, k, m, density, false, "k", "c");
        const auto semiring = semirings[i % 3];

        auto cat = EngineCatalog::with_default_engines();
        cat->load("kv", "A", a.to_table());
        cat->load("rel", "B", b.to_table("r", "c", "v"));
        System sys({}, std::move(cat), std::make_shared<VirtualClock>());
        const std::string q = std::string("d4m(matmul(A, B, semiring = ") + to_string(semiring) + "))";
        const auto expected = oracle::dense_matmul(a, b, semiring).to_table();
        try {
            const auto d = plan_query(q, sys.registry(), sys.catalog());
            std::map<std::string, CanonicalTable> by_site;
            for (const auto &plan : enumerate_plans(d, sys.registry(), sys.catalog()))
                by_site[site_of(plan)] = execute_plan(sys, d, plan).result;
            if (not by_site.contains("kv") or not by_site.contains("rel")) {
                failures.add(q + ": missing kv or rel plan");
                continue;
            }
            if (auto diff = bag_diff(by_site["kv"], by_site["rel"], 0)) failures.add(q + " kv vs rel: " + *diff);
            if (auto diff = bag_diff(by_site["kv"], expected, 0)) failures.add(q + " kv vs dense: " + *diff);
            if (auto diff = bag_diff(by_site["rel"], expected, 0)) failures.add(q + " rel vs dense: " + *diff);
        } catch (const std::exception &e) {
            failures.add(q + ": " + e.what());
        }
    }
    return failures.outcome("50 arrays, kv-native and relational-shim products identical to the dense oracle");
}

/*----- 3: cast round trips -----------------------------------------------------------------------------------*/

CastSpec spec(Model from, Model to)
{
    CastSpec s;
    s.source = from;
    s.target = to;
    return s;
}

Outcome cast_round_trips()
{
    gen::Rng rng(19);
    Failures failures;
    auto check = [&](const char *rule, const LogicalTable &in, const CastSpec &forward) {
        try {
            auto there = cast_table(in, forward);
            if (not there.inverse) return failures.add(std::string(rule) + ": no inverse");
            if (there.dropped_nulls) return failures.add(std::string(rule) + ": dropped values");
            auto back = cast_table(there.value, *there.inverse).value;
            if (back.model != in.model) return failures.add(std::string(rule) + ": model changed");
            if (auto diff = bag_diff(back.table, in.table, 0)) failures.add(std::string(rule) + ": " + *diff);
        } catch (const std::exception &e) {
            failures.add(std::string(rule) + ": " + e.what());
        }
    };
    for (int i = 0; i < 500; ++i) {
        const auto rows = std::size_t(draw(rng, 1, 40)), cols = std::size_t(draw(rng, 2, 5));
        const LogicalTable relation{Model::relational, gen::random_table(rng, rows, cols), {}};
        auto a = spec(Model::relational, Model::keyvalue);
        a.key = {relation.table.schema[0].name};
        check("(a)/(b)", relation, a);
        auto c = spec(Model::relational, Model::array);
        c.dim_cols = {relation.table.schema[0].name};
        check("(c)/(d)", relation, c);

        const auto assoc = gen::random_assoc(rng, int(draw(rng, 1, 15)), int(draw(rng, 1, 15)), 0.4, i % 2 == 0);
        if (assoc.empty()) continue;
        const LogicalTable triples{Model::keyvalue, assoc.to_table(), {}};
        check("(b)/(a)", triples, spec(Model::keyvalue, Model::relational));
        check("(e)/(f)", triples, spec(Model::keyvalue, Model::array));
        auto as_array = cast_table(triples, spec(Model::keyvalue, Model::array)).value;
        check("(d)/(c)", as_array, spec(Model::array, Model::relational));
    }
    return failures.outcome("500 tables per model pair round-trip to bag identity");
}

/*----- 4: signature invariance -------------------------------------------------------------------------------*/

struct Template
{
    /// Object slots are filled from `objects`, literal slots from `literals`.
    std::function<std::string(const std::vector<std::string> &objects, const std::vector<std::string> &literals)> text;
    std::vector<std::vector<std::string>> object_choices; ///< per slot, two interchangeable objects
    std::function<std::vector<std::string>(gen::Rng&, int variant)> literals;
};

Outcome signature_invariance()
{
    auto catalog = EngineCatalog::with_default_engines();
    for (const auto &o : generate_dataset(1, 5)) {
        catalog->load(o.engine, o.name, o.table, o.options);
        catalog->load(o.engine, o.name + "_b", o.table, o.options);
    }
    const auto registry = IslandRegistry::register_defaults(*catalog);

    // Variant 0 draws literals below a threshold and variant 1 above it, so the two literal sets never overlap.
    auto ids = [](gen::Rng &rng, int variant) {
        const auto lo = draw(rng, 0, 40) + 50 * variant;
        return std::vector<std::string>{lit(std::to_string(lo)), lit(std::to_string(lo + draw(rng, 1, 9)))};
    };
    auto ints = [](gen::Rng &rng, int variant) {
        return std::vector<std::string>{std::to_string(draw(rng, 0, 40) + 50 * variant)};
    };
    const std::vector<Template> templates{
        {[](auto o, auto l) {
             return "d4m(matmul(select(" + o[0] + ", rows = " + l[0] + ":" + l[1] + "), transpose(" + o[1] + ")))";
         },
         {{"waveform", "waveform_b"}, {"waveform", "waveform_b"}}, ids},
        {[](auto o, auto l) {
             return "relational(SELECT p.id, n.v FROM " + o[0] + " p JOIN cast(text(scan(" + o[1] + ", rows = " + l[0] +
                    ":" + l[1] + ")), relational, n) ON n.r = p.id)";
         },
         {{"patients", "patients_b"}, {"notes", "notes_b"}}, ids},
        {[](auto o, auto l) {
             return "relational(SELECT * FROM cast(array(agg(subarray(" + o[0] + ", patient = " + l[0] + ":" + l[1] +
                    "), avg(v), patient)), relational, w) WHERE w.patient > " + l[0] + ")";
         },
         {{"waveform", "waveform_b"}}, [](gen::Rng &rng, int variant) {
             const auto lo = draw(rng, 0, 40) + 50 * variant;
             return std::vector<std::string>{std::to_string(lo), std::to_string(lo + draw(rng, 1, 9))};
         }},
        {[](auto o, auto l) {
             return "relational(SELECT drug, COUNT(*) FROM " + o[0] + " WHERE dose > " + l[0] + " GROUP BY drug)";
         },
         {{"meds", "meds_b"}}, ints},
    };
    auto signature = [&](const std::string &q) { return signature_of(plan_query(q, registry, *catalog)); };

    gen::Rng rng(4);
    Failures failures;
    for (int i = 0; i < 100; ++i) {
        const auto &t = templates[std::size_t(i) % templates.size()];
        std::vector<std::string> objs;
        for (const auto &choices : t.object_choices) objs.push_back(choices[0]);
        try {
            const auto q1 = t.text(objs, t.literals(rng, 0)), q2 = t.text(objs, t.literals(rng, 1));
            const auto s1 = signature(q1), s2 = signature(q2);
            if (s1.structure != s2.structure or s1.objects != s2.objects) failures.add("literal pair differs: " + q1);
            if (const double sim = similarity(s1, s2); sim != 0.9)
                failures.add("literal pair similarity " + std::to_string(sim) + ": " + q1 + " / " + q2);

            auto swapped = objs;
            const auto slot = std::size_t(draw(rng, 0, std::int64_t(objs.size()) - 1));
            swapped[slot] = t.object_choices[slot][1];
            const auto lits = t.literals(rng, 0);
            const auto o1 = signature(t.text(objs, lits)), o2 = signature(t.text(swapped, lits));
            if (o1.structure != o2.structure) failures.add("object pair structure differs: " + t.text(swapped, lits));
            if (not (similarity(o1, o2) < 0.9)) failures.add("object pair similarity not below 0.9");
        } catch (const std::exception &e) {
            failures.add(e.what());
        }
    }
    return failures.outcome("100 literal pairs at similarity 0.9, 100 object pairs below it");
}

/*----- 5, 6: training and production -------------------------------------------------------------------------*/

struct Loop
{
    std::shared_ptr<VirtualClock> clock = std::make_shared<VirtualClock>();
    std::unique_ptr<System> sys = fixture::matmul_system(clock);

    Loop()
    {
        sys->latency.ms = {{{"kv", StepKind::cross_op}, 80},
                           {{"rel", StepKind::cross_op}, 120},
                           {{"arr", StepKind::cross_op}, 200}};
    }
    std::string plan_on(std::string_view query, const std::string &site) const
    {
        const auto d = plan_query(query, sys->registry(), sys->catalog());
        for (const auto &p : enumerate_plans(d, sys->registry(), sys->catalog()))
            if (site_of(p) == site) return p.id;
        throw Error(ErrorKind::plan, "no plan on " + site);
    }
};

Outcome training_production()
{
    const std::string query = "d4m(matmul(select(N, rows = 'r00':'r03'), T))";
    const std::string variant = "d4m(matmul(select(N, rows = 'r01':'r05'), T))";
    Loop loop;
    Failures failures;
    try {
        const auto fast = loop.plan_on(query, "kv");
        const auto trained = run_training(query, *loop.sys);
        std::multiset<double> runtimes;
        for (const auto &[id, ms] : trained.plan_runtimes) runtimes.insert(ms);
        if (runtimes != std::multiset<double>{80, 120, 200}) failures.add("training runtimes are not {80, 120, 200}");

        const auto same = run_production(query, *loop.sys);
        if (same.plan_id != fast) failures.add("production picked " + same.plan_id + ", not the 80 ms plan");
        const auto near = run_production(variant, *loop.sys);
        if (near.plan_id != fast) failures.add("constants variant picked " + near.plan_id);
        if (near.similarity != 0.9) failures.add("constants variant similarity is not 0.9");

        loop.clock->advance(20'000);
        const double now = loop.clock->now_ms();
        loop.sys->usage().add("kv", now - 10'000, now);
        const auto busy = run_production(query, *loop.sys);
        const bool switched = busy.plan_id != fast;
        if (not switched and not busy.retrain_recommended)
            failures.add("busy kv: neither an alternate plan nor a retrain recommendation");
        return failures.outcome("80 ms plan chosen for the query and its constants variant; under kv load: " +
                                std::string(switched ? "alternate plan" : "retrain recommended"));
    } catch (const std::exception &e) {
        failures.add(e.what());
    }
    return failures.outcome("");
}

Outcome cold_start()
{
    Loop loop;
    Failures failures;
    const std::string query = fixture::matmul_query;
    try {
        const auto first = run_production(query, *loop.sys);
        auto &monitor = loop.sys->monitor();
        if (monitor.size() != 1) failures.add("expected 1 executed plan, monitor holds " + std::to_string(monitor.size()));
        if (monitor.pending().size() != 2) failures.add("expected 2 pending plans");

        loop.clock->advance(6'000);
        const auto drained = drain_background(*loop.sys);
        if (drained != 2) failures.add("drained " + std::to_string(drained) + " plans");
        std::size_t for_signature = 0;
        for (const auto &r : monitor.records()) for_signature += r.signature == first.signature;
        if (for_signature != 3) failures.add("monitor holds " + std::to_string(for_signature) + " records for the signature");

        const auto next = run_production(query, *loop.sys);
        if (next.plan_id != loop.plan_on(query, "kv")) failures.add("after the drain production picked " + next.plan_id);
    } catch (const std::exception &e) {
        failures.add(e.what());
    }
    return failures.outcome("1 plan run cold, 2 drained while idle, then the min-mean plan");
}

/*----- 7: parser round trip ----------------------------------------------------------------------------------*/

Outcome parser_round_trip()
{
    gen::Rng rng(1234);
    Failures failures;
    for (int i = 0; i < 1000; ++i) {
        const auto ast = gen::random_ast(rng, 3);
        const auto text = ql::pretty_print(ast);
        try {
            const auto once = ql::parse(text);
            const auto twice = ql::parse(ql::pretty_print(once));
            if (not (once == ast) or not (twice == once)) failures.add("not a fixpoint: " + text);
        } catch (const std::exception &e) {
            failures.add(text + ": " + e.what());
        }
    }

    const std::vector<std::string> malformed{
        "",
        "relational",
        "relational(",
        "relational()",
        "relational(SELECT)",
        "relational(SELECT FROM t)",
        "relational(SELECT a FROM)",
        "relational(SELECT a FROM t WHERE)",
        "relational(SELECT a FROM t WHERE a >)",
        "relational(SELECT a, FROM t)",
        "relational(SELECT a FROM t GROUP a)",
        "relational(SELECT a FROM t ORDER BY)",
        "relational(SELECT a FROM t LIMIT)",
        "relational(SELECT a FROM t LIMIT x)",
        "relational(SELECT a FROM t JOIN u)",
        "relational(SELECT a FROM t JOIN u ON)",
        "relational(SELECT a FROM t UNION SELECT b FROM u)",
        "relational(SELECT a FROM t UNION ALL)",
        "relational(SELECT (a FROM t)",
        "relational(SELECT a) FROM t)",
        "relational(SELECT 'open FROM t)",
        "relational(SELECT a FROM t))",
        "relational(SELECT a FROM t) extra",
        "relational(SELECT a FROM (SELECT b FROM u)",
        "relational(SELECT a FROM t WHERE a IS)",
        "relational(SELECT a FROM t WHERE a IS NOT)",
        "relational(SELECT COUNT( FROM t)",
        "relational(SELECT a FROM t AS)",
        "relational(SELECT a.* FROM t)",
        "relational(SELECT a FROM t WHERE a = 1 AND)",
        "d4m(matmul(A, B)",
        "d4m matmul(A)",
        "d4m(matmul(A,, B))",
        "d4m(matmul(A B))",
        "d4m(select(A, rows = 'a':))",
        "d4m(select(A, rows = :'b'))",
        "d4m(1 +)",
        "d4m()",
        "d4m(cast(A))",
        "d4m(cast(d4m(A), ))",
        "d4m(cast(d4m(A), d4m, key = ))",
        "d4m(cast(d4m(A), d4m, x, y))",
        "d4m(cast(d4m(A) d4m))",
        "d4m(cast(, d4m))",
        "(SELECT a FROM t)",
        "raw.rel(SELECT 1",
        "array(subarray(W, i = 0:))",
        "array(filter(W, v >))",
        "text(scan(notes, rows = 'a':'b')",
        "123(A)",
    };
    std::size_t spanned = 0;
    for (const auto &q : malformed) {
        try {
            ql::parse(q);
            failures.add("accepted malformed input: " + q);
        } catch (const ParseError &e) {
            const auto s = e.span();
            if (s.begin <= q.size() and s.end >= s.begin and s.end <= q.size() + 1 and
                annotate(e, q).find('^') != std::string::npos)
                ++spanned;
            else
                failures.add("bad span for " + q);
        } catch (const std::exception &e) {
            failures.add("unspanned error for " + q + ": " + e.what());
        }
    }
    return failures.outcome("1000 generated ASTs are parse/print fixpoints, " + std::to_string(spanned) + " of " +
                            std::to_string(malformed.size()) + " malformed inputs give spanned errors");
}

/*----- 8: monitor durability ---------------------------------------------------------------------------------*/

/// Log escaping, written out independently of the monitor.
std::string log_escape(const std::string &s)
{
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '%':  out += "%25"; break;
            case '\t': out += "%09"; break;
            case '\n': out += "%0A"; break;
            case '\r': out += "%0D"; break;
            case ';':  out += "%3B"; break;
            case ',':  out += "%2C"; break;
            case '=':  out += "%3D"; break;
            default:   out += ch;
        }
    }
    return out;
}

/// Decimal text of eighths, the shortest form that reads back exactly.
std::string eighths(std::int64_t k)
{
    std::string out = std::to_string(k / 8);
    static const char *frac[] = {"", ".125", ".25", ".375", ".5", ".625", ".75", ".875"};
    return out + frac[k % 8];
}

Outcome monitor_durability()
{
    const auto path = std::filesystem::temp_directory_path() /
                      ("polydawg-acceptance-" + std::to_string(::getpid()) + ".log");
    std::filesystem::remove(path);
    Failures failures;
    gen::Rng rng(8);
    std::string expected_file;
    std::map<std::string, std::vector<PerfRecord>> before;
    std::vector<PerfRecord> written;
    const std::vector<std::string> odd_constants{"'a;b'", "'x,y'", "'k=v'", "'50%'", "'tab\there'", "'line\nbreak'"};
    {
        MonitorDB db(path);
        for (int i = 0; i < 1000; ++i) {
            PerfRecord r;
            r.timestamp_ms = 1'700'000'000'000 + i;
            r.phase = Phase(i % 3);
            char structure[17];
            std::snprintf(structure, sizeof structure, "%016llx", (unsigned long long)(rng() % 20));
            r.signature.structure = structure;
            r.signature.objects = {"arr.waveform", "rel.patients"};
            r.signature.constants = {lit(std::to_string(i % 17)), pick(rng, odd_constants)};
            std::sort(r.signature.constants.begin(), r.signature.constants.end());
            r.plan_id = "plan" + std::to_string(rng() % 4);
            const auto ms = draw(rng, 0, 8000);
            r.runtime_ms = double(ms) / 8;
            r.failed = i % 97 == 0;
            const auto kv = draw(rng, 0, 4), rel = draw(rng, 0, 4);
            r.usage.busy = {{"kv", double(kv) / 4}, {"rel", double(rel) / 4}};
            db.record(r);
            written.push_back(r);

            std::string line = std::to_string(r.timestamp_ms) + "\t" + to_string(r.phase) + "\t" + structure + "\t" +
                               "arr.waveform;rel.patients\t";
            for (std::size_t c = 0; c != r.signature.constants.size(); ++c)
                line += (c ? ";" : "") + log_escape(r.signature.constants[c]);
            line += "\t" + r.plan_id + "\t" + (r.failed ? std::string("failed") : eighths(ms)) + "\t";
            line += "kv=" + eighths(kv * 2) + ",rel=" + eighths(rel * 2) + "\n";
            expected_file += line;
        }
        before = db.index_snapshot();
    }
    try {
        MonitorDB reopened(path);
        if (reopened.size() != 1000) failures.add("reopened with " + std::to_string(reopened.size()) + " records");
        if (reopened.index_snapshot() != before) failures.add("index differs after reopening");
        const auto records = reopened.records();
        for (std::size_t i = 0; i != records.size() and i != written.size(); ++i) {
            auto expect = written[i];
            expect.usage.timestamp_ms = double(expect.timestamp_ms);
            if (expect.failed) expect.runtime_ms = 0;
            if (not (records[i] == expect)) {
                failures.add("record " + std::to_string(i) + " differs after reopening");
                break;
            }
        }
        std::ifstream in(path, std::ios::binary);
        std::stringstream file;
        file << in.rdbuf();
        if (file.str() != expected_file) {
            const auto &got = file.str();
            const auto at = std::mismatch(got.begin(), got.end(), expected_file.begin(), expected_file.end());
            failures.add("log bytes differ at offset " + std::to_string(at.first - got.begin()));
        }
    } catch (const std::exception &e) {
        failures.add(e.what());
    }
    std::filesystem::remove(path);
    return failures.outcome("1000 records reopened with an identical index, log lines byte-exact");
}

}

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"shim coherence", shim_coherence},
        {"cast round-trips", cast_round_trips},
        {"signature invariance", signature_invariance},
        {"training/production loop", training_production},
        {"cold start and background drain", cold_start},
        {"parser round-trip", parser_round_trip},
        {"monitor durability", monitor_durability},
    };
    int failed = 0;
    for (std::size_t i = 0; i != criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception &e) {
            out = {false, std::string("uncaught: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.2fs", secs);
        std::cout << (out.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << " (" << timing
                  << "): " << out.detail << std::endl;
        failed += not out.pass;
    }
    std::cout << criteria.size() - std::size_t(failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
