#include <polydawg/executor.hpp>

#include <polydawg/cif.hpp>
#include <polydawg/error.hpp>
#include <polydawg/hash.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace polydawg {

void UsageTracker::add(const std::string &engine, double begin_ms, double end_ms)
{
    if (end_ms <= begin_ms) return;
    std::lock_guard lock(mutex_);
    auto &spans = busy_[engine];
    std::erase_if(spans, [&](const auto &s) { return s.second < begin_ms - window_ms_; });
    spans.emplace_back(begin_ms, end_ms);
}

UsageSnapshot UsageTracker::snapshot(double now_ms, const std::vector<std::string> &engines) const
{
    std::lock_guard lock(mutex_);
    UsageSnapshot u;
    u.timestamp_ms = now_ms;
    const double from = now_ms - window_ms_;
    for (const auto &e : engines) {
        double total = 0;
        if (auto it = busy_.find(e); it != busy_.end()) {
            // union of the clipped spans, so concurrent work is not counted twice
            std::vector<std::pair<double, double>> spans;
            for (const auto &[b, f] : it->second)
                if (std::min(f, now_ms) > std::max(b, from)) spans.emplace_back(std::max(b, from), std::min(f, now_ms));
            std::sort(spans.begin(), spans.end());
            double reach = from;
            for (const auto &[b, f] : spans) {
                total += std::max(0.0, f - std::max(b, reach));
                reach = std::max(reach, f);
            }
        }
        u.busy[e] = std::clamp(total / window_ms_, 0.0, 1.0);
    }
    return u;
}

void SystemConfig::validate() const
{
    if (plan_cap < 1) throw Error(ErrorKind::config, "plan cap must be at least 1");
    if (not (threshold > 0 and threshold <= 1)) throw Error(ErrorKind::config, "similarity threshold must lie in (0, 1]");
    if (usage_bound < 0) throw Error(ErrorKind::config, "usage bound must be non-negative");
    for (double w : {weights.structure, weights.objects, weights.constants})
        if (w < 0) throw Error(ErrorKind::config, "similarity weights must be non-negative");
    if (std::abs(weights.structure + weights.objects + weights.constants - 1.0) > 1e-9)
        throw Error(ErrorKind::config, "similarity weights must sum to 1");
    if (usage_window_ms <= 0) throw Error(ErrorKind::config, "usage window must be positive");
}

System::System(SystemConfig config, std::unique_ptr<EngineCatalog> catalog, std::shared_ptr<Clock> clock)
    : config_((config.validate(), std::move(config))),
      catalog_(std::move(catalog)),
      registry_(IslandRegistry::register_defaults(*catalog_)),
      monitor_(config_.monitor_log, config_.weights),
      clock_(std::move(clock)),
      usage_(config_.usage_window_ms),
      rng_(config_.seed),
      last_foreground_(-std::numeric_limits<double>::infinity())
{ }

System::Foreground::Foreground(System &sys) : sys_(sys)
{
    ++sys_.active_;
    sys_.last_foreground_ = sys_.clock_->now_ms();
}

System::Foreground::~Foreground()
{
    sys_.last_foreground_ = sys_.clock_->now_ms();
    --sys_.active_;
}

UsageSnapshot current_usage(System &sys)
{
    auto u = sys.usage().snapshot(sys.clock().now_ms(), sys.catalog().engine_ids());
    u.active_queries = sys.active_queries();
    return u;
}

bool is_idle(System &sys)
{
    if (sys.active_queries() != 0) return false;
    if (sys.clock().now_ms() - sys.last_foreground_ms() < sys.config().idle_quiet_ms) return false;
    const auto u = current_usage(sys);
    return std::all_of(u.busy.begin(), u.busy.end(), [&](const auto &e) { return e.second < sys.config().idle_busy; });
}

/*----- plan execution ----------------------------------------------------------------------------------------*/

namespace {

std::string temporary_name(const std::string &plan_id, std::size_t step)
{
    static std::atomic<std::uint64_t> counter{0};
    return "__mig_" + content_hash(plan_id + "/" + std::to_string(step) + "/" + std::to_string(counter++));
}

/// Drops the plan's temporaries when it goes out of scope.
class TemporaryScope
{
    EngineCatalog &catalog_;
    std::vector<std::string> names_;

    public:
    explicit TemporaryScope(EngineCatalog &catalog) : catalog_(catalog) { }
    TemporaryScope(const TemporaryScope&) = delete;
    TemporaryScope & operator=(const TemporaryScope&) = delete;
    ~TemporaryScope()
    {
        for (const auto &n : names_) {
            try {
                catalog_.drop(n);
            } catch (...) { }
        }
    }

    void add(std::string name) { names_.push_back(std::move(name)); }
};

StepKind kind_of(PlanStep::Kind k)
{
    switch (k) {
        case PlanStep::execute_container: return StepKind::container;
        case PlanStep::migrate:           return StepKind::migrate;
        case PlanStep::cross_op:          return StepKind::cross_op;
    }
    return StepKind::container;
}

std::string step_label(const Decomposition &d, const PlanStep &s)
{
    switch (s.kind) {
        case PlanStep::execute_container:
            return "container c" + std::to_string(d.remainder.nodes[s.node].container_index) + " on " + s.engine;
        case PlanStep::migrate: return "migration " + s.from + " -> " + s.engine;
        case PlanStep::cross_op: {
            const auto &n = d.remainder.nodes[s.node];
            return n.island + "." + to_string(n.call.op) + " on " + s.engine;
        }
    }
    return "?";
}

/// The node's operator with its placeholder inputs bound to catalog objects.
OpCall bind_inputs(OpCall call, const std::vector<std::string> &names)
{
    if (call.query) {
        sql::for_each_table(*call.query, [&](sql::TableRef &t) {
            auto name = std::get_if<std::string>(&t.source);
            if (not name or not name->starts_with("__in")) return;
            t.source = names.at(std::stoul(name->substr(4)));
        });
    }
    call.inputs = names;
    return call;
}

}

PlanRun execute_plan(System &sys, const Decomposition &d, const CandidatePlan &plan)
{
    auto &catalog = sys.catalog();
    auto &clock = sys.clock();
    PlanRun run;
    run.usage = current_usage(sys);
    const double start = clock.now_ms();

    TemporaryScope temporaries(catalog);
    std::vector<std::string> names(plan.slots.size());
    for (std::size_t i = 0; i != plan.slots.size(); ++i) names[i] = plan.slots[i].object;
    std::optional<ObjectPayload> root;

    for (std::size_t k = 0; k != plan.steps.size(); ++k) {
        const auto &step = plan.steps[k];
        const double t0 = clock.now_ms();
        try {
            std::optional<ObjectPayload> produced;
            switch (step.kind) {
                case PlanStep::execute_container: {
                    const auto &c = d.containers[d.remainder.nodes[step.node].container_index];
                    produced = catalog.engine(step.engine).evaluate(c.native);
                    break;
                }
                case PlanStep::cross_op: {
                    const auto &n = d.remainder.nodes[step.node];
                    std::vector<std::string> inputs;
                    for (auto in : step.inputs) inputs.push_back(names.at(in));
                    const auto native = sys.registry().translate(n.island, bind_inputs(n.call, inputs), step.engine);
                    produced = catalog.engine(step.engine).evaluate(native);
                    break;
                }
                case PlanStep::migrate: {
                    const auto &source = names.at(step.inputs.at(0));
                    if (source.empty() or not catalog.locate(source))
                        throw Error(ErrorKind::execution, "input of migration is not materialized");
                    auto name = migrate(catalog, source, step.engine, step.spec, &run.warnings);
                    temporaries.add(name);
                    names[step.output] = std::move(name);
                    break;
                }
            }
            if (produced) {
                if (step.output == plan.result) {
                    root = std::move(produced);
                } else {
                    auto name = temporary_name(plan.id, k);
                    catalog.load(step.engine, name, *produced, true);
                    temporaries.add(name);
                    names[step.output] = std::move(name);
                }
            }
        } catch (const Error &e) {
            throw Error(e.kind(), "step " + std::to_string(k + 1) + " (" + step_label(d, step) + "): " + e.what());
        }
        clock.spend(sys.latency.of(step.engine, kind_of(step.kind)));
        sys.usage().add(step.engine, t0, clock.now_ms());
    }

    const auto &result_slot = plan.slots.at(plan.result);
    if (not root) root = catalog.export_payload(names.at(plan.result));
    auto logical = decode(*root, catalog.engine(result_slot.engine).model(), result_slot.model);
    for (const auto &c : plan.result_casts) {
        auto cast = cast_table(logical, c);
        if (cast.dropped_nulls) run.warnings.push_back("cast " + describe(c) + " dropped null values");
        logical = std::move(cast.value);
    }
    run.result = std::move(logical.table);
    run.runtime_ms = clock.now_ms() - start;
    return run;
}

/*----- training and production -------------------------------------------------------------------------------*/

namespace {

struct Planned
{
    Decomposition d;
    Signature sig;
    std::vector<CandidatePlan> plans;
};

Planned plan_all(std::string_view query, System &sys)
{
    Planned p;
    p.d = plan_query(query, sys.registry(), sys.catalog());
    p.sig = signature_of(p.d);
    p.plans = enumerate_plans(p.d, sys.registry(), sys.catalog(), sys.config().plan_cap);
    return p;
}

const CandidatePlan * find_plan(const std::vector<CandidatePlan> &plans, const std::string &id)
{
    auto it = std::find_if(plans.begin(), plans.end(), [&](const CandidatePlan &p) { return p.id == id; });
    return it == plans.end() ? nullptr : &*it;
}

PerfRecord make_record(System &sys, const Signature &sig, const std::string &plan_id, const PlanRun &run, Phase phase)
{
    PerfRecord rec;
    rec.signature = sig;
    rec.plan_id = plan_id;
    rec.runtime_ms = run.runtime_ms;
    rec.usage = run.usage;
    rec.phase = phase;
    rec.timestamp_ms = sys.clock().timestamp_ms();
    return rec;
}

void add_warnings(std::vector<std::string> &into, const std::vector<std::string> &from)
{
    for (const auto &w : from)
        if (std::find(into.begin(), into.end(), w) == into.end()) into.push_back(w);
}

std::string format_similarity(double s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    return buf;
}

}

QueryReport run_training(std::string_view query, System &sys)
{
    System::Foreground fg(sys);
    auto p = plan_all(query, sys);
    QueryReport report;
    report.phase = Phase::training;
    report.signature = p.sig;

    std::optional<PlanRun> fastest;
    const CandidatePlan *reference = nullptr;
    std::optional<CanonicalTable> expected;
    for (const auto &plan : p.plans) {
        auto run = execute_plan(sys, p.d, plan);
        sys.monitor().record(make_record(sys, p.sig, plan.id, run, Phase::training));
        report.plan_runtimes.emplace_back(plan.id, run.runtime_ms);
        add_warnings(report.warnings, run.warnings);
        if (not expected) {
            expected = run.result;
            reference = &plan;
        } else if (auto diff = bag_diff(*expected, run.result, 1e-9)) {
            throw Error(ErrorKind::consistency,
                        "plans " + reference->id + " and " + plan.id + " returned different results: " + *diff);
        }
        if (not fastest or run.runtime_ms < fastest->runtime_ms) {
            report.plan_id = plan.id;
            fastest = std::move(run);
        }
    }
    report.result = std::move(fastest->result);
    report.runtime_ms = fastest->runtime_ms;
    report.notes.push_back("trained " + std::to_string(p.plans.size()) + " plan(s)");
    return report;
}

QueryReport run_production(std::string_view query, System &sys)
{
    System::Foreground fg(sys);
    auto p = plan_all(query, sys);
    QueryReport report;
    report.phase = Phase::production;
    report.signature = p.sig;
    auto &monitor = sys.monitor();

    const CandidatePlan *chosen = nullptr;
    if (auto match = monitor.nearest(p.sig); match and match->second >= sys.config().threshold) {
        const auto &[stored, sim] = *match;
        report.similarity = sim;
        const auto best_id = monitor.best_plan(stored);
        if (const auto *best = find_plan(p.plans, best_id)) {
            const auto now = current_usage(sys);
            const auto trained = monitor.usage_of(stored, best_id);
            const std::string matched = "matched signature " + stored.structure + " (similarity " +
                                        format_similarity(sim) + ")";
            if (not trained or usage_distance(*trained, now) <= sys.config().usage_bound) {
                chosen = best;
                report.notes.push_back(matched + "; best recorded plan");
            } else if (auto alt = monitor.best_plan_near(stored, now, sys.config().usage_bound);
                       alt and find_plan(p.plans, *alt)) {
                chosen = find_plan(p.plans, *alt);
                report.notes.push_back(matched + "; usage differs from training, alternate plan");
            } else {
                chosen = best;
                report.retrain_recommended = true;
                report.notes.push_back(matched + "; usage differs from training and no recorded plan fits, "
                                                 "rerun with --training recommended");
            }
        } else {
            report.notes.push_back("recorded best plan is not a candidate for this query");
        }
    }
    if (not chosen) {
        std::uniform_int_distribution<std::size_t> pick(0, p.plans.size() - 1);
        chosen = &p.plans[pick(sys.rng())];
        report.notes.push_back("untrained signature; randomly selected plan");
        for (const auto &other : p.plans)
            if (other.id != chosen->id) monitor.enqueue({p.sig, other.id, std::string(query)});
    }

    auto run = execute_plan(sys, p.d, *chosen);
    monitor.record(make_record(sys, p.sig, chosen->id, run, Phase::production));
    report.plan_id = chosen->id;
    report.runtime_ms = run.runtime_ms;
    report.warnings = std::move(run.warnings);
    report.result = std::move(run.result);
    return report;
}

std::size_t drain_background(System &sys)
{
    auto run = [&](const PendingPlan &pending) {
        PerfRecord rec;
        try {
            auto p = plan_all(pending.query, sys);
            const auto *plan = find_plan(p.plans, pending.plan_id);
            if (not plan) throw Error(ErrorKind::plan, "plan " + pending.plan_id + " is no longer a candidate");
            auto result = execute_plan(sys, p.d, *plan);
            rec = make_record(sys, pending.signature, pending.plan_id, result, Phase::background);
        } catch (const std::exception&) {
            rec.failed = true;
            rec.timestamp_ms = sys.clock().timestamp_ms();
        }
        return rec;
    };
    return sys.monitor().drain_background(run, [&] { return is_idle(sys); });
}

std::string render(const QueryReport &r)
{
    std::string out = cif::to_string(r.result);
    if (not out.empty() and out.back() != '\n') out += '\n';
    out += "phase=" + std::string(to_string(r.phase)) + "\n";
    out += "plan-id=" + r.plan_id + "\n";
    out += "runtime-ms=" + format_real(r.runtime_ms) + "\n";
    out += "structure=" + r.signature.structure + "\n";
    if (r.similarity) out += "similarity=" + format_similarity(*r.similarity) + "\n";
    if (r.retrain_recommended) out += "retrain-recommended=true\n";
    for (const auto &[id, ms] : r.plan_runtimes) out += "plan-runtime=" + id + ":" + format_real(ms) + "\n";
    for (const auto &n : r.notes) out += "note=" + n + "\n";
    std::string warnings;
    for (const auto &w : r.warnings) warnings += (warnings.empty() ? "" : "; ") + w;
    out += "warnings=" + warnings + "\n";
    return out;
}

}
