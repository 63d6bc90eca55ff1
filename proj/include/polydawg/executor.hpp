#pragma once

#include <polydawg/monitor.hpp>

#include <atomic>
#include <chrono>
#include <memory>
#include <random>

namespace polydawg {

class Clock
{
    public:
    virtual ~Clock() = default;
    virtual double now_ms() const = 0;
    /// Milliseconds stamped on monitor records.
    virtual std::int64_t timestamp_ms() const = 0;
    /// Charges `ms` of simulated work. Real clocks ignore it.
    virtual void spend(double ms) = 0;
};

class RealClock final : public Clock
{
    std::chrono::steady_clock::time_point origin_ = std::chrono::steady_clock::now();

    public:
    double now_ms() const override
    {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - origin_).count();
    }
    std::int64_t timestamp_ms() const override
    {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch()).count();
    }
    void spend(double) override { }
};

/// Time advances only through `spend` and `advance`, so runtimes are exactly the charged latencies.
class VirtualClock final : public Clock
{
    std::atomic<double> now_;

    public:
    explicit VirtualClock(double start_ms = 0) : now_(start_ms) { }

    double now_ms() const override { return now_.load(); }
    std::int64_t timestamp_ms() const override { return std::int64_t(now_.load()); }
    void spend(double ms) override { advance(ms); }
    void advance(double ms)
    {
        double cur = now_.load();
        while (not now_.compare_exchange_weak(cur, cur + ms)) { }
    }
};

enum class StepKind { container, migrate, cross_op };

/// Simulated cost of a step on an engine, charged to the clock. Unlisted pairs cost nothing.
struct LatencyModel
{
    std::map<std::pair<std::string, StepKind>, double> ms;

    double of(const std::string &engine, StepKind kind) const
    {
        auto it = ms.find({engine, kind});
        return it == ms.end() ? 0.0 : it->second;
    }
};

/** Busy intervals per engine, reported as fractions of a sliding window. */
class UsageTracker
{
    double window_ms_;
    std::map<std::string, std::vector<std::pair<double, double>>> busy_;
    mutable std::mutex mutex_;

    public:
    explicit UsageTracker(double window_ms = 10'000) : window_ms_(window_ms) { }

    void add(const std::string &engine, double begin_ms, double end_ms);
    UsageSnapshot snapshot(double now_ms, const std::vector<std::string> &engines) const;
};

struct SystemConfig
{
    std::size_t plan_cap = default_plan_cap;
    SimilarityWeights weights;
    double threshold = 0.8;
    double usage_bound = 0.5;
    std::uint64_t seed = 42;
    double idle_quiet_ms = 5'000;
    double idle_busy = 0.2;
    double usage_window_ms = 10'000;
    std::optional<std::filesystem::path> monitor_log;

    /// Throws a `config` error when an invariant fails.
    void validate() const;
};

/** Everything a query needs: engines, islands, the monitor, a clock and usage accounting. */
class System
{
    SystemConfig config_;
    std::unique_ptr<EngineCatalog> catalog_;
    IslandRegistry registry_;
    MonitorDB monitor_;
    std::shared_ptr<Clock> clock_;
    UsageTracker usage_;
    std::mt19937_64 rng_;
    std::atomic<std::size_t> active_{0};
    std::atomic<double> last_foreground_;

    public:
    LatencyModel latency;

    System(SystemConfig config, std::unique_ptr<EngineCatalog> catalog,
           std::shared_ptr<Clock> clock = std::make_shared<RealClock>());

    const SystemConfig & config() const { return config_; }
    EngineCatalog & catalog() { return *catalog_; }
    const EngineCatalog & catalog() const { return *catalog_; }
    const IslandRegistry & registry() const { return registry_; }
    MonitorDB & monitor() { return monitor_; }
    const MonitorDB & monitor() const { return monitor_; }
    Clock & clock() { return *clock_; }
    UsageTracker & usage() { return usage_; }
    std::mt19937_64 & rng() { return rng_; }

    /// Marks a foreground query for the duration of the guard's life.
    class Foreground
    {
        System &sys_;

        public:
        explicit Foreground(System &sys);
        ~Foreground();
        Foreground(const Foreground&) = delete;
        Foreground & operator=(const Foreground&) = delete;
    };

    std::size_t active_queries() const { return active_.load(); }
    double last_foreground_ms() const { return last_foreground_.load(); }
};

struct PlanRun
{
    CanonicalTable result;
    double runtime_ms = 0;
    UsageSnapshot usage;
    std::vector<std::string> warnings;
};

/** Runs the steps of `plan` in order and returns the result in the query's logical model (associative arrays as
 * triples, arrays in export form). Temporaries created by the plan are dropped on success and failure. */
PlanRun execute_plan(System &sys, const Decomposition &d, const CandidatePlan &plan);

struct QueryReport
{
    CanonicalTable result;
    Phase phase = Phase::production;
    std::string plan_id;
    double runtime_ms = 0;
    std::vector<std::string> warnings;
    std::vector<std::string> notes;
    std::vector<std::pair<std::string, double>> plan_runtimes; ///< training only
    Signature signature;
    std::optional<double> similarity;
    bool retrain_recommended = false;
};

/// Result CIF followed by a `key=value` footer.
std::string render(const QueryReport &report);

/// Executes every candidate plan, records each, and returns the fastest plan's result.
QueryReport run_training(std::string_view query, System &sys);
/// Chooses a plan from the monitor, or a random one for an unknown signature.
QueryReport run_production(std::string_view query, System &sys);

UsageSnapshot current_usage(System &sys);
/// No foreground query for the quiet period and every engine below the busy threshold.
bool is_idle(System &sys);
/// Drains pending plans while the system is idle; returns how many ran.
std::size_t drain_background(System &sys);

}
