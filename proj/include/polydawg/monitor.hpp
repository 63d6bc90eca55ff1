#pragma once

#include <polydawg/planner.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>

namespace polydawg {

/// Per-engine busy fractions over the usage window.
struct UsageSnapshot
{
    std::map<std::string, double> busy;
    std::size_t active_queries = 0; ///< not persisted
    double timestamp_ms = 0;

    bool operator==(const UsageSnapshot&) const = default;
};

/// Largest per-engine busy-fraction difference; engines missing on one side count as 0.
double usage_distance(const UsageSnapshot &a, const UsageSnapshot &b);

enum class Phase { training, production, background };

const char * to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view s);

struct PerfRecord
{
    Signature signature;
    std::string plan_id;
    double runtime_ms = 0;
    UsageSnapshot usage;
    Phase phase = Phase::training;
    std::int64_t timestamp_ms = 0;
    bool failed = false; ///< tombstone of a plan that errored; never a best-plan candidate

    bool operator==(const PerfRecord&) const = default;
};

/// One tab-separated log line without the newline.
std::string format_record(const PerfRecord &r);
/// Inverse of `format_record`; throws a `storage` error on malformed lines.
PerfRecord parse_record(std::string_view line);

struct SimilarityWeights
{
    double structure = 0.6;
    double objects = 0.3;
    double constants = 0.1;
};

double jaccard(const std::vector<std::string> &a, const std::vector<std::string> &b);
double similarity(const Signature &a, const Signature &b, const SimilarityWeights &w = {});

/// A plan that production skipped, waiting for background execution.
struct PendingPlan
{
    Signature signature;
    std::string plan_id;
    std::string query;
};

struct PlanStats
{
    std::string plan_id;
    double mean_ms = 0;
    std::size_t runs = 0;
    std::size_t failures = 0;
};

/** Append-only performance log with an in-memory index. Without a path the log lives in memory only. */
class MonitorDB
{
    std::optional<std::filesystem::path> path_;
    SimilarityWeights weights_;
    std::ofstream log_;
    std::vector<PerfRecord> records_;
    std::map<std::string, std::vector<std::size_t>> by_structure_;
    std::deque<PendingPlan> pending_;
    mutable std::mutex mutex_;

    void index(PerfRecord rec);

    public:
    explicit MonitorDB(std::optional<std::filesystem::path> path = std::nullopt, SimilarityWeights weights = {});

    MonitorDB(const MonitorDB&) = delete;
    MonitorDB & operator=(const MonitorDB&) = delete;

    const SimilarityWeights & weights() const { return weights_; }

    /// Appends and flushes before returning.
    void record(const PerfRecord &rec);

    std::vector<PerfRecord> records() const;
    std::size_t size() const;
    /// Records grouped by structure hash, in log order.
    std::map<std::string, std::vector<PerfRecord>> index_snapshot() const;
    /// The log text, one line per record.
    std::string dump() const;

    /// Stored signature with the highest similarity; ties go to the most recently recorded.
    std::optional<std::pair<Signature, double>> nearest(const Signature &sig) const;
    /// Minimal mean runtime over successful records of `sig`; ties by plan id. Throws `not_found` without records.
    std::string best_plan(const Signature &sig) const;
    /// Like `best_plan` but only counting records whose usage lies within `bound` of `current`.
    std::optional<std::string> best_plan_near(const Signature &sig, const UsageSnapshot &current, double bound) const;
    /// Usage of the most recent successful record of (`sig`, `plan_id`).
    std::optional<UsageSnapshot> usage_of(const Signature &sig, const std::string &plan_id) const;
    /// Per-plan statistics over all signatures with the given structure, sorted by plan id.
    std::vector<PlanStats> stats(const std::string &structure) const;

    /// Duplicates of an already pending (signature, plan) are ignored.
    void enqueue(PendingPlan p);
    std::vector<PendingPlan> pending() const;

    /** Pops and runs pending plans while `idle()` holds. `run` returns the measured record; an exception becomes a
     * tombstone. Returns the number of plans executed. */
    std::size_t drain_background(const std::function<PerfRecord(const PendingPlan&)> &run,
                                 const std::function<bool()> &idle);
};

}
