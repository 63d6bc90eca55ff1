#include <polydawg/monitor.hpp>

#include <polydawg/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace polydawg {

double usage_distance(const UsageSnapshot &a, const UsageSnapshot &b)
{
    double d = 0;
    auto at = [](const UsageSnapshot &u, const std::string &e) {
        auto it = u.busy.find(e);
        return it == u.busy.end() ? 0.0 : it->second;
    };
    for (const auto &[e, f] : a.busy) d = std::max(d, std::abs(f - at(b, e)));
    for (const auto &[e, f] : b.busy) d = std::max(d, std::abs(f - at(a, e)));
    return d;
}

const char * to_string(Phase p)
{
    switch (p) {
        case Phase::training:   return "training";
        case Phase::production: return "production";
        case Phase::background: return "background";
    }
    return "?";
}

std::optional<Phase> parse_phase(std::string_view s)
{
    if (s == "training") return Phase::training;
    if (s == "production") return Phase::production;
    if (s == "background") return Phase::background;
    return std::nullopt;
}

/*----- log lines ---------------------------------------------------------------------------------------------*/

namespace {

constexpr std::string_view reserved = "%\t\n\r;,=";

std::string escape(std::string_view s)
{
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (reserved.find(char(c)) == std::string_view::npos) {
            out += char(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

[[noreturn]] void malformed(const std::string &what) { throw Error(ErrorKind::storage, "malformed monitor record: " + what); }

std::string unescape(std::string_view s)
{
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out += s[i];
            continue;
        }
        unsigned v = 0;
        if (i + 2 >= s.size()) malformed("truncated escape");
        auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
        if (ec != std::errc{} or p != s.data() + i + 3) malformed("bad escape in '" + std::string(s) + "'");
        out += char(v);
        i += 2;
    }
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() or s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

std::string join_list(const std::vector<std::string> &xs)
{
    std::string out;
    for (std::size_t i = 0; i != xs.size(); ++i) out += (i ? ";" : "") + escape(xs[i]);
    return out;
}

std::vector<std::string> parse_list(std::string_view s)
{
    std::vector<std::string> out;
    if (s.empty()) return out;
    for (auto part : split(s, ';')) out.push_back(unescape(part));
    return out;
}

std::string number(double d)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, end);
}

double parse_number(std::string_view s)
{
    double d = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec != std::errc{} or p != s.data() + s.size() or not std::isfinite(d)) malformed("bad number '" + std::string(s) + "'");
    return d;
}

}

std::string format_record(const PerfRecord &r)
{
    std::string usage;
    for (const auto &[engine, frac] : r.usage.busy)
        usage += (usage.empty() ? "" : ",") + escape(engine) + "=" + number(frac);
    return std::to_string(r.timestamp_ms) + '\t' + to_string(r.phase) + '\t' + r.signature.structure + '\t' +
           join_list(r.signature.objects) + '\t' + join_list(r.signature.constants) + '\t' + escape(r.plan_id) +
           '\t' + (r.failed ? std::string("failed") : number(r.runtime_ms)) + '\t' + usage;
}

PerfRecord parse_record(std::string_view line)
{
    auto f = split(line, '\t');
    if (f.size() != 8) malformed("expected 8 fields, got " + std::to_string(f.size()));
    PerfRecord r;
    auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.timestamp_ms);
    if (ec != std::errc{} or p != f[0].data() + f[0].size()) malformed("bad timestamp");
    auto phase = parse_phase(f[1]);
    if (not phase) malformed("unknown phase '" + std::string(f[1]) + "'");
    r.phase = *phase;
    r.signature.structure = std::string(f[2]);
    r.signature.objects = parse_list(f[3]);
    r.signature.constants = parse_list(f[4]);
    r.plan_id = unescape(f[5]);
    if (f[6] == "failed") r.failed = true;
    else r.runtime_ms = parse_number(f[6]);
    if (r.runtime_ms < 0) malformed("negative runtime");
    if (not f[7].empty()) {
        for (auto entry : split(f[7], ',')) {
            auto eq = entry.find('=');
            if (eq == std::string_view::npos) malformed("bad usage entry");
            r.usage.busy[unescape(entry.substr(0, eq))] = parse_number(entry.substr(eq + 1));
        }
    }
    r.usage.timestamp_ms = double(r.timestamp_ms);
    return r;
}

/*----- similarity --------------------------------------------------------------------------------------------*/

double jaccard(const std::vector<std::string> &a, const std::vector<std::string> &b)
{
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    if (sa.empty() and sb.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto &x : sa) common += sb.count(x);
    return double(common) / double(sa.size() + sb.size() - common);
}

double similarity(const Signature &a, const Signature &b, const SimilarityWeights &w)
{
    if (a == b) return 1.0;
    const double raw = w.structure * (a.structure == b.structure ? 1.0 : 0.0) +
                       w.objects * jaccard(a.objects, b.objects) + w.constants * jaccard(a.constants, b.constants);
    // snap summation noise so that 0.6 + 0.3 compares equal to 0.9
    return std::round(raw * 1e12) / 1e12;
}

/*----- database ----------------------------------------------------------------------------------------------*/

MonitorDB::MonitorDB(std::optional<std::filesystem::path> path, SimilarityWeights weights)
    : path_(std::move(path)), weights_(weights)
{
    if (not path_) return;
    if (std::filesystem::exists(*path_)) {
        std::ifstream in(*path_, std::ios::binary);
        if (not in) throw Error(ErrorKind::storage, "cannot read monitor log " + path_->string());
        std::stringstream buf;
        buf << in.rdbuf();
        const auto text = buf.str();
        std::size_t start = 0, line_no = 0;
        while (start < text.size()) {
            ++line_no;
            auto nl = text.find('\n', start);
            if (nl == std::string::npos) break; // torn final write
            try {
                index(parse_record(std::string_view(text).substr(start, nl - start)));
            } catch (const Error &e) {
                throw Error(ErrorKind::storage, path_->string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
            start = nl + 1;
        }
        if (start < text.size()) std::filesystem::resize_file(*path_, start);
    } else if (path_->has_parent_path()) {
        std::filesystem::create_directories(path_->parent_path());
    }
    log_.open(*path_, std::ios::binary | std::ios::app);
    if (not log_) throw Error(ErrorKind::storage, "cannot open monitor log " + path_->string());
}

void MonitorDB::index(PerfRecord rec)
{
    by_structure_[rec.signature.structure].push_back(records_.size());
    records_.push_back(std::move(rec));
}

void MonitorDB::record(const PerfRecord &rec)
{
    if (not rec.failed and (not std::isfinite(rec.runtime_ms) or rec.runtime_ms < 0))
        throw Error(ErrorKind::validation, "runtime must be finite and non-negative");
    const auto line = format_record(rec);
    std::lock_guard lock(mutex_);
    if (path_) {
        log_ << line << '\n';
        log_.flush();
        if (not log_) throw Error(ErrorKind::storage, "write to monitor log " + path_->string() + " failed");
    }
    // keep exactly what a replay of the log would produce
    index(parse_record(line));
}

std::vector<PerfRecord> MonitorDB::records() const
{
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t MonitorDB::size() const
{
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::map<std::string, std::vector<PerfRecord>> MonitorDB::index_snapshot() const
{
    std::lock_guard lock(mutex_);
    std::map<std::string, std::vector<PerfRecord>> out;
    for (const auto &[structure, ids] : by_structure_)
        for (auto i : ids) out[structure].push_back(records_[i]);
    return out;
}

std::string MonitorDB::dump() const
{
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto &r : records_) out += format_record(r) + '\n';
    return out;
}

std::optional<std::pair<Signature, double>> MonitorDB::nearest(const Signature &sig) const
{
    std::lock_guard lock(mutex_);
    std::optional<std::pair<Signature, double>> best;
    for (std::size_t i = records_.size(); i-- > 0;) {
        const auto &r = records_[i];
        if (r.failed) continue;
        const double s = similarity(sig, r.signature, weights_);
        // scanning newest first, so a strict improvement is needed to displace a more recent signature
        if (not best or s > best->second) {
            best = {r.signature, s};
        }
    }
    return best;
}

namespace {

std::optional<std::string> min_mean(const std::vector<const PerfRecord*> &records)
{
    std::map<std::string, std::pair<double, std::size_t>> sums;
    for (auto r : records) {
        auto &s = sums[r->plan_id];
        s.first += r->runtime_ms;
        ++s.second;
    }
    std::optional<std::string> best;
    double best_mean = 0;
    for (const auto &[id, s] : sums) {
        const double mean = s.first / double(s.second);
        if (not best or mean < best_mean) {
            best = id;
            best_mean = mean;
        }
    }
    return best;
}

}

std::string MonitorDB::best_plan(const Signature &sig) const
{
    std::lock_guard lock(mutex_);
    std::vector<const PerfRecord*> matching;
    if (auto it = by_structure_.find(sig.structure); it != by_structure_.end())
        for (auto i : it->second)
            if (not records_[i].failed and records_[i].signature == sig) matching.push_back(&records_[i]);
    auto best = min_mean(matching);
    if (not best) throw Error(ErrorKind::not_found, "no records for signature " + sig.structure);
    return *best;
}

std::optional<std::string> MonitorDB::best_plan_near(const Signature &sig, const UsageSnapshot &current,
                                                     double bound) const
{
    std::lock_guard lock(mutex_);
    std::vector<const PerfRecord*> matching;
    if (auto it = by_structure_.find(sig.structure); it != by_structure_.end())
        for (auto i : it->second) {
            const auto &r = records_[i];
            if (not r.failed and r.signature == sig and usage_distance(r.usage, current) <= bound)
                matching.push_back(&r);
        }
    return min_mean(matching);
}

std::optional<UsageSnapshot> MonitorDB::usage_of(const Signature &sig, const std::string &plan_id) const
{
    std::lock_guard lock(mutex_);
    for (std::size_t i = records_.size(); i-- > 0;) {
        const auto &r = records_[i];
        if (not r.failed and r.plan_id == plan_id and r.signature == sig) return r.usage;
    }
    return std::nullopt;
}

std::vector<PlanStats> MonitorDB::stats(const std::string &structure) const
{
    std::lock_guard lock(mutex_);
    std::map<std::string, PlanStats> by_plan;
    if (auto it = by_structure_.find(structure); it != by_structure_.end()) {
        for (auto i : it->second) {
            const auto &r = records_[i];
            auto &s = by_plan[r.plan_id];
            s.plan_id = r.plan_id;
            if (r.failed) {
                ++s.failures;
            } else {
                s.mean_ms += r.runtime_ms;
                ++s.runs;
            }
        }
    }
    std::vector<PlanStats> out;
    for (auto &[id, s] : by_plan) {
        if (s.runs) s.mean_ms /= double(s.runs);
        out.push_back(s);
    }
    return out;
}

void MonitorDB::enqueue(PendingPlan p)
{
    std::lock_guard lock(mutex_);
    for (const auto &q : pending_)
        if (q.plan_id == p.plan_id and q.signature == p.signature) return;
    pending_.push_back(std::move(p));
}

std::vector<PendingPlan> MonitorDB::pending() const
{
    std::lock_guard lock(mutex_);
    return {pending_.begin(), pending_.end()};
}

std::size_t MonitorDB::drain_background(const std::function<PerfRecord(const PendingPlan&)> &run,
                                        const std::function<bool()> &idle)
{
    std::size_t executed = 0;
    while (idle()) {
        PendingPlan next;
        {
            std::lock_guard lock(mutex_);
            if (pending_.empty()) break;
            next = std::move(pending_.front());
            pending_.pop_front();
        }
        PerfRecord rec;
        try {
            rec = run(next);
        } catch (const std::exception&) {
            rec = PerfRecord{};
            rec.failed = true;
        }
        rec.signature = next.signature;
        rec.plan_id = next.plan_id;
        rec.phase = Phase::background;
        record(rec);
        ++executed;
    }
    return executed;
}

}
