#include "homeostat/memory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace homeostat {

namespace {

// Shortest round-trip formatting keeps dump files byte-stable.
void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

struct Scored {
    double score;
    double distance;
    std::int64_t id;
};

} // namespace

MemoryBank::MemoryBank(std::size_t capacity, double boost_max)
    : capacity_(capacity), boost_max_(boost_max) {
    if (capacity_ == 0) raise(ErrorKind::Config, "bank capacity must be positive");
    if (!(boost_max_ >= 1.0)) raise(ErrorKind::Config, "boost_max must be >= 1");
}

const MemoryRecord& MemoryBank::get(std::int64_t id) const {
    for (const auto& r : records_) {
        if (r.id == id) return r;
    }
    raise(ErrorKind::Lookup, "unknown record id " + std::to_string(id));
}

MemoryRecord& MemoryBank::get_mut(std::int64_t id) {
    for (auto& r : records_) {
        if (r.id == id) return r;
    }
    raise(ErrorKind::Lookup, "unknown record id " + std::to_string(id));
}

bool MemoryBank::contains(std::int64_t id) const {
    for (const auto& r : records_) {
        if (r.id == id) return true;
    }
    return false;
}

void MemoryBank::evict_weakest() {
    // Weakest effective strength loses; the oldest (smallest id) breaks ties.
    std::size_t victim = 0;
    double weakest = records_[0].base_strength * records_[0].boost;
    for (std::size_t i = 1; i < records_.size(); ++i) {
        const double eff = records_[i].base_strength * records_[i].boost;
        if (eff < weakest) {
            weakest = eff;
            victim = i;
        }
    }
    records_.erase(records_.begin() + static_cast<std::ptrdiff_t>(victim));
}

std::optional<std::int64_t> MemoryBank::imprint(const TraceTrajectory& trajectory, double utility,
                                                std::int64_t now) {
    if (!(utility > 0.0)) return std::nullopt;
    if (trajectory.tau() < 2) raise(ErrorKind::Structural, "trajectory needs at least 2 traces");
    if (records_.size() >= capacity_) evict_weakest();

    MemoryRecord rec;
    rec.id = next_id_++;
    rec.trajectory = trajectory;
    rec.base_strength = std::min(1.0, utility / (1.0 + utility));
    rec.boost = 1.0;
    rec.imprint_tick = now;
    records_.push_back(std::move(rec));
    return records_.back().id;
}

std::vector<MatchResult> MemoryBank::match(const MatchQuery& query) const {
    if (records_.empty()) return {};
    if (query.history.empty()) raise(ErrorKind::Query, "match query history is empty");
    if (query.prefix < 1 || query.prefix > query.history.size()) {
        raise(ErrorKind::Query, "match prefix must be in [1, history length]");
    }

    const std::size_t n = records_.size();
    std::vector<Scored> scored(n);

    // Per-record scoring is pure and lands in its own slot, so the parallel
    // path is bit-identical to the serial one. Desk-scale banks stay serial.
#pragma omp parallel for schedule(static) if (n >= 512)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const MemoryRecord& rec = records_[static_cast<std::size_t>(i)];
        const std::size_t len = std::min(query.prefix, rec.trajectory.tau());
        std::vector<TemporalTrace> tail(query.history.end() - static_cast<std::ptrdiff_t>(len),
                                        query.history.end());
        std::vector<TemporalTrace> head(rec.trajectory.traces.begin(),
                                        rec.trajectory.traces.begin() + static_cast<std::ptrdiff_t>(len));
        const double d = masked_distance(tail, head, rec.trajectory.mask);
        scored[static_cast<std::size_t>(i)] = {rec.base_strength * rec.boost / (1.0 + d), d, rec.id};
    }

    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });

    std::vector<MatchResult> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].id = scored[i].id;
        out[i].distance = scored[i].distance;
        out[i].score = scored[i].score;
        out[i].margin = 0.0;
    }
    out[0].margin = (n == 1) ? out[0].score : out[0].score - out[1].score;
    return out;
}

const TemporalTrace& MemoryBank::replay_step(std::int64_t id, std::size_t k) const {
    const MemoryRecord& rec = get(id);
    if (k >= rec.trajectory.tau()) {
        raise(ErrorKind::Range, "replay offset " + std::to_string(k) + " out of range for tau " +
                                    std::to_string(rec.trajectory.tau()));
    }
    return rec.trajectory.traces[k];
}

void MemoryBank::boost(std::int64_t id, double factor) {
    if (!(factor > 1.0)) raise(ErrorKind::Config, "boost factor must be > 1");
    MemoryRecord& rec = get_mut(id);
    rec.boost = std::min(rec.boost * factor, boost_max_);
}

void MemoryBank::decay_boosts() {
    for (auto& rec : records_) {
        rec.boost = std::max(1.0, std::sqrt(rec.boost));
    }
}

void MemoryBank::note_match(std::int64_t id, std::int64_t now) {
    get_mut(id).last_match_tick = now;
}

std::string MemoryBank::serialize() const {
    std::string out;
    out += "# records=" + std::to_string(records_.size()) + " capacity=" + std::to_string(capacity_);
    if (!records_.empty()) {
        out += " dim=" + std::to_string(records_[0].trajectory.dim());
        out += " decay=";
        append_double(out, records_[0].trajectory.traces[0].decay);
    }
    out += "\n# line: id base_strength boost tau mask[dim] traces[tau*dim tick-major]\n";
    for (const auto& rec : records_) {
        out += std::to_string(rec.id);
        out += ' ';
        append_double(out, rec.base_strength);
        out += ' ';
        append_double(out, rec.boost);
        out += ' ';
        out += std::to_string(rec.trajectory.tau());
        for (double w : rec.trajectory.mask.weights) {
            out += ' ';
            append_double(out, w);
        }
        for (const auto& tr : rec.trajectory.traces) {
            for (double v : tr.values) {
                out += ' ';
                append_double(out, v);
            }
        }
        out += '\n';
    }
    return out;
}

} // namespace homeostat
