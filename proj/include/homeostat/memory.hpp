#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "homeostat/trace.hpp"

namespace homeostat {

struct MemoryRecord {
    std::int64_t id = 0;
    TraceTrajectory trajectory;
    double base_strength = 0.0; // in (0,1], set once at imprint, never mutated after
    double boost = 1.0;         // short-term plasticity factor, >= 1, capped
    std::int64_t imprint_tick = 0;
    std::int64_t last_match_tick = -1;
};

struct MatchQuery {
    // Rolling history, oldest first; at least one trace.
    std::vector<TemporalTrace> history;
    // Prefix length to compare; 1 <= prefix <= history.size().
    std::size_t prefix = 1;
};

struct MatchResult {
    std::int64_t id = 0;
    double distance = 0.0;
    double score = 0.0;
    // Top score minus runner-up score; equals score for a singleton result set.
    // Populated on the first (best) result only, 0 elsewhere.
    double margin = 0.0;
};

// Autoassociative store of trace trajectories. Append-only record ids;
// eviction at capacity removes the weakest (base_strength * boost), ties to
// the oldest id. Single-writer: only imprint/boost/decay/note_match mutate.
class MemoryBank {
public:
    explicit MemoryBank(std::size_t capacity, double boost_max = 2.0);

    std::size_t size() const { return records_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return records_.empty(); }
    double boost_max() const { return boost_max_; }

    const std::vector<MemoryRecord>& records() const { return records_; }
    const MemoryRecord& get(std::int64_t id) const;
    bool contains(std::int64_t id) const;

    // Store a trajectory whose window had the given homeostatic utility.
    // utility <= 0 is not imprinted (returns nullopt). base_strength = u/(1+u).
    std::optional<std::int64_t> imprint(const TraceTrajectory& trajectory, double utility,
                                        std::int64_t now);

    // Score every record against the query prefix: compare the last
    // min(prefix, tau_record) history traces with the record's first traces
    // under the record's own mask; score = base_strength*boost / (1+distance).
    // Ordered by score descending, ties to the smaller id. Read-only.
    std::vector<MatchResult> match(const MatchQuery& query) const;

    // Trace at replay offset k of record id; offsets past the matched prefix
    // are the record's predicted future. k in [0, tau).
    const TemporalTrace& replay_step(std::int64_t id, std::size_t k) const;

    // Multiply a record's boost by factor (> 1), capped at boost_max.
    void boost(std::int64_t id, double factor);

    // boost <- max(1, sqrt(boost)) for every record.
    void decay_boosts();

    // Record that a match selected this record at `now` (bookkeeping only).
    void note_match(std::int64_t id, std::int64_t now);

    // One record per line: id base_strength boost tau then mask weights then
    // traces flattened tick-major. Header comment carries dim and decay.
    std::string serialize() const;

private:
    MemoryRecord& get_mut(std::int64_t id);
    void evict_weakest();

    std::vector<MemoryRecord> records_; // kept in ascending id order
    std::size_t capacity_;
    double boost_max_;
    std::int64_t next_id_ = 0;
};

} // namespace homeostat
