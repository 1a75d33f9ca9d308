#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "homeostat/errors.hpp"

namespace homeostat {

// A Signal is one tick's assembled feature vector. Values must be finite;
// feature order is fixed by the owning subsystem's registry.
using Signal = std::vector<double>;

// Exponentially decaying running sum of signals. decay in (0,1]; decay == 1
// degenerates to a copy of the latest signal.
struct TemporalTrace {
    std::vector<double> values;
    double decay = 0.5;
};

// Per-feature weights in [0,1]; at least one weight must be positive.
struct StateMask {
    std::vector<double> weights;
};

void validate_mask(const StateMask& mask, std::size_t dim);
double mask_weight_sum(const StateMask& mask);

// Fixed-length window of traces, all sharing one dimension and one decay.
struct TraceTrajectory {
    std::vector<TemporalTrace> traces; // length tau >= 2
    StateMask mask;
    std::int64_t source_tick = 0;

    std::size_t tau() const { return traces.size(); }
    std::size_t dim() const { return traces.empty() ? 0 : traces[0].values.size(); }
};

// out[f] = (1 - decay) * prev[f] + decay * signal[f].
// |m_n - s| contracts geometrically toward a held signal s.
TemporalTrace trace_update(const TemporalTrace& prev, const Signal& signal, double decay);

// Length-normalized masked RMS distance between two equal-length trace windows:
// sqrt( sum_t sum_f w_f * (a_t[f] - b_t[f])^2 / (L * sum_f w_f) ).
// Symmetric, zero on identical windows; a pseudometric (mask can hide features).
double masked_distance(const std::vector<TemporalTrace>& a,
                       const std::vector<TemporalTrace>& b,
                       const StateMask& mask);

// Snapshot a rolling window (oldest first) into an immutable trajectory.
TraceTrajectory window_to_trajectory(const std::vector<TemporalTrace>& window,
                                     const StateMask& mask,
                                     std::int64_t source_tick);

// Smallest n >= 1 with (1 - decay)^n <= epsilon: how many ticks a held input
// needs before older content has decayed below epsilon relevance.
int effective_memory_horizon(double decay, double epsilon);

} // namespace homeostat
