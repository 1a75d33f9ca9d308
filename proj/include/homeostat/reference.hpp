#pragma once

// Serial reference implementations kept deliberately naive and independent of
// the production kernels. Tests compare the two routes; the benchmark times
// them against each other. Do not "optimize" these or fold them into the
// production code paths.

#include <vector>

#include "homeostat/memory.hpp"

namespace homeostat::reference {

// Straight-line recomputation of the masked window distance.
double masked_distance_naive(const std::vector<TemporalTrace>& a,
                             const std::vector<TemporalTrace>& b,
                             const StateMask& mask);

// Brute-force linear scan over the bank: score every record, insertion-sort
// by (score desc, id asc), populate the top margin.
std::vector<MatchResult> match_linear_scan(const MemoryBank& bank, const MatchQuery& query);

// Horizon by direct repeated multiplication, mirroring the definition.
int horizon_by_loop(double decay, double epsilon);

} // namespace homeostat::reference
