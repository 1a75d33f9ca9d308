#include "homeostat/reference.hpp"

#include <cmath>

namespace homeostat::reference {

double masked_distance_naive(const std::vector<TemporalTrace>& a,
                             const std::vector<TemporalTrace>& b,
                             const StateMask& mask) {
    double wsum = 0.0;
    for (std::size_t f = 0; f < mask.weights.size(); ++f) wsum += mask.weights[f];
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (std::size_t f = 0; f < a[t].values.size(); ++f) {
            const double d = a[t].values[f] - b[t].values[f];
            acc += mask.weights[f] * d * d;
        }
    }
    return std::sqrt(acc / (static_cast<double>(a.size()) * wsum));
}

std::vector<MatchResult> match_linear_scan(const MemoryBank& bank, const MatchQuery& query) {
    std::vector<MatchResult> out;
    for (const auto& rec : bank.records()) {
        std::size_t len = query.prefix;
        if (rec.trajectory.tau() < len) len = rec.trajectory.tau();

        std::vector<TemporalTrace> tail;
        for (std::size_t t = query.history.size() - len; t < query.history.size(); ++t) {
            tail.push_back(query.history[t]);
        }
        std::vector<TemporalTrace> head;
        for (std::size_t t = 0; t < len; ++t) head.push_back(rec.trajectory.traces[t]);

        MatchResult r;
        r.id = rec.id;
        r.distance = masked_distance_naive(tail, head, rec.trajectory.mask);
        r.score = rec.base_strength * rec.boost / (1.0 + r.distance);
        r.margin = 0.0;

        // Insertion sort: score descending, smaller id wins ties.
        std::size_t pos = out.size();
        while (pos > 0 &&
               (out[pos - 1].score < r.score || (out[pos - 1].score == r.score && out[pos - 1].id > r.id))) {
            --pos;
        }
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), r);
    }
    if (!out.empty()) {
        out[0].margin = out.size() == 1 ? out[0].score : out[0].score - out[1].score;
    }
    return out;
}

int horizon_by_loop(double decay, double epsilon) {
    int n = 1;
    double p = 1.0 - decay;
    while (p > epsilon) {
        p *= (1.0 - decay);
        ++n;
    }
    return n;
}

} // namespace homeostat::reference
