#include "homeostat/trace.hpp"

#include <cmath>
#include <string>

namespace homeostat {

static void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) raise(ErrorKind::Structural, std::string(what) + " contains a non-finite value");
    }
}

void validate_mask(const StateMask& mask, std::size_t dim) {
    if (mask.weights.size() != dim) {
        raise(ErrorKind::Structural, "mask dimension " + std::to_string(mask.weights.size()) +
                                         " does not match feature dimension " + std::to_string(dim));
    }
    bool any_positive = false;
    for (double w : mask.weights) {
        if (!(w >= 0.0 && w <= 1.0)) raise(ErrorKind::Config, "mask weight outside [0,1]");
        if (w > 0.0) any_positive = true;
    }
    if (!any_positive) raise(ErrorKind::Config, "mask has no positive weight");
}

double mask_weight_sum(const StateMask& mask) {
    double s = 0.0;
    for (double w : mask.weights) s += w;
    return s;
}

TemporalTrace trace_update(const TemporalTrace& prev, const Signal& signal, double decay) {
    if (!(decay > 0.0 && decay <= 1.0)) raise(ErrorKind::Config, "decay must be in (0,1]");
    if (prev.values.size() != signal.size()) {
        raise(ErrorKind::Structural, "trace dimension " + std::to_string(prev.values.size()) +
                                         " does not match signal dimension " + std::to_string(signal.size()));
    }
    check_finite(signal, "signal");
    TemporalTrace out;
    out.decay = decay;
    out.values.resize(signal.size());
    const double keep = 1.0 - decay;
    for (std::size_t f = 0; f < signal.size(); ++f) {
        out.values[f] = keep * prev.values[f] + decay * signal[f];
    }
    check_finite(out.values, "updated trace");
    return out;
}

double masked_distance(const std::vector<TemporalTrace>& a,
                       const std::vector<TemporalTrace>& b,
                       const StateMask& mask) {
    if (a.empty() || a.size() != b.size()) {
        raise(ErrorKind::Structural, "masked_distance windows must be equal nonzero length");
    }
    const std::size_t dim = a[0].values.size();
    validate_mask(mask, dim);
    const double wsum = mask_weight_sum(mask);
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t].values.size() != dim || b[t].values.size() != dim) {
            raise(ErrorKind::Structural, "masked_distance trace dimension mismatch inside window");
        }
        for (std::size_t f = 0; f < dim; ++f) {
            const double d = a[t].values[f] - b[t].values[f];
            acc += mask.weights[f] * d * d;
        }
    }
    return std::sqrt(acc / (static_cast<double>(a.size()) * wsum));
}

TraceTrajectory window_to_trajectory(const std::vector<TemporalTrace>& window,
                                     const StateMask& mask,
                                     std::int64_t source_tick) {
    if (window.size() < 2) raise(ErrorKind::Structural, "trajectory needs at least 2 traces");
    const std::size_t dim = window[0].values.size();
    const double decay = window[0].decay;
    for (const auto& tr : window) {
        if (tr.values.size() != dim) raise(ErrorKind::Structural, "trajectory window has mixed dimensions");
        if (tr.decay != decay) raise(ErrorKind::Structural, "trajectory window has mixed decays");
    }
    validate_mask(mask, dim);
    TraceTrajectory out;
    out.traces = window;
    out.mask = mask;
    out.source_tick = source_tick;
    return out;
}

int effective_memory_horizon(double decay, double epsilon) {
    if (!(decay > 0.0 && decay <= 1.0)) raise(ErrorKind::Config, "decay must be in (0,1]");
    if (!(epsilon > 0.0 && epsilon < 1.0)) raise(ErrorKind::Config, "epsilon must be in (0,1)");
    const double keep = 1.0 - decay;
    double pow_n = keep;
    int n = 1;
    while (pow_n > epsilon) {
        pow_n *= keep;
        ++n;
    }
    return n;
}

} // namespace homeostat
