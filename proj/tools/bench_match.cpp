// Times the bank's match kernel against the serial reference scan on
// randomized banks and checks that both routes return identical rankings.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "homeostat/memory.hpp"
#include "homeostat/reference.hpp"
#include "homeostat/rng.hpp"

using namespace homeostat;

namespace {

TraceTrajectory random_traj(SplitMix64& rng, std::size_t tau, std::size_t dim) {
    std::vector<TemporalTrace> traces(tau);
    for (auto& t : traces) {
        t.decay = 0.5;
        t.values.resize(dim);
        for (auto& v : t.values) v = rng.next_double() * 2.0 - 1.0;
    }
    StateMask mask;
    mask.weights.assign(dim, 0.0);
    for (std::size_t f = 0; f < dim; ++f) mask.weights[f] = rng.next_double() < 0.7 ? 1.0 : 0.0;
    mask.weights[0] = 1.0; // never an all-zero mask
    return window_to_trajectory(traces, mask, 0);
}

double run_once(std::size_t n_records, std::size_t tau, std::size_t dim, int reps,
                double& parallel_ms, double& serial_ms) {
    SplitMix64 rng(0x9e3779b97f4a7c15ULL ^ n_records);
    MemoryBank bank(n_records);
    for (std::size_t i = 0; i < n_records; ++i) {
        bank.imprint(random_traj(rng, tau, dim), 0.5 + rng.next_double() * 2.0,
                     static_cast<std::int64_t>(i));
    }
    MatchQuery q;
    q.prefix = tau / 3;
    for (std::size_t t = 0; t < q.prefix + 2; ++t) {
        TemporalTrace tr;
        tr.decay = 0.5;
        tr.values.resize(dim);
        for (auto& v : tr.values) v = rng.next_double() * 2.0 - 1.0;
        q.history.push_back(std::move(tr));
    }

    using clock = std::chrono::steady_clock;
    std::vector<MatchResult> got, want;
    auto t0 = clock::now();
    for (int r = 0; r < reps; ++r) got = bank.match(q);
    auto t1 = clock::now();
    for (int r = 0; r < reps; ++r) want = reference::match_linear_scan(bank, q);
    auto t2 = clock::now();
    parallel_ms = std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
    serial_ms = std::chrono::duration<double, std::milli>(t2 - t1).count() / reps;

    if (got.size() != want.size()) {
        std::fprintf(stderr, "FAIL n=%zu: result count %zu vs %zu\n", n_records, got.size(), want.size());
        std::exit(1);
    }
    double max_err = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        if (got[i].id != want[i].id) {
            std::fprintf(stderr, "FAIL n=%zu rank %zu: id %lld vs %lld\n", n_records, i,
                         static_cast<long long>(got[i].id), static_cast<long long>(want[i].id));
            std::exit(1);
        }
        max_err = std::max(max_err, std::abs(got[i].score - want[i].score));
    }
    if (max_err > 1e-9) {
        std::fprintf(stderr, "FAIL n=%zu: score divergence %.3e\n", n_records, max_err);
        std::exit(1);
    }
    return max_err;
}

} // namespace

int main(int argc, char** argv) {
    int reps = 20;
    if (argc > 1) reps = std::atoi(argv[1]);
    if (reps < 1) reps = 1;

    const std::size_t dim = 24;
    const std::size_t tau = 12;
    std::printf("%10s %8s %14s %14s %8s %12s\n", "records", "dim", "parallel(ms)", "serial(ms)",
                "speedup", "max|dscore|");
    // 256 stays under the parallel threshold; the larger sizes engage it.
    for (std::size_t n : {std::size_t{256}, std::size_t{1024}, std::size_t{4096}, std::size_t{16384}}) {
        double par = 0.0, ser = 0.0;
        const double err = run_once(n, tau, dim, reps, par, ser);
        std::printf("%10zu %8zu %14.3f %14.3f %7.2fx %12.3e\n", n, dim, par, ser,
                    ser / std::max(par, 1e-9), err);
    }
    std::printf("rankings identical across both routes\n");
    return 0;
}
