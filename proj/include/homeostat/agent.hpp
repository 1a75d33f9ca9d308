#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "homeostat/subsystem.hpp"
#include "homeostat/world.hpp"

namespace homeostat {

// Per-level temporal parameters. Higher levels integrate more slowly and hold
// longer windows: decay(l) = max(0.05, 0.9 * 0.5^l), tau(l) = 6 * 2^l,
// replay horizon T(l) = ceil(tau/2). Level 0 is the fastest (leaf) scale.
struct LevelParams {
    double decay = 0.9;
    std::size_t tau = 6;
    int replay_horizon = 3;
};

LevelParams level_params(int level);

struct HVarSpec {
    std::string id;
    double target = 0.0;
    double band = 1.0;
    double priority = 1.0;
    bool privileged = false;
    double current0 = 0.0;
};

struct SubsystemSpec {
    std::string name;
    int level = 0;
    std::size_t capacity = 64;
    std::vector<HVarSpec> hvars;
    std::vector<std::string> children; // names; edges parent -> child
    std::vector<std::string> extero;   // subset of {ambient, food_here, looming, looming_rate}
};

// Authored memory content. Profiles are per-slot time series, all the same
// length (>= 2); slots not mentioned hold zero. profile_as_signal runs the
// values through the subsystem's own decay (starting at the first value) so
// step-shaped intents can be written directly.
struct BootstrapRecordSpec {
    std::string subsystem;
    std::string label; // for humans reading configs/dumps
    double utility = 1.0;
    std::map<std::string, double> mask;                 // slot name -> weight
    std::map<std::string, std::vector<double>> profile; // slot name -> series
    bool profile_as_signal = false;
};

// How raw observation features map into [0,1]-ish registry units. The
// ambient window should bracket the temperatures the scenario actually
// produces, or every cell reads mid-scale and the dim stops discriminating.
struct ExteroNorm {
    double ambient_lo = 20.0;
    double ambient_hi = 40.3;
    double looming_scale = 1.0;
    double looming_rate_scale = 1.0;
};

struct AgentConfig {
    std::vector<SubsystemSpec> subsystems;
    std::vector<BootstrapRecordSpec> bootstrap;
    std::string motor; // designated leaf
    Thresholds thresholds;
    ExteroNorm extero_norm;
};

struct Ablations {
    bool no_memory = false;     // banks start empty, imprinting disabled
    bool no_topdown = false;    // expectation delivery suppressed (injections too)
    bool no_plasticity = false; // boosts pinned at 1
    bool no_ignore_cost = false;
};

struct TickResult {
    Action action;
    double ignore_total = 0.0;
    std::vector<StepOutput> outputs; // per subsystem, declaration order
};

// The full agent: subsystem DAG (single root, root at the highest level, one
// motor leaf), two-phase synchronous tick. Phase 1 walks leaves to root in
// id-sorted topological order; phase 2 queues expectations root to leaves.
// Expectations queued at tick n are delivered at the start of tick n+1.
class AgentGraph {
public:
    static AgentGraph build(const AgentConfig& config, const Ablations& ablations);

    TickResult tick(const Observation& obs, std::int64_t now);

    // Deliver an expectation injection (events). Applied immediately at the
    // current tick unless no_topdown suppresses it.
    void inject(const Injection& inj, std::int64_t now);

    std::vector<Subsystem>& subsystems() { return subs_; }
    const std::vector<Subsystem>& subsystems() const { return subs_; }
    const std::vector<int>& topo_up() const { return topo_up_; }
    int motor_index() const { return motor_idx_; }
    int root_index() const { return root_idx_; }
    const Ablations& ablations() const { return ablations_; }

    int find_subsystem(const std::string& name) const; // -1 when absent
    // World bindings: hvars named core_temp/energy/integrity mirror the world.
    void set_body_state(double core_temp, double energy, double integrity);

private:
    AgentGraph() = default;

    Signal assemble_state(int idx, const Observation& obs) const;
    Action motor_translate(const Observation& obs);

    std::vector<Subsystem> subs_;
    std::vector<std::vector<int>> children_;
    std::vector<int> topo_up_;
    int motor_idx_ = -1;
    int root_idx_ = -1;
    // (subsystem, hvar) locations of the bound body variables; -1 if unbound.
    int core_sub_ = -1, core_hvar_ = -1;
    int energy_sub_ = -1, energy_hvar_ = -1;
    int integrity_sub_ = -1, integrity_hvar_ = -1;
    ExteroNorm norm_;
    Ablations ablations_;

    struct PendingExpectation {
        int sub = 0;
        Expectation e;
    };
    std::vector<PendingExpectation> pending_;
    std::vector<double> abort_err_; // per subsystem: last tick's abort error, one-tick flag
    std::vector<InteroSignal> intero_cache_flat_;
    std::vector<std::pair<int, int>> intero_span_; // per subsystem: [begin,count) into flat cache

    // Motor patrol state (deterministic; no RNG).
    int patrol_arm_ = 1, patrol_left_ = 1;
    Dir patrol_dir_ = Dir::East;
    bool patrol_grow_ = false;
};

} // namespace homeostat
