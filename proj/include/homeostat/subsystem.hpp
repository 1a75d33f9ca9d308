#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "homeostat/memory.hpp"
#include "homeostat/trace.hpp"

namespace homeostat {

// One regulated variable. current is written from outside (world binding or
// nothing at all for intent hvars, whose current stays at its initial value);
// target_eff = target_base + sum of active expectation deltas, floored at 0
// (unsigned drives misread negative targets as positive urge).
struct Expectation {
    std::string hvar_id;
    double delta = 0.0;
    int horizon = 1; // ticks > 0; expires exactly at issued_tick + horizon
    std::int64_t issued_tick = 0;
};

struct HVar {
    std::string id;
    double current = 0.0;
    double prev_current = 0.0; // last tick's current, for last-step valence
    double target_base = 0.0;
    double target_eff = 0.0;
    double band = 1.0;     // > 0
    double priority = 1.0; // > 0, weights valence in trajectory utility
    bool privileged = false;
    std::vector<Expectation> active;
};

// Normalized deviation; 0 means on target, 1 means at the band edge.
double drive_of(const HVar& h);

// Positive when the step moved the value toward the target:
// |prev - target| - |curr - target|.
double valence(double prev, double curr, double target);

// Drop expired expectations (now >= issued + horizon), recompute target_eff,
// then add e if given. Expired deltas vanish exactly; the setpoint restitutes.
void apply_expectation(HVar& h, const Expectation* e, std::int64_t now);

struct InteroSignal {
    std::string subsystem;
    std::string hvar_id;
    double drive = 0.0;
    double valence = 0.0;
    bool privileged = false;
};

// Priority-weighted sum of per-step valences over a window of hvar series.
// currents/targets are [t][h], t oldest first; the sum runs over steps 1..T-1.
// Reversing a window under constant targets negates the result; there is no
// external reward term anywhere in this quantity.
double trajectory_utility(const std::vector<std::vector<double>>& currents,
                          const std::vector<std::vector<double>>& targets,
                          const std::vector<double>& priorities);

// Expectation emitted by a parent, addressed to a child hvar.
struct ExpectationOut {
    std::string child;
    std::string hvar_id;
    double delta = 0.0;
    int horizon = 1;
};

// Metabolic price of leaving privileged trouble unaddressed:
// c_ig * sum over privileged signals with drive > 1 and no expectation sent to
// their hvar this tick of (drive - 1).
double ignore_cost(const std::vector<InteroSignal>& arrivals,
                   const std::vector<ExpectationOut>& sent, double c_ig);

// Selection and plasticity constants. One block; scenarios may override.
struct Thresholds {
    double theta_win = 0.05;    // margin needed for a clear winner
    double theta_act = 0.1;     // minimum actionable top score
    double theta_goal = 0.15;   // margin needed to instantiate a goal
    double theta_err = 0.2;     // per-tick replay error tolerance
    int err_ticks = 3;          // consecutive errors that abort a replay
    int top_k = 3;              // candidates cycled
    int cycle_max = 8;          // cycling slots before a forced pick
    double boost_factor = 1.3;  // short-term boost at each cycling switch
    double goal_boost = 1.2;    // standing boost while a goal holds a record
    double boost_max = 2.0;
    double ignore_cost_rate = 0.05;
    double novelty_floor = 0.05; // minimum distance to every stored record
    double motor_threshold = 0.5;
};

struct GoalInstance {
    std::int64_t goal_id = 0;
    std::int64_t record_id = 0;
    std::int64_t instantiated_tick = 0;
    std::int64_t ttl = 0; // 2 * tau of the record
    double confidence = 0.0;
};

enum class ModeKind { Idle, Cycling, Replaying };

// Feature registry slot. Order fixes the meaning of every Signal index.
enum class SlotKind { OwnDrive, OwnValence, ChildDrive, ChildValence, ChildError, Extero };

struct Slot {
    SlotKind kind = SlotKind::Extero;
    std::string name;       // canonical: own:<h>:drive | child:<s>:<h>:drive | child:<s>:error | ext:<f>
    std::size_t own_index = 0;
    std::string child;
    std::string child_hvar;
    double child_band = 1.0; // for ChildDrive: band of the addressed hvar
    std::string extero_name;
};

struct StepFlags {
    bool allow_imprint = true; // no_memory ablation clears this
    bool allow_boost = true;   // no_plasticity ablation clears this
};

enum class GoalEvent { None, Started, Completed, Expired };

struct StepOutput {
    std::vector<ExpectationOut> expectations;
    std::vector<InteroSignal> intero;
    double prediction_error = 0.0; // masked replay-vs-actual distance this tick
    bool aborted = false;          // replay abandoned this tick (escalates next tick)
    bool imprinted = false;
    GoalEvent goal_event = GoalEvent::None;
    ModeKind mode_after = ModeKind::Idle;
};

// One homeostatic node: hvars, a trajectory bank, a rolling trace, and the
// Idle/Cycling/Replaying selection machine. step() is single-threaded; two
// calls never interleave on one Subsystem.
struct Subsystem {
    std::string name;
    int level = 0;
    double decay = 0.9;
    std::size_t tau = 6;      // window length and history depth
    int replay_horizon = 3;   // T: expectation horizon and cycling slot length
    std::size_t prefix = 2;   // p = ceil(tau/3): match prefix length

    std::vector<HVar> hvars;
    std::vector<Slot> slots;
    MemoryBank bank;
    Thresholds th;

    TemporalTrace trace;                  // rolling trace over the slot space
    std::deque<TemporalTrace> history;    // last tau traces, oldest first
    std::deque<std::vector<double>> window_currents; // last tau hvar currents
    std::deque<std::vector<double>> window_targets;  // last tau hvar target_effs

    ModeKind mode = ModeKind::Idle;
    // Replaying state
    std::int64_t replay_id = 0;
    std::size_t replay_offset = 0;
    int err_streak = 0;
    // Cycling state
    std::vector<std::int64_t> candidates;
    std::size_t cand_idx = 0;
    int slot_ticks_left = 0;
    int cycles_done = 0;
    std::size_t cand_offset = 0;

    std::optional<GoalInstance> goal;
    std::int64_t next_goal_id = 0;
    std::int64_t imprint_count = 0;
    StateMask learned_mask; // own drives + child drives; built with the slots

    Subsystem(std::string name_, int level_, std::size_t capacity, Thresholds th_)
        : name(std::move(name_)), level(level_), bank(capacity, th_.boost_max), th(th_) {}

    HVar* find_hvar(const std::string& id);
    const HVar* find_hvar(const std::string& id) const;

    // Advance one tick on the assembled state. Mutates trace, history, bank
    // (boosts/imprints), mode, and hvar bookkeeping.
    StepOutput step(const Signal& state, std::int64_t now, const StepFlags& flags);

private:
    std::vector<MatchResult> run_match() const;
    void emit_from(std::int64_t record_id, std::size_t offset, const Signal& state,
                   std::vector<ExpectationOut>& out) const;
    // Returns true when a clear winner was found and Replaying was entered.
    bool cycle_switch(const Signal& state, std::int64_t now, const StepFlags& flags);
    void enter_cycling(const std::vector<MatchResult>& results, const Signal& state, std::int64_t now,
                       const StepFlags& flags);
    void manage_goals(const std::vector<MatchResult>& results, std::int64_t now,
                      const StepFlags& flags, bool replay_completed_goal_record,
                      StepOutput& out);
    void maybe_imprint(std::int64_t now, const StepFlags& flags, StepOutput& out);
};

const char* mode_name(ModeKind m);

} // namespace homeostat
