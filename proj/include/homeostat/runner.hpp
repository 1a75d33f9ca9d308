#pragma once

#include <map>
#include <string>
#include <vector>

#include "homeostat/scenario.hpp"

namespace homeostat {

// One row per tick. World body values are post-step (end of tick); the hvar
// snapshots are what the agent saw when it acted (pre-step world, post-tick
// targets). Ledger terms satisfy, against the previous row's energy:
// energy[t] = energy[t-1] - basal - action_cost - ignore + intake + clamp_adjust.
struct TickRow {
    std::int64_t tick = 0;
    std::string action;
    double core_temp = 0.0, energy = 0.0, integrity = 0.0;
    double ambient = 0.0, food_here = 0.0, looming = 0.0, looming_rate = 0.0;
    double basal = 0.0, action_cost = 0.0, ignore = 0.0, intake = 0.0, clamp_adjust = 0.0;
    std::int64_t contacts = 0;
    std::vector<std::string> sub_mode;       // per subsystem, declaration order
    std::vector<double> sub_pred_err;
    std::vector<std::int64_t> sub_aborted;   // 0/1
    std::vector<std::int64_t> sub_imprinted; // 0/1
    std::vector<std::string> sub_goal_event; // none|started|completed|expired
    std::vector<std::int64_t> sub_goal_id;   // -1 when no goal is active
    std::vector<double> hvar_current, hvar_target, hvar_drive;
};

struct HVarCol {
    std::string sub;
    std::string id;
};

struct RunLog {
    std::vector<std::string> sub_names; // declaration order
    std::vector<HVarCol> hvar_cols;     // declaration order, grouped by subsystem
    std::vector<TickRow> rows;
    std::string truncated; // "" or "death"
};

struct RunResult {
    RunLog log;
    std::map<std::string, std::string> bank_dumps; // subsystem -> serialized bank
};

// Drive one full scenario: build world + agent from the config, iterate
// events -> observe -> inject -> agent tick -> world step for config.ticks
// ticks or until death. Pure function of the config.
RunResult run_scenario(const ScenarioConfig& config);

} // namespace homeostat
