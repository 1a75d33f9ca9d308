#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "homeostat/runner.hpp"

#include "json.hpp"

namespace homeostat {

// Everything here is recomputable from the RunLog plus the scenario config
// (bands and levels come from the config; the log carries only observations).
struct Metrics {
    std::int64_t survival_ticks = 0;
    std::string truncated;
    std::map<std::string, double> time_in_band;   // "sub.hvar" -> fraction in [0,1]
    std::map<std::string, double> mean_abs_drive; // "sub.hvar"
    std::map<std::string, double> mean_pred_err;  // "level_<l>"
    std::int64_t goals_started = 0;
    std::int64_t goals_completed = 0;
    double goal_completion_rate = 0.0; // 0 when no goal ever started
    std::map<std::string, std::int64_t> actions;  // action name -> count
};

// Pure function of (log, config). Empty log with config.ticks > 0 is an
// integrity error; a zero-tick run yields degenerate (all-zero) metrics.
Metrics compute_metrics(const RunLog& log, const ScenarioConfig& config);

// Sorted-key JSON, stable across runs.
nlohmann::json metrics_to_json(const Metrics& m);

} // namespace homeostat
