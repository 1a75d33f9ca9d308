#include "homeostat/metrics.hpp"

#include <cmath>

#include "homeostat/errors.hpp"

namespace homeostat {

Metrics compute_metrics(const RunLog& log, const ScenarioConfig& config) {
    if (log.rows.empty() && config.ticks > 0) {
        raise(ErrorKind::Integrity, "empty log for a run of " + std::to_string(config.ticks) + " ticks");
    }
    Metrics m;
    m.survival_ticks = static_cast<std::int64_t>(log.rows.size());
    m.truncated = log.truncated;

    // Bands and levels live in the config, keyed by the log's column layout.
    std::vector<double> bands(log.hvar_cols.size(), 1.0);
    for (std::size_t i = 0; i < log.hvar_cols.size(); ++i) {
        for (const auto& s : config.agent.subsystems) {
            if (s.name != log.hvar_cols[i].sub) continue;
            for (const auto& h : s.hvars) {
                if (h.id == log.hvar_cols[i].id) bands[i] = h.band;
            }
        }
    }
    std::vector<int> levels(log.sub_names.size(), 0);
    for (std::size_t i = 0; i < log.sub_names.size(); ++i) {
        for (const auto& s : config.agent.subsystems) {
            if (s.name == log.sub_names[i]) levels[i] = s.level;
        }
    }

    const double n = static_cast<double>(log.rows.size());
    for (std::size_t i = 0; i < log.hvar_cols.size(); ++i) {
        const std::string key = log.hvar_cols[i].sub + "." + log.hvar_cols[i].id;
        std::int64_t in_band = 0;
        double drive_sum = 0.0;
        for (const auto& row : log.rows) {
            if (std::abs(row.hvar_current[i] - row.hvar_target[i]) <= bands[i]) ++in_band;
            drive_sum += std::abs(row.hvar_drive[i]);
        }
        m.time_in_band[key] = log.rows.empty() ? 0.0 : static_cast<double>(in_band) / n;
        m.mean_abs_drive[key] = log.rows.empty() ? 0.0 : drive_sum / n;
    }

    std::map<int, std::pair<double, std::int64_t>> per_level; // sum, count
    for (const auto& row : log.rows) {
        for (std::size_t i = 0; i < log.sub_names.size(); ++i) {
            auto& acc = per_level[levels[i]];
            acc.first += row.sub_pred_err[i];
            ++acc.second;
        }
    }
    for (const auto& [level, acc] : per_level) {
        m.mean_pred_err["level_" + std::to_string(level)] =
            acc.second ? acc.first / static_cast<double>(acc.second) : 0.0;
    }

    for (const auto& row : log.rows) {
        ++m.actions[row.action];
        for (std::size_t i = 0; i < log.sub_names.size(); ++i) {
            if (row.sub_goal_event[i] == "started") ++m.goals_started;
            if (row.sub_goal_event[i] == "completed") ++m.goals_completed;
        }
    }
    m.goal_completion_rate =
        m.goals_started ? static_cast<double>(m.goals_completed) / static_cast<double>(m.goals_started) : 0.0;
    return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
    nlohmann::json j; // plain json keeps object keys sorted
    j["survival_ticks"] = m.survival_ticks;
    j["truncated"] = m.truncated;
    j["time_in_band"] = m.time_in_band;
    j["mean_abs_drive"] = m.mean_abs_drive;
    j["mean_pred_err"] = m.mean_pred_err;
    j["goals_started"] = m.goals_started;
    j["goals_completed"] = m.goals_completed;
    j["goal_completion_rate"] = m.goal_completion_rate;
    j["actions"] = m.actions;
    return j;
}

} // namespace homeostat
