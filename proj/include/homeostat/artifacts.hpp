#pragma once

#include <string>

#include "homeostat/metrics.hpp"
#include "homeostat/runner.hpp"

namespace homeostat {

// trace.csv: one header line, one row per tick, LF endings, '.' decimal,
// shortest round-trip float formatting. Fixed column order:
//   tick, action,
//   core_temp, energy, integrity              (world state after the step)
//   ambient, food_here, looming, looming_rate (raw observation)
//   basal, action_cost, ignore, intake, clamp_adjust, contacts
//   per subsystem S:  sub.S.mode, sub.S.pred_err, sub.S.aborted,
//                     sub.S.imprinted, sub.S.goal_event, sub.S.goal_id
//   per hvar H of S:  hvar.S.H.current, hvar.S.H.target, hvar.S.H.drive
std::string render_trace_csv(const RunLog& log);

// Inverse of render_trace_csv; reconstructs the layout from the header.
RunLog parse_trace_csv(const std::string& text);

std::string render_metrics_json(const Metrics& m);

// One SVG per hvar (current vs target) and one per level (prediction error,
// averaged over that level's subsystems each tick).
std::string render_svg_hvar(const RunLog& log, std::size_t hvar_index);
std::string render_svg_pred_err(const RunLog& log, const ScenarioConfig& config, int level);

// Write trace.csv, metrics.json, resolved_config.json, plots/*.svg and
// (optionally) banks/<subsystem>.txt under out_dir. Creates directories.
void emit_artifacts(const RunResult& result, const ScenarioConfig& config, const std::string& out_dir,
                    bool dump_banks);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace homeostat
