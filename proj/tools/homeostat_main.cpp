#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"

#include "homeostat/artifacts.hpp"
#include "homeostat/errors.hpp"
#include "homeostat/metrics.hpp"
#include "homeostat/runner.hpp"
#include "homeostat/scenario.hpp"

namespace fs = std::filesystem;
using namespace homeostat;

namespace {

int exit_code_for(const Error& e) {
    return e.kind() == ErrorKind::Config ? 2 : 3;
}

// A log argument names either the run directory or its trace.csv; the
// resolved config always sits next to the csv.
struct LogPaths {
    std::string csv;
    std::string config;
    std::string dir;
};

LogPaths resolve_log_arg(const std::string& arg) {
    fs::path p(arg);
    if (fs::is_directory(p)) p /= "trace.csv";
    LogPaths lp;
    lp.csv = p.string();
    lp.config = (p.parent_path() / "resolved_config.json").string();
    lp.dir = p.parent_path().string();
    return lp;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homeostatic agent simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, log_arg, ablate_list;
    std::int64_t seed_override = 0;
    std::int64_t ticks_override = -1;
    bool has_seed = false;
    bool dump_banks = false;

    CLI::App* cmd_run = app.add_subcommand("run", "Run a scenario and emit artifacts");
    cmd_run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    cmd_run->add_option("--seed", seed_override, "Override the scenario seed")
        ->each([&](const std::string&) { has_seed = true; });
    cmd_run->add_option("--out", out_dir, "Output directory (default runs/<name>)");
    cmd_run->add_option("--ticks", ticks_override, "Override the tick count");
    cmd_run->add_option("--ablate", ablate_list,
                        "Comma-separated ablations: no_memory,no_topdown,no_plasticity,no_ignore_cost");
    cmd_run->add_flag("--dump-banks", dump_banks, "Also write banks/<subsystem>.txt");

    CLI::App* cmd_metrics = app.add_subcommand("metrics", "Recompute metrics from a run log");
    cmd_metrics->add_option("log", log_arg, "Run directory or trace.csv path")->required();

    CLI::App* cmd_plot = app.add_subcommand("plot", "Regenerate plots from a run log");
    cmd_plot->add_option("log", log_arg, "Run directory or trace.csv path")->required();

    CLI::App* cmd_validate = app.add_subcommand("validate", "Validate a scenario and print the resolved config");
    cmd_validate->add_option("scenario", scenario_path, "Scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (cmd_run->parsed()) {
            ScenarioConfig config = load_scenario(scenario_path);
            if (has_seed) config.seed = static_cast<std::uint64_t>(seed_override);
            if (ticks_override >= 0) config.ticks = ticks_override;
            if (!ablate_list.empty()) apply_ablation_list(config.ablations, ablate_list);

            std::string out = out_dir.empty() ? std::string("runs/") + config.name : out_dir;
            if (const char* env = std::getenv("HOMEOSTAT_OUT")) {
                if (*env) out = env;
            }

            const RunResult result = run_scenario(config);
            emit_artifacts(result, config, out, dump_banks);
            const Metrics m = compute_metrics(result.log, config);
            std::cout << "wrote " << out << ": " << m.survival_ticks << "/" << config.ticks << " ticks"
                      << (m.truncated.empty() ? "" : " (" + m.truncated + ")") << "\n";
            return 0;
        }
        if (cmd_metrics->parsed()) {
            const LogPaths lp = resolve_log_arg(log_arg);
            const RunLog log = parse_trace_csv(read_text_file(lp.csv));
            const ScenarioConfig config = parse_scenario(read_text_file(lp.config), lp.config);
            std::cout << render_metrics_json(compute_metrics(log, config));
            return 0;
        }
        if (cmd_plot->parsed()) {
            const LogPaths lp = resolve_log_arg(log_arg);
            const RunLog log = parse_trace_csv(read_text_file(lp.csv));
            const ScenarioConfig config = parse_scenario(read_text_file(lp.config), lp.config);
            std::error_code ec;
            fs::create_directories(fs::path(lp.dir) / "plots", ec);
            if (ec) raise(ErrorKind::Io, "cannot create plots dir: " + ec.message());
            for (std::size_t i = 0; i < log.hvar_cols.size(); ++i) {
                const auto& h = log.hvar_cols[i];
                write_text_file((fs::path(lp.dir) / "plots" / ("hvar_" + h.sub + "_" + h.id + ".svg")).string(),
                                render_svg_hvar(log, i));
            }
            std::set<int> levels;
            for (const auto& s : config.agent.subsystems) levels.insert(s.level);
            for (int level : levels) {
                write_text_file(
                    (fs::path(lp.dir) / "plots" / ("pred_err_level_" + std::to_string(level) + ".svg")).string(),
                    render_svg_pred_err(log, config, level));
            }
            std::cout << "wrote " << (fs::path(lp.dir) / "plots").string() << "\n";
            return 0;
        }
        if (cmd_validate->parsed()) {
            const ScenarioConfig config = load_scenario(scenario_path);
            std::cout << scenario_to_json(config).dump(2) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
