#include "homeostat/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "homeostat/errors.hpp"

namespace homeostat {

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

std::string fmt(double v) {
    std::string s;
    append_double(s, v);
    return s;
}

double parse_double(const std::string& tok, std::size_t line_no) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        raise(ErrorKind::Integrity, "trace.csv line " + std::to_string(line_no) + ": bad number \"" + tok + "\"");
    }
    return v;
}

std::int64_t parse_i64(const std::string& tok, std::size_t line_no) {
    std::int64_t v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        raise(ErrorKind::Integrity, "trace.csv line " + std::to_string(line_no) + ": bad integer \"" + tok + "\"");
    }
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

constexpr const char* kFixedCols[] = {"tick", "action", "core_temp", "energy", "integrity",
                                      "ambient", "food_here", "looming", "looming_rate", "basal",
                                      "action_cost", "ignore", "intake", "clamp_adjust", "contacts"};
constexpr std::size_t kFixedCount = 15;

} // namespace

std::string render_trace_csv(const RunLog& log) {
    std::string out;
    for (std::size_t i = 0; i < kFixedCount; ++i) {
        if (i) out += ',';
        out += kFixedCols[i];
    }
    for (const auto& s : log.sub_names) {
        out += ",sub." + s + ".mode,sub." + s + ".pred_err,sub." + s + ".aborted,sub." + s +
               ".imprinted,sub." + s + ".goal_event,sub." + s + ".goal_id";
    }
    for (const auto& h : log.hvar_cols) {
        const std::string base = ",hvar." + h.sub + "." + h.id;
        out += base + ".current" + base + ".target" + base + ".drive";
    }
    out += '\n';

    for (const auto& r : log.rows) {
        out += std::to_string(r.tick);
        out += ',';
        out += r.action;
        for (double v : {r.core_temp, r.energy, r.integrity, r.ambient, r.food_here, r.looming,
                         r.looming_rate, r.basal, r.action_cost, r.ignore, r.intake, r.clamp_adjust}) {
            out += ',';
            append_double(out, v);
        }
        out += ',';
        out += std::to_string(r.contacts);
        for (std::size_t i = 0; i < log.sub_names.size(); ++i) {
            out += ',';
            out += r.sub_mode[i];
            out += ',';
            append_double(out, r.sub_pred_err[i]);
            out += ',';
            out += std::to_string(r.sub_aborted[i]);
            out += ',';
            out += std::to_string(r.sub_imprinted[i]);
            out += ',';
            out += r.sub_goal_event[i];
            out += ',';
            out += std::to_string(r.sub_goal_id[i]);
        }
        for (std::size_t i = 0; i < log.hvar_cols.size(); ++i) {
            out += ',';
            append_double(out, r.hvar_current[i]);
            out += ',';
            append_double(out, r.hvar_target[i]);
            out += ',';
            append_double(out, r.hvar_drive[i]);
        }
        out += '\n';
    }
    if (!log.truncated.empty()) out += "# truncated: " + log.truncated + "\n";
    return out;
}

RunLog parse_trace_csv(const std::string& text) {
    std::vector<std::string> lines;
    {
        std::size_t start = 0;
        while (start < text.size()) {
            const std::size_t pos = text.find('\n', start);
            if (pos == std::string::npos) {
                lines.push_back(text.substr(start));
                break;
            }
            lines.push_back(text.substr(start, pos - start));
            start = pos + 1;
        }
    }
    if (lines.empty()) raise(ErrorKind::Integrity, "trace.csv is empty");

    RunLog log;
    const std::vector<std::string> header = split(lines[0], ',');
    if (header.size() < kFixedCount) raise(ErrorKind::Integrity, "trace.csv header is too short");
    for (std::size_t i = 0; i < kFixedCount; ++i) {
        if (header[i] != kFixedCols[i]) {
            raise(ErrorKind::Integrity, "trace.csv header column " + std::to_string(i) + " is \"" +
                                            header[i] + "\", expected \"" + kFixedCols[i] + "\"");
        }
    }
    std::size_t col = kFixedCount;
    while (col < header.size() && header[col].rfind("sub.", 0) == 0) {
        const std::string& name = header[col];
        if (name.size() < 10 || name.substr(name.size() - 5) != ".mode") break;
        const std::string sub = name.substr(4, name.size() - 4 - 5);
        const std::string expect[6] = {".mode", ".pred_err", ".aborted", ".imprinted", ".goal_event", ".goal_id"};
        for (int k = 0; k < 6; ++k) {
            if (col + k >= header.size() || header[col + k] != "sub." + sub + expect[k]) {
                raise(ErrorKind::Integrity, "trace.csv: malformed subsystem column group for " + sub);
            }
        }
        log.sub_names.push_back(sub);
        col += 6;
    }
    while (col < header.size() && header[col].rfind("hvar.", 0) == 0) {
        const std::string& name = header[col];
        const std::string suffix = ".current";
        if (name.size() <= 5 + suffix.size() || name.substr(name.size() - suffix.size()) != suffix) {
            raise(ErrorKind::Integrity, "trace.csv: malformed hvar column " + name);
        }
        const std::string middle = name.substr(5, name.size() - 5 - suffix.size());
        const std::size_t dot = middle.find('.');
        if (dot == std::string::npos) raise(ErrorKind::Integrity, "trace.csv: malformed hvar column " + name);
        HVarCol h{middle.substr(0, dot), middle.substr(dot + 1)};
        const std::string base = "hvar." + h.sub + "." + h.id;
        if (col + 2 >= header.size() || header[col + 1] != base + ".target" || header[col + 2] != base + ".drive") {
            raise(ErrorKind::Integrity, "trace.csv: malformed hvar column group for " + base);
        }
        log.hvar_cols.push_back(std::move(h));
        col += 3;
    }
    if (col != header.size()) {
        raise(ErrorKind::Integrity, "trace.csv: unexpected header column \"" + header[col] + "\"");
    }

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string& line = lines[li];
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# truncated: ";
            if (line.rfind(key, 0) == 0) log.truncated = line.substr(key.size());
            continue;
        }
        const std::vector<std::string> tok = split(line, ',');
        if (tok.size() != header.size()) {
            raise(ErrorKind::Integrity, "trace.csv line " + std::to_string(li + 1) + ": expected " +
                                            std::to_string(header.size()) + " columns, got " +
                                            std::to_string(tok.size()));
        }
        TickRow r;
        r.tick = parse_i64(tok[0], li + 1);
        r.action = tok[1];
        r.core_temp = parse_double(tok[2], li + 1);
        r.energy = parse_double(tok[3], li + 1);
        r.integrity = parse_double(tok[4], li + 1);
        r.ambient = parse_double(tok[5], li + 1);
        r.food_here = parse_double(tok[6], li + 1);
        r.looming = parse_double(tok[7], li + 1);
        r.looming_rate = parse_double(tok[8], li + 1);
        r.basal = parse_double(tok[9], li + 1);
        r.action_cost = parse_double(tok[10], li + 1);
        r.ignore = parse_double(tok[11], li + 1);
        r.intake = parse_double(tok[12], li + 1);
        r.clamp_adjust = parse_double(tok[13], li + 1);
        r.contacts = parse_i64(tok[14], li + 1);
        std::size_t c = kFixedCount;
        for (std::size_t i = 0; i < log.sub_names.size(); ++i) {
            r.sub_mode.push_back(tok[c++]);
            r.sub_pred_err.push_back(parse_double(tok[c++], li + 1));
            r.sub_aborted.push_back(parse_i64(tok[c++], li + 1));
            r.sub_imprinted.push_back(parse_i64(tok[c++], li + 1));
            r.sub_goal_event.push_back(tok[c++]);
            r.sub_goal_id.push_back(parse_i64(tok[c++], li + 1));
        }
        for (std::size_t i = 0; i < log.hvar_cols.size(); ++i) {
            r.hvar_current.push_back(parse_double(tok[c++], li + 1));
            r.hvar_target.push_back(parse_double(tok[c++], li + 1));
            r.hvar_drive.push_back(parse_double(tok[c++], li + 1));
        }
        log.rows.push_back(std::move(r));
    }
    return log;
}

std::string render_metrics_json(const Metrics& m) {
    return metrics_to_json(m).dump(2) + "\n";
}

namespace {

struct Series {
    std::string label;
    std::string color;
    bool dashed = false;
    std::vector<double> values;
};

// Minimal line chart; fixed canvas, data-driven y range.
std::string render_chart(const std::string& title, const std::vector<Series>& series) {
    const double width = 900, height = 280;
    const double x0 = 60, x1 = 880, y0 = 240, y1 = 40;
    double lo = 0.0, hi = 1.0;
    bool any = false;
    for (const auto& s : series) {
        for (double v : s.values) {
            if (!any) {
                lo = hi = v;
                any = true;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    if (!any) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 1.0;
        hi += 1.0;
    } else {
        const double pad = (hi - lo) * 0.05;
        lo -= pad;
        hi += pad;
    }

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
           "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) + "\" fill=\"white\"/>\n";
    svg += "<text x=\"60\" y=\"24\" font-family=\"monospace\" font-size=\"14\">" + title + "</text>\n";
    svg += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x1) + "\" y2=\"" + fmt(y0) +
           "\" stroke=\"#888\"/>\n";
    svg += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(y1) +
           "\" stroke=\"#888\"/>\n";
    svg += "<text x=\"6\" y=\"" + fmt(y0 + 4) + "\" font-family=\"monospace\" font-size=\"11\">" + fmt(lo) +
           "</text>\n";
    svg += "<text x=\"6\" y=\"" + fmt(y1 + 4) + "\" font-family=\"monospace\" font-size=\"11\">" + fmt(hi) +
           "</text>\n";

    double legend_x = 120.0;
    for (const auto& s : series) {
        const std::size_t n = s.values.size();
        if (n > 0) {
            std::string pts;
            for (std::size_t i = 0; i < n; ++i) {
                const double fx = n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
                const double px = x0 + fx * (x1 - x0);
                const double py = y0 - (s.values[i] - lo) / (hi - lo) * (y0 - y1);
                if (i) pts += ' ';
                pts += fmt(px) + "," + fmt(py);
            }
            svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\"" +
                   (s.dashed ? std::string(" stroke-dasharray=\"6,4\"") : std::string()) +
                   " stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        }
        svg += "<text x=\"" + fmt(legend_x + 160.0 * (&s - series.data())) + "\" y=\"" + fmt(height - 8) +
               "\" font-family=\"monospace\" font-size=\"12\" fill=\"" + s.color + "\">" + s.label +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace

std::string render_svg_hvar(const RunLog& log, std::size_t hvar_index) {
    const HVarCol& h = log.hvar_cols.at(hvar_index);
    Series cur{"current", "#1f6fb2", false, {}};
    Series tgt{"target", "#d9822b", true, {}};
    for (const auto& r : log.rows) {
        cur.values.push_back(r.hvar_current[hvar_index]);
        tgt.values.push_back(r.hvar_target[hvar_index]);
    }
    return render_chart(h.sub + "." + h.id, {cur, tgt});
}

std::string render_svg_pred_err(const RunLog& log, const ScenarioConfig& config, int level) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < log.sub_names.size(); ++i) {
        for (const auto& s : config.agent.subsystems) {
            if (s.name == log.sub_names[i] && s.level == level) members.push_back(i);
        }
    }
    Series err{"mean prediction error", "#9040a0", false, {}};
    for (const auto& r : log.rows) {
        double sum = 0.0;
        for (std::size_t i : members) sum += r.sub_pred_err[i];
        err.values.push_back(members.empty() ? 0.0 : sum / static_cast<double>(members.size()));
    }
    return render_chart("prediction error, level " + std::to_string(level), {err});
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) raise(ErrorKind::Io, "write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void emit_artifacts(const RunResult& result, const ScenarioConfig& config, const std::string& out_dir,
                    bool dump_banks) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "plots", ec);
    if (ec) raise(ErrorKind::Io, "cannot create " + out_dir + "/plots: " + ec.message());

    write_text_file((fs::path(out_dir) / "trace.csv").string(), render_trace_csv(result.log));
    const Metrics m = compute_metrics(result.log, config);
    write_text_file((fs::path(out_dir) / "metrics.json").string(), render_metrics_json(m));
    write_text_file((fs::path(out_dir) / "resolved_config.json").string(),
                    scenario_to_json(config).dump(2) + "\n");

    for (std::size_t i = 0; i < result.log.hvar_cols.size(); ++i) {
        const auto& h = result.log.hvar_cols[i];
        const std::string name = "hvar_" + h.sub + "_" + h.id + ".svg";
        write_text_file((fs::path(out_dir) / "plots" / name).string(), render_svg_hvar(result.log, i));
    }
    std::set<int> levels;
    for (const auto& s : config.agent.subsystems) levels.insert(s.level);
    for (int level : levels) {
        const std::string name = "pred_err_level_" + std::to_string(level) + ".svg";
        write_text_file((fs::path(out_dir) / "plots" / name).string(),
                        render_svg_pred_err(result.log, config, level));
    }

    if (dump_banks) {
        fs::create_directories(fs::path(out_dir) / "banks", ec);
        if (ec) raise(ErrorKind::Io, "cannot create " + out_dir + "/banks: " + ec.message());
        for (const auto& [name, dump] : result.bank_dumps) {
            write_text_file((fs::path(out_dir) / "banks" / (name + ".txt")).string(), dump);
        }
    }
}

} // namespace homeostat
