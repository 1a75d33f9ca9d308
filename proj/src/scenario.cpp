#include "homeostat/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "homeostat/errors.hpp"

namespace homeostat {

using ojson = nlohmann::ordered_json;

namespace {

void need_object(const ojson& v, const std::string& ctx) {
    if (!v.is_object()) raise(ErrorKind::Config, ctx + " must be an object");
}

void need_array(const ojson& v, const std::string& ctx) {
    if (!v.is_array()) raise(ErrorKind::Config, ctx + " must be an array");
}

void check_keys(const ojson& obj, const std::string& ctx, std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) raise(ErrorKind::Config, "unknown key \"" + ctx + "." + item.key() + "\"");
    }
}

double get_num(const ojson& obj, const std::string& ctx, const char* key, double def) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number()) raise(ErrorKind::Config, ctx + "." + key + " must be a number");
    return v.get<double>();
}

std::int64_t get_int(const ojson& obj, const std::string& ctx, const char* key, std::int64_t def) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        raise(ErrorKind::Config, ctx + "." + key + " must be an integer");
    }
    return v.get<std::int64_t>();
}

bool get_bool(const ojson& obj, const std::string& ctx, const char* key, bool def) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) raise(ErrorKind::Config, ctx + "." + key + " must be a boolean");
    return v.get<bool>();
}

std::string get_str(const ojson& obj, const std::string& ctx, const char* key, const std::string& def) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_string()) raise(ErrorKind::Config, ctx + "." + key + " must be a string");
    return v.get<std::string>();
}

const ojson& require(const ojson& obj, const std::string& ctx, const char* key) {
    if (!obj.contains(key)) raise(ErrorKind::Config, ctx + " is missing required key \"" + std::string(key) + "\"");
    return obj.at(key);
}

// Subsystem and hvar names travel inside CSV column names and bank dump
// paths, so keep them to a safe identifier alphabet.
void check_ident(const std::string& s, const std::string& ctx) {
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) raise(ErrorKind::Config, ctx + " must match [A-Za-z0-9_]+, got \"" + s + "\"");
    }
}

Thresholds parse_thresholds(const ojson& obj, const std::string& ctx) {
    need_object(obj, ctx);
    check_keys(obj, ctx,
               {"theta_win", "theta_act", "theta_goal", "theta_err", "err_ticks", "top_k", "cycle_max",
                "boost_factor", "goal_boost", "boost_max", "ignore_cost_rate", "novelty_floor",
                "motor_threshold"});
    Thresholds t;
    t.theta_win = get_num(obj, ctx, "theta_win", t.theta_win);
    t.theta_act = get_num(obj, ctx, "theta_act", t.theta_act);
    t.theta_goal = get_num(obj, ctx, "theta_goal", t.theta_goal);
    t.theta_err = get_num(obj, ctx, "theta_err", t.theta_err);
    t.err_ticks = static_cast<int>(get_int(obj, ctx, "err_ticks", t.err_ticks));
    t.top_k = static_cast<int>(get_int(obj, ctx, "top_k", t.top_k));
    t.cycle_max = static_cast<int>(get_int(obj, ctx, "cycle_max", t.cycle_max));
    t.boost_factor = get_num(obj, ctx, "boost_factor", t.boost_factor);
    t.goal_boost = get_num(obj, ctx, "goal_boost", t.goal_boost);
    t.boost_max = get_num(obj, ctx, "boost_max", t.boost_max);
    t.ignore_cost_rate = get_num(obj, ctx, "ignore_cost_rate", t.ignore_cost_rate);
    t.novelty_floor = get_num(obj, ctx, "novelty_floor", t.novelty_floor);
    t.motor_threshold = get_num(obj, ctx, "motor_threshold", t.motor_threshold);

    auto positive = [&](double v, const char* key) {
        if (!(v > 0.0)) raise(ErrorKind::Config, ctx + "." + key + " must be > 0");
    };
    positive(t.theta_win, "theta_win");
    positive(t.theta_act, "theta_act");
    positive(t.theta_goal, "theta_goal");
    positive(t.theta_err, "theta_err");
    positive(t.motor_threshold, "motor_threshold");
    if (t.err_ticks < 1) raise(ErrorKind::Config, ctx + ".err_ticks must be >= 1");
    if (t.top_k < 1) raise(ErrorKind::Config, ctx + ".top_k must be >= 1");
    if (t.cycle_max < 1) raise(ErrorKind::Config, ctx + ".cycle_max must be >= 1");
    if (!(t.boost_factor > 1.0)) raise(ErrorKind::Config, ctx + ".boost_factor must be > 1");
    if (!(t.goal_boost > 1.0)) raise(ErrorKind::Config, ctx + ".goal_boost must be > 1");
    if (!(t.boost_max >= 1.0)) raise(ErrorKind::Config, ctx + ".boost_max must be >= 1");
    if (t.ignore_cost_rate < 0.0) raise(ErrorKind::Config, ctx + ".ignore_cost_rate must be >= 0");
    if (t.novelty_floor < 0.0) raise(ErrorKind::Config, ctx + ".novelty_floor must be >= 0");
    return t;
}

WorldParams parse_world_params(const ojson& obj, const std::string& ctx) {
    need_object(obj, ctx);
    check_keys(obj, ctx,
               {"alpha", "basal", "move_cost", "dash_cost", "eat_cost", "eat_gain", "shiver_heat",
                "shiver_below", "contact_damage", "core_min", "core_max", "energy_min", "energy_max",
                "integrity_min", "integrity_max", "ambient_min", "ambient_max"});
    WorldParams p;
    p.alpha = get_num(obj, ctx, "alpha", p.alpha);
    p.basal = get_num(obj, ctx, "basal", p.basal);
    p.move_cost = get_num(obj, ctx, "move_cost", p.move_cost);
    p.dash_cost = get_num(obj, ctx, "dash_cost", p.dash_cost);
    p.eat_cost = get_num(obj, ctx, "eat_cost", p.eat_cost);
    p.eat_gain = get_num(obj, ctx, "eat_gain", p.eat_gain);
    p.shiver_heat = get_num(obj, ctx, "shiver_heat", p.shiver_heat);
    p.shiver_below = get_num(obj, ctx, "shiver_below", p.shiver_below);
    p.contact_damage = get_num(obj, ctx, "contact_damage", p.contact_damage);
    p.core_min = get_num(obj, ctx, "core_min", p.core_min);
    p.core_max = get_num(obj, ctx, "core_max", p.core_max);
    p.energy_min = get_num(obj, ctx, "energy_min", p.energy_min);
    p.energy_max = get_num(obj, ctx, "energy_max", p.energy_max);
    p.integrity_min = get_num(obj, ctx, "integrity_min", p.integrity_min);
    p.integrity_max = get_num(obj, ctx, "integrity_max", p.integrity_max);
    p.ambient_min = get_num(obj, ctx, "ambient_min", p.ambient_min);
    p.ambient_max = get_num(obj, ctx, "ambient_max", p.ambient_max);
    if (!(p.alpha > 0.0) || p.alpha > 1.0) raise(ErrorKind::Config, ctx + ".alpha must be in (0, 1]");
    if (p.core_min >= p.core_max) raise(ErrorKind::Config, ctx + ".core_min must be < core_max");
    if (p.energy_min >= p.energy_max) raise(ErrorKind::Config, ctx + ".energy_min must be < energy_max");
    if (p.ambient_min >= p.ambient_max) raise(ErrorKind::Config, ctx + ".ambient_min must be < ambient_max");
    return p;
}

WorldConfig parse_world(const ojson& obj, const std::string& ctx) {
    need_object(obj, ctx);
    check_keys(obj, ctx,
               {"width", "height", "ambient_base", "warm_rects", "food", "agent_start", "start_jitter",
                "core0", "energy0", "integrity0", "params"});
    WorldConfig w;
    w.width = static_cast<int>(get_int(obj, ctx, "width", w.width));
    w.height = static_cast<int>(get_int(obj, ctx, "height", w.height));
    if (w.width < 1 || w.height < 1) raise(ErrorKind::Config, ctx + ".width/height must be >= 1");
    if (w.width > 512 || w.height > 512) raise(ErrorKind::Config, ctx + ".width/height must be <= 512");
    w.ambient_base = get_num(obj, ctx, "ambient_base", w.ambient_base);
    if (obj.contains("warm_rects")) {
        const auto& arr = obj.at("warm_rects");
        need_array(arr, ctx + ".warm_rects");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string rctx = ctx + ".warm_rects[" + std::to_string(i) + "]";
            need_object(arr[i], rctx);
            check_keys(arr[i], rctx, {"x", "y", "w", "h", "temp", "falloff"});
            WarmRect r;
            r.x = static_cast<int>(get_int(arr[i], rctx, "x", 0));
            r.y = static_cast<int>(get_int(arr[i], rctx, "y", 0));
            r.w = static_cast<int>(get_int(arr[i], rctx, "w", 1));
            r.h = static_cast<int>(get_int(arr[i], rctx, "h", 1));
            r.temp = get_num(arr[i], rctx, "temp", 30.0);
            r.falloff = static_cast<int>(get_int(arr[i], rctx, "falloff", 0));
            if (r.w < 1 || r.h < 1) raise(ErrorKind::Config, rctx + ".w/h must be >= 1");
            if (r.x < 0 || r.y < 0 || r.x + r.w > w.width || r.y + r.h > w.height) {
                raise(ErrorKind::Config, rctx + " lies outside the grid");
            }
            if (r.falloff < 0) raise(ErrorKind::Config, rctx + ".falloff must be >= 0");
            w.warm_rects.push_back(r);
        }
    }
    if (obj.contains("food")) {
        const auto& arr = obj.at("food");
        need_array(arr, ctx + ".food");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string fctx = ctx + ".food[" + std::to_string(i) + "]";
            need_object(arr[i], fctx);
            check_keys(arr[i], fctx, {"x", "y"});
            FoodCell f;
            f.x = static_cast<int>(get_int(arr[i], fctx, "x", 0));
            f.y = static_cast<int>(get_int(arr[i], fctx, "y", 0));
            if (f.x < 0 || f.y < 0 || f.x >= w.width || f.y >= w.height) {
                raise(ErrorKind::Config, fctx + " lies outside the grid");
            }
            w.food.push_back(f);
        }
    }
    if (obj.contains("agent_start")) {
        const auto& st = obj.at("agent_start");
        const std::string sctx = ctx + ".agent_start";
        need_object(st, sctx);
        check_keys(st, sctx, {"x", "y"});
        w.agent_x = static_cast<int>(get_int(st, sctx, "x", w.agent_x));
        w.agent_y = static_cast<int>(get_int(st, sctx, "y", w.agent_y));
    }
    if (w.agent_x < 0 || w.agent_y < 0 || w.agent_x >= w.width || w.agent_y >= w.height) {
        raise(ErrorKind::Config, ctx + ".agent_start lies outside the grid");
    }
    w.start_jitter = static_cast<int>(get_int(obj, ctx, "start_jitter", 0));
    if (w.start_jitter < 0) raise(ErrorKind::Config, ctx + ".start_jitter must be >= 0");
    w.core0 = get_num(obj, ctx, "core0", w.core0);
    w.energy0 = get_num(obj, ctx, "energy0", w.energy0);
    w.integrity0 = get_num(obj, ctx, "integrity0", w.integrity0);
    if (obj.contains("params")) w.params = parse_world_params(obj.at("params"), ctx + ".params");
    return w;
}

AgentConfig parse_agent(const ojson& obj, const std::string& ctx) {
    need_object(obj, ctx);
    check_keys(obj, ctx, {"motor", "extero_norm", "subsystems", "bootstrap"});
    AgentConfig a;
    a.motor = get_str(obj, ctx, "motor", "");
    if (a.motor.empty()) raise(ErrorKind::Config, ctx + ".motor is required");
    if (obj.contains("extero_norm")) {
        const auto& en = obj.at("extero_norm");
        const std::string ectx = ctx + ".extero_norm";
        need_object(en, ectx);
        check_keys(en, ectx, {"ambient_lo", "ambient_hi", "looming_scale", "looming_rate_scale"});
        a.extero_norm.ambient_lo = get_num(en, ectx, "ambient_lo", a.extero_norm.ambient_lo);
        a.extero_norm.ambient_hi = get_num(en, ectx, "ambient_hi", a.extero_norm.ambient_hi);
        a.extero_norm.looming_scale = get_num(en, ectx, "looming_scale", a.extero_norm.looming_scale);
        a.extero_norm.looming_rate_scale =
            get_num(en, ectx, "looming_rate_scale", a.extero_norm.looming_rate_scale);
        if (!(a.extero_norm.ambient_hi > a.extero_norm.ambient_lo)) {
            raise(ErrorKind::Config, ectx + ".ambient_hi must be > ambient_lo");
        }
        if (!(a.extero_norm.looming_scale > 0.0) || !(a.extero_norm.looming_rate_scale > 0.0)) {
            raise(ErrorKind::Config, ectx + " scales must be > 0");
        }
    }
    const auto& subs = require(obj, ctx, "subsystems");
    need_array(subs, ctx + ".subsystems");
    if (subs.empty()) raise(ErrorKind::Config, ctx + ".subsystems must not be empty");
    for (std::size_t i = 0; i < subs.size(); ++i) {
        const std::string sctx = ctx + ".subsystems[" + std::to_string(i) + "]";
        need_object(subs[i], sctx);
        check_keys(subs[i], sctx, {"name", "level", "capacity", "hvars", "children", "extero"});
        SubsystemSpec s;
        s.name = get_str(subs[i], sctx, "name", "");
        if (s.name.empty()) raise(ErrorKind::Config, sctx + ".name is required");
        check_ident(s.name, sctx + ".name");
        s.level = static_cast<int>(get_int(subs[i], sctx, "level", 0));
        if (s.level < 0) raise(ErrorKind::Config, sctx + ".level must be >= 0");
        const std::int64_t cap = get_int(subs[i], sctx, "capacity", 64);
        if (cap < 1) raise(ErrorKind::Config, sctx + ".capacity must be >= 1");
        s.capacity = static_cast<std::size_t>(cap);
        if (subs[i].contains("hvars")) {
            const auto& hv = subs[i].at("hvars");
            need_array(hv, sctx + ".hvars");
            for (std::size_t h = 0; h < hv.size(); ++h) {
                const std::string hctx = sctx + ".hvars[" + std::to_string(h) + "]";
                need_object(hv[h], hctx);
                check_keys(hv[h], hctx, {"id", "target", "band", "priority", "privileged", "current0"});
                HVarSpec v;
                v.id = get_str(hv[h], hctx, "id", "");
                if (v.id.empty()) raise(ErrorKind::Config, hctx + ".id is required");
                check_ident(v.id, hctx + ".id");
                v.target = get_num(hv[h], hctx, "target", 0.0);
                v.band = get_num(hv[h], hctx, "band", 1.0);
                v.priority = get_num(hv[h], hctx, "priority", 1.0);
                v.privileged = get_bool(hv[h], hctx, "privileged", false);
                v.current0 = get_num(hv[h], hctx, "current0", v.target);
                s.hvars.push_back(std::move(v));
            }
        }
        if (subs[i].contains("children")) {
            const auto& ch = subs[i].at("children");
            need_array(ch, sctx + ".children");
            for (const auto& c : ch) {
                if (!c.is_string()) raise(ErrorKind::Config, sctx + ".children entries must be strings");
                s.children.push_back(c.get<std::string>());
            }
        }
        if (subs[i].contains("extero")) {
            const auto& ex = subs[i].at("extero");
            need_array(ex, sctx + ".extero");
            for (const auto& e : ex) {
                if (!e.is_string()) raise(ErrorKind::Config, sctx + ".extero entries must be strings");
                s.extero.push_back(e.get<std::string>());
            }
        }
        a.subsystems.push_back(std::move(s));
    }
    if (obj.contains("bootstrap")) {
        const auto& bs = obj.at("bootstrap");
        need_array(bs, ctx + ".bootstrap");
        for (std::size_t i = 0; i < bs.size(); ++i) {
            const std::string bctx = ctx + ".bootstrap[" + std::to_string(i) + "]";
            need_object(bs[i], bctx);
            check_keys(bs[i], bctx, {"subsystem", "label", "utility", "mask", "profile", "profile_as_signal"});
            BootstrapRecordSpec r;
            r.subsystem = get_str(bs[i], bctx, "subsystem", "");
            if (r.subsystem.empty()) raise(ErrorKind::Config, bctx + ".subsystem is required");
            r.label = get_str(bs[i], bctx, "label", "");
            r.utility = get_num(bs[i], bctx, "utility", 1.0);
            const auto& mask = require(bs[i], bctx, "mask");
            need_object(mask, bctx + ".mask");
            for (const auto& item : mask.items()) {
                if (!item.value().is_number()) {
                    raise(ErrorKind::Config, bctx + ".mask." + item.key() + " must be a number");
                }
                r.mask[item.key()] = item.value().get<double>();
            }
            const auto& prof = require(bs[i], bctx, "profile");
            need_object(prof, bctx + ".profile");
            for (const auto& item : prof.items()) {
                need_array(item.value(), bctx + ".profile." + item.key());
                std::vector<double> series;
                for (const auto& v : item.value()) {
                    if (!v.is_number()) {
                        raise(ErrorKind::Config, bctx + ".profile." + item.key() + " entries must be numbers");
                    }
                    series.push_back(v.get<double>());
                }
                r.profile[item.key()] = std::move(series);
            }
            r.profile_as_signal = get_bool(bs[i], bctx, "profile_as_signal", false);
            a.bootstrap.push_back(std::move(r));
        }
    }
    return a;
}

EventSchedule parse_events(const ojson& arr, const std::string& ctx) {
    need_array(arr, ctx);
    EventSchedule ev;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string ectx = ctx + "[" + std::to_string(i) + "]";
        need_object(arr[i], ectx);
        const std::string type = get_str(arr[i], ectx, "type", "");
        const std::int64_t tick = get_int(arr[i], ectx, "tick", -1);
        if (tick < 0) raise(ErrorKind::Config, ectx + ".tick must be >= 0");
        if (type == "pyrogen_on") {
            check_keys(arr[i], ectx, {"type", "tick", "subsystem", "hvar", "delta", "duration"});
            PyrogenEvent e;
            e.tick = tick;
            e.subsystem = get_str(arr[i], ectx, "subsystem", "");
            e.hvar_id = get_str(arr[i], ectx, "hvar", "");
            if (e.subsystem.empty() || e.hvar_id.empty()) {
                raise(ErrorKind::Config, ectx + " needs subsystem and hvar");
            }
            e.delta = get_num(arr[i], ectx, "delta", 0.0);
            e.duration = static_cast<int>(get_int(arr[i], ectx, "duration", 1));
            if (e.duration < 1) raise(ErrorKind::Config, ectx + ".duration must be >= 1");
            ev.pyrogens.push_back(std::move(e));
        } else if (type == "cold_snap") {
            check_keys(arr[i], ectx, {"type", "tick", "drop", "rect"});
            ColdSnapEvent e;
            e.tick = tick;
            e.temp_drop = get_num(arr[i], ectx, "drop", 0.0);
            if (arr[i].contains("rect")) {
                const auto& r = arr[i].at("rect");
                const std::string rctx = ectx + ".rect";
                need_object(r, rctx);
                check_keys(r, rctx, {"x0", "y0", "x1", "y1"});
                e.whole_grid = false;
                e.x0 = static_cast<int>(get_int(r, rctx, "x0", 0));
                e.y0 = static_cast<int>(get_int(r, rctx, "y0", 0));
                e.x1 = static_cast<int>(get_int(r, rctx, "x1", 0));
                e.y1 = static_cast<int>(get_int(r, rctx, "y1", 0));
                if (e.x1 < e.x0 || e.y1 < e.y0) raise(ErrorKind::Config, rctx + " must have x0<=x1, y0<=y1");
            }
            ev.cold_snaps.push_back(std::move(e));
        } else if (type == "spawn_threat") {
            check_keys(arr[i], ectx, {"type", "tick", "x", "y", "size", "jitter"});
            SpawnThreatEvent e;
            e.tick = tick;
            e.x = static_cast<int>(get_int(arr[i], ectx, "x", 0));
            e.y = static_cast<int>(get_int(arr[i], ectx, "y", 0));
            e.size = get_num(arr[i], ectx, "size", 1.0);
            e.jitter = static_cast<int>(get_int(arr[i], ectx, "jitter", 0));
            if (!(e.size > 0.0)) raise(ErrorKind::Config, ectx + ".size must be > 0");
            if (e.jitter < 0) raise(ErrorKind::Config, ectx + ".jitter must be >= 0");
            ev.threats.push_back(std::move(e));
        } else if (type == "place_food") {
            check_keys(arr[i], ectx, {"type", "tick", "x", "y"});
            PlaceFoodEvent e;
            e.tick = tick;
            e.x = static_cast<int>(get_int(arr[i], ectx, "x", 0));
            e.y = static_cast<int>(get_int(arr[i], ectx, "y", 0));
            ev.food.push_back(std::move(e));
        } else {
            raise(ErrorKind::Config, ectx + ".type must be one of pyrogen_on, cold_snap, spawn_threat, place_food");
        }
    }
    return ev;
}

Ablations parse_ablations(const ojson& arr, const std::string& ctx) {
    need_array(arr, ctx);
    Ablations ab;
    for (const auto& v : arr) {
        if (!v.is_string()) raise(ErrorKind::Config, ctx + " entries must be strings");
        const std::string s = v.get<std::string>();
        if (s == "no_memory") ab.no_memory = true;
        else if (s == "no_topdown") ab.no_topdown = true;
        else if (s == "no_plasticity") ab.no_plasticity = true;
        else if (s == "no_ignore_cost") ab.no_ignore_cost = true;
        else raise(ErrorKind::Config, ctx + ": unknown ablation \"" + s + "\"");
    }
    return ab;
}

} // namespace

void apply_ablation_list(Ablations& ab, const std::string& list) {
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item == "no_memory") ab.no_memory = true;
        else if (item == "no_topdown") ab.no_topdown = true;
        else if (item == "no_plasticity") ab.no_plasticity = true;
        else if (item == "no_ignore_cost") ab.no_ignore_cost = true;
        else raise(ErrorKind::Config, "unknown ablation \"" + item + "\"");
    }
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin) {
    ojson root;
    try {
        root = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') ++line;
        }
        raise(ErrorKind::Config, origin + ":" + std::to_string(line) + ": " + e.what());
    }
    need_object(root, origin);
    check_keys(root, "scenario",
               {"name", "seed", "ticks", "world", "agent", "thresholds", "events", "ablations"});

    ScenarioConfig c;
    c.name = get_str(root, "scenario", "name", "");
    if (c.name.empty()) raise(ErrorKind::Config, "scenario.name is required");
    if (!root.contains("seed")) raise(ErrorKind::Config, "scenario is missing required key \"seed\"");
    {
        const auto& s = root.at("seed");
        if (s.is_number_unsigned()) c.seed = s.get<std::uint64_t>();
        else if (s.is_number_integer()) c.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
        else raise(ErrorKind::Config, "scenario.seed must be an integer");
    }
    c.ticks = get_int(root, "scenario", "ticks", c.ticks);
    if (c.ticks < 0) raise(ErrorKind::Config, "scenario.ticks must be >= 0");

    if (root.contains("world")) c.world = parse_world(root.at("world"), "world");
    c.agent = root.contains("agent") ? parse_agent(root.at("agent"), "agent") : default_agent_config();
    if (root.contains("thresholds")) c.agent.thresholds = parse_thresholds(root.at("thresholds"), "thresholds");
    if (root.contains("events")) c.events = parse_events(root.at("events"), "events");
    if (root.contains("ablations")) c.ablations = parse_ablations(root.at("ablations"), "ablations");

    // Structural validation happens in AgentGraph::build; run it here so a
    // bad file fails at load time, before any artifact is written.
    (void)AgentGraph::build(c.agent, c.ablations);
    for (const auto& p : c.events.pyrogens) {
        bool found = false;
        for (const auto& s : c.agent.subsystems) {
            if (s.name != p.subsystem) continue;
            for (const auto& h : s.hvars) found = found || h.id == p.hvar_id;
        }
        if (!found) {
            raise(ErrorKind::Config, "events: pyrogen_on addresses unknown hvar " + p.subsystem + ":" + p.hvar_id);
        }
    }
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open scenario file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& c) {
    ojson root;
    root["name"] = c.name;
    root["seed"] = c.seed;
    root["ticks"] = c.ticks;

    ojson world;
    world["width"] = c.world.width;
    world["height"] = c.world.height;
    world["ambient_base"] = c.world.ambient_base;
    world["warm_rects"] = ojson::array();
    for (const auto& r : c.world.warm_rects) {
        ojson jr;
        jr["x"] = r.x;
        jr["y"] = r.y;
        jr["w"] = r.w;
        jr["h"] = r.h;
        jr["temp"] = r.temp;
        jr["falloff"] = r.falloff;
        world["warm_rects"].push_back(jr);
    }
    world["food"] = ojson::array();
    for (const auto& f : c.world.food) {
        ojson jf;
        jf["x"] = f.x;
        jf["y"] = f.y;
        world["food"].push_back(jf);
    }
    world["agent_start"] = ojson{{"x", c.world.agent_x}, {"y", c.world.agent_y}};
    world["start_jitter"] = c.world.start_jitter;
    world["core0"] = c.world.core0;
    world["energy0"] = c.world.energy0;
    world["integrity0"] = c.world.integrity0;
    ojson params;
    const WorldParams& p = c.world.params;
    params["alpha"] = p.alpha;
    params["basal"] = p.basal;
    params["move_cost"] = p.move_cost;
    params["dash_cost"] = p.dash_cost;
    params["eat_cost"] = p.eat_cost;
    params["eat_gain"] = p.eat_gain;
    params["shiver_heat"] = p.shiver_heat;
    params["shiver_below"] = p.shiver_below;
    params["contact_damage"] = p.contact_damage;
    params["core_min"] = p.core_min;
    params["core_max"] = p.core_max;
    params["energy_min"] = p.energy_min;
    params["energy_max"] = p.energy_max;
    params["integrity_min"] = p.integrity_min;
    params["integrity_max"] = p.integrity_max;
    params["ambient_min"] = p.ambient_min;
    params["ambient_max"] = p.ambient_max;
    world["params"] = params;
    root["world"] = world;

    ojson agent;
    agent["motor"] = c.agent.motor;
    agent["extero_norm"] = ojson{{"ambient_lo", c.agent.extero_norm.ambient_lo},
                                 {"ambient_hi", c.agent.extero_norm.ambient_hi},
                                 {"looming_scale", c.agent.extero_norm.looming_scale},
                                 {"looming_rate_scale", c.agent.extero_norm.looming_rate_scale}};
    agent["subsystems"] = ojson::array();
    for (const auto& s : c.agent.subsystems) {
        ojson js;
        js["name"] = s.name;
        js["level"] = s.level;
        js["capacity"] = s.capacity;
        js["hvars"] = ojson::array();
        for (const auto& h : s.hvars) {
            ojson jh;
            jh["id"] = h.id;
            jh["target"] = h.target;
            jh["band"] = h.band;
            jh["priority"] = h.priority;
            jh["privileged"] = h.privileged;
            jh["current0"] = h.current0;
            js["hvars"].push_back(jh);
        }
        js["children"] = s.children;
        js["extero"] = s.extero;
        agent["subsystems"].push_back(js);
    }
    agent["bootstrap"] = ojson::array();
    for (const auto& b : c.agent.bootstrap) {
        ojson jb;
        jb["subsystem"] = b.subsystem;
        jb["label"] = b.label;
        jb["utility"] = b.utility;
        jb["mask"] = ojson::object();
        for (const auto& [k, v] : b.mask) jb["mask"][k] = v;
        jb["profile"] = ojson::object();
        for (const auto& [k, v] : b.profile) jb["profile"][k] = v;
        jb["profile_as_signal"] = b.profile_as_signal;
        agent["bootstrap"].push_back(jb);
    }
    root["agent"] = agent;

    const Thresholds& t = c.agent.thresholds;
    root["thresholds"] = ojson{{"theta_win", t.theta_win},
                               {"theta_act", t.theta_act},
                               {"theta_goal", t.theta_goal},
                               {"theta_err", t.theta_err},
                               {"err_ticks", t.err_ticks},
                               {"top_k", t.top_k},
                               {"cycle_max", t.cycle_max},
                               {"boost_factor", t.boost_factor},
                               {"goal_boost", t.goal_boost},
                               {"boost_max", t.boost_max},
                               {"ignore_cost_rate", t.ignore_cost_rate},
                               {"novelty_floor", t.novelty_floor},
                               {"motor_threshold", t.motor_threshold}};

    root["events"] = ojson::array();
    for (const auto& e : c.events.pyrogens) {
        root["events"].push_back(ojson{{"type", "pyrogen_on"},
                                       {"tick", e.tick},
                                       {"subsystem", e.subsystem},
                                       {"hvar", e.hvar_id},
                                       {"delta", e.delta},
                                       {"duration", e.duration}});
    }
    for (const auto& e : c.events.cold_snaps) {
        ojson je{{"type", "cold_snap"}, {"tick", e.tick}, {"drop", e.temp_drop}};
        if (!e.whole_grid) je["rect"] = ojson{{"x0", e.x0}, {"y0", e.y0}, {"x1", e.x1}, {"y1", e.y1}};
        root["events"].push_back(je);
    }
    for (const auto& e : c.events.threats) {
        root["events"].push_back(ojson{{"type", "spawn_threat"},
                                       {"tick", e.tick},
                                       {"x", e.x},
                                       {"y", e.y},
                                       {"size", e.size},
                                       {"jitter", e.jitter}});
    }
    for (const auto& e : c.events.food) {
        root["events"].push_back(ojson{{"type", "place_food"}, {"tick", e.tick}, {"x", e.x}, {"y", e.y}});
    }

    root["ablations"] = ojson::array();
    if (c.ablations.no_memory) root["ablations"].push_back("no_memory");
    if (c.ablations.no_topdown) root["ablations"].push_back("no_topdown");
    if (c.ablations.no_plasticity) root["ablations"].push_back("no_plasticity");
    if (c.ablations.no_ignore_cost) root["ablations"].push_back("no_ignore_cost");
    return root;
}

WorldState build_world(const WorldConfig& config, SplitMix64& world_rng) {
    WorldState s;
    s.width = config.width;
    s.height = config.height;
    s.params = config.params;
    s.ambient.assign(static_cast<std::size_t>(config.width) * config.height, config.ambient_base);
    s.food.assign(s.ambient.size(), 0);
    for (int y = 0; y < config.height; ++y) {
        for (int x = 0; x < config.width; ++x) {
            double best = config.ambient_base;
            for (const auto& r : config.warm_rects) {
                const int dx = std::max({r.x - x, 0, x - (r.x + r.w - 1)});
                const int dy = std::max({r.y - y, 0, y - (r.y + r.h - 1)});
                // Manhattan falloff: any single step toward the rect strictly
                // warms the cell, so a 4-neighbor climber never stalls on a
                // diagonal ridge the way it would on a Chebyshev field.
                const int d = dx + dy;
                double contrib;
                if (d == 0) {
                    contrib = r.temp - config.ambient_base;
                } else if (d < r.falloff) {
                    contrib = (r.temp - config.ambient_base) *
                              (static_cast<double>(r.falloff - d) / r.falloff);
                } else {
                    contrib = 0.0;
                }
                best = std::max(best, config.ambient_base + contrib);
            }
            s.ambient_at(x, y) = std::clamp(best, config.params.ambient_min, config.params.ambient_max);
        }
    }
    for (const auto& f : config.food) s.food[static_cast<std::size_t>(f.y) * config.width + f.x] = 1;
    s.agent_x = config.agent_x;
    s.agent_y = config.agent_y;
    if (config.start_jitter > 0) {
        const int j = config.start_jitter;
        const int dx = static_cast<int>(world_rng.next_below(static_cast<std::uint64_t>(2 * j + 1))) - j;
        const int dy = static_cast<int>(world_rng.next_below(static_cast<std::uint64_t>(2 * j + 1))) - j;
        s.agent_x = std::clamp(config.agent_x + dx, 0, config.width - 1);
        s.agent_y = std::clamp(config.agent_y + dy, 0, config.height - 1);
    }
    s.core_temp = config.core0;
    s.energy = config.energy0;
    s.integrity = config.integrity0;
    return s;
}

AgentConfig default_agent_config() {
    AgentConfig c;
    c.motor = "motor";

    SubsystemSpec motor;
    motor.name = "motor";
    motor.level = 0;
    motor.capacity = 8;
    motor.hvars = {HVarSpec{"escape_urge", 0.0, 1.0, 1.0, false, 0.0},
                   HVarSpec{"eat_urge", 0.0, 1.0, 1.0, false, 0.0},
                   HVarSpec{"warm_urge", 0.0, 1.0, 1.0, false, 0.0},
                   HVarSpec{"cool_urge", 0.0, 1.0, 1.0, false, 0.0}};

    SubsystemSpec body;
    body.name = "body";
    body.level = 1;
    body.capacity = 64;
    body.hvars = {HVarSpec{"core_temp", 37.0, 1.0, 1.0, true, 37.0},
                  HVarSpec{"energy", 70.0, 15.0, 1.0, true, 70.0},
                  HVarSpec{"integrity", 100.0, 5.0, 1.0, true, 100.0},
                  HVarSpec{"restraint", 0.0, 1.0, 2.5, false, 0.0}};
    body.children = {"motor"};
    body.extero = {"ambient", "food_here", "looming", "looming_rate"};

    c.subsystems = {motor, body};

    // Stock episode pack. Profiles are authored in trace space (already
    // blurred) and follow the paths the registry actually produces: the
    // level-1 trace is a 0.45-weight blur of capped drives, the world
    // relaxes core toward ambient at rate 0.1 (so an on-heat recovery gap
    // shrinks by 0.9 per tick), and a parked agent idles near drive 0.2.
    // Matching sees only the first four traces, so a prefix must depict the
    // pre-match world: urges still at zero, drives mid blur-walk. Each
    // regulated quantity gets an onset record (prefix = the walk out of
    // quiet) and a deep record (prefix = the capped plateau seen when
    // matching re-enters mid-episode); one prefix cannot cover both shapes.
    // Tails are replay script: urge pushes ramp no faster than the blur can
    // follow, and declines run at the true relaxation rate so replays of a
    // consummated episode complete instead of aborting. Completion is what
    // discards a standing goal, so tails that track reality are also what
    // keeps goal boosts from entrenching one need. Drives are unsigned, so
    // the ambient dim separates a too-cold episode from a too-hot one, and
    // the core anchor in the hunger masks keeps a saturated freeze from
    // reading as appetite.
    BootstrapRecordSpec rest;
    rest.subsystem = "body";
    rest.label = "body_rest";
    rest.utility = 3.0;
    rest.mask = {{"own:core_temp:drive", 1.0}, {"own:energy:drive", 1.0}, {"ext:looming", 0.5}};
    rest.profile = {{"own:core_temp:drive", std::vector<double>(12, 0.18)},
                    {"own:energy:drive", std::vector<double>(12, 0.25)},
                    {"ext:looming", std::vector<double>(12, 0.01)}};

    BootstrapRecordSpec cold_onset;
    cold_onset.subsystem = "body";
    cold_onset.label = "cold_onset";
    cold_onset.utility = 3.0;
    cold_onset.mask = {{"own:core_temp:drive", 1.0}, {"child:motor:warm_urge:drive", 0.8}, {"ext:ambient", 0.8}};
    cold_onset.profile = {
        {"own:core_temp:drive", {0.85, 1.35, 1.65, 1.80, 1.90, 1.96, 2.00, 2.00, 2.00, 2.00, 1.89, 1.75,
                                 1.59, 1.43, 1.28, 1.14, 1.01, 0.89, 0.78, 0.69, 0.60, 0.52, 0.45, 0.38}},
        {"child:motor:warm_urge:drive", {0.00, 0.00, 0.00, 0.00, 0.40, 0.70, 0.95, 1.10, 1.10, 1.10, 1.10, 1.10,
                                         1.05, 1.00, 0.90, 0.80, 0.70, 0.60, 0.50, 0.40, 0.30, 0.20, 0.10, 0.05}},
        {"ext:ambient", {0.20, 0.15, 0.11, 0.09, 0.12, 0.20, 0.30, 0.42, 0.55, 0.67, 0.76, 0.81,
                         0.84, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85}}};

    BootstrapRecordSpec cold_deep;
    cold_deep.subsystem = "body";
    cold_deep.label = "cold_deep";
    cold_deep.utility = 3.0;
    // Urge weight is tiny: it must be in the mask for the tail to emit at
    // all, but re-entry urge state is arbitrary, so it must not count
    // against the match.
    cold_deep.mask = {{"own:core_temp:drive", 1.0}, {"child:motor:warm_urge:drive", 0.05}, {"ext:ambient", 0.5}};
    cold_deep.profile = {
        {"own:core_temp:drive", {2.00, 2.00, 2.00, 2.00, 2.00, 2.00, 2.00, 2.00, 1.89, 1.75, 1.59, 1.43,
                                 1.28, 1.14, 1.01, 0.89, 0.78, 0.69, 0.60, 0.52, 0.45, 0.38, 0.32, 0.27}},
        {"child:motor:warm_urge:drive", {0.30, 0.30, 0.30, 0.30, 0.80, 1.05, 1.10, 1.10, 1.10, 1.05, 1.00, 0.90,
                                         0.80, 0.70, 0.60, 0.50, 0.40, 0.30, 0.20, 0.12, 0.06, 0.03, 0.01, 0.00}},
        {"ext:ambient", {0.09, 0.09, 0.09, 0.09, 0.15, 0.25, 0.38, 0.52, 0.65, 0.75, 0.81, 0.84,
                         0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85, 0.85}}};

    BootstrapRecordSpec hungry_onset;
    hungry_onset.subsystem = "body";
    hungry_onset.label = "hungry_onset";
    hungry_onset.utility = 3.0;
    // The energy prefix is nearly flat: a basal drain moves the drive trace
    // by well under 0.01 per tick, so by the time hunger is worth acting on
    // the window is a plateau at the firing level, not a ramp.
    hungry_onset.mask = {{"own:energy:drive", 1.0},
                         {"child:motor:eat_urge:drive", 0.8},
                         {"ext:food_here", 0.3},
                         {"own:core_temp:drive", 0.4}};
    hungry_onset.profile = {
        {"own:energy:drive", {0.50, 0.53, 0.56, 0.59, 0.62, 0.64, 0.66, 0.67, 0.68, 0.40, 0.24, 0.15,
                              0.10, 0.07, 0.05, 0.04, 0.04, 0.03, 0.03, 0.03, 0.03, 0.02, 0.02, 0.02}},
        {"child:motor:eat_urge:drive", {0.00, 0.00, 0.00, 0.00, 0.35, 0.65, 0.90, 1.05, 1.10, 0.90, 0.50, 0.25,
                                        0.12, 0.06, 0.03, 0.01, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00}},
        {"ext:food_here", {0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.08, 0.25, 0.50, 0.33, 0.20, 0.12,
                           0.07, 0.04, 0.02, 0.01, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00}},
        {"own:core_temp:drive", std::vector<double>(24, 0.20)}};

    BootstrapRecordSpec hungry_deep;
    hungry_deep.subsystem = "body";
    hungry_deep.label = "hungry_deep";
    hungry_deep.utility = 3.0;
    hungry_deep.mask = {{"own:energy:drive", 1.0},
                        {"child:motor:eat_urge:drive", 0.05},
                        {"ext:food_here", 0.3},
                        {"own:core_temp:drive", 0.4}};
    hungry_deep.profile = {
        {"own:energy:drive", {2.00, 2.00, 2.00, 2.00, 2.00, 2.00, 2.00, 1.46, 1.06, 0.77, 0.56, 0.41,
                              0.30, 0.22, 0.16, 0.12, 0.09, 0.07, 0.05, 0.04, 0.03, 0.03, 0.02, 0.02}},
        {"child:motor:eat_urge:drive", {0.30, 0.30, 0.30, 0.30, 0.85, 1.05, 1.10, 1.10, 0.80, 0.50, 0.30, 0.18,
                                        0.10, 0.05, 0.02, 0.01, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00}},
        {"ext:food_here", {0.00, 0.00, 0.00, 0.00, 0.00, 0.10, 0.45, 0.30, 0.18, 0.10, 0.06, 0.03,
                           0.02, 0.01, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00}},
        {"own:core_temp:drive", std::vector<double>(24, 0.20)}};

    BootstrapRecordSpec escape;
    escape.subsystem = "body";
    escape.label = "escape";
    escape.utility = 4.0;
    // Own-drive anchors keep this record from matching arbitrary states just
    // because no threat is visible in them; the looming weight dominates the
    // mask so the zero-looming penalty is decisive outside real approaches.
    escape.mask = {{"ext:looming", 1.0},
                   {"ext:looming_rate", 0.7},
                   {"child:motor:escape_urge:drive", 0.2},
                   {"own:core_temp:drive", 0.55},
                   {"own:energy:drive", 0.35}};
    escape.profile = {
        {"ext:looming", {0.30, 0.50, 0.80, 1.10, 1.30, 1.20, 0.60, 0.30, 0.15, 0.08, 0.04, 0.02}},
        {"ext:looming_rate", {0.10, 0.15, 0.25, 0.32, 0.28, 0.10, -0.50, -0.30, -0.15, -0.06, -0.02, -0.01}},
        {"child:motor:escape_urge:drive", {0.00, 0.05, 0.20, 0.50, 1.00, 1.10, 1.00, 0.70, 0.45, 0.25, 0.10, 0.05}},
        {"own:core_temp:drive", std::vector<double>(12, 0.18)},
        {"own:energy:drive", std::vector<double>(12, 0.30)}};

    // Cool records ship only in scenarios that declare them: in a cold
    // world a cool prefix is near-identical to cold_onset's on every dim
    // except ambient, and that residual margin sits below theta_win, which
    // turns every chill into cycling churn.
    c.bootstrap = {rest, cold_onset, cold_deep, hungry_onset, hungry_deep, escape};
    return c;
}

} // namespace homeostat
