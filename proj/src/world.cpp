#include "homeostat/world.hpp"

#include <algorithm>
#include <cmath>

#include "homeostat/errors.hpp"

namespace homeostat {

std::string action_name(const Action& a) {
    switch (a.kind) {
        case ActionKind::Stay: return "stay";
        case ActionKind::Eat: return "eat";
        case ActionKind::EscapeDash: return "escape_dash";
        case ActionKind::Move:
            switch (a.dir) {
                case Dir::North: return "move_n";
                case Dir::South: return "move_s";
                case Dir::East: return "move_e";
                case Dir::West: return "move_w";
            }
    }
    return "?";
}

static double clampd(double v, double lo, double hi) {
    return std::min(hi, std::max(lo, v));
}

static int clampi(int v, int lo, int hi) {
    return std::min(hi, std::max(lo, v));
}

// Looming of the nearest threat: size / d^2 with Euclidean d, d floored at 1
// so contact stays finite.
static double looming_now(const WorldState& s) {
    double best_d2 = -1.0;
    double best_size = 0.0;
    for (const auto& t : s.threats) {
        const double dx = static_cast<double>(t.x - s.agent_x);
        const double dy = static_cast<double>(t.y - s.agent_y);
        const double d2 = dx * dx + dy * dy;
        if (best_d2 < 0.0 || d2 < best_d2) {
            best_d2 = d2;
            best_size = t.size;
        }
    }
    if (best_d2 < 0.0) return 0.0;
    return best_size / std::max(1.0, best_d2);
}

Observation observe(WorldState& state) {
    Observation obs;
    obs.ambient = state.ambient_at(state.agent_x, state.agent_y);
    const int nx[4] = {state.agent_x, state.agent_x + 1, state.agent_x, state.agent_x - 1};
    const int ny[4] = {state.agent_y + 1, state.agent_y, state.agent_y - 1, state.agent_y};
    for (int i = 0; i < 4; ++i) {
        const bool in = nx[i] >= 0 && nx[i] < state.width && ny[i] >= 0 && ny[i] < state.height;
        obs.ambient_nesw[i] = in ? state.ambient_at(nx[i], ny[i]) : obs.ambient;
    }
    obs.food_here = state.food_at(state.agent_x, state.agent_y) ? 1.0 : 0.0;
    obs.looming = looming_now(state);
    obs.looming_rate = obs.looming - state.prev_looming;
    state.prev_looming = obs.looming;
    return obs;
}

static double action_cost_of(const WorldParams& p, const Action& a) {
    switch (a.kind) {
        case ActionKind::Stay: return 0.0;
        case ActionKind::Move: return p.move_cost;
        case ActionKind::Eat: return p.eat_cost;
        case ActionKind::EscapeDash: return p.dash_cost;
    }
    return 0.0;
}

WorldStepInfo world_step(WorldState& state, const Action& action, double extra_energy_cost) {
    const WorldParams& p = state.params;
    WorldStepInfo info;

    // 1. Agent motion.
    if (action.kind == ActionKind::Move) {
        int dx = 0, dy = 0;
        switch (action.dir) {
            case Dir::North: dy = 1; break;
            case Dir::South: dy = -1; break;
            case Dir::East: dx = 1; break;
            case Dir::West: dx = -1; break;
        }
        state.agent_x = clampi(state.agent_x + dx, 0, state.width - 1);
        state.agent_y = clampi(state.agent_y + dy, 0, state.height - 1);
    } else if (action.kind == ActionKind::EscapeDash && !state.threats.empty()) {
        // 3 cells straight away from the nearest threat along the dominant
        // axis; x wins axis ties, mirroring pursuit.
        double best_d2 = -1.0;
        int tx = 0, ty = 0;
        for (const auto& t : state.threats) {
            const double dx = static_cast<double>(t.x - state.agent_x);
            const double dy = static_cast<double>(t.y - state.agent_y);
            const double d2 = dx * dx + dy * dy;
            if (best_d2 < 0.0 || d2 < best_d2) {
                best_d2 = d2;
                tx = t.x;
                ty = t.y;
            }
        }
        const int dx = state.agent_x - tx;
        const int dy = state.agent_y - ty;
        int sx = 0, sy = 0;
        if (std::abs(dx) >= std::abs(dy)) {
            sx = dx == 0 ? 1 : (dx > 0 ? 1 : -1); // on top of threat: flee east
        } else {
            sy = dy > 0 ? 1 : -1;
        }
        state.agent_x = clampi(state.agent_x + 3 * sx, 0, state.width - 1);
        state.agent_y = clampi(state.agent_y + 3 * sy, 0, state.height - 1);
    }

    // 2. Thermal update at the (possibly new) cell.
    const double ambient = state.ambient_at(state.agent_x, state.agent_y);
    double shiver = 0.0;
    if (action.kind == ActionKind::Stay && state.core_temp < p.shiver_below) shiver = p.shiver_heat;
    state.core_temp =
        clampd(state.core_temp + p.alpha * (ambient - state.core_temp) + shiver, p.core_min, p.core_max);

    // 3. Intake.
    if (action.kind == ActionKind::Eat && state.food_at(state.agent_x, state.agent_y)) {
        info.intake = p.eat_gain;
        state.food[static_cast<std::size_t>(state.agent_y) * state.width + state.agent_x] = 0;
    }

    // 4. Energy ledger.
    info.basal = p.basal;
    info.action_cost = action_cost_of(p, action);
    info.ignore = extra_energy_cost;
    const double raw = state.energy - info.basal - info.action_cost - info.ignore + info.intake;
    const double clamped = clampd(raw, p.energy_min, p.energy_max);
    info.clamp_adjust = clamped - raw;
    state.energy = clamped;

    // 5. Threat pursuit and contact.
    for (auto& t : state.threats) {
        const int dx = state.agent_x - t.x;
        const int dy = state.agent_y - t.y;
        if (dx != 0 || dy != 0) {
            if (std::abs(dx) >= std::abs(dy)) {
                t.x += dx > 0 ? 1 : -1;
            } else {
                t.y += dy > 0 ? 1 : -1;
            }
        }
        if (t.x == state.agent_x && t.y == state.agent_y) {
            state.integrity = clampd(state.integrity - p.contact_damage, p.integrity_min, p.integrity_max);
            ++info.contacts;
        }
    }
    if (state.integrity <= p.integrity_min) state.alive = false;

    ++state.tick;
    return info;
}

std::vector<Injection> apply_events(WorldState& state, const EventSchedule& schedule,
                                    std::int64_t now, SplitMix64& world_rng) {
    std::vector<Injection> injections;
    const WorldParams& p = state.params;

    for (const auto& e : schedule.cold_snaps) {
        if (e.tick != now) continue;
        const int x0 = e.whole_grid ? 0 : e.x0;
        const int y0 = e.whole_grid ? 0 : e.y0;
        const int x1 = e.whole_grid ? state.width - 1 : e.x1;
        const int y1 = e.whole_grid ? state.height - 1 : e.y1;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                state.ambient_at(x, y) =
                    clampd(state.ambient_at(x, y) - e.temp_drop, p.ambient_min, p.ambient_max);
            }
        }
    }
    for (const auto& e : schedule.food) {
        if (e.tick != now) continue;
        state.food[static_cast<std::size_t>(e.y) * state.width + e.x] = 1;
    }
    for (const auto& e : schedule.threats) {
        if (e.tick != now) continue;
        int x = e.x, y = e.y;
        if (e.jitter > 0) {
            const int r = e.jitter;
            x += static_cast<int>(world_rng.next_below(static_cast<std::uint64_t>(2 * r + 1))) - r;
            y += static_cast<int>(world_rng.next_below(static_cast<std::uint64_t>(2 * r + 1))) - r;
        }
        Threat t;
        t.x = clampi(x, 0, state.width - 1);
        t.y = clampi(y, 0, state.height - 1);
        t.size = e.size;
        state.threats.push_back(t);
    }
    for (const auto& e : schedule.pyrogens) {
        if (e.tick != now) continue;
        Injection inj;
        inj.subsystem = e.subsystem;
        inj.hvar_id = e.hvar_id;
        inj.delta = e.delta;
        inj.horizon = e.duration;
        injections.push_back(std::move(inj));
    }
    return injections;
}

} // namespace homeostat
