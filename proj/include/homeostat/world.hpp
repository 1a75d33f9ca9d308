#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homeostat/rng.hpp"

namespace homeostat {

enum class ActionKind { Stay, Move, Eat, EscapeDash };
enum class Dir { North, South, East, West };

struct Action {
    ActionKind kind = ActionKind::Stay;
    Dir dir = Dir::North; // meaningful for Move only
};

std::string action_name(const Action& a);

// Physical constants. All overridable per scenario; defaults are the
// documented baseline.
struct WorldParams {
    double alpha = 0.1;        // thermal coupling toward ambient
    double basal = 0.05;       // per-tick energy drain
    double move_cost = 0.1;
    double dash_cost = 0.5;
    double eat_cost = 0.02;
    double eat_gain = 10.0;
    double shiver_heat = 0.2;  // only when staying put and cold
    double shiver_below = 36.0;
    double contact_damage = 20.0;
    double core_min = 20.0, core_max = 45.0;
    double energy_min = 0.0, energy_max = 100.0;
    double integrity_min = 0.0, integrity_max = 100.0;
    double ambient_min = -30.0, ambient_max = 60.0;
};

struct Threat {
    int x = 0, y = 0;
    double size = 1.0;
};

struct WorldState {
    int width = 16, height = 16;
    std::vector<double> ambient; // width*height, row-major
    std::vector<std::uint8_t> food;
    int agent_x = 0, agent_y = 0;
    double core_temp = 37.0;
    double energy = 70.0;
    double integrity = 100.0;
    std::vector<Threat> threats;
    double prev_looming = 0.0; // bookkeeping for looming_rate
    bool alive = true;
    std::int64_t tick = 0;
    WorldParams params;

    double ambient_at(int x, int y) const { return ambient[static_cast<std::size_t>(y) * width + x]; }
    double& ambient_at(int x, int y) { return ambient[static_cast<std::size_t>(y) * width + x]; }
    bool food_at(int x, int y) const { return food[static_cast<std::size_t>(y) * width + x] != 0; }
};

// What the agent senses. Raw units; the agent's registry normalizes.
// ambient_nesw is the 4-neighbor thermal gradient cue (the motor's only
// spatial sense); off-grid neighbors read as the agent's own cell.
struct Observation {
    double ambient = 0.0;
    double ambient_nesw[4] = {0.0, 0.0, 0.0, 0.0}; // N, E, S, W
    double food_here = 0.0;
    double looming = 0.0;      // size / d^2 of the nearest threat, 0 if none
    double looming_rate = 0.0; // looming_t - looming_{t-1}
};

// Per-tick energy/damage ledger. energy_post - energy_pre must equal
// -basal - action_cost - ignore + intake + clamp_adjust exactly.
struct WorldStepInfo {
    double basal = 0.0;
    double action_cost = 0.0;
    double ignore = 0.0;
    double intake = 0.0;
    double clamp_adjust = 0.0;
    int contacts = 0;
};

// Sense the world. Updates the looming-rate bookkeeping, so the runner calls
// it exactly once per tick.
Observation observe(WorldState& state);

// Advance the world one tick: agent motion, thermal update (with shiver),
// energy ledger (extra_energy_cost carries the hierarchy's ignore costs),
// threat pursuit (1 cell toward the agent, ties resolved x before y), contact
// damage. Deterministic; no RNG draws.
WorldStepInfo world_step(WorldState& state, const Action& action, double extra_energy_cost);

// Scheduled interventions.
struct PyrogenEvent {
    std::int64_t tick = 0;
    std::string subsystem; // hvar address for the expectation injection
    std::string hvar_id;
    double delta = 0.0;
    int duration = 1;
};

struct ColdSnapEvent {
    std::int64_t tick = 0;
    double temp_drop = 0.0;     // subtracted everywhere (or in rect), may be negative
    bool whole_grid = true;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // inclusive rect when not whole_grid
};

struct SpawnThreatEvent {
    std::int64_t tick = 0;
    int x = 0, y = 0;
    double size = 1.0;
    int jitter = 0; // uniform square jitter radius, drawn from the world stream
};

struct PlaceFoodEvent {
    std::int64_t tick = 0;
    int x = 0, y = 0;
};

struct EventSchedule {
    std::vector<PyrogenEvent> pyrogens;
    std::vector<ColdSnapEvent> cold_snaps;
    std::vector<SpawnThreatEvent> threats;
    std::vector<PlaceFoodEvent> food;
};

// Expectation injection produced by a fired pyrogen event.
struct Injection {
    std::string subsystem;
    std::string hvar_id;
    double delta = 0.0;
    int horizon = 1;
};

// Fire every event scheduled for `now`. World-side effects are applied
// directly; pyrogen injections are returned for the hierarchy to deliver.
// The only RNG consumer is threat spawn jitter.
std::vector<Injection> apply_events(WorldState& state, const EventSchedule& schedule,
                                    std::int64_t now, SplitMix64& world_rng);

} // namespace homeostat
