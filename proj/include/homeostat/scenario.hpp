#pragma once

#include <string>
#include <vector>

#include "homeostat/agent.hpp"
#include "homeostat/world.hpp"

#include "json.hpp"

namespace homeostat {

// World layout as authored: a flat ambient field with warm rectangles painted
// over it, food cells, and the agent's start (optionally jittered from the
// world RNG stream). A rect's heat falls off linearly with Chebyshev distance
// over `falloff` cells (0 = hard edge), which is what gives a walker a local
// gradient to climb.
struct WarmRect {
    int x = 0, y = 0, w = 1, h = 1;
    double temp = 30.0;
    int falloff = 0;
};

struct FoodCell {
    int x = 0, y = 0;
};

struct WorldConfig {
    int width = 16, height = 16;
    double ambient_base = 15.0;
    std::vector<WarmRect> warm_rects;
    std::vector<FoodCell> food;
    int agent_x = 8, agent_y = 8;
    int start_jitter = 0; // uniform square radius, world RNG
    double core0 = 37.0, energy0 = 70.0, integrity0 = 100.0;
    WorldParams params;
};

// Everything a run needs. Loaded from JSON; every field has a documented
// default except name and seed, and the resolved echo spells all of them out.
struct ScenarioConfig {
    std::string name;
    std::uint64_t seed = 0;
    std::int64_t ticks = 500;
    WorldConfig world;
    AgentConfig agent; // defaults to default_agent_config()
    EventSchedule events;
    Ablations ablations;
};

// The standard two-level survival agent (motor leaf + body root) with the
// stock bootstrap pack. Used whenever a scenario omits the agent block.
AgentConfig default_agent_config();

// Parse + validate. Unknown keys are rejected recursively; parse errors carry
// a line number computed from the byte offset; validation errors name the key.
ScenarioConfig parse_scenario(const std::string& text, const std::string& origin);
ScenarioConfig load_scenario(const std::string& path);

// Resolved echo: every default made explicit. parse(to_json(c).dump()) == c.
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& config);

// Materialize the world grid. Start jitter is the only RNG draw here.
WorldState build_world(const WorldConfig& config, SplitMix64& world_rng);

// Comma-separated ablation switches ("no_memory,no_topdown"); unknown names
// are config errors.
void apply_ablation_list(Ablations& ab, const std::string& list);

} // namespace homeostat
