#include "homeostat/runner.hpp"

#include "homeostat/errors.hpp"

namespace homeostat {

namespace {

const char* goal_event_name(GoalEvent e) {
    switch (e) {
        case GoalEvent::None: return "none";
        case GoalEvent::Started: return "started";
        case GoalEvent::Completed: return "completed";
        case GoalEvent::Expired: return "expired";
    }
    return "none";
}

} // namespace

RunResult run_scenario(const ScenarioConfig& config) {
    SplitMix64 seed_root(config.seed);
    SplitMix64 world_rng = seed_root.split(0x77726C64); // world stream; agent draws nothing

    WorldState world = build_world(config.world, world_rng);
    AgentGraph agent = AgentGraph::build(config.agent, config.ablations);

    RunResult result;
    RunLog& log = result.log;
    for (const auto& spec : config.agent.subsystems) {
        log.sub_names.push_back(spec.name);
        for (const auto& h : spec.hvars) log.hvar_cols.push_back({spec.name, h.id});
    }

    for (std::int64_t now = 0; now < config.ticks; ++now) {
        const std::vector<Injection> injections = apply_events(world, config.events, now, world_rng);
        const Observation obs = observe(world);
        agent.set_body_state(world.core_temp, world.energy, world.integrity);
        for (const auto& inj : injections) agent.inject(inj, now);

        const TickResult tr = agent.tick(obs, now);

        TickRow row;
        row.tick = now;
        row.action = action_name(tr.action);
        row.ambient = obs.ambient;
        row.food_here = obs.food_here;
        row.looming = obs.looming;
        row.looming_rate = obs.looming_rate;
        for (const auto& sub : agent.subsystems()) {
            for (const auto& h : sub.hvars) {
                row.hvar_current.push_back(h.current);
                row.hvar_target.push_back(h.target_eff);
                row.hvar_drive.push_back(drive_of(h));
            }
        }
        for (std::size_t i = 0; i < agent.subsystems().size(); ++i) {
            const StepOutput& out = tr.outputs[i];
            row.sub_mode.push_back(mode_name(out.mode_after));
            row.sub_pred_err.push_back(out.prediction_error);
            row.sub_aborted.push_back(out.aborted ? 1 : 0);
            row.sub_imprinted.push_back(out.imprinted ? 1 : 0);
            row.sub_goal_event.push_back(goal_event_name(out.goal_event));
            const auto& goal = agent.subsystems()[i].goal;
            row.sub_goal_id.push_back(goal ? goal->goal_id : -1);
        }

        const WorldStepInfo info = world_step(world, tr.action, tr.ignore_total);
        row.core_temp = world.core_temp;
        row.energy = world.energy;
        row.integrity = world.integrity;
        row.basal = info.basal;
        row.action_cost = info.action_cost;
        row.ignore = info.ignore;
        row.intake = info.intake;
        row.clamp_adjust = info.clamp_adjust;
        row.contacts = info.contacts;
        log.rows.push_back(std::move(row));

        if (!world.alive) {
            log.truncated = "death";
            break;
        }
    }

    for (const auto& sub : agent.subsystems()) {
        result.bank_dumps[sub.name] = sub.bank.serialize();
    }
    return result;
}

} // namespace homeostat
