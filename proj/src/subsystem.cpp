#include "homeostat/subsystem.hpp"

#include <algorithm>
#include <cmath>

namespace homeostat {

double drive_of(const HVar& h) {
    return std::abs(h.current - h.target_eff) / h.band;
}

double valence(double prev, double curr, double target) {
    return std::abs(prev - target) - std::abs(curr - target);
}

void apply_expectation(HVar& h, const Expectation* e, std::int64_t now) {
    // Expired means now >= issued + horizon; removal happens before recompute.
    std::erase_if(h.active, [now](const Expectation& x) { return now >= x.issued_tick + x.horizon; });
    if (e) {
        if (e->horizon <= 0) raise(ErrorKind::Config, "expectation horizon must be positive");
        h.active.push_back(*e);
    }
    double sum = 0.0;
    for (const auto& x : h.active) sum += x.delta;
    // Floor at zero: every regulated quantity here is nonnegative, and a
    // negative effective target reads back through the unsigned drive as a
    // large positive urge, locking the correction loop on the wrong side.
    h.target_eff = std::max(0.0, h.target_base + sum);
}

double trajectory_utility(const std::vector<std::vector<double>>& currents,
                          const std::vector<std::vector<double>>& targets,
                          const std::vector<double>& priorities) {
    if (currents.size() != targets.size()) {
        raise(ErrorKind::Structural, "utility window currents/targets length mismatch");
    }
    double u = 0.0;
    for (std::size_t t = 1; t < currents.size(); ++t) {
        if (currents[t].size() != priorities.size() || targets[t].size() != priorities.size()) {
            raise(ErrorKind::Structural, "utility window hvar count mismatch");
        }
        for (std::size_t h = 0; h < priorities.size(); ++h) {
            u += priorities[h] * valence(currents[t - 1][h], currents[t][h], targets[t][h]);
        }
    }
    return u;
}

double ignore_cost(const std::vector<InteroSignal>& arrivals,
                   const std::vector<ExpectationOut>& sent, double c_ig) {
    double cost = 0.0;
    for (const auto& sig : arrivals) {
        if (!sig.privileged || sig.drive <= 1.0) continue;
        bool addressed = false;
        for (const auto& e : sent) {
            if (e.child == sig.subsystem && e.hvar_id == sig.hvar_id) {
                addressed = true;
                break;
            }
        }
        if (!addressed) cost += c_ig * (sig.drive - 1.0);
    }
    return cost;
}

const char* mode_name(ModeKind m) {
    switch (m) {
        case ModeKind::Idle: return "idle";
        case ModeKind::Cycling: return "cycling";
        case ModeKind::Replaying: return "replaying";
    }
    return "?";
}

HVar* Subsystem::find_hvar(const std::string& id) {
    for (auto& h : hvars) {
        if (h.id == id) return &h;
    }
    return nullptr;
}

const HVar* Subsystem::find_hvar(const std::string& id) const {
    for (const auto& h : hvars) {
        if (h.id == id) return &h;
    }
    return nullptr;
}

std::vector<MatchResult> Subsystem::run_match() const {
    // No matching until the history holds a full prefix: a one- or two-trace
    // query makes every record look alike and selection degenerates.
    if (bank.empty() || history.size() < prefix) return {};
    MatchQuery q;
    q.history.assign(history.begin(), history.end());
    q.prefix = prefix;
    return bank.match(q);
}

void Subsystem::emit_from(std::int64_t record_id, std::size_t offset, const Signal& state,
                          std::vector<ExpectationOut>& out) const {
    const MemoryRecord& rec = bank.get(record_id);
    if (rec.trajectory.dim() != slots.size()) {
        raise(ErrorKind::Structural, "record dimension does not match subsystem registry");
    }
    const TemporalTrace& tr = rec.trajectory.traces[offset];
    for (std::size_t s = 0; s < slots.size(); ++s) {
        if (slots[s].kind != SlotKind::ChildDrive) continue;
        if (rec.trajectory.mask.weights[s] <= 0.0) continue;
        ExpectationOut e;
        e.child = slots[s].child;
        e.hvar_id = slots[s].child_hvar;
        // Push the child's drive toward the replayed level, scaled back into
        // the child's own units through its band.
        e.delta = (tr.values[s] - state[s]) * slots[s].child_band;
        e.horizon = replay_horizon;
        out.push_back(std::move(e));
    }
}

void Subsystem::enter_cycling(const std::vector<MatchResult>& results, const Signal& state,
                              std::int64_t now, const StepFlags& flags) {
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(th.top_k), results.size());
    candidates.clear();
    for (std::size_t i = 0; i < k; ++i) candidates.push_back(results[i].id);
    cand_idx = 0;
    cycles_done = 0;
    mode = ModeKind::Cycling;

    // Entering counts as the first candidate switch.
    cycles_done = 1;
    if (flags.allow_boost && bank.contains(candidates[0])) {
        bank.boost(candidates[0], th.boost_factor);
        bank.decay_boosts();
    }
    auto rematch = run_match();
    if (!rematch.empty() && rematch[0].margin >= th.theta_win) {
        mode = ModeKind::Replaying;
        replay_id = rematch[0].id;
        replay_offset = std::min(prefix, bank.get(replay_id).trajectory.tau());
        err_streak = 0;
        bank.note_match(replay_id, now);
        return;
    }
    slot_ticks_left = replay_horizon;
    const std::int64_t cand = candidates[0];
    cand_offset = bank.contains(cand) ? std::min(prefix, bank.get(cand).trajectory.tau()) : 0;
    (void)state;
}

bool Subsystem::cycle_switch(const Signal& state, std::int64_t now, const StepFlags& flags) {
    (void)state;
    ++cand_idx;
    ++cycles_done;
    if (cycles_done > th.cycle_max) {
        // Forced pick: current top by score, ties already broken toward the
        // smaller id inside match.
        auto results = run_match();
        if (results.empty()) {
            mode = ModeKind::Idle;
            return true;
        }
        mode = ModeKind::Replaying;
        replay_id = results[0].id;
        replay_offset = std::min(prefix, bank.get(replay_id).trajectory.tau());
        err_streak = 0;
        bank.note_match(replay_id, now);
        return true;
    }
    const std::int64_t cand = candidates[cand_idx % candidates.size()];
    if (flags.allow_boost && bank.contains(cand)) {
        bank.boost(cand, th.boost_factor);
        bank.decay_boosts();
    }
    auto rematch = run_match();
    if (!rematch.empty() && rematch[0].margin >= th.theta_win) {
        mode = ModeKind::Replaying;
        replay_id = rematch[0].id;
        replay_offset = std::min(prefix, bank.get(replay_id).trajectory.tau());
        err_streak = 0;
        bank.note_match(replay_id, now);
        return true;
    }
    slot_ticks_left = replay_horizon;
    cand_offset = bank.contains(cand) ? std::min(prefix, bank.get(cand).trajectory.tau()) : 0;
    return false;
}

void Subsystem::manage_goals(const std::vector<MatchResult>& results, std::int64_t now,
                             const StepFlags& flags, bool replay_completed_goal_record,
                             StepOutput& out) {
    // Discard and adoption never share a tick: each goal event stays visible
    // for exactly one step output.
    if (goal) {
        if (replay_completed_goal_record) {
            out.goal_event = GoalEvent::Completed;
            goal.reset();
        } else if (now >= goal->instantiated_tick + goal->ttl) {
            out.goal_event = GoalEvent::Expired;
            goal.reset();
        } else if (!bank.contains(goal->record_id)) {
            // The held record was evicted; nothing left to pursue.
            out.goal_event = GoalEvent::Expired;
            goal.reset();
        } else if (flags.allow_boost) {
            bank.boost(goal->record_id, th.goal_boost);
        }
        return;
    }
    if (results.empty()) return;
    const MatchResult& top = results[0];
    if (top.margin < th.theta_goal) return;
    const std::size_t rec_tau = bank.get(top.id).trajectory.tau();
    if (rec_tau <= static_cast<std::size_t>(replay_horizon)) return;
    GoalInstance g;
    g.goal_id = next_goal_id++;
    g.record_id = top.id;
    g.instantiated_tick = now;
    g.ttl = static_cast<std::int64_t>(2 * rec_tau);
    g.confidence = top.margin;
    goal = g;
    out.goal_event = GoalEvent::Started;
}

void Subsystem::maybe_imprint(std::int64_t now, const StepFlags& flags, StepOutput& out) {
    if (!flags.allow_imprint) return;
    if (hvars.empty()) return; // nothing to score the window with
    if (window_currents.size() < tau || history.size() < tau) return;
    if (learned_mask.weights.empty()) return; // no own/child drive slots

    std::vector<double> priorities;
    priorities.reserve(hvars.size());
    for (const auto& h : hvars) priorities.push_back(h.priority);
    std::vector<std::vector<double>> cs(window_currents.begin(), window_currents.end());
    std::vector<std::vector<double>> ts(window_targets.begin(), window_targets.end());
    const double u = trajectory_utility(cs, ts, priorities);
    if (!(u > 0.0)) return;

    std::vector<TemporalTrace> window(history.begin(), history.end());
    TraceTrajectory traj = window_to_trajectory(window, learned_mask, now - static_cast<std::int64_t>(tau) + 1);

    // Novelty floor: the candidate must sit at least novelty_floor away from
    // every stored record (compared over the shared prefix, candidate's mask).
    for (const auto& rec : bank.records()) {
        const std::size_t len = std::min(traj.tau(), rec.trajectory.tau());
        std::vector<TemporalTrace> a(traj.traces.begin(), traj.traces.begin() + static_cast<std::ptrdiff_t>(len));
        std::vector<TemporalTrace> b(rec.trajectory.traces.begin(),
                                     rec.trajectory.traces.begin() + static_cast<std::ptrdiff_t>(len));
        if (masked_distance(a, b, traj.mask) <= th.novelty_floor) return;
    }

    if (bank.imprint(traj, u, now)) {
        ++imprint_count;
        out.imprinted = true;
    }
}

StepOutput Subsystem::step(const Signal& state, std::int64_t now, const StepFlags& flags) {
    if (state.size() != slots.size()) {
        raise(ErrorKind::Structural, "assembled state dimension does not match registry of " + name);
    }
    StepOutput out;

    // Expectation upkeep first: expiry alone must restitute the setpoint.
    for (auto& h : hvars) apply_expectation(h, nullptr, now);

    // Window snapshots include this tick.
    {
        std::vector<double> cs, ts;
        cs.reserve(hvars.size());
        ts.reserve(hvars.size());
        for (const auto& h : hvars) {
            cs.push_back(h.current);
            ts.push_back(h.target_eff);
        }
        window_currents.push_back(std::move(cs));
        window_targets.push_back(std::move(ts));
        if (window_currents.size() > tau) {
            window_currents.pop_front();
            window_targets.pop_front();
        }
    }

    if (trace.values.empty()) {
        trace.values.assign(slots.size(), 0.0);
        trace.decay = decay;
    }
    trace = trace_update(trace, state, decay);
    history.push_back(trace);
    if (history.size() > tau) history.pop_front();

    for (const auto& h : hvars) {
        InteroSignal sig;
        sig.subsystem = name;
        sig.hvar_id = h.id;
        sig.drive = drive_of(h);
        sig.valence = valence(h.prev_current, h.current, h.target_eff);
        sig.privileged = h.privileged;
        out.intero.push_back(std::move(sig));
    }

    auto results = run_match();

    bool completed_goal_record = false;
    switch (mode) {
        case ModeKind::Idle:
            if (!results.empty() && results[0].score >= th.theta_act) {
                if (results[0].margin >= th.theta_win) {
                    mode = ModeKind::Replaying;
                    replay_id = results[0].id;
                    replay_offset = std::min(prefix, bank.get(replay_id).trajectory.tau());
                    err_streak = 0;
                    bank.note_match(replay_id, now);
                } else {
                    enter_cycling(results, state, now, flags);
                }
            }
            break;
        case ModeKind::Cycling: {
            const std::int64_t cand = candidates[cand_idx % candidates.size()];
            const bool cand_gone = !bank.contains(cand);
            const bool exhausted =
                slot_ticks_left <= 0 ||
                (!cand_gone && cand_offset >= bank.get(cand).trajectory.tau());
            if (cand_gone || exhausted) cycle_switch(state, now, flags);
            break;
        }
        case ModeKind::Replaying:
            break; // handled below
    }

    if (mode == ModeKind::Replaying) {
        if (!bank.contains(replay_id)) {
            mode = ModeKind::Idle; // record evicted mid-replay
        } else {
            const MemoryRecord& rec = bank.get(replay_id);
            if (replay_offset >= rec.trajectory.tau()) {
                // Entered with a degenerate prefix >= tau; nothing to predict.
                if (goal && goal->record_id == replay_id) completed_goal_record = true;
                mode = ModeKind::Idle;
            } else {
                emit_from(replay_id, replay_offset, state, out.expectations);
                out.prediction_error = masked_distance({rec.trajectory.traces[replay_offset]}, {trace},
                                                       rec.trajectory.mask);
                if (out.prediction_error > th.theta_err) {
                    ++err_streak;
                } else {
                    err_streak = 0;
                }
                ++replay_offset;
                if (err_streak >= th.err_ticks) {
                    // Too many prediction misses in a row: abandon the replay
                    // and fall back to comparing candidates. Entering cycling
                    // re-matches and may settle on a clear winner at once.
                    out.aborted = true;
                    auto fresh = run_match();
                    if (!fresh.empty() && fresh[0].score >= th.theta_act) {
                        enter_cycling(fresh, state, now, flags);
                    } else {
                        mode = ModeKind::Idle;
                    }
                } else if (replay_offset >= rec.trajectory.tau()) {
                    if (goal && goal->record_id == replay_id) completed_goal_record = true;
                    mode = ModeKind::Idle;
                }
            }
        }
    } else if (mode == ModeKind::Cycling) {
        const std::int64_t cand = candidates[cand_idx % candidates.size()];
        if (bank.contains(cand)) {
            const MemoryRecord& rec = bank.get(cand);
            if (cand_offset < rec.trajectory.tau()) {
                emit_from(cand, cand_offset, state, out.expectations);
                out.prediction_error = masked_distance({rec.trajectory.traces[cand_offset]}, {trace},
                                                       rec.trajectory.mask);
                ++cand_offset;
            }
            --slot_ticks_left;
        } else {
            slot_ticks_left = 0;
        }
    }

    manage_goals(results, now, flags, completed_goal_record, out);
    maybe_imprint(now, flags, out);

    for (auto& h : hvars) h.prev_current = h.current;
    out.mode_after = mode;
    return out;
}

} // namespace homeostat
