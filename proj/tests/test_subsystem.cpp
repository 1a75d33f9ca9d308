#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "homeostat/rng.hpp"
#include "homeostat/subsystem.hpp"

using namespace homeostat;

namespace {

// Two-slot registry: one child drive (expectations can target it) and one
// exteroceptive feature. Tests feed states directly, so the slot semantics
// only matter for emission.
Subsystem make_sub(std::size_t capacity, Thresholds th = Thresholds{}, bool with_hvar = false) {
    Subsystem sub("s", 1, capacity, th);
    Slot child;
    child.kind = SlotKind::ChildDrive;
    child.name = "child:m:u:drive";
    child.child = "m";
    child.child_hvar = "u";
    child.child_band = 1.0;
    Slot ext;
    ext.kind = SlotKind::Extero;
    ext.name = "ext:x";
    ext.extero_name = "x";
    sub.slots = {child, ext};
    sub.learned_mask.weights = {1.0, 0.0};
    if (with_hvar) {
        HVar h;
        h.id = "h";
        h.target_base = 0.0;
        h.target_eff = 0.0;
        h.band = 1.0;
        h.priority = 1.0;
        h.current = 0.0;
        h.prev_current = 0.0;
        sub.hvars.push_back(h);
    }
    return sub;
}

StepFlags flags_all() {
    return StepFlags{};
}

// Step with a constant signal until the rolling trace settles on it.
void settle(Subsystem& sub, const Signal& state, std::int64_t& now, int steps = 20) {
    for (int i = 0; i < steps; ++i) sub.step(state, now++, flags_all());
}

// Imprint the subsystem's own current history window (exact recall material).
std::int64_t imprint_history(Subsystem& sub, const StateMask& mask, double utility) {
    std::vector<TemporalTrace> w(sub.history.begin(), sub.history.end());
    auto id = sub.bank.imprint(window_to_trajectory(w, mask, 0), utility, 0);
    REQUIRE(id.has_value());
    return *id;
}

} // namespace

TEST_CASE("valence worked examples") {
    CHECK(valence(3.0, 3.0, 10.0) == 0.0);
    CHECK(valence(5.0, 3.0, 0.0) == 2.0);
    CHECK(valence(36.5, 36.0, 37.0) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("valence sign matches movement toward the target") {
    SplitMix64 rng(31);
    for (int i = 0; i < 1000; ++i) {
        const double p = rng.next_double() * 20.0 - 10.0;
        const double c = rng.next_double() * 20.0 - 10.0;
        const double t = rng.next_double() * 20.0 - 10.0;
        const double v = valence(p, c, t);
        const double want = std::abs(p - t) - std::abs(c - t);
        CHECK(std::signbit(v) == std::signbit(want));
        CHECK(v == want);
    }
}

TEST_CASE("drive worked examples") {
    HVar h;
    h.band = 1.0;
    h.current = 37.0;
    h.target_eff = 37.0;
    CHECK(drive_of(h) == 0.0);
    h.current = 35.0;
    CHECK(drive_of(h) == 2.0);
    h.band = 2.0;
    CHECK(drive_of(h) == 1.0); // doubling the band halves drive
}

TEST_CASE("expectations shift target_eff additively and expire exactly") {
    HVar h;
    h.id = "core";
    h.target_base = 37.0;
    h.target_eff = 37.0;

    apply_expectation(h, nullptr, 0);
    CHECK(h.target_eff == 37.0);

    Expectation fever;
    fever.hvar_id = "core";
    fever.delta = 1.5;
    fever.horizon = 10;
    fever.issued_tick = 0;
    apply_expectation(h, &fever, 0);
    CHECK(h.target_eff == doctest::Approx(38.5).epsilon(1e-15));

    Expectation down;
    down.hvar_id = "core";
    down.delta = -0.5;
    down.horizon = 10;
    down.issued_tick = 0;
    Expectation up;
    up.hvar_id = "core";
    up.delta = 1.0;
    up.horizon = 10;
    up.issued_tick = 0;
    HVar h2;
    h2.target_base = 5.0;
    h2.target_eff = 5.0;
    apply_expectation(h2, &up, 0);
    apply_expectation(h2, &down, 0);
    CHECK(h2.target_eff == doctest::Approx(5.5).epsilon(1e-15));

    // Expiry boundary: horizon 10 issued at 0 is gone at exactly tick 10.
    apply_expectation(h, nullptr, 9);
    CHECK(h.target_eff == doctest::Approx(38.5).epsilon(1e-15));
    apply_expectation(h, nullptr, 10);
    CHECK(h.target_eff == 37.0); // setpoint restitution is exact

    Expectation bad;
    bad.horizon = 0;
    CHECK_THROWS_AS(apply_expectation(h, &bad, 0), Error);
}

TEST_CASE("trajectory_utility worked examples") {
    // Constant series carry no valence.
    CHECK(trajectory_utility({{5.0}, {5.0}, {5.0}}, {{0.0}, {0.0}, {0.0}}, {1.0}) == 0.0);
    // 5 -> 3 -> 1 toward 0: valences 2 + 2.
    CHECK(trajectory_utility({{5.0}, {3.0}, {1.0}}, {{0.0}, {0.0}, {0.0}}, {1.0}) == 4.0);
    // Priority scales linearly.
    CHECK(trajectory_utility({{5.0}, {3.0}, {1.0}}, {{0.0}, {0.0}, {0.0}}, {2.5}) == 10.0);
}

TEST_CASE("trajectory_utility reverses sign under window reversal") {
    SplitMix64 rng(32);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::vector<double>> cs, ts;
        const int T = 2 + static_cast<int>(rng.next_below(8));
        const double target = rng.next_double() * 4.0 - 2.0;
        for (int t = 0; t < T; ++t) {
            cs.push_back({rng.next_double() * 4.0 - 2.0});
            ts.push_back({target});
        }
        const double fwd = trajectory_utility(cs, ts, {1.0});
        std::vector<std::vector<double>> rev(cs.rbegin(), cs.rend());
        const double bwd = trajectory_utility(rev, ts, {1.0});
        CHECK(fwd == doctest::Approx(-bwd).epsilon(1e-12));
    }
}

TEST_CASE("trajectory_utility validates shapes") {
    CHECK_THROWS_AS(trajectory_utility({{1.0}}, {{1.0}, {1.0}}, {1.0}), Error);
    CHECK_THROWS_AS(trajectory_utility({{1.0}, {1.0, 2.0}}, {{1.0}, {1.0}}, {1.0}), Error);
}

TEST_CASE("ignore_cost charges unaddressed privileged trouble only") {
    InteroSignal quiet;
    quiet.subsystem = "b";
    quiet.hvar_id = "core";
    quiet.drive = 2.0;
    quiet.privileged = false;
    CHECK(ignore_cost({quiet}, {}, 0.05) == 0.0); // not privileged

    InteroSignal hot = quiet;
    hot.privileged = true;
    CHECK(ignore_cost({hot}, {}, 0.05) == doctest::Approx(0.05).epsilon(1e-15));

    InteroSignal inside = hot;
    inside.drive = 1.0; // within band: no charge
    CHECK(ignore_cost({inside}, {}, 0.05) == 0.0);

    ExpectationOut sent;
    sent.child = "b";
    sent.hvar_id = "core";
    CHECK(ignore_cost({hot}, {sent}, 0.05) == 0.0); // addressed

    ExpectationOut other = sent;
    other.hvar_id = "energy";
    CHECK(ignore_cost({hot}, {other}, 0.05) == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("empty bank stays idle but still reports intero") {
    Subsystem sub = make_sub(4, Thresholds{}, true);
    sub.hvars[0].current = 3.0;
    auto out = sub.step({0.0, 0.0}, 0, flags_all());
    CHECK(out.mode_after == ModeKind::Idle);
    CHECK(out.expectations.empty());
    REQUIRE(out.intero.size() == 1);
    CHECK(out.intero[0].drive == 3.0);
    CHECK(out.intero[0].subsystem == "s");
}

TEST_CASE("no match is attempted before the history holds a full prefix") {
    Subsystem sub = make_sub(4);
    std::int64_t now = 0;
    settle(sub, {0.5, 0.5}, now);
    imprint_history(sub, StateMask{{1.0, 1.0}}, 1.0);

    Subsystem fresh = make_sub(4);
    fresh.bank = sub.bank;
    // One step: history length 1 < prefix 2, perfect record nearby or not.
    auto out = fresh.step({0.5, 0.5}, 0, flags_all());
    CHECK(out.mode_after == ModeKind::Idle);
    // Second step reaches the prefix and may act.
    out = fresh.step({0.5, 0.5}, 1, flags_all());
    CHECK(out.mode_after != ModeKind::Idle);
}

TEST_CASE("a clear singleton match enters replay and completes back to idle") {
    Subsystem sub = make_sub(4);
    std::int64_t now = 0;
    settle(sub, {0.5, 0.5}, now);
    const std::int64_t id = imprint_history(sub, StateMask{{1.0, 1.0}}, 1.0);

    auto out = sub.step({0.5, 0.5}, now++, flags_all());
    CHECK(out.mode_after == ModeKind::Replaying);
    CHECK(sub.replay_id == id);
    CHECK(sub.replay_offset == sub.prefix + 1); // entered at p, advanced once
    // One expectation per masked child-drive slot per replaying tick.
    REQUIRE(out.expectations.size() == 1);
    CHECK(out.expectations[0].child == "m");
    CHECK(out.expectations[0].hvar_id == "u");
    CHECK(out.expectations[0].horizon == sub.replay_horizon);
    CHECK(out.expectations[0].delta == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(out.prediction_error < sub.th.theta_err);

    // tau 6, offset runs p..tau-1, so replay finishes after 4 emitting steps.
    for (int i = 0; i < 3; ++i) {
        out = sub.step({0.5, 0.5}, now++, flags_all());
        CHECK(out.prediction_error < sub.th.theta_err);
    }
    CHECK(out.mode_after == ModeKind::Idle);
}

TEST_CASE("persistent prediction error aborts the replay") {
    Thresholds th;
    // High enough that the drifted post-abort re-match (score ~0.13, < 0.19
    // even boost-capped) cannot re-enter; the clean entry at 0.5 still can.
    th.theta_act = 0.2;
    Subsystem sub = make_sub(4, th);
    std::int64_t now = 0;
    settle(sub, {0.5, 0.5}, now);
    // Long record so the replay cannot complete before the abort fires.
    for (int i = 0; i < 6; ++i) sub.step({0.5, 0.5}, now++, flags_all());
    std::vector<TemporalTrace> w(sub.history.begin(), sub.history.end());
    // Pad to a longer trajectory by repeating the settled trace.
    for (int i = 0; i < 12; ++i) w.push_back(w.back());
    REQUIRE(sub.bank.imprint(window_to_trajectory(w, StateMask{{1.0, 1.0}}, 0), 1.0, 0).has_value());

    auto out = sub.step({0.5, 0.5}, now++, flags_all());
    REQUIRE(out.mode_after == ModeKind::Replaying);

    // Yank the world away from the replayed story.
    int abort_tick = -1;
    for (int i = 0; i < 10; ++i) {
        out = sub.step({5.0, 5.0}, now++, flags_all());
        if (out.aborted) {
            abort_tick = i;
            break;
        }
    }
    REQUIRE(abort_tick >= 0);
    // theta_err tolerates the first diverging tick; the streak needs E = 3.
    CHECK(abort_tick <= 4);
    CHECK(out.mode_after == ModeKind::Idle); // nothing believable left to cycle
}

TEST_CASE("abort falls back to cycling when other candidates stay believable") {
    Thresholds th;
    // Wide enough that the boosted duplicate pair cannot resolve immediately,
    // narrow enough that the initial lone-leader entry still replays directly.
    th.theta_win = 0.1;
    th.theta_goal = 10.0;
    Subsystem sub = make_sub(8, th);
    std::int64_t now = 0;

    settle(sub, {5.0, 5.0}, now);
    std::vector<TemporalTrace> far(sub.history.begin(), sub.history.end());
    for (int i = 0; i < 6; ++i) far.push_back(far.back());

    Subsystem sub2 = make_sub(8, th);
    std::int64_t now2 = 0;
    settle(sub2, {0.5, 0.5}, now2);
    std::vector<TemporalTrace> near(sub2.history.begin(), sub2.history.end());
    for (int i = 0; i < 6; ++i) near.push_back(near.back());

    // Two near-duplicates at {5,5} and the replay source at {0.5, 0.5}.
    REQUIRE(sub2.bank.imprint(window_to_trajectory(near, StateMask{{1.0, 1.0}}, 0), 1.0, 0).has_value());
    REQUIRE(sub2.bank.imprint(window_to_trajectory(far, StateMask{{1.0, 1.0}}, 0), 1.0, 1).has_value());
    REQUIRE(sub2.bank.imprint(window_to_trajectory(far, StateMask{{1.0, 1.0}}, 0), 1.0, 2).has_value());

    auto out = sub2.step({0.5, 0.5}, now2++, flags_all());
    REQUIRE(out.mode_after == ModeKind::Replaying);
    CHECK(sub2.replay_id == 0);

    bool aborted = false;
    for (int i = 0; i < 10 && !aborted; ++i) {
        out = sub2.step({5.0, 5.0}, now2++, flags_all());
        aborted = out.aborted;
    }
    REQUIRE(aborted);
    CHECK(out.mode_after == ModeKind::Cycling);
}

TEST_CASE("score ties resolve to the lower id deterministically") {
    auto run_once = [](std::vector<ModeKind>& modes, std::int64_t& winner) {
        Subsystem sub = make_sub(4);
        std::int64_t now = 0;
        settle(sub, {0.5, 0.5}, now);
        std::vector<TemporalTrace> w(sub.history.begin(), sub.history.end());
        auto traj = window_to_trajectory(w, StateMask{{1.0, 1.0}}, 0);
        REQUIRE(sub.bank.imprint(traj, 1.0, 0).has_value());
        REQUIRE(sub.bank.imprint(traj, 1.0, 1).has_value());
        for (int i = 0; i < 30; ++i) {
            auto out = sub.step({0.5, 0.5}, now++, flags_all());
            modes.push_back(out.mode_after);
            if (out.mode_after == ModeKind::Replaying) {
                winner = sub.replay_id;
                return;
            }
        }
        winner = -1;
    };
    std::vector<ModeKind> m1, m2;
    std::int64_t w1 = -2, w2 = -3;
    run_once(m1, w1);
    run_once(m2, w2);
    CHECK(w1 == 0); // identical scores: boost lands on the lower id first
    CHECK(w1 == w2);
    CHECK(m1 == m2);
}

TEST_CASE("cycling forces a pick within the cycle budget") {
    Thresholds th;
    th.theta_win = 0.75; // unreachable margin: boosts cap at 2x a 0.5 strength
    th.theta_goal = 10.0;
    Subsystem sub = make_sub(8, th);
    std::int64_t now = 0;
    settle(sub, {0.5, 0.5}, now);
    std::vector<TemporalTrace> w(sub.history.begin(), sub.history.end());
    auto traj = window_to_trajectory(w, StateMask{{1.0, 1.0}}, 0);
    for (int i = 0; i < 3; ++i) REQUIRE(sub.bank.imprint(traj, 1.0, i).has_value());

    int replay_at = -1;
    int cycling_ticks = 0;
    for (int i = 0; i < 60; ++i) {
        auto out = sub.step({0.5, 0.5}, now++, flags_all());
        if (out.mode_after == ModeKind::Cycling) ++cycling_ticks;
        if (out.mode_after == ModeKind::Replaying) {
            replay_at = i;
            break;
        }
    }
    REQUIRE(replay_at >= 0);
    // 8 cycling slots of T = 3 ticks each, then the forced pick.
    CHECK(cycling_ticks <= 8 * sub.replay_horizon);
    CHECK(sub.cycles_done > sub.th.cycle_max);
}

TEST_CASE("goals start on confident long matches and complete with the replay") {
    Subsystem sub = make_sub(4);
    std::int64_t now = 0;
    settle(sub, {0.5, 0.5}, now);
    const std::int64_t id = imprint_history(sub, StateMask{{1.0, 1.0}}, 1.0);

    auto out = sub.step({0.5, 0.5}, now++, flags_all());
    CHECK(out.goal_event == GoalEvent::Started); // margin = full score >= theta_goal
    REQUIRE(sub.goal.has_value());
    CHECK(sub.goal->record_id == id);
    CHECK(sub.goal->ttl == 12); // 2 * tau

    // Standing boost renews while the goal lives.
    const double b0 = sub.bank.get(id).boost;
    out = sub.step({0.5, 0.5}, now++, flags_all());
    CHECK(sub.bank.get(id).boost >= b0);

    GoalEvent last = GoalEvent::None;
    for (int i = 0; i < 6; ++i) {
        out = sub.step({0.5, 0.5}, now++, flags_all());
        if (out.goal_event != GoalEvent::None) last = out.goal_event;
        if (!sub.goal) break;
    }
    CHECK(last == GoalEvent::Completed);
}

TEST_CASE("goals expire on ttl when their replay never completes") {
    Thresholds th;
    th.theta_act = 0.85; // after the yank nothing is believable: no re-entry
    Subsystem sub = make_sub(4, th);
    std::int64_t now = 0;
    settle(sub, {0.5, 0.5}, now);
    (void)imprint_history(sub, StateMask{{1.0, 1.0}}, 9.0); // strength 0.9 clears theta_act once

    auto out = sub.step({0.5, 0.5}, now++, flags_all());
    REQUIRE(out.goal_event == GoalEvent::Started);

    GoalEvent last = GoalEvent::None;
    for (int i = 0; i < 20 && sub.goal; ++i) {
        out = sub.step({5.0, 5.0}, now++, flags_all());
        if (out.goal_event != GoalEvent::None) last = out.goal_event;
    }
    CHECK(last == GoalEvent::Expired);
}

TEST_CASE("windows with positive utility imprint once, duplicates are skipped") {
    Subsystem sub = make_sub(16, Thresholds{}, true);
    std::int64_t now = 0;

    // Constant everything: utility 0, never imprints.
    for (int i = 0; i < 10; ++i) {
        auto out = sub.step({0.0, 0.0}, now++, flags_all());
        CHECK_FALSE(out.imprinted);
    }

    // March the hvar toward its target while the signal swings: positive
    // utility and a novel window.
    sub.hvars[0].current = 6.0;
    int imprints = 0;
    for (int i = 0; i < 6; ++i) {
        sub.hvars[0].current -= 1.0;
        auto out = sub.step({1.0 + 0.5 * i, 0.0}, now++, flags_all());
        imprints += out.imprinted ? 1 : 0;
    }
    CHECK(imprints >= 1);
    const std::size_t bank_after = sub.bank.size();
    CHECK(bank_after >= 1);

    // no_memory flags suppress imprinting entirely.
    Subsystem sub2 = make_sub(16, Thresholds{}, true);
    std::int64_t now2 = 0;
    StepFlags off;
    off.allow_imprint = false;
    sub2.hvars[0].current = 6.0;
    for (int i = 0; i < 6; ++i) {
        sub2.hvars[0].current -= 1.0;
        auto out = sub2.step({1.0 + 0.5 * i, 0.0}, now2++, off);
        CHECK_FALSE(out.imprinted);
    }
    CHECK(sub2.bank.empty());
}

TEST_CASE("no_plasticity flags pin boosts at 1") {
    Thresholds th;
    Subsystem sub = make_sub(4, th);
    std::int64_t now = 0;
    settle(sub, {0.5, 0.5}, now);
    std::vector<TemporalTrace> w(sub.history.begin(), sub.history.end());
    auto traj = window_to_trajectory(w, StateMask{{1.0, 1.0}}, 0);
    REQUIRE(sub.bank.imprint(traj, 1.0, 0).has_value());
    REQUIRE(sub.bank.imprint(traj, 1.0, 1).has_value());

    StepFlags off;
    off.allow_boost = false;
    for (int i = 0; i < 40; ++i) sub.step({0.5, 0.5}, now++, off);
    for (const auto& rec : sub.bank.records()) CHECK(rec.boost == 1.0);
}

TEST_CASE("step rejects a state that does not match the registry") {
    Subsystem sub = make_sub(4);
    CHECK_THROWS_AS(sub.step({1.0}, 0, flags_all()), Error);
}
