#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "homeostat/agent.hpp"
#include "homeostat/errors.hpp"

using namespace homeostat;

namespace {

HVarSpec hv(std::string id, double target = 0.0, double band = 1.0, double priority = 1.0,
            bool privileged = false, double current0 = 0.0) {
    HVarSpec h;
    h.id = std::move(id);
    h.target = target;
    h.band = band;
    h.priority = priority;
    h.privileged = privileged;
    h.current0 = current0;
    return h;
}

// Minimal two-level agent: a body subsystem over the motor leaf.
AgentConfig two_level() {
    AgentConfig c;
    SubsystemSpec motor;
    motor.name = "motor";
    motor.level = 0;
    motor.capacity = 8;
    motor.hvars = {hv("eat_urge")};
    SubsystemSpec body;
    body.name = "body";
    body.level = 1;
    body.capacity = 16;
    body.hvars = {hv("core_temp", 37.0, 1.0, 1.0, true, 37.0)};
    body.children = {"motor"};
    body.extero = {"ambient"};
    c.subsystems = {motor, body};
    c.motor = "motor";
    return c;
}

void expect_config_error(const AgentConfig& c) {
    try {
        AgentGraph::build(c, Ablations{});
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
    }
}

int slot_index(const Subsystem& sub, const std::string& name) {
    for (std::size_t s = 0; s < sub.slots.size(); ++s) {
        if (sub.slots[s].name == name) return static_cast<int>(s);
    }
    return -1;
}

} // namespace

TEST_CASE("level parameters follow the documented schedule") {
    auto l0 = level_params(0);
    CHECK(l0.decay == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(l0.tau == 6);
    CHECK(l0.replay_horizon == 3);
    auto l1 = level_params(1);
    CHECK(l1.decay == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(l1.tau == 12);
    CHECK(l1.replay_horizon == 6);
    auto l2 = level_params(2);
    CHECK(l2.decay == doctest::Approx(0.225).epsilon(1e-15));
    CHECK(l2.tau == 24);
    CHECK(l2.replay_horizon == 12);
    // Decay floors at 0.05 instead of vanishing.
    CHECK(level_params(8).decay == 0.05);
    for (int l = 0; l < 7; ++l) {
        CHECK(level_params(l + 1).decay <= level_params(l).decay);
        CHECK(level_params(l + 1).tau == 2 * level_params(l).tau);
    }
    CHECK_THROWS_AS(level_params(-1), Error);
}

TEST_CASE("build rejects malformed graphs") {
    // Duplicate names.
    AgentConfig c = two_level();
    c.subsystems.push_back(c.subsystems[0]);
    expect_config_error(c);

    // Unknown child.
    c = two_level();
    c.subsystems[1].children = {"nope"};
    expect_config_error(c);

    // Child at the same level as the parent.
    c = two_level();
    c.subsystems[0].level = 1;
    expect_config_error(c);

    // Two roots.
    c = two_level();
    c.subsystems[1].children.clear();
    expect_config_error(c);

    // Band and priority must be positive.
    c = two_level();
    c.subsystems[1].hvars[0].band = 0.0;
    expect_config_error(c);
    c = two_level();
    c.subsystems[1].hvars[0].priority = -1.0;
    expect_config_error(c);

    // Unknown extero feature.
    c = two_level();
    c.subsystems[1].extero = {"smell"};
    expect_config_error(c);

    // Motor must exist, be named, be a leaf, carry only action-table hvars.
    c = two_level();
    c.motor = "";
    expect_config_error(c);
    c = two_level();
    c.motor = "nope";
    expect_config_error(c);
    c = two_level();
    c.motor = "body";
    expect_config_error(c);
    c = two_level();
    c.subsystems[0].hvars.push_back(hv("jump_urge"));
    expect_config_error(c);

    // Empty registry.
    c = two_level();
    c.subsystems[0].hvars.clear();
    c.subsystems[0].extero.clear();
    // Motor with nothing at all has no slots.
    expect_config_error(c);

    // A reserved body id bound twice.
    c = two_level();
    SubsystemSpec extra;
    extra.name = "aux";
    extra.level = 0;
    extra.hvars = {hv("core_temp", 37.0)};
    c.subsystems.push_back(extra);
    c.subsystems[1].children.push_back("aux");
    expect_config_error(c);

    // Empty config.
    expect_config_error(AgentConfig{});
}

TEST_CASE("build rejects malformed bootstrap records") {
    auto with_record = [](BootstrapRecordSpec b) {
        AgentConfig c = two_level();
        c.bootstrap = {std::move(b)};
        return c;
    };
    BootstrapRecordSpec b;
    b.subsystem = "body";
    b.label = "r";
    b.utility = 1.0;
    b.mask = {{"child:motor:eat_urge:drive", 1.0}};
    b.profile = {{"child:motor:eat_urge:drive", {0.0, 0.0, 1.0, 1.0}}};

    BootstrapRecordSpec bad = b;
    bad.subsystem = "nope";
    expect_config_error(with_record(bad));

    bad = b;
    bad.utility = 0.0;
    expect_config_error(with_record(bad));

    bad = b;
    bad.mask = {{"child:motor:nope:drive", 1.0}};
    expect_config_error(with_record(bad));

    bad = b;
    bad.profile = {{"child:motor:eat_urge:drive", {1.0}}};
    expect_config_error(with_record(bad));

    bad = b;
    bad.profile["ext:ambient"] = {0.0, 0.0, 0.0};
    expect_config_error(with_record(bad));

    bad = b;
    bad.profile.clear();
    expect_config_error(with_record(bad));

    // Bootstrap beyond bank capacity.
    AgentConfig c = two_level();
    c.subsystems[1].capacity = 1;
    c.bootstrap = {b, b};
    expect_config_error(c);
}

TEST_CASE("registry slots follow declaration order with drives masked in") {
    AgentConfig c = two_level();
    c.subsystems[1].hvars.push_back(hv("energy", 70.0, 15.0));
    auto g = AgentGraph::build(c, Ablations{});
    const Subsystem& body = g.subsystems()[static_cast<std::size_t>(g.find_subsystem("body"))];
    REQUIRE(body.slots.size() == 8);
    CHECK(body.slots[0].name == "own:core_temp:drive");
    CHECK(body.slots[1].name == "own:core_temp:valence");
    CHECK(body.slots[2].name == "own:energy:drive");
    CHECK(body.slots[3].name == "own:energy:valence");
    CHECK(body.slots[4].name == "child:motor:eat_urge:drive");
    CHECK(body.slots[5].name == "child:motor:eat_urge:valence");
    CHECK(body.slots[6].name == "child:motor:error");
    CHECK(body.slots[7].name == "ext:ambient");
    CHECK(body.learned_mask.weights ==
          std::vector<double>{1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("expectations emitted at tick n reach the child at tick n+1") {
    AgentConfig c = two_level();
    BootstrapRecordSpec b;
    b.subsystem = "body";
    b.label = "push_eat";
    b.utility = 1.0;
    b.mask = {{"child:motor:eat_urge:drive", 1.0}};
    std::vector<double> series(12, 1.5);
    for (int i = 0; i < 4; ++i) series[static_cast<std::size_t>(i)] = 0.0;
    b.profile = {{"child:motor:eat_urge:drive", series}};
    c.bootstrap = {b};

    auto g = AgentGraph::build(c, Ablations{});
    const int mi = g.find_subsystem("motor");
    const int bi = g.find_subsystem("body");
    Observation obs; // quiet world
    obs.ambient = 10.0;

    std::int64_t first_emit = -1;
    for (std::int64_t t = 0; t < 6; ++t) {
        auto r = g.tick(obs, t);
        const auto& exps = r.outputs[static_cast<std::size_t>(bi)].expectations;
        const double eff = g.subsystems()[static_cast<std::size_t>(mi)].hvars[0].target_eff;
        if (!exps.empty() && first_emit < 0) {
            first_emit = t;
            CHECK(exps[0].child == "motor");
            CHECK(exps[0].hvar_id == "eat_urge");
            CHECK(exps[0].delta == doctest::Approx(1.5).epsilon(1e-12));
            CHECK(exps[0].horizon == 6);
            // Not delivered within the same tick.
            CHECK(eff == 0.0);
        }
    }
    // Warm-up gate: the body matches once its history covers the prefix (4).
    CHECK(first_emit == 3);

    auto r = g.tick(obs, 6);
    (void)r;
    const double eff = g.subsystems()[static_cast<std::size_t>(mi)].hvars[0].target_eff;
    CHECK(eff == doctest::Approx(1.5).epsilon(1e-9));
    // An urge above threshold with no food cue patrols.
    CHECK(g.tick(obs, 7).action.kind == ActionKind::Move);
}

TEST_CASE("no_topdown suppresses delivery but not emission") {
    AgentConfig c = two_level();
    BootstrapRecordSpec b;
    b.subsystem = "body";
    b.label = "push_eat";
    b.utility = 1.0;
    b.mask = {{"child:motor:eat_urge:drive", 1.0}};
    std::vector<double> series(12, 1.5);
    for (int i = 0; i < 4; ++i) series[static_cast<std::size_t>(i)] = 0.0;
    b.profile = {{"child:motor:eat_urge:drive", series}};
    c.bootstrap = {b};

    Ablations ab;
    ab.no_topdown = true;
    auto g = AgentGraph::build(c, ab);
    const int mi = g.find_subsystem("motor");
    const int bi = g.find_subsystem("body");
    Observation obs;
    obs.ambient = 10.0;
    bool emitted = false;
    for (std::int64_t t = 0; t < 12; ++t) {
        auto r = g.tick(obs, t);
        emitted = emitted || !r.outputs[static_cast<std::size_t>(bi)].expectations.empty();
        CHECK(g.subsystems()[static_cast<std::size_t>(mi)].hvars[0].target_eff == 0.0);
        CHECK(r.action.kind == ActionKind::Stay);
    }
    CHECK(emitted);
}

TEST_CASE("no_memory leaves every bank empty") {
    AgentConfig c = two_level();
    BootstrapRecordSpec b;
    b.subsystem = "body";
    b.label = "r";
    b.utility = 1.0;
    b.mask = {{"child:motor:eat_urge:drive", 1.0}};
    b.profile = {{"child:motor:eat_urge:drive", {0.0, 0.0, 1.0, 1.0}}};
    c.bootstrap = {b};
    Ablations ab;
    ab.no_memory = true;
    auto g = AgentGraph::build(c, ab);
    Observation obs;
    obs.ambient = 25.0;
    g.set_body_state(30.0, 70.0, 100.0); // out-of-band core: imprintable material
    for (std::int64_t t = 0; t < 60; ++t) {
        g.set_body_state(30.0 + 0.1 * static_cast<double>(t), 70.0, 100.0);
        g.tick(obs, t);
    }
    for (const auto& sub : g.subsystems()) CHECK(sub.bank.size() == 0);
}

TEST_CASE("injections route by name and apply immediately") {
    auto g = AgentGraph::build(two_level(), Ablations{});
    Injection inj;
    inj.subsystem = "motor";
    inj.hvar_id = "eat_urge";
    inj.delta = 2.0;
    inj.horizon = 5;
    g.inject(inj, 0);
    const int mi = g.find_subsystem("motor");
    CHECK(g.subsystems()[static_cast<std::size_t>(mi)].hvars[0].target_eff == 2.0);

    Injection bad = inj;
    bad.subsystem = "nope";
    try {
        g.inject(bad, 0);
        FAIL("expected a routing error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Routing);
    }
    bad = inj;
    bad.hvar_id = "nope";
    CHECK_THROWS_AS(g.inject(bad, 0), Error);

    Ablations ab;
    ab.no_topdown = true;
    auto g2 = AgentGraph::build(two_level(), ab);
    g2.inject(inj, 0);
    CHECK(g2.subsystems()[static_cast<std::size_t>(mi)].hvars[0].target_eff == 0.0);
}

TEST_CASE("set_body_state writes through to the bound hvars only") {
    auto g = AgentGraph::build(two_level(), Ablations{});
    g.set_body_state(33.0, 50.0, 80.0); // only core_temp is bound here
    const int bi = g.find_subsystem("body");
    CHECK(g.subsystems()[static_cast<std::size_t>(bi)].hvars[0].current == 33.0);
}

TEST_CASE("registry drive slots saturate while the hvar drive stays exact") {
    auto g = AgentGraph::build(two_level(), Ablations{});
    g.set_body_state(20.0, 0.0, 0.0); // drive 17 against band 1
    const int bi = g.find_subsystem("body");
    const Subsystem& body = g.subsystems()[static_cast<std::size_t>(bi)];
    CHECK(drive_of(body.hvars[0]) == 17.0);
    Observation obs;
    obs.ambient = 10.0;
    for (std::int64_t t = 0; t < 40; ++t) g.tick(obs, t);
    const int ds = slot_index(body, "own:core_temp:drive");
    REQUIRE(ds >= 0);
    const double traced = body.history.back().values[static_cast<std::size_t>(ds)];
    CHECK(traced <= 2.0 + 1e-12);
    CHECK(traced > 1.9); // settled at the cap, not at 17
}

TEST_CASE("ignore cost charges parents for unaddressed privileged children") {
    AgentConfig c = two_level();
    c.subsystems[0].hvars[0].privileged = true;
    auto g = AgentGraph::build(c, Ablations{});
    Injection inj;
    inj.subsystem = "motor";
    inj.hvar_id = "eat_urge";
    inj.delta = 2.0;
    inj.horizon = 100;
    g.inject(inj, 0);
    Observation obs;
    obs.ambient = 10.0;
    auto r = g.tick(obs, 0);
    // Privileged child drive 2 with no expectations sent: 0.05 per tick.
    CHECK(r.ignore_total == doctest::Approx(0.05).epsilon(1e-12));

    // The same setup without the privileged flag costs nothing.
    AgentConfig c2 = two_level();
    auto g2 = AgentGraph::build(c2, Ablations{});
    g2.inject(inj, 0);
    CHECK(g2.tick(obs, 0).ignore_total == 0.0);

    // And the ablation silences it.
    Ablations ab;
    ab.no_ignore_cost = true;
    auto g3 = AgentGraph::build(c, ab);
    g3.inject(inj, 0);
    CHECK(g3.tick(obs, 0).ignore_total == 0.0);
}

TEST_CASE("a child abort reaches the parent's error slot one tick later") {
    AgentConfig c = two_level();
    BootstrapRecordSpec b;
    b.subsystem = "motor";
    b.label = "quiet";
    b.utility = 1.0;
    b.mask = {{"own:eat_urge:drive", 1.0}};
    b.profile = {{"own:eat_urge:drive", {0.0, 0.0, 0.0, 0.0, 0.0, 0.0}}};
    c.bootstrap = {b};
    auto g = AgentGraph::build(c, Ablations{});
    const int mi = g.find_subsystem("motor");
    const int bi = g.find_subsystem("body");
    const Subsystem& body = g.subsystems()[static_cast<std::size_t>(bi)];
    const int es = slot_index(body, "child:motor:error");
    REQUIRE(es >= 0);

    Observation obs;
    obs.ambient = 10.0;
    std::int64_t t = 0;
    // Reach the first quiet replay.
    while (t < 20) {
        auto r = g.tick(obs, t++);
        if (r.outputs[static_cast<std::size_t>(mi)].mode_after == ModeKind::Replaying) break;
    }
    REQUIRE(t < 20);
    CHECK(body.history.back().values[static_cast<std::size_t>(es)] == 0.0);

    // Yank the motor's own drive far from the replayed story.
    g.subsystems()[static_cast<std::size_t>(mi)].hvars[0].current = 5.0;
    std::int64_t abort_at = -1;
    for (int i = 0; i < 8 && abort_at < 0; ++i) {
        auto r = g.tick(obs, t++);
        if (r.outputs[static_cast<std::size_t>(mi)].aborted) abort_at = t - 1;
    }
    REQUIRE(abort_at >= 0);
    // Restore immediately: the flag lives exactly one tick.
    g.subsystems()[static_cast<std::size_t>(mi)].hvars[0].current = 0.0;

    g.tick(obs, t++);
    const double seen = body.history.back().values[static_cast<std::size_t>(es)];
    CHECK(seen > 0.3); // parent traced the abort error
    g.tick(obs, t++);
    const double later = body.history.back().values[static_cast<std::size_t>(es)];
    CHECK(later < seen); // flag cleared, trace decaying
    g.tick(obs, t++);
    CHECK(body.history.back().values[static_cast<std::size_t>(es)] < later);
}

TEST_CASE("extero features normalize into registry units") {
    AgentConfig c;
    SubsystemSpec s;
    s.name = "senses";
    s.level = 0;
    s.extero = {"ambient", "food_here", "looming", "looming_rate"};
    c.subsystems = {s};
    c.motor = "senses";
    auto g = AgentGraph::build(c, Ablations{});
    const Subsystem& sub = g.subsystems()[0];

    Observation obs;
    obs.ambient = 27.5; // halfway through [10, 45]
    obs.food_here = 1.0;
    obs.looming = 3.0;       // clamps at 1.5
    obs.looming_rate = -7.0; // clamps at -1.5
    for (std::int64_t t = 0; t < 30; ++t) CHECK(g.tick(obs, t).action.kind == ActionKind::Stay);
    const auto& v = sub.history.back().values;
    CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(v[2] == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(v[3] == doctest::Approx(-1.5).epsilon(1e-9));

    obs.ambient = 5.0; // below the low edge
    for (std::int64_t t = 30; t < 60; ++t) g.tick(obs, t);
    CHECK(sub.history.back().values[0] == doctest::Approx(0.0).epsilon(1e-9));
    obs.ambient = 50.0; // above the high edge
    for (std::int64_t t = 60; t < 90; ++t) g.tick(obs, t);
    CHECK(sub.history.back().values[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("motor translation ranks escape, then eat, then thermal urges") {
    AgentConfig c;
    SubsystemSpec motor;
    motor.name = "motor";
    motor.level = 0;
    motor.hvars = {hv("escape_urge"), hv("eat_urge"), hv("warm_urge"), hv("cool_urge")};
    c.subsystems = {motor};
    c.motor = "motor";

    auto drive_all = [&](double escape, double eat, double warm, double cool) {
        auto g = AgentGraph::build(c, Ablations{});
        auto push = [&](const char* id, double v) {
            if (v == 0.0) return;
            Injection inj;
            inj.subsystem = "motor";
            inj.hvar_id = id;
            inj.delta = v;
            inj.horizon = 1000;
            g.inject(inj, 0);
        };
        push("escape_urge", escape);
        push("eat_urge", eat);
        push("warm_urge", warm);
        push("cool_urge", cool);
        return g;
    };

    Observation food;
    food.food_here = 1.0;
    Observation bare;

    // Escape dominates regardless of other urges.
    auto g = drive_all(1.0, 2.0, 2.0, 0.0);
    CHECK(g.tick(food, 0).action.kind == ActionKind::EscapeDash);

    // Eat with food present eats; without food it patrols.
    g = drive_all(0.0, 1.0, 0.0, 0.0);
    CHECK(g.tick(food, 0).action.kind == ActionKind::Eat);
    g = drive_all(0.0, 1.0, 0.0, 0.0);
    CHECK(g.tick(bare, 0).action.kind == ActionKind::Move);

    // A stronger thermal urge outranks eating.
    g = drive_all(0.0, 1.0, 3.0, 0.0);
    CHECK(g.tick(food, 0).action.kind == ActionKind::Move);

    // Equal eat and warm: eat wins the tie.
    g = drive_all(0.0, 1.0, 1.0, 0.0);
    CHECK(g.tick(food, 0).action.kind == ActionKind::Eat);

    // Below threshold nothing moves.
    g = drive_all(0.4, 0.5, 0.5, 0.5);
    CHECK(g.tick(food, 0).action.kind == ActionKind::Stay);
}

TEST_CASE("thermal step climbs the gradient, parks on a local max, sweeps a flat field") {
    auto make = [](const char* urge_id) {
        AgentConfig c;
        SubsystemSpec motor;
        motor.name = "motor";
        motor.level = 0;
        motor.hvars = {hv(urge_id)};
        c.subsystems = {motor};
        c.motor = "motor";
        auto g = AgentGraph::build(c, Ablations{});
        Injection inj;
        inj.subsystem = "motor";
        inj.hvar_id = urge_id;
        inj.delta = 1.0;
        inj.horizon = 1000;
        g.inject(inj, 0);
        return g;
    };

    Observation obs;
    obs.ambient = 20.0;
    obs.ambient_nesw[0] = 20.0; // N
    obs.ambient_nesw[1] = 23.0; // E, warmest
    obs.ambient_nesw[2] = 21.0; // S
    obs.ambient_nesw[3] = 19.0; // W, coldest

    {
        auto g = make("warm_urge");
        auto a = g.tick(obs, 0).action;
        REQUIRE(a.kind == ActionKind::Move);
        CHECK(a.dir == Dir::East);
    }
    {
        // The cool urge walks the same cue downhill.
        auto g = make("cool_urge");
        auto a = g.tick(obs, 0).action;
        REQUIRE(a.kind == ActionKind::Move);
        CHECK(a.dir == Dir::West);
    }
    {
        // Local max: no neighbor better, some worse. Parking here is what
        // lets a recovery arc finish instead of orbiting the plateau edge.
        auto g = make("warm_urge");
        obs.ambient = 23.0;
        for (double& v : obs.ambient_nesw) v = 21.0;
        CHECK(g.tick(obs, 0).action.kind == ActionKind::Stay);
    }
    {
        // Flat field gives no cue; sweep instead of freezing in place.
        auto g = make("warm_urge");
        obs.ambient = 20.0;
        for (double& v : obs.ambient_nesw) v = 20.0;
        CHECK(g.tick(obs, 0).action.kind == ActionKind::Move);
    }
}

TEST_CASE("identical configs tick identically") {
    AgentConfig c = two_level();
    BootstrapRecordSpec b;
    b.subsystem = "body";
    b.label = "push_eat";
    b.utility = 1.0;
    b.mask = {{"child:motor:eat_urge:drive", 1.0}};
    std::vector<double> series(12, 1.2);
    for (int i = 0; i < 4; ++i) series[static_cast<std::size_t>(i)] = 0.0;
    b.profile = {{"child:motor:eat_urge:drive", series}};
    c.bootstrap = {b};

    auto run = [&] {
        auto g = AgentGraph::build(c, Ablations{});
        std::string actions;
        for (std::int64_t t = 0; t < 80; ++t) {
            Observation obs;
            obs.ambient = 10.0 + static_cast<double>(t % 7);
            obs.food_here = (t % 5 == 0) ? 1.0 : 0.0;
            obs.looming = static_cast<double>(t % 11) / 10.0;
            obs.looming_rate = static_cast<double>(t % 3 - 1) / 10.0;
            g.set_body_state(36.0 + 0.05 * static_cast<double>(t % 9), 60.0, 100.0);
            actions += action_name(g.tick(obs, t).action) + ";";
        }
        std::string banks;
        for (const auto& sub : g.subsystems()) banks += sub.bank.serialize();
        return actions + "\n" + banks;
    };
    CHECK(run() == run());
}
