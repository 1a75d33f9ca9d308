#include "homeostat/agent.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace homeostat {

LevelParams level_params(int level) {
    if (level < 0) raise(ErrorKind::Config, "level must be >= 0");
    LevelParams p;
    p.decay = std::max(0.05, 0.9 * std::pow(0.5, level));
    p.tau = static_cast<std::size_t>(6) << level;
    p.replay_horizon = static_cast<int>((p.tau + 1) / 2);
    return p;
}

namespace {

const std::set<std::string> kExteroNames = {"ambient", "food_here", "looming", "looming_rate"};
const std::set<std::string> kMotorHvars = {"escape_urge", "eat_urge", "warm_urge", "cool_urge"};

// Registry copies of drives saturate here so stored trajectories stay
// commensurate with live state even when an hvar is far out of band.
constexpr double kDriveSlotCap = 2.0;

std::size_t prefix_of(std::size_t tau) {
    return (tau + 2) / 3; // ceil(tau/3)
}

Dir rotate(Dir d) {
    switch (d) {
        case Dir::North: return Dir::East;
        case Dir::East: return Dir::South;
        case Dir::South: return Dir::West;
        case Dir::West: return Dir::North;
    }
    return Dir::North;
}

} // namespace

int AgentGraph::find_subsystem(const std::string& name) const {
    for (std::size_t i = 0; i < subs_.size(); ++i) {
        if (subs_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

AgentGraph AgentGraph::build(const AgentConfig& config, const Ablations& ablations) {
    AgentGraph g;
    g.ablations_ = ablations;
    g.norm_ = config.extero_norm;

    if (config.subsystems.empty()) raise(ErrorKind::Config, "agent needs at least one subsystem");

    // Subsystem shells first: temporal parameters follow from the level.
    for (const auto& spec : config.subsystems) {
        for (const auto& other : g.subs_) {
            if (other.name == spec.name) raise(ErrorKind::Config, "duplicate subsystem name " + spec.name);
        }
        LevelParams lp = level_params(spec.level);
        Subsystem sub(spec.name, spec.level, spec.capacity, config.thresholds);
        sub.decay = lp.decay;
        sub.tau = lp.tau;
        sub.replay_horizon = lp.replay_horizon;
        sub.prefix = prefix_of(lp.tau);
        for (const auto& hs : spec.hvars) {
            if (!(hs.band > 0.0)) raise(ErrorKind::Config, "band must be positive for hvar " + hs.id);
            if (!(hs.priority > 0.0)) raise(ErrorKind::Config, "priority must be positive for hvar " + hs.id);
            HVar h;
            h.id = hs.id;
            h.current = hs.current0;
            h.prev_current = hs.current0;
            h.target_base = hs.target;
            h.target_eff = hs.target;
            h.band = hs.band;
            h.priority = hs.priority;
            h.privileged = hs.privileged;
            sub.hvars.push_back(std::move(h));
        }
        g.subs_.push_back(std::move(sub));
    }

    // Edges, root, motor.
    g.children_.assign(g.subs_.size(), {});
    std::vector<int> parent_count(g.subs_.size(), 0);
    for (std::size_t i = 0; i < config.subsystems.size(); ++i) {
        for (const auto& cname : config.subsystems[i].children) {
            const int c = g.find_subsystem(cname);
            if (c < 0) raise(ErrorKind::Config, "unknown child subsystem " + cname);
            if (c == static_cast<int>(i)) raise(ErrorKind::Config, "subsystem cannot be its own child");
            // Root holds the highest level; every edge must step down.
            if (g.subs_[static_cast<std::size_t>(c)].level >= g.subs_[i].level) {
                raise(ErrorKind::Config, "child " + cname + " must sit at a strictly lower level than " +
                                             config.subsystems[i].name);
            }
            g.children_[i].push_back(c);
            ++parent_count[static_cast<std::size_t>(c)];
        }
    }
    for (std::size_t i = 0; i < g.subs_.size(); ++i) {
        if (parent_count[i] == 0) {
            if (g.root_idx_ >= 0) raise(ErrorKind::Config, "multiple roots: " + g.subs_[static_cast<std::size_t>(g.root_idx_)].name + " and " + g.subs_[i].name);
            g.root_idx_ = static_cast<int>(i);
        }
    }
    if (g.root_idx_ < 0) raise(ErrorKind::Config, "subsystem graph has a cycle (no root)");

    // Id-sorted topological order, children before parents. Kahn over the
    // reversed edges, always taking the smallest ready id.
    {
        std::vector<int> remaining(g.subs_.size(), 0);
        for (std::size_t i = 0; i < g.subs_.size(); ++i) {
            remaining[i] = static_cast<int>(g.children_[i].size());
        }
        std::vector<bool> emitted(g.subs_.size(), false);
        while (g.topo_up_.size() < g.subs_.size()) {
            int pick = -1;
            for (std::size_t i = 0; i < g.subs_.size(); ++i) {
                if (!emitted[i] && remaining[i] == 0) {
                    pick = static_cast<int>(i);
                    break;
                }
            }
            if (pick < 0) raise(ErrorKind::Config, "subsystem graph has a cycle");
            emitted[static_cast<std::size_t>(pick)] = true;
            g.topo_up_.push_back(pick);
            for (std::size_t i = 0; i < g.subs_.size(); ++i) {
                for (int c : g.children_[i]) {
                    if (c == pick) --remaining[i];
                }
            }
        }
    }

    if (config.motor.empty()) raise(ErrorKind::Config, "agent needs a designated motor subsystem");
    g.motor_idx_ = g.find_subsystem(config.motor);
    if (g.motor_idx_ < 0) raise(ErrorKind::Config, "unknown motor subsystem " + config.motor);
    if (!g.children_[static_cast<std::size_t>(g.motor_idx_)].empty()) {
        raise(ErrorKind::Config, "motor subsystem must be a leaf");
    }

    // Registry slots: own hvars, then each child's hvars plus its reserved
    // error slot, then extero features. This order defines Signal indices.
    for (std::size_t i = 0; i < config.subsystems.size(); ++i) {
        const auto& spec = config.subsystems[i];
        Subsystem& sub = g.subs_[i];
        for (std::size_t h = 0; h < sub.hvars.size(); ++h) {
            Slot sd;
            sd.kind = SlotKind::OwnDrive;
            sd.name = "own:" + sub.hvars[h].id + ":drive";
            sd.own_index = h;
            sub.slots.push_back(sd);
            Slot sv;
            sv.kind = SlotKind::OwnValence;
            sv.name = "own:" + sub.hvars[h].id + ":valence";
            sv.own_index = h;
            sub.slots.push_back(sv);
        }
        for (int c : g.children_[i]) {
            const Subsystem& child = g.subs_[static_cast<std::size_t>(c)];
            for (const auto& ch : child.hvars) {
                Slot sd;
                sd.kind = SlotKind::ChildDrive;
                sd.name = "child:" + child.name + ":" + ch.id + ":drive";
                sd.child = child.name;
                sd.child_hvar = ch.id;
                sd.child_band = ch.band;
                sub.slots.push_back(sd);
                Slot sv;
                sv.kind = SlotKind::ChildValence;
                sv.name = "child:" + child.name + ":" + ch.id + ":valence";
                sv.child = child.name;
                sv.child_hvar = ch.id;
                sub.slots.push_back(sv);
            }
            Slot se;
            se.kind = SlotKind::ChildError;
            se.name = "child:" + child.name + ":error";
            se.child = child.name;
            sub.slots.push_back(se);
        }
        if (static_cast<int>(i) == g.motor_idx_) {
            for (const auto& h : spec.hvars) {
                if (!kMotorHvars.count(h.id)) {
                    raise(ErrorKind::Config, "motor hvar " + h.id + " is not in the fixed action table");
                }
            }
        }
        for (const auto& f : spec.extero) {
            if (!kExteroNames.count(f)) raise(ErrorKind::Config, "unknown extero feature " + f);
            Slot s;
            s.kind = SlotKind::Extero;
            s.name = "ext:" + f;
            s.extero_name = f;
            sub.slots.push_back(s);
        }
        if (sub.slots.empty()) raise(ErrorKind::Config, "subsystem " + sub.name + " has an empty registry");

        // Learned windows mask: own drives and child drives.
        sub.learned_mask.weights.assign(sub.slots.size(), 0.0);
        bool any = false;
        for (std::size_t s = 0; s < sub.slots.size(); ++s) {
            if (sub.slots[s].kind == SlotKind::OwnDrive || sub.slots[s].kind == SlotKind::ChildDrive) {
                sub.learned_mask.weights[s] = 1.0;
                any = true;
            }
        }
        if (!any) sub.learned_mask.weights.clear();
    }

    // Body bindings: at most one hvar of each reserved id across the graph.
    auto bind = [&](const char* id, int& bsub, int& bhvar) {
        for (std::size_t i = 0; i < g.subs_.size(); ++i) {
            for (std::size_t h = 0; h < g.subs_[i].hvars.size(); ++h) {
                if (g.subs_[i].hvars[h].id == id) {
                    if (bsub >= 0) raise(ErrorKind::Config, std::string("hvar id ") + id + " bound twice");
                    bsub = static_cast<int>(i);
                    bhvar = static_cast<int>(h);
                }
            }
        }
    };
    bind("core_temp", g.core_sub_, g.core_hvar_);
    bind("energy", g.energy_sub_, g.energy_hvar_);
    bind("integrity", g.integrity_sub_, g.integrity_hvar_);

    // Bootstrap records become the banks' initial contents (skipped entirely
    // under no_memory).
    if (!ablations.no_memory) {
        for (const auto& bs : config.bootstrap) {
            const int si = g.find_subsystem(bs.subsystem);
            if (si < 0) raise(ErrorKind::Config, "bootstrap names unknown subsystem " + bs.subsystem);
            Subsystem& sub = g.subs_[static_cast<std::size_t>(si)];
            if (!(bs.utility > 0.0)) {
                raise(ErrorKind::Config, "bootstrap record " + bs.label + " needs utility > 0");
            }

            auto slot_index = [&](const std::string& name) -> std::size_t {
                for (std::size_t s = 0; s < sub.slots.size(); ++s) {
                    if (sub.slots[s].name == name) return s;
                }
                raise(ErrorKind::Config, "bootstrap record " + bs.label + " names unknown slot " + name +
                                             " in " + sub.name);
            };

            StateMask mask;
            mask.weights.assign(sub.slots.size(), 0.0);
            for (const auto& [name, w] : bs.mask) mask.weights[slot_index(name)] = w;

            std::size_t len = 0;
            for (const auto& [name, series] : bs.profile) {
                (void)slot_index(name);
                if (series.size() < 2) {
                    raise(ErrorKind::Config, "bootstrap profile " + name + " needs at least 2 values");
                }
                if (len == 0) len = series.size();
                if (series.size() != len) {
                    raise(ErrorKind::Config, "bootstrap record " + bs.label + " has mixed profile lengths");
                }
            }
            if (len == 0) raise(ErrorKind::Config, "bootstrap record " + bs.label + " has no profiles");

            std::vector<TemporalTrace> traces(len);
            for (std::size_t t = 0; t < len; ++t) {
                traces[t].decay = sub.decay;
                traces[t].values.assign(sub.slots.size(), 0.0);
            }
            for (const auto& [name, series] : bs.profile) {
                const std::size_t s = slot_index(name);
                if (bs.profile_as_signal) {
                    double tr = series[0];
                    traces[0].values[s] = tr;
                    for (std::size_t t = 1; t < len; ++t) {
                        tr = (1.0 - sub.decay) * tr + sub.decay * series[t];
                        traces[t].values[s] = tr;
                    }
                } else {
                    for (std::size_t t = 0; t < len; ++t) traces[t].values[s] = series[t];
                }
            }
            TraceTrajectory traj = window_to_trajectory(traces, mask, -1);
            if (sub.bank.size() >= sub.bank.capacity()) {
                raise(ErrorKind::Config, "bootstrap overflows bank capacity of " + sub.name);
            }
            sub.bank.imprint(traj, bs.utility, -1);
        }
    }

    g.abort_err_.assign(g.subs_.size(), 0.0);
    g.intero_span_.assign(g.subs_.size(), {0, 0});
    return g;
}

void AgentGraph::set_body_state(double core_temp, double energy, double integrity) {
    if (core_sub_ >= 0) subs_[static_cast<std::size_t>(core_sub_)].hvars[static_cast<std::size_t>(core_hvar_)].current = core_temp;
    if (energy_sub_ >= 0) subs_[static_cast<std::size_t>(energy_sub_)].hvars[static_cast<std::size_t>(energy_hvar_)].current = energy;
    if (integrity_sub_ >= 0) subs_[static_cast<std::size_t>(integrity_sub_)].hvars[static_cast<std::size_t>(integrity_hvar_)].current = integrity;
}

void AgentGraph::inject(const Injection& inj, std::int64_t now) {
    if (ablations_.no_topdown) return;
    const int si = find_subsystem(inj.subsystem);
    if (si < 0) raise(ErrorKind::Routing, "injection names unknown subsystem " + inj.subsystem);
    HVar* h = subs_[static_cast<std::size_t>(si)].find_hvar(inj.hvar_id);
    if (!h) raise(ErrorKind::Routing, "injection names unknown hvar " + inj.hvar_id);
    Expectation e;
    e.hvar_id = inj.hvar_id;
    e.delta = inj.delta;
    e.horizon = inj.horizon;
    e.issued_tick = now;
    apply_expectation(*h, &e, now);
}

Signal AgentGraph::assemble_state(int idx, const Observation& obs) const {
    const Subsystem& sub = subs_[static_cast<std::size_t>(idx)];
    Signal state(sub.slots.size(), 0.0);
    for (std::size_t s = 0; s < sub.slots.size(); ++s) {
        const Slot& slot = sub.slots[s];
        switch (slot.kind) {
            case SlotKind::OwnDrive:
                // Drive is unbounded; cap the registry copy so one hvar in
                // crisis cannot wash every masked comparison out.
                state[s] = std::min(drive_of(sub.hvars[slot.own_index]), kDriveSlotCap);
                break;
            case SlotKind::OwnValence: {
                const HVar& h = sub.hvars[slot.own_index];
                state[s] = valence(h.prev_current, h.current, h.target_eff);
                break;
            }
            case SlotKind::ChildDrive:
            case SlotKind::ChildValence: {
                // Children stepped earlier this tick; missing signals stay 0.
                const int c = find_subsystem(slot.child);
                const auto [begin, count] = intero_span_[static_cast<std::size_t>(c)];
                for (int k = 0; k < count; ++k) {
                    const InteroSignal& sig = intero_cache_flat_[static_cast<std::size_t>(begin + k)];
                    if (sig.hvar_id == slot.child_hvar) {
                        state[s] = slot.kind == SlotKind::ChildDrive ? std::min(sig.drive, kDriveSlotCap)
                                                                     : sig.valence;
                        break;
                    }
                }
                break;
            }
            case SlotKind::ChildError: {
                const int c = find_subsystem(slot.child);
                state[s] = abort_err_[static_cast<std::size_t>(c)];
                break;
            }
            case SlotKind::Extero: {
                if (slot.extero_name == "ambient") {
                    const double span = norm_.ambient_hi - norm_.ambient_lo;
                    state[s] = std::clamp((obs.ambient - norm_.ambient_lo) / span, 0.0, 1.0);
                } else if (slot.extero_name == "food_here") {
                    state[s] = obs.food_here;
                } else if (slot.extero_name == "looming") {
                    state[s] = std::clamp(obs.looming / norm_.looming_scale, 0.0, 1.5);
                } else {
                    state[s] = std::clamp(obs.looming_rate / norm_.looming_rate_scale, -1.5, 1.5);
                }
                break;
            }
        }
    }
    return state;
}

Action AgentGraph::motor_translate(const Observation& obs) {
    Subsystem& motor = subs_[static_cast<std::size_t>(motor_idx_)];
    const double th = motor.th.motor_threshold;
    auto urge = [&](const char* id) {
        const HVar* h = motor.find_hvar(id);
        return h ? drive_of(*h) : 0.0;
    };
    const double escape = urge("escape_urge");
    const double eat = urge("eat_urge");
    const double warm = urge("warm_urge");
    const double cool = urge("cool_urge");

    // Deterministic outward spiral sweep, shared by food search and by
    // thermal search in a gradient-free (flat) field.
    auto patrol_step = [&]() {
        if (patrol_left_ <= 0) {
            patrol_dir_ = rotate(patrol_dir_);
            if (patrol_grow_) ++patrol_arm_;
            patrol_grow_ = !patrol_grow_;
            patrol_left_ = patrol_arm_;
        }
        --patrol_left_;
        Action m;
        m.kind = ActionKind::Move;
        m.dir = patrol_dir_;
        return m;
    };

    Action a;
    if (escape > th) {
        a.kind = ActionKind::EscapeDash;
    } else if (eat > th && (eat >= warm && eat >= cool)) {
        if (obs.food_here > 0.0) {
            a.kind = ActionKind::Eat;
        } else {
            a = patrol_step();
        }
    } else if (std::max(warm, cool) > th) {
        // Spatial step on the 4-neighbor thermal cue. Parking on a local
        // optimum (no neighbor better, some worse) is what lets a recovery
        // arc finish instead of oscillating across the plateau edge forever.
        const double sign = warm >= cool ? 1.0 : -1.0;
        static constexpr Dir kDirs[4] = {Dir::North, Dir::East, Dir::South, Dir::West};
        int best = -1;
        double best_gain = 1e-9;
        bool any_worse = false;
        for (int i = 0; i < 4; ++i) {
            const double gain = sign * (obs.ambient_nesw[i] - obs.ambient);
            if (gain > best_gain) {
                best = i;
                best_gain = gain;
            }
            if (gain < -1e-9) any_worse = true;
        }
        if (best >= 0) {
            a.kind = ActionKind::Move;
            a.dir = kDirs[best];
        } else if (any_worse) {
            a.kind = ActionKind::Stay;
        } else {
            a = patrol_step();
        }
    } else {
        a.kind = ActionKind::Stay;
    }
    return a;
}

TickResult AgentGraph::tick(const Observation& obs, std::int64_t now) {
    // Deliver last tick's expectations first: emitted at n-1, effective now.
    if (!ablations_.no_topdown) {
        for (const auto& pe : pending_) {
            HVar* h = subs_[static_cast<std::size_t>(pe.sub)].find_hvar(pe.e.hvar_id);
            if (!h) raise(ErrorKind::Routing, "expectation addressed to unknown hvar " + pe.e.hvar_id);
            apply_expectation(*h, &pe.e, now);
        }
    }
    pending_.clear();

    // Upkeep every hvar before any state is assembled, so drives seen by
    // parents and by the subsystem's own step agree.
    for (auto& sub : subs_) {
        for (auto& h : sub.hvars) apply_expectation(h, nullptr, now);
    }

    StepFlags flags;
    flags.allow_imprint = !ablations_.no_memory;
    flags.allow_boost = !ablations_.no_plasticity;

    TickResult result;
    result.outputs.resize(subs_.size());
    intero_cache_flat_.clear();
    std::vector<double> next_abort(subs_.size(), 0.0);

    for (int idx : topo_up_) {
        Signal state = assemble_state(idx, obs);
        StepOutput out = subs_[static_cast<std::size_t>(idx)].step(state, now, flags);
        intero_span_[static_cast<std::size_t>(idx)] = {static_cast<int>(intero_cache_flat_.size()),
                                                       static_cast<int>(out.intero.size())};
        for (const auto& sig : out.intero) intero_cache_flat_.push_back(sig);
        if (out.aborted) next_abort[static_cast<std::size_t>(idx)] = out.prediction_error;
        result.outputs[static_cast<std::size_t>(idx)] = std::move(out);
    }

    // Ignore costs: privileged child trouble left unaddressed by this tick's
    // parent output. Suppressed delivery counts as unaddressed.
    if (!ablations_.no_ignore_cost) {
        for (std::size_t i = 0; i < subs_.size(); ++i) {
            if (children_[i].empty()) continue;
            std::vector<InteroSignal> arrivals;
            for (int c : children_[i]) {
                const auto [begin, count] = intero_span_[static_cast<std::size_t>(c)];
                for (int k = 0; k < count; ++k) {
                    arrivals.push_back(intero_cache_flat_[static_cast<std::size_t>(begin + k)]);
                }
            }
            const auto& sent =
                ablations_.no_topdown ? std::vector<ExpectationOut>{} : result.outputs[i].expectations;
            result.ignore_total += ignore_cost(arrivals, sent, subs_[i].th.ignore_cost_rate);
        }
    }

    // Phase 2: queue expectations for delivery at tick n+1, root to leaves.
    if (!ablations_.no_topdown) {
        for (auto it = topo_up_.rbegin(); it != topo_up_.rend(); ++it) {
            const int idx = *it;
            for (const auto& eo : result.outputs[static_cast<std::size_t>(idx)].expectations) {
                const int c = find_subsystem(eo.child);
                if (c < 0) raise(ErrorKind::Routing, "expectation addressed to unknown subsystem " + eo.child);
                if (!subs_[static_cast<std::size_t>(c)].find_hvar(eo.hvar_id)) {
                    raise(ErrorKind::Routing, "expectation addressed to unknown hvar " + eo.child + ":" + eo.hvar_id);
                }
                PendingExpectation pe;
                pe.sub = c;
                pe.e.hvar_id = eo.hvar_id;
                pe.e.delta = eo.delta;
                pe.e.horizon = eo.horizon;
                pe.e.issued_tick = now + 1; // delivery tick; expiry counts from there
                pending_.push_back(std::move(pe));
            }
        }
    }

    abort_err_ = std::move(next_abort); // root aborts end here (logged upstream)
    result.action = motor_translate(obs);
    return result;
}

} // namespace homeostat
