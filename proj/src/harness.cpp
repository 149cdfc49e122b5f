#include "macsim/harness.hpp"

#include "macsim/bac.hpp"
#include "macsim/engine.hpp"
#include "macsim/mac_checks.hpp"
#include "macsim/rbc.hpp"

#include <algorithm>
#include <deque>
#include <memory>
#include <set>
#include <sstream>

namespace macsim {

namespace {

std::string num(double v) { return format_double(v); }

std::string ids_text(const std::vector<NodeId>& ids) {
    std::string out = "{";
    for (std::size_t k = 0; k < ids.size(); ++k) out += (k ? "," : "") + std::to_string(ids[k]);
    return out + "}";
}

// BAC round broadcasts of fault-free nodes: bid -> (sender, round).
std::map<BroadcastId, std::pair<NodeId, std::uint32_t>> bac_broadcasts(const RunTrace& trace,
                                                                      const std::set<NodeId>& ff) {
    std::map<BroadcastId, std::pair<NodeId, std::uint32_t>> out;
    for (const auto& r : trace.records) {
        const auto* b = std::get_if<BroadcastRec>(&r.body);
        if (!b || !b->payload || !ff.count(b->sender)) continue;
        if (const auto* m = std::get_if<BacRoundMsg>(&*b->payload)) out[b->bid] = {b->sender, m->round};
    }
    return out;
}

std::map<BroadcastId, Tick> ack_ticks(const RunTrace& trace) {
    std::map<BroadcastId, Tick> out;
    for (const auto& r : trace.records) {
        if (const auto* a = std::get_if<AckRec>(&r.body)) out.emplace(a->bid, r.tick);
    }
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2;
}

// Per fault-free node: value after each level, level 0 = input.
std::map<NodeId, std::vector<double>> level_values(const RunTrace& trace, const std::set<NodeId>& ff) {
    std::map<NodeId, std::vector<double>> out;
    for (const auto& r : trace.records) {
        if (const auto* i = std::get_if<InitRec>(&r.body); i && ff.count(i->node)) out[i->node] = {i->input};
        if (const auto* s = std::get_if<StateRec>(&r.body)) {
            const auto* e = std::get_if<BacRoundEnd>(&s->transition);
            if (!e || !ff.count(s->node)) continue;
            auto& vals = out[s->node];
            if (vals.size() == std::size_t{e->round} + 1) vals.push_back(e->value);
        }
    }
    return out;
}

struct MoverTable {
    std::map<std::uint32_t, std::vector<std::pair<Tick, NodeId>>> completions;  // round -> (ack, node)
};

MoverTable mover_table(const RunTrace& trace, const std::set<NodeId>& ff) {
    MoverTable t;
    const auto casts = bac_broadcasts(trace, ff);
    const auto acks = ack_ticks(trace);
    std::set<std::pair<std::uint32_t, NodeId>> seen;
    for (const auto& [bid, who] : casts) {
        const auto it = acks.find(bid);
        if (it == acks.end() || !seen.insert({who.second, who.first}).second) continue;
        t.completions[who.second].emplace_back(it->second, who.first);
    }
    for (auto& [_, v] : t.completions) std::sort(v.begin(), v.end());
    return t;
}

MoverSplit split_movers(const MoverTable& t, std::uint32_t round, std::uint32_t f, const std::set<NodeId>& ff) {
    const auto it = t.completions.find(round);
    std::set<NodeId> done;
    if (it != t.completions.end()) {
        for (const auto& [_, node] : it->second) done.insert(node);
    }
    for (NodeId id : ff) {
        if (!done.count(id)) throw IncompleteRound(round, id);
    }
    MoverSplit s;
    const std::size_t first = std::min<std::size_t>(2 * std::size_t{f} + 1, ff.size());
    for (const auto& [_, node] : it->second) (s.first.size() < first ? s.first : s.second).push_back(node);
    return s;
}

}  // namespace

MoverSplit identify_movers(const RunTrace& trace, std::uint32_t round, std::uint32_t f) {
    const auto ff = fault_free_set(trace);
    return split_movers(mover_table(trace, ff), round, f, ff);
}

BacMetrics bac_metrics(const RunTrace& trace, const SimConfig& cfg) {
    BacMetrics m;
    m.p_end = p_end_for(cfg.epsilon);
    const auto ff = fault_free_set(trace);
    if (ff.empty()) return m;
    const auto values = level_values(trace, ff);
    const auto movers = mover_table(trace, ff);

    std::size_t complete = SIZE_MAX;
    for (const auto& [_, v] : values) complete = std::min(complete, v.size());
    if (complete > 1) m.last_round = static_cast<std::uint32_t>(complete - 2);

    for (std::uint32_t k = 0; k < complete; ++k) {
        BacLevel lvl;
        lvl.level = k;
        lvl.low = lvl.high = values.begin()->second[k];
        for (const auto& [_, v] : values) {
            lvl.low = std::min(lvl.low, v[k]);
            lvl.high = std::max(lvl.high, v[k]);
        }
        if (k > 0) {
            try {
                const auto split = split_movers(movers, k - 1, cfg.f, ff);
                lvl.first_ids = split.first;
                for (NodeId id : split.first) lvl.first_values.push_back(values.at(id)[k]);
                for (NodeId id : split.second) lvl.second_values.push_back(values.at(id)[k]);
                lvl.first_median = median(lvl.first_values);
            } catch (const IncompleteRound&) {
                break;
            }
        }
        m.levels.push_back(std::move(lvl));
    }

    double sum = 0.0;
    for (std::size_t k = 0; k + 2 < m.levels.size(); ++k) {
        const double s0 = m.levels[k].spread();
        if (s0 <= 1e-9) continue;
        const double ratio = m.levels[k + 2].spread() / s0;
        m.max_contraction = std::max(m.max_contraction, ratio);
        sum += ratio;
        ++m.contraction_samples;
    }
    if (m.contraction_samples) m.mean_contraction = sum / static_cast<double>(m.contraction_samples);

    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& r : trace.records) {
        const auto* o = std::get_if<OutputRec>(&r.body);
        if (!o || !ff.count(o->node)) continue;
        lo = any ? std::min(lo, o->value) : o->value;
        hi = any ? std::max(hi, o->value) : o->value;
        any = true;
    }
    m.output_spread = hi - lo;
    return m;
}

CheckReport check_bac_trace(const RunTrace& trace, const SimConfig& cfg) {
    CheckReport rep;
    check_mac_semantics(trace, rep);
    for (const char* name : {"validity", "epsilon_agreement", "range", "halving", "contraction", "termination"}) {
        rep.add(name);
    }

    const auto ff = fault_free_set(trace);
    const auto p_end = p_end_for(cfg.epsilon);

    // Validity: every fault-free state and output inside the hull of fault-free inputs.
    double in_lo = 0.0, in_hi = 0.0;
    bool any_input = false;
    for (const auto& r : trace.records) {
        if (const auto* i = std::get_if<InitRec>(&r.body); i && !i->byzantine) {
            in_lo = any_input ? std::min(in_lo, i->input) : i->input;
            in_hi = any_input ? std::max(in_hi, i->input) : i->input;
            any_input = true;
        }
    }
    std::map<NodeId, std::vector<std::pair<Tick, double>>> outputs;
    std::map<NodeId, std::uint32_t> last_round;
    for (const auto& r : trace.records) {
        if (const auto* s = std::get_if<StateRec>(&r.body); s && ff.count(s->node)) {
            if (const auto* e = std::get_if<BacRoundEnd>(&s->transition)) {
                last_round[s->node] = std::max(last_round[s->node], e->round);
                if (e->value < in_lo - kTolerance || e->value > in_hi + kTolerance) {
                    rep.fail("validity", r.tick,
                             "node " + std::to_string(s->node) + " round " + std::to_string(e->round) + " value " +
                                 num(e->value) + " outside input hull [" + num(in_lo) + ", " + num(in_hi) + "]");
                }
            }
        } else if (const auto* o = std::get_if<OutputRec>(&r.body); o && ff.count(o->node)) {
            outputs[o->node].emplace_back(r.tick, o->value);
            if (o->value < in_lo - kTolerance || o->value > in_hi + kTolerance) {
                rep.fail("validity", r.tick,
                         "node " + std::to_string(o->node) + " outputs " + num(o->value) + " outside input hull [" +
                             num(in_lo) + ", " + num(in_hi) + "]");
            }
        }
    }

    // Termination: one output per fault-free node, after exactly rounds 0..p_end.
    for (NodeId id : ff) {
        const auto it = outputs.find(id);
        if (it == outputs.end() || it->second.size() != 1) {
            rep.fail("termination", std::nullopt,
                     "node " + std::to_string(id) + " has " +
                         std::to_string(it == outputs.end() ? 0 : it->second.size()) + " outputs");
        } else if (!last_round.count(id) || last_round[id] != p_end) {
            rep.fail("termination", it->second.front().first,
                     "node " + std::to_string(id) + " outputs after round " +
                         (last_round.count(id) ? std::to_string(last_round[id]) : std::string("none")) +
                         ", expected round " + std::to_string(p_end));
        }
    }

    // Epsilon-agreement over the outputs present.
    if (!outputs.empty()) {
        double lo = 0.0, hi = 0.0;
        bool any = false;
        NodeId lo_id = 0, hi_id = 0;
        for (const auto& [id, list] : outputs) {
            for (const auto& [_, v] : list) {
                if (!any || v < lo) lo = v, lo_id = id;
                if (!any || v > hi) hi = v, hi_id = id;
                any = true;
            }
        }
        if (hi - lo > cfg.epsilon + kTolerance) {
            rep.fail("epsilon_agreement", std::nullopt,
                     "outputs " + num(lo) + " (node " + std::to_string(lo_id) + ") and " + num(hi) + " (node " +
                         std::to_string(hi_id) + ") differ by " + num(hi - lo) + " > epsilon " + num(cfg.epsilon));
        }
    }

    // Lemma checks, level by level over the levels every fault-free node reached.
    const BacMetrics m = bac_metrics(trace, cfg);
    const auto values = level_values(trace, ff);
    const auto& L = m.levels;
    for (std::size_t k = 0; k + 1 < L.size(); ++k) {
        const BacLevel& cur = L[k];
        const BacLevel& next = L[k + 1];
        for (const auto& [id, v] : values) {
            const double x = v[k + 1];
            if (x < cur.low - kTolerance || x > cur.high + kTolerance) {
                const bool first = std::find(next.first_ids.begin(), next.first_ids.end(), id) != next.first_ids.end();
                rep.fail("range", std::nullopt,
                         "round " + std::to_string(k) + ": " + (first ? "first" : "second") + " mover " +
                             std::to_string(id) + " ends at " + num(x) + " outside [m, M] = [" + num(cur.low) + ", " +
                             num(cur.high) + "]");
            }
        }
        if (next.second_values.size() > 1) {
            const auto [lo, hi] = std::minmax_element(next.second_values.begin(), next.second_values.end());
            if (*hi - *lo > cur.spread() / 2 + kTolerance) {
                rep.fail("halving", std::nullopt,
                         "round " + std::to_string(k) + ": second movers span " + num(*hi - *lo) + " > half of " +
                             num(cur.spread()) + " (first movers " + ids_text(next.first_ids) + ")");
            }
        }
        if (k + 2 < L.size()) {
            const double later = L[k + 2].spread();
            if (later > 0.75 * cur.spread() + kTolerance) {
                rep.fail("contraction", std::nullopt,
                         "levels " + std::to_string(k) + " -> " + std::to_string(k + 2) + ": spread " +
                             num(cur.spread()) + " -> " + num(later) + " exceeds 3/4");
            }
        }
    }
    return rep;
}

RbcMetrics rbc_metrics(const RunTrace& trace) {
    RbcMetrics m;
    const auto ff = fault_free_set(trace);
    std::map<NodeId, std::uint32_t> last_freeze;
    for (const auto& r : trace.records) {
        if (const auto* s = std::get_if<StateRec>(&r.body); s && ff.count(s->node)) {
            if (const auto* fr = std::get_if<RbcFreeze>(&s->transition)) {
                last_freeze[s->node] = fr->phase;
                m.freezes.push_back(FreezeEvent{r.tick, s->node, *fr});
            } else if (const auto* ph = std::get_if<RbcPhaseStart>(&s->transition)) {
                m.max_phase = std::max(m.max_phase, ph->phase);
            }
        } else if (const auto* o = std::get_if<OutputRec>(&r.body); o && ff.count(o->node)) {
            if (last_freeze.count(o->node)) m.decision_phase.emplace(o->node, last_freeze[o->node]);
        }
    }
    for (const auto& [_, p] : m.decision_phase) {
        m.first_decision_phase = std::min(m.first_decision_phase.value_or(p), p);
    }
    if (!ff.empty() && m.decision_phase.size() == ff.size()) {
        std::uint32_t worst = 0;
        for (const auto& [_, p] : m.decision_phase) worst = std::max(worst, p);
        m.all_decided_phase = worst;
    }
    return m;
}

CheckReport check_rbc_trace(const RunTrace& trace, const SimConfig& cfg) {
    CheckReport rep;
    check_mac_semantics(trace, rep);
    for (const char* name :
         {"bc_validity", "bc_agreement", "singleton_lemma", "quorum_claim", "persistence", "est_values_safety"}) {
        rep.add(name);
    }
    const auto ff = fault_free_set(trace);

    std::set<std::uint8_t> inputs;
    for (const auto& r : trace.records) {
        if (const auto* i = std::get_if<InitRec>(&r.body); i && !i->byzantine) {
            inputs.insert(static_cast<std::uint8_t>(i->input >= 0.5 ? 1 : 0));
        }
    }

    // Fault-free AUX broadcasts and when they completed.
    std::map<BroadcastId, std::tuple<NodeId, std::uint32_t, std::uint8_t>> aux_casts;
    std::map<std::tuple<NodeId, std::uint32_t, std::uint8_t>, Tick> aux_done;
    const auto acks = ack_ticks(trace);
    for (const auto& r : trace.records) {
        const auto* b = std::get_if<BroadcastRec>(&r.body);
        if (!b || !b->payload || !ff.count(b->sender)) continue;
        if (const auto* a = std::get_if<AuxMsg>(&*b->payload)) {
            const auto key = std::make_tuple(b->sender, a->phase, a->bit);
            if (const auto it = acks.find(b->bid); it != acks.end()) {
                const auto [pos, fresh] = aux_done.emplace(key, it->second);
                if (!fresh) pos->second = std::min(pos->second, it->second);
            }
        }
    }

    std::optional<std::pair<NodeId, std::uint8_t>> first_output;
    std::map<std::uint32_t, std::map<NodeId, std::uint8_t>> phase_est;
    std::map<std::uint32_t, std::pair<NodeId, std::uint8_t>> singleton;
    std::vector<std::tuple<Tick, NodeId, RbcEstValue>> est_values;

    for (const auto& r : trace.records) {
        if (const auto* o = std::get_if<OutputRec>(&r.body); o && ff.count(o->node)) {
            const auto bit = static_cast<std::uint8_t>(o->value >= 0.5 ? 1 : 0);
            if ((o->value != 0.0 && o->value != 1.0) || !inputs.count(bit)) {
                rep.fail("bc_validity", r.tick,
                         "node " + std::to_string(o->node) + " outputs " + num(o->value) +
                             ", which no fault-free node proposed");
            }
            if (!first_output) {
                first_output = {o->node, bit};
            } else if (first_output->second != bit) {
                rep.fail("bc_agreement", r.tick,
                         "node " + std::to_string(o->node) + " outputs " + std::to_string(bit) + " but node " +
                             std::to_string(first_output->first) + " output " +
                             std::to_string(first_output->second));
            }
            continue;
        }
        const auto* s = std::get_if<StateRec>(&r.body);
        if (!s || !ff.count(s->node)) continue;

        if (const auto* ph = std::get_if<RbcPhaseStart>(&s->transition)) {
            phase_est[ph->phase][s->node] = ph->estimate;
        } else if (const auto* ev = std::get_if<RbcEstValue>(&s->transition)) {
            est_values.emplace_back(r.tick, s->node, *ev);
        } else if (const auto* fr = std::get_if<RbcFreeze>(&s->transition)) {
            if (fr->values.size() != 1) continue;
            const std::uint8_t v = fr->values.only();
            const auto [pos, fresh] = singleton.emplace(fr->phase, std::make_pair(s->node, v));
            if (!fresh && pos->second.second != v) {
                rep.fail("singleton_lemma", r.tick,
                         "phase " + std::to_string(fr->phase) + ": node " + std::to_string(s->node) +
                             " freezes {" + std::to_string(v) + "} but node " + std::to_string(pos->second.first) +
                             " froze {" + std::to_string(pos->second.second) + "}");
            }
            std::size_t backed = 0;
            for (NodeId x : fr->x) {
                if (!ff.count(x)) continue;
                const auto it = aux_done.find({x, fr->phase, v});
                if (it != aux_done.end() && it->second < r.tick) ++backed;
            }
            if (backed < std::size_t{cfg.f} + 1) {
                rep.fail("quorum_claim", r.tick,
                         "node " + std::to_string(s->node) + " phase " + std::to_string(fr->phase) + " freezes {" +
                             std::to_string(v) + "} with X=" + ids_text(fr->x) + " holding only " +
                             std::to_string(backed) + " fault-free completed (AUX, " + std::to_string(v) +
                             ") broadcasts");
            }
        }
    }

    for (const auto& [tick, node, ev] : est_values) {
        const auto it = phase_est.find(ev.phase);
        bool proposed = false;
        if (it != phase_est.end()) {
            for (const auto& [_, est] : it->second) proposed = proposed || est == ev.bit;
        }
        if (!proposed) {
            rep.fail("est_values_safety", tick,
                     "node " + std::to_string(node) + " adds " + std::to_string(ev.bit) + " to est_values of phase " +
                         std::to_string(ev.phase) + " but no fault-free node proposed it");
        }
    }

    std::optional<std::pair<std::uint32_t, std::uint8_t>> settled;
    for (const auto& [phase, ests] : phase_est) {
        if (settled) {
            for (const auto& [node, est] : ests) {
                if (est != settled->second) {
                    rep.fail("persistence", std::nullopt,
                             "all fault-free nodes began phase " + std::to_string(settled->first) + " with " +
                                 std::to_string(settled->second) + " but node " + std::to_string(node) +
                                 " begins phase " + std::to_string(phase) + " with " + std::to_string(est));
                }
            }
            continue;
        }
        if (ests.size() != ff.size()) continue;
        const auto v = ests.begin()->second;
        if (std::all_of(ests.begin(), ests.end(), [&](const auto& e) { return e.second == v; })) settled = {{phase, v}};
    }
    return rep;
}

CheckReport check_trace(const RunTrace& trace) {
    const SimConfig cfg = config_from_json(trace.config);
    return cfg.protocol == Protocol::Bac ? check_bac_trace(trace, cfg) : check_rbc_trace(trace, cfg);
}

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "completed";
        case RunStatus::EventCap: return "event_cap";
        case RunStatus::PhaseCap: return "phase_cap";
        case RunStatus::Stalled: return "stalled";
    }
    return "unknown";
}

namespace {

std::unique_ptr<NodeDriver> make_driver(const SimConfig& cfg) {
    if (cfg.protocol == Protocol::Bac) return std::make_unique<BacDriver>(cfg);
    return std::make_unique<RbcDriver>(cfg);
}

struct Execution {
    RunTrace trace;
    RunStatus status = RunStatus::Completed;
    std::string error;
    std::uint64_t events = 0;
};

Execution execute(const SimConfig& cfg) {
    Execution ex;
    auto driver = make_driver(cfg);
    Engine engine(cfg, *driver);
    try {
        engine.run_to_completion([&] { return driver->all_output(); });
        if (!engine.halted()) {
            ex.status = RunStatus::Stalled;
            ex.error = "event queue drained before every fault-free node produced an output";
        }
    } catch (const EventCapExceeded& e) {
        ex.status = RunStatus::EventCap;
        ex.error = e.what();
    } catch (const PhaseCapExceeded& e) {
        ex.status = RunStatus::PhaseCap;
        ex.error = e.what();
    }
    ex.events = engine.dispatched();
    ex.trace = engine.take_trace();
    return ex;
}

}  // namespace

RunTrace simulate(const SimConfig& cfg) {
    validate(cfg);
    auto driver = make_driver(cfg);
    Engine engine(cfg, *driver);
    engine.run_to_completion([&] { return driver->all_output(); });
    return engine.take_trace();
}

RunResult run_experiment(const SimConfig& cfg) {
    validate(cfg);
    RunResult res;
    res.cfg = cfg;
    Execution ex = execute(cfg);
    res.status = ex.status;
    res.error = std::move(ex.error);
    res.events = ex.events;
    res.trace = std::move(ex.trace);
    if (cfg.protocol == Protocol::Bac) {
        res.report = check_bac_trace(res.trace, cfg);
        res.bac = bac_metrics(res.trace, cfg);
    } else {
        res.report = check_rbc_trace(res.trace, cfg);
        res.rbc = rbc_metrics(res.trace);
    }
    return res;
}

ReplayOutcome replay_trace(const std::string& stored_text) {
    std::istringstream in(stored_text);
    const RunTrace stored = parse_trace(in);
    const SimConfig cfg = config_from_json(stored.config);
    validate(cfg);
    const std::string fresh = to_text(execute(cfg).trace);

    std::istringstream a(stored_text), b(fresh);
    std::string la, lb;
    ReplayOutcome out;
    std::size_t line = 0;
    while (true) {
        const bool ha = static_cast<bool>(std::getline(a, la));
        const bool hb = static_cast<bool>(std::getline(b, lb));
        ++line;
        if (!ha && !hb) break;
        if (ha != hb || la != lb) {
            out.identical = false;
            out.line = line;
            out.expected = hb ? lb : "<end of trace>";
            out.actual = ha ? la : "<end of trace>";
            break;
        }
    }
    return out;
}

// ---- replay consistency ----

namespace {

struct Emitted {
    enum Kind { Broadcast, State, Output } kind;
    Payload payload;
    std::uint64_t tag = 0;
    Transition transition;
    double value = 0.0;
};

std::string describe(const Emitted& e) {
    switch (e.kind) {
        case Emitted::Broadcast: return "BCAST " + format_payload(e.payload);
        case Emitted::State: {
            TraceRecord r{0, StateRec{0, e.transition}};
            const auto text = format_record(r);
            return text.substr(text.find("STATE 0 ") + 8);
        }
        case Emitted::Output: return "OUTPUT " + format_double(e.value);
    }
    return "";
}

}  // namespace

CheckReport check_replay_consistency(const RunTrace& trace) {
    CheckReport rep;
    rep.add("replay_consistency");
    SimConfig cfg;
    try {
        cfg = config_from_json(trace.config);
    } catch (const ConfigError& e) {
        rep.fail("replay_consistency", std::nullopt, e.what());
        return rep;
    }
    auto driver = make_driver(cfg);
    const auto ff = fault_free_set(trace);
    std::map<BroadcastId, std::uint64_t> tag_of;
    std::map<NodeId, std::deque<Emitted>> expected;  // emitted but not yet matched, per node

    auto feed = [&](NodeId node, Effects effects) {
        for (auto& a : effects) {
            Emitted e{};
            if (auto* b = std::get_if<BroadcastAction>(&a)) {
                e.kind = Emitted::Broadcast;
                e.payload = b->payload;
                e.tag = b->tag;
            } else if (auto* t = std::get_if<Transition>(&a)) {
                e.kind = Emitted::State;
                e.transition = *t;
            } else {
                e.kind = Emitted::Output;
                e.value = std::get<OutputAction>(a).value;
            }
            expected[node].push_back(std::move(e));
        }
    };
    auto pending = [&](NodeId node, Tick tick) {
        auto& q = expected[node];
        if (!q.empty()) {
            rep.fail("replay_consistency", tick,
                     "node " + std::to_string(node) + " should have emitted " + describe(q.front()) +
                         " before its next event");
            return true;
        }
        return false;
    };
    auto match = [&](NodeId node, Tick tick, const Emitted& got) {
        auto& q = expected[node];
        if (q.empty()) {
            rep.fail("replay_consistency", tick,
                     "node " + std::to_string(node) + " records " + describe(got) + " that the state machine never emits");
            return false;
        }
        const Emitted want = q.front();
        q.pop_front();
        bool same = want.kind == got.kind;
        if (same && want.kind == Emitted::Broadcast) same = want.payload == got.payload;
        if (same && want.kind == Emitted::State) same = want.transition == got.transition;
        if (same && want.kind == Emitted::Output) same = want.value == got.value;
        if (!same) {
            rep.fail("replay_consistency", tick,
                     "node " + std::to_string(node) + " records " + describe(got) + ", state machine emits " +
                         describe(want));
        }
        return same;
    };

    try {
        for (const auto& r : trace.records) {
            if (std::holds_alternative<HaltRec>(r.body)) break;
            if (const auto* s = std::get_if<StartRec>(&r.body)) {
                if (!ff.count(s->node) || pending(s->node, r.tick)) break;
                feed(s->node, driver->on_start(s->node));
            } else if (const auto* d = std::get_if<DeliverRec>(&r.body)) {
                if (!ff.count(d->recipient)) continue;
                if (pending(d->recipient, r.tick)) break;
                feed(d->recipient, driver->on_deliver(d->recipient, d->sender, d->payload));
            } else if (const auto* a = std::get_if<AckRec>(&r.body)) {
                if (!ff.count(a->sender)) continue;
                if (pending(a->sender, r.tick)) break;
                const auto it = tag_of.find(a->bid);
                if (it == tag_of.end()) {
                    rep.fail("replay_consistency", r.tick, "ACK for unknown broadcast bid=" + std::to_string(a->bid));
                    break;
                }
                feed(a->sender, driver->on_ack(a->sender, it->second));
            } else if (const auto* b = std::get_if<BroadcastRec>(&r.body)) {
                if (!ff.count(b->sender) || !b->payload) continue;
                const auto& q = expected[b->sender];
                const std::uint64_t tag = q.empty() ? 0 : q.front().tag;
                Emitted got{};
                got.kind = Emitted::Broadcast;
                got.payload = *b->payload;
                if (!match(b->sender, r.tick, got)) break;
                tag_of[b->bid] = tag;
            } else if (const auto* st = std::get_if<StateRec>(&r.body)) {
                Emitted got{};
                got.kind = Emitted::State;
                got.transition = st->transition;
                if (!match(st->node, r.tick, got)) break;
            } else if (const auto* o = std::get_if<OutputRec>(&r.body)) {
                Emitted got{};
                got.kind = Emitted::Output;
                got.value = o->value;
                if (!match(o->node, r.tick, got)) break;
            }
        }
    } catch (const PhaseCapExceeded&) {
        // The recorded run stopped at the same point.
    }
    if (rep.passed()) {
        for (const auto& [node, q] : expected) {
            if (!q.empty()) {
                rep.fail("replay_consistency", std::nullopt,
                         "node " + std::to_string(node) + " should have emitted " + describe(q.front()));
                break;
            }
        }
    }
    return rep;
}

}  // namespace macsim
