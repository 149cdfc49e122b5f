#include "support/mutations.hpp"

#include "macsim/mac_checks.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace macsim::testing {

namespace {

using Records = std::vector<TraceRecord>;

std::string str(double v) { return format_double(v); }

// Fault-free broadcasts: bid -> sender.
std::map<BroadcastId, NodeId> ff_broadcasts(const RunTrace& t) {
    std::map<BroadcastId, NodeId> out;
    for (const auto& r : t.records) {
        if (const auto* b = std::get_if<BroadcastRec>(&r.body); b && b->payload) out[b->bid] = b->sender;
    }
    return out;
}

BacRoundEnd* bac_state(RunTrace& t, NodeId node, std::uint32_t round) {
    for (auto& r : t.records) {
        auto* s = std::get_if<StateRec>(&r.body);
        if (!s || s->node != node) continue;
        if (auto* e = std::get_if<BacRoundEnd>(&s->transition); e && e->round == round) return e;
    }
    return nullptr;
}

bool set_level(RunTrace& t, NodeId node, std::uint32_t level, double value) {
    BacRoundEnd* e = bac_state(t, node, level - 1);
    if (!e) return false;
    e->value = value;
    return true;
}

// ---- MAC ----

std::optional<std::string> mutate_ack_ordering(RunTrace& t) {
    const auto ff = fault_free_set(t);
    TraceRecord* earliest = nullptr;
    for (auto& r : t.records) {
        if (std::holds_alternative<AckRec>(r.body) && (!earliest || r.tick < earliest->tick)) earliest = &r;
    }
    if (!earliest) return std::nullopt;
    const BroadcastId bid = std::get<AckRec>(earliest->body).bid;
    Tick last = 0;
    for (const auto& r : t.records) {
        const auto* d = std::get_if<DeliverRec>(&r.body);
        if (d && d->bid == bid && ff.count(d->recipient)) last = std::max(last, r.tick);
    }
    const Tick was = earliest->tick;
    earliest->tick = last;
    return "ACK of bid=" + std::to_string(bid) + " moved from tick " + std::to_string(was) + " to " +
           std::to_string(last);
}

std::optional<std::string> mutate_authentication(RunTrace& t, std::uint32_t n) {
    const auto casts = ff_broadcasts(t);
    for (auto& r : t.records) {
        auto* d = std::get_if<DeliverRec>(&r.body);
        if (!d || !casts.count(d->bid)) continue;
        const NodeId was = d->sender;
        d->sender = (d->sender + 1) % n;
        return "delivery of bid=" + std::to_string(d->bid) + " to " + std::to_string(d->recipient) +
               " relabelled from sender " + std::to_string(was) + " to " + std::to_string(d->sender);
    }
    return std::nullopt;
}

std::optional<std::string> mutate_eventual_delivery(RunTrace& t) {
    const auto ff = fault_free_set(t);
    const auto casts = ff_broadcasts(t);
    for (auto it = t.records.begin(); it != t.records.end(); ++it) {
        const auto* d = std::get_if<DeliverRec>(&it->body);
        if (!d || !casts.count(d->bid) || !ff.count(d->recipient)) continue;
        const std::string site =
            "delivery of bid=" + std::to_string(d->bid) + " to " + std::to_string(d->recipient) + " removed";
        t.records.erase(it);
        return site;
    }
    return std::nullopt;
}

// ---- approximate consensus ----

std::pair<double, double> input_hull(const RunTrace& t) {
    double lo = 1e300, hi = -1e300;
    for (const auto& r : t.records) {
        if (const auto* i = std::get_if<InitRec>(&r.body); i && !i->byzantine) {
            lo = std::min(lo, i->input);
            hi = std::max(hi, i->input);
        }
    }
    return {lo, hi};
}

std::vector<OutputRec*> ff_outputs(RunTrace& t) {
    const auto ff = fault_free_set(t);
    std::vector<OutputRec*> out;
    for (auto& r : t.records) {
        if (auto* o = std::get_if<OutputRec>(&r.body); o && ff.count(o->node)) out.push_back(o);
    }
    return out;
}

std::optional<std::string> mutate_validity(RunTrace& t) {
    const auto [lo, hi] = input_hull(t);
    const double target = lo - 0.5;
    for (OutputRec* o : ff_outputs(t)) o->value = target;
    return "every output set to " + str(target) + ", below the input minimum " + str(lo);
}

std::optional<std::string> mutate_epsilon(RunTrace& t, double epsilon) {
    const auto outs = ff_outputs(t);
    if (outs.size() < 2) return std::nullopt;
    const auto [lo, hi] = input_hull(t);
    OutputRec* victim = outs.front();
    double out_lo = 1e300, out_hi = -1e300;
    for (std::size_t k = 1; k < outs.size(); ++k) {
        out_lo = std::min(out_lo, outs[k]->value);
        out_hi = std::max(out_hi, outs[k]->value);
    }
    const double target = hi - out_lo > out_hi - lo ? hi : lo;
    if (std::max(std::abs(target - out_lo), std::abs(target - out_hi)) <= epsilon + 1e-9) return std::nullopt;
    victim->value = target;
    return "output of node " + std::to_string(victim->node) + " set to hull extreme " + str(target);
}

std::optional<std::string> mutate_range(RunTrace& t, const SimConfig& cfg) {
    const BacMetrics m = bac_metrics(t, cfg);
    const auto& L = m.levels;
    for (std::size_t k = 1; k + 1 < L.size(); ++k) {
        const double s = L[k].spread();
        const double eta = 0.1 * s;
        if (s <= 1e-9 || 1.1 * s > 0.75 * L[k - 1].spread() || L[k].high + eta > L[0].high) continue;
        const NodeId node = L[k + 1].first_ids.front();
        const double target = L[k].high + eta;
        if (!set_level(t, node, static_cast<std::uint32_t>(k + 1), target)) return std::nullopt;
        return "first mover " + std::to_string(node) + " at level " + std::to_string(k + 1) + " set to M+" + str(eta);
    }
    return std::nullopt;
}

std::optional<std::string> mutate_halving(RunTrace& t, const SimConfig& cfg) {
    const BacMetrics m = bac_metrics(t, cfg);
    const auto& L = m.levels;
    for (std::size_t k = 0; k + 1 < L.size(); ++k) {
        const double s = L[k].spread();
        if (s <= 1e-9 || (k > 0 && s > 0.75 * L[k - 1].spread())) continue;
        const auto movers = identify_movers(t, static_cast<std::uint32_t>(k), cfg.f);
        if (movers.second.size() < 2) continue;
        const auto level = static_cast<std::uint32_t>(k + 1);
        set_level(t, movers.second[0], level, L[k].low);
        set_level(t, movers.second[1], level, L[k].high);
        return "second movers " + std::to_string(movers.second[0]) + ", " + std::to_string(movers.second[1]) +
               " at level " + std::to_string(level) + " moved to m and M";
    }
    return std::nullopt;
}

std::optional<std::string> mutate_contraction(RunTrace& t, const SimConfig& cfg) {
    const BacMetrics m = bac_metrics(t, cfg);
    const auto& L = m.levels;
    for (std::size_t k = 0; k + 2 < L.size(); ++k) {
        const double s = L[k].spread();
        if (s <= 1e-9 || (k > 0 && s > 0.75 * L[k - 1].spread())) continue;
        const auto a = identify_movers(t, static_cast<std::uint32_t>(k), cfg.f);
        const auto b = identify_movers(t, static_cast<std::uint32_t>(k + 1), cfg.f);
        if (a.first.size() < 2 || b.first.size() < 2) continue;
        const auto level = static_cast<std::uint32_t>(k + 1);
        set_level(t, a.first[0], level, L[k].low);
        set_level(t, a.first[1], level, L[k].high);
        set_level(t, b.first[0], level + 1, L[k].low);
        set_level(t, b.first[1], level + 1, L[k].high);
        return "first movers at levels " + std::to_string(level) + " and " + std::to_string(level + 1) +
               " stretched back to [m, M] of level " + std::to_string(k);
    }
    return std::nullopt;
}

std::optional<std::string> mutate_termination(RunTrace& t) {
    const auto ff = fault_free_set(t);
    for (auto it = t.records.rbegin(); it != t.records.rend(); ++it) {
        const auto* o = std::get_if<OutputRec>(&it->body);
        if (!o || !ff.count(o->node)) continue;
        const std::string site = "output of node " + std::to_string(o->node) + " removed";
        t.records.erase(std::next(it).base());
        return site;
    }
    return std::nullopt;
}

// ---- binary consensus ----

std::set<std::uint8_t> ff_input_bits(const RunTrace& t) {
    std::set<std::uint8_t> out;
    for (const auto& r : t.records) {
        if (const auto* i = std::get_if<InitRec>(&r.body); i && !i->byzantine) out.insert(i->input >= 0.5 ? 1 : 0);
    }
    return out;
}

std::optional<std::string> mutate_bc_validity(RunTrace& t) {
    const auto outs = ff_outputs(t);
    if (outs.empty()) return std::nullopt;
    const double opposite = outs.front()->value == 1.0 ? 0.0 : 1.0;
    for (auto& r : t.records) {
        if (auto* i = std::get_if<InitRec>(&r.body); i && !i->byzantine) i->input = opposite;
    }
    return "every fault-free input set to " + str(opposite);
}

std::optional<std::string> mutate_bc_agreement(RunTrace& t) {
    const auto outs = ff_outputs(t);
    if (outs.size() < 2 || ff_input_bits(t).size() != 2) return std::nullopt;
    OutputRec* o = outs.back();
    o->value = 1.0 - o->value;
    return "output of node " + std::to_string(o->node) + " flipped";
}

// Fault-free (node, phase, bit) -> tick of the first ACKed AUX broadcast.
std::map<std::tuple<NodeId, std::uint32_t, std::uint8_t>, Tick> aux_done(const RunTrace& t) {
    const auto ff = fault_free_set(t);
    std::map<BroadcastId, Tick> acks;
    for (const auto& r : t.records) {
        if (const auto* a = std::get_if<AckRec>(&r.body)) acks.emplace(a->bid, r.tick);
    }
    std::map<std::tuple<NodeId, std::uint32_t, std::uint8_t>, Tick> out;
    for (const auto& r : t.records) {
        const auto* b = std::get_if<BroadcastRec>(&r.body);
        if (!b || !b->payload || !ff.count(b->sender)) continue;
        const auto* aux = std::get_if<AuxMsg>(&*b->payload);
        const auto it = acks.find(b->bid);
        if (!aux || it == acks.end()) continue;
        const auto key = std::make_tuple(b->sender, aux->phase, aux->bit);
        if (!out.count(key) || it->second < out[key]) out[key] = it->second;
    }
    return out;
}

std::vector<std::pair<TraceRecord*, RbcFreeze*>> singleton_freezes(RunTrace& t, std::uint32_t phase) {
    const auto ff = fault_free_set(t);
    std::vector<std::pair<TraceRecord*, RbcFreeze*>> out;
    for (auto& r : t.records) {
        auto* s = std::get_if<StateRec>(&r.body);
        if (!s || !ff.count(s->node)) continue;
        if (auto* fr = std::get_if<RbcFreeze>(&s->transition); fr && fr->phase == phase && fr->values.size() == 1) {
            out.emplace_back(&r, fr);
        }
    }
    return out;
}

// A real trace never has f+1 completed (AUX, 1-v) broadcasts before a {v} freeze: those AUX
// messages reached the freezing node first. The freeze is therefore also moved past them.
std::optional<std::string> mutate_singleton(RunTrace& t, const SimConfig& cfg) {
    const auto ff = fault_free_set(t);
    const auto done = aux_done(t);
    const RbcMetrics m = rbc_metrics(t);
    for (std::uint32_t p = 0; p <= m.max_phase; ++p) {
        auto freezes = singleton_freezes(t, p);
        if (freezes.size() < 2) continue;
        for (auto& [rec, fr] : freezes) {
            const std::uint8_t flipped = static_cast<std::uint8_t>(1 - fr->values.only());
            std::vector<NodeId> x;
            Tick latest = 0;
            for (NodeId id : ff) {
                const auto it = done.find({id, p, flipped});
                if (it == done.end()) continue;
                x.push_back(id);
                latest = std::max(latest, it->second);
            }
            if (x.size() < std::size_t{cfg.f} + 1) continue;
            const Tick was = rec->tick;
            rec->tick = std::max(rec->tick, latest + 1);
            fr->values = BitSet::of(flipped);
            fr->witness_bit = flipped;
            fr->x = x;
            return "phase " + std::to_string(p) + " freeze at tick " + std::to_string(was) + " flipped to {" +
                   std::to_string(flipped) + "} and moved to tick " + std::to_string(rec->tick);
        }
    }
    return std::nullopt;
}

std::optional<std::string> mutate_quorum(RunTrace& t, const SimConfig& cfg) {
    const RbcMetrics m = rbc_metrics(t);
    for (std::uint32_t p = 0; p <= m.max_phase; ++p) {
        auto freezes = singleton_freezes(t, p);
        if (freezes.empty()) continue;
        freezes.front().second->x = cfg.byzantine_ids;
        return "X of a phase-" + std::to_string(p) + " freeze replaced by the Byzantine ids";
    }
    return std::nullopt;
}

std::optional<std::string> mutate_persistence(RunTrace& t) {
    const auto ff = fault_free_set(t);
    std::map<std::uint32_t, std::vector<RbcPhaseStart*>> starts;
    for (auto& r : t.records) {
        auto* s = std::get_if<StateRec>(&r.body);
        if (!s || !ff.count(s->node)) continue;
        if (auto* ph = std::get_if<RbcPhaseStart>(&s->transition)) starts[ph->phase].push_back(ph);
    }
    std::optional<std::uint32_t> settled;
    for (auto& [phase, list] : starts) {
        if (!settled) {
            const bool same = std::all_of(list.begin(), list.end(),
                                          [&](const RbcPhaseStart* s) { return s->estimate == list.front()->estimate; });
            if (list.size() == ff.size() && same) settled = phase;
            continue;
        }
        if (list.size() < 2) continue;
        list.back()->estimate = static_cast<std::uint8_t>(1 - list.back()->estimate);
        return "one phase-" + std::to_string(phase) + " estimate flipped after phase " + std::to_string(*settled) +
               " settled";
    }
    return std::nullopt;
}

std::optional<std::string> mutate_est_values(RunTrace& t) {
    if (ff_input_bits(t).size() != 1) return std::nullopt;
    const auto ff = fault_free_set(t);
    for (auto& r : t.records) {
        auto* s = std::get_if<StateRec>(&r.body);
        if (!s || !ff.count(s->node)) continue;
        if (auto* ev = std::get_if<RbcEstValue>(&s->transition)) {
            ev->bit = static_cast<std::uint8_t>(1 - ev->bit);
            return "node " + std::to_string(s->node) + " phase " + std::to_string(ev->phase) + " EST_VALUE flipped";
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<std::string> mac_checks() { return {"ack_ordering", "authentication", "eventual_delivery"}; }

std::vector<std::string> bac_checks() {
    auto out = mac_checks();
    for (const char* c : {"validity", "epsilon_agreement", "range", "halving", "contraction", "termination"}) {
        out.emplace_back(c);
    }
    return out;
}

std::vector<std::string> rbc_checks() {
    auto out = mac_checks();
    for (const char* c :
         {"bc_validity", "bc_agreement", "singleton_lemma", "quorum_claim", "persistence", "est_values_safety"}) {
        out.emplace_back(c);
    }
    return out;
}

CheckReport check_protocol(const RunTrace& trace, const SimConfig& cfg) {
    return cfg.protocol == Protocol::Bac ? check_bac_trace(trace, cfg) : check_rbc_trace(trace, cfg);
}

std::optional<Mutant> mutate(const RunTrace& trace, const SimConfig& cfg, const std::string& check) {
    Mutant m;
    m.check = check;
    m.cfg = cfg;
    m.golden = trace;
    m.mutated = trace;
    RunTrace& t = m.mutated;
    std::optional<std::string> site;
    if (check == "ack_ordering") site = mutate_ack_ordering(t);
    else if (check == "authentication") site = mutate_authentication(t, cfg.n);
    else if (check == "eventual_delivery") site = mutate_eventual_delivery(t);
    else if (check == "validity") site = mutate_validity(t);
    else if (check == "epsilon_agreement") site = mutate_epsilon(t, cfg.epsilon);
    else if (check == "range") site = mutate_range(t, cfg);
    else if (check == "halving") site = mutate_halving(t, cfg);
    else if (check == "contraction") site = mutate_contraction(t, cfg);
    else if (check == "termination") site = mutate_termination(t);
    else if (check == "bc_validity") site = mutate_bc_validity(t);
    else if (check == "bc_agreement") site = mutate_bc_agreement(t);
    else if (check == "singleton_lemma") site = mutate_singleton(t, cfg);
    else if (check == "quorum_claim") site = mutate_quorum(t, cfg);
    else if (check == "persistence") site = mutate_persistence(t);
    else if (check == "est_values_safety") site = mutate_est_values(t);
    else throw std::invalid_argument("no mutation for check " + check);
    if (!site) return std::nullopt;
    m.site = *site;
    return m;
}

namespace {

std::vector<SimConfig> candidates(Protocol protocol, const std::string& check) {
    std::vector<SimConfig> out;
    const bool unanimous = check == "persistence" || check == "est_values_safety";
    const std::vector<AdversaryKind> advs =
        protocol == Protocol::Bac
            ? std::vector<AdversaryKind>{AdversaryKind::RandomByzantine, AdversaryKind::Extremist,
                                         AdversaryKind::Equivocator}
            : std::vector<AdversaryKind>{AdversaryKind::Equivocator, AdversaryKind::Silent, AdversaryKind::CoinOpposer};
    const std::vector<SchedulePolicy> scheds{SchedulePolicy::MaxAdversarial, SchedulePolicy::UniformRandom};
    const std::vector<std::string> inputs = protocol == Protocol::Bac ? std::vector<std::string>{"uniform"}
                                            : unanimous               ? std::vector<std::string>{"zeros"}
                                                                      : std::vector<std::string>{"bits", "split"};
    for (std::uint32_t f : {1u, 2u}) {
        for (const auto& in : inputs) {
            for (AdversaryKind a : advs) {
                for (SchedulePolicy s : scheds) {
                    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
                        SimConfig c;
                        c.protocol = protocol;
                        c.f = f;
                        c.n = min_nodes(protocol, f);
                        c.byzantine_ids = default_byzantine_ids(c.n, f);
                        c.seed = seed;
                        c.adversary.kind = a;
                        c.schedule = s;
                        c.inputs = make_inputs(c, in);
                        out.push_back(c);
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace

Mutant find_mutant(Protocol protocol, const std::string& check) {
    for (const SimConfig& cfg : candidates(protocol, check)) {
        const RunResult res = run_experiment(cfg);
        if (res.status != RunStatus::Completed || !res.report.passed()) continue;
        if (auto m = mutate(res.trace, cfg, check)) return *m;
    }
    throw std::runtime_error("no golden trace with a mutation site for " + check);
}

}  // namespace macsim::testing
