#include "macsim/engine.hpp"

#include <algorithm>
#include <unordered_set>

namespace macsim {

Engine::Engine(const SimConfig& cfg, NodeDriver& driver)
    : cfg_(cfg),
      driver_(driver),
      scheduler_(cfg),
      adversary_rng_(make_stream(cfg.seed, Stream::Adversary)),
      byzantine_(cfg.n, false),
      slow_(cfg.n, false) {
    for (NodeId id : cfg_.byzantine_ids) byzantine_[id] = true;
    if (cfg_.schedule == SchedulePolicy::MoverSkew) {
        const auto slow = cfg_.slow_nodes.empty() ? default_slow_nodes(cfg_) : cfg_.slow_nodes;
        for (NodeId id : slow) slow_[id] = true;
        for (NodeId id = 0; id < cfg_.n; ++id) fast_count_ += (!byzantine_[id] && !slow_[id]) ? 1 : 0;
    }
    trace_.config = to_json(cfg_);
    for (NodeId id = 0; id < cfg_.n; ++id) {
        const double input = id < cfg_.inputs.size() ? cfg_.inputs[id] : 0.0;
        record(InitRec{id, byzantine_[id], input});
    }
    for (NodeId id = 0; id < cfg_.n; ++id) {
        if (!byzantine_[id]) enqueue(Tick{id} * cfg_.start_stagger, EventKind::Start, id);
    }
}

void Engine::enqueue(Tick due, EventKind kind, std::uint64_t ref) {
    queue_.push(QueuedEvent{due, next_seq_++, kind, ref});
}

void Engine::record(RecordBody body) { trace_.records.push_back(TraceRecord{now_, std::move(body)}); }

AdversaryView Engine::make_view() const {
    AdversaryView v;
    v.n = cfg_.n;
    v.f = cfg_.f;
    for (NodeId id = 0; id < cfg_.n; ++id) (byzantine_[id] ? v.byzantine : v.fault_free).push_back(id);
    v.values.assign(cfg_.n, 0.0);
    v.progress.assign(cfg_.n, 0);
    driver_.fill_view(v);
    v.pending_events = queue_.size();
    return v;
}

BroadcastId Engine::mac_broadcast(NodeId sender, const Payload& payload, std::uint64_t tag) {
    const BroadcastId bid = broadcasts_.size();
    std::optional<std::uint32_t> round;
    if (const auto* m = std::get_if<BacRoundMsg>(&payload)) round = m->round;
    broadcasts_.push_back(BroadcastState{sender, tag, false, round});
    record(BroadcastRec{sender, bid, payload});

    std::vector<PendingEnvelope> candidates;
    candidates.reserve(cfg_.n);
    for (NodeId r = 0; r < cfg_.n; ++r) {
        candidates.push_back(PendingEnvelope{envelopes_.size() + r, sender, r, payload});
    }
    std::unordered_set<EnvelopeId> nominated;
    if (scheduler_.policy() == SchedulePolicy::MaxAdversarial) {
        for (EnvelopeId id : corrupt_schedule(cfg_.adversary, make_view(), candidates)) nominated.insert(id);
    }

    Tick last_fault_free = now_;
    for (const auto& c : candidates) {
        const Tick due = scheduler_.schedule_delay(c, now_, false, nominated.count(c.id) > 0);
        envelopes_.push_back(Envelope{c.id, bid, sender, c.recipient, payload, now_, due});
        enqueue(due, EventKind::Deliver, c.id);
        if (!byzantine_[c.recipient]) last_fault_free = std::max(last_fault_free, due);
    }

    const Tick ack_due = scheduler_.ack_tick(last_fault_free);
    if (round && slow_[sender] && fast_done_[*round] < fast_count_) {
        held_[*round].emplace_back(bid, ack_due);
        ++held_count_;
    } else {
        enqueue(ack_due, EventKind::Ack, bid);
    }

    fire_trigger(payload);
    return bid;
}

BroadcastId Engine::byzantine_broadcast(NodeId sender, std::span<const Emission> emissions) {
    const BroadcastId bid = broadcasts_.size();
    broadcasts_.push_back(BroadcastState{sender, 0, true, std::nullopt});
    record(BroadcastRec{sender, bid, std::nullopt});
    for (const auto& [recipient, payload] : emissions) {
        if (recipient >= cfg_.n) continue;
        const PendingEnvelope c{envelopes_.size(), sender, recipient, payload};
        const Tick due = scheduler_.schedule_delay(c, now_, true, false);
        envelopes_.push_back(Envelope{c.id, bid, sender, recipient, payload, now_, due});
        enqueue(due, EventKind::Deliver, c.id);
    }
    return bid;
}

void Engine::fire_trigger(const Payload& payload) {
    if (cfg_.byzantine_ids.empty()) return;
    const Trigger t = trigger_of(payload);
    if (!fired_.insert(t).second) return;
    const AdversaryView view = make_view();
    auto ids = cfg_.byzantine_ids;
    std::sort(ids.begin(), ids.end());
    for (NodeId b : ids) {
        const auto emissions = byzantine_emit(cfg_.adversary, view, t, b, adversary_rng_);
        if (!emissions.empty()) byzantine_broadcast(b, emissions);
    }
}

void Engine::apply(NodeId node, Effects effects) {
    for (auto& action : effects) {
        if (auto* b = std::get_if<BroadcastAction>(&action)) {
            mac_broadcast(node, b->payload, b->tag);
        } else if (auto* t = std::get_if<Transition>(&action)) {
            record(StateRec{node, std::move(*t)});
        } else {
            record(OutputRec{node, std::get<OutputAction>(action).value});
        }
    }
}

void Engine::release_held(std::uint32_t round) {
    auto it = held_.find(round);
    if (it == held_.end()) return;
    for (const auto& [bid, due] : it->second) {
        enqueue(std::max(due, now_ + 1), EventKind::Ack, bid);
        --held_count_;
    }
    held_.erase(it);
}

std::optional<TraceRecord> Engine::step() {
    if (queue_.empty()) return std::nullopt;
    if (!draining_ && dispatched_ >= cfg_.max_events) throw EventCapExceeded(cfg_.max_events, pending());

    const QueuedEvent ev = queue_.top();
    queue_.pop();
    now_ = ev.due;
    ++dispatched_;

    switch (ev.kind) {
        case EventKind::Start: {
            const auto node = static_cast<NodeId>(ev.ref);
            if (draining_) return step();
            record(StartRec{node});
            const std::size_t at = trace_.records.size() - 1;
            apply(node, driver_.on_start(node));
            return trace_.records[at];
        }
        case EventKind::Deliver: {
            Envelope& env = envelopes_[ev.ref];
            env.deliver_tick = now_;
            record(DeliverRec{env.recipient, env.bid, env.sender, env.send_tick, env.payload});
            const std::size_t at = trace_.records.size() - 1;
            if (!draining_ && !byzantine_[env.recipient]) {
                // Copy: handlers may broadcast, which grows envelopes_.
                const NodeId recipient = env.recipient;
                const NodeId sender = env.sender;
                const Payload payload = env.payload;
                apply(recipient, driver_.on_deliver(recipient, sender, payload));
            }
            return trace_.records[at];
        }
        case EventKind::Ack: {
            const auto bid = static_cast<BroadcastId>(ev.ref);
            const BroadcastState bs = broadcasts_[bid];
            acks_.push_back(MacAck{bid, now_});
            record(AckRec{bs.sender, bid});
            const std::size_t at = trace_.records.size() - 1;
            if (bs.bac_round && fast_count_ > 0 && !slow_[bs.sender] &&
                ++fast_done_[*bs.bac_round] == fast_count_) {
                release_held(*bs.bac_round);
            }
            if (!draining_) apply(bs.sender, driver_.on_ack(bs.sender, bs.tag));
            return trace_.records[at];
        }
    }
    return std::nullopt;
}

const RunTrace& Engine::run_to_completion(const std::function<bool()>& halt) {
    while (!halt()) {
        if (!step()) break;
    }
    if (halt()) {
        halted_ = true;
        record(HaltRec{});
        if (cfg_.drain) {
            draining_ = true;
            std::vector<std::uint32_t> rounds;
            for (const auto& [round, _] : held_) rounds.push_back(round);
            for (auto round : rounds) release_held(round);
            while (step()) {
            }
        }
    }
    return trace_;
}

}  // namespace macsim
