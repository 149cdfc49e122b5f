#include "macsim/mac_checks.hpp"

#include <map>
#include <string>

namespace macsim {

std::set<NodeId> byzantine_set(const RunTrace& trace) {
    std::set<NodeId> out;
    for (const auto& r : trace.records) {
        if (const auto* i = std::get_if<InitRec>(&r.body); i && i->byzantine) out.insert(i->node);
    }
    return out;
}

std::set<NodeId> fault_free_set(const RunTrace& trace) {
    std::set<NodeId> out;
    for (const auto& r : trace.records) {
        if (const auto* i = std::get_if<InitRec>(&r.body); i && !i->byzantine) out.insert(i->node);
    }
    return out;
}

namespace {

struct BroadcastInfo {
    NodeId sender = 0;
    bool fault_free_payload = false;
    Tick tick = 0;
    std::map<NodeId, std::vector<Tick>> ff_deliveries;  // recipient -> ticks
    std::vector<Tick> acks;
};

}  // namespace

void check_mac_semantics(const RunTrace& trace, CheckReport& report) {
    report.add("ack_ordering");
    report.add("authentication");
    report.add("eventual_delivery");

    const auto byz = byzantine_set(trace);
    const auto ff = fault_free_set(trace);
    std::map<BroadcastId, BroadcastInfo> casts;
    bool halted = false;

    for (const auto& r : trace.records) {
        if (const auto* b = std::get_if<BroadcastRec>(&r.body)) {
            auto& info = casts[b->bid];
            info.sender = b->sender;
            info.fault_free_payload = b->payload.has_value();
            info.tick = r.tick;
            if (b->payload.has_value() == (byz.count(b->sender) > 0)) {
                report.fail("authentication", r.tick,
                            "broadcast bid=" + std::to_string(b->bid) + " by node " + std::to_string(b->sender) +
                                (b->payload ? " carries a uniform payload but the node is Byzantine"
                                            : " has per-recipient payloads but the node is fault-free"));
            }
        } else if (const auto* d = std::get_if<DeliverRec>(&r.body)) {
            auto it = casts.find(d->bid);
            if (it == casts.end()) {
                report.fail("authentication", r.tick,
                            "delivery to " + std::to_string(d->recipient) + " of unknown broadcast bid=" +
                                std::to_string(d->bid));
                continue;
            }
            if (d->sender != it->second.sender) {
                report.fail("authentication", r.tick,
                            "delivery of bid=" + std::to_string(d->bid) + " to " + std::to_string(d->recipient) +
                                " claims sender " + std::to_string(d->sender) + ", true sender " +
                                std::to_string(it->second.sender));
            }
            if (r.tick <= d->send_tick || d->send_tick != it->second.tick) {
                report.fail("ack_ordering", r.tick,
                            "delivery of bid=" + std::to_string(d->bid) + " at tick " + std::to_string(r.tick) +
                                " does not follow its send at tick " + std::to_string(it->second.tick));
            }
            if (ff.count(d->recipient)) it->second.ff_deliveries[d->recipient].push_back(r.tick);
        } else if (const auto* a = std::get_if<AckRec>(&r.body)) {
            auto it = casts.find(a->bid);
            if (it == casts.end() || !it->second.fault_free_payload || it->second.sender != a->sender) {
                report.fail("ack_ordering", r.tick,
                            "ACK at node " + std::to_string(a->sender) + " for bid=" + std::to_string(a->bid) +
                                " which is not a fault-free broadcast of that node");
                continue;
            }
            it->second.acks.push_back(r.tick);
        } else if (std::holds_alternative<HaltRec>(r.body)) {
            halted = true;
        }
    }

    // Deliveries recorded after the ACK still count: the ACK must beat none of them.
    for (const auto& [bid, info] : casts) {
        for (Tick ack : info.acks) {
            for (const auto& [recipient, ticks] : info.ff_deliveries) {
                for (Tick t : ticks) {
                    if (t >= ack) {
                        report.fail("ack_ordering", ack,
                                    "ACK of bid=" + std::to_string(bid) + " at tick " + std::to_string(ack) +
                                        " but fault-free node " + std::to_string(recipient) + " receives it at tick " +
                                        std::to_string(t));
                    }
                }
            }
        }
    }

    const bool drained = trace.config.value("drain", true);
    if (!halted || !drained) {
        report.not_applicable("eventual_delivery", halted ? "trace was not drained" : "run did not complete");
        return;
    }
    for (const auto& [bid, info] : casts) {
        if (!info.fault_free_payload) continue;
        for (NodeId r : ff) {
            const auto it = info.ff_deliveries.find(r);
            const std::size_t count = it == info.ff_deliveries.end() ? 0 : it->second.size();
            if (count != 1) {
                report.fail("eventual_delivery", info.tick,
                            "broadcast bid=" + std::to_string(bid) + " by node " + std::to_string(info.sender) +
                                " reaches fault-free node " + std::to_string(r) + " " + std::to_string(count) +
                                " times");
            }
        }
        if (info.acks.size() != 1) {
            report.fail("eventual_delivery", info.tick,
                        "broadcast bid=" + std::to_string(bid) + " by node " + std::to_string(info.sender) + " has " +
                            std::to_string(info.acks.size()) + " ACKs");
        }
    }
}

}  // namespace macsim
