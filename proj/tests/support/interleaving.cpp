#include "support/interleaving.hpp"

#include "macsim/engine.hpp"

#include <algorithm>
#include <map>

namespace macsim::testing {

namespace {

class TwoBroadcasts final : public NodeDriver {
public:
    Effects on_start(NodeId node) override {
        if (node > 1) return {};
        return {BroadcastAction{BacRoundMsg{0, 0.5}, 1}};
    }
    Effects on_deliver(NodeId, NodeId, const Payload&) override { return {}; }
    Effects on_ack(NodeId, std::uint64_t) override {
        ++acks_;
        return {};
    }
    bool all_output() const override { return acks_ == 2; }
    void fill_view(AdversaryView&) const override {}

private:
    int acks_ = 0;
};

}  // namespace

std::set<Order> legal_orders() {
    std::set<Order> out;
    Order o{};
    for (std::uint8_t k = 0; k < 8; ++k) o[k] = k;
    do {
        std::array<int, 8> pos{};
        for (int k = 0; k < 8; ++k) pos[o[k]] = k;
        bool ok = true;
        for (int b = 0; b < 2; ++b) {
            for (int r = 0; r < 3; ++r) ok = ok && pos[4 * b + r] < pos[4 * b + 3];
        }
        if (ok) out.insert(o);
    } while (std::next_permutation(o.begin(), o.end()));
    return out;
}

InterleavingReport run_interleavings(std::uint64_t seeds) {
    const auto legal = legal_orders();
    InterleavingReport rep;
    rep.legal = legal.size();
    std::set<Order> seen;

    for (SchedulePolicy policy : {SchedulePolicy::UniformRandom, SchedulePolicy::Fifo}) {
        for (std::uint32_t stagger : {0u, 1u, 2u, 3u}) {
            for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
                SimConfig cfg;
                cfg.n = 3;
                cfg.f = 0;
                cfg.seed = seed;
                cfg.schedule = policy;
                cfg.max_delay = 3;
                cfg.start_stagger = stagger;
                cfg.inputs = {0.5, 0.5, 0.5};
                TwoBroadcasts driver;
                Engine engine(cfg, driver);
                engine.run_to_completion([&] { return driver.all_output(); });

                std::map<BroadcastId, std::uint8_t> index;
                std::map<std::uint8_t, Tick> tick_of;
                Order order{};
                std::size_t len = 0;
                for (const auto& r : engine.trace().records) {
                    std::uint8_t label = 0;
                    Tick t = r.tick;
                    if (const auto* b = std::get_if<BroadcastRec>(&r.body)) {
                        index.emplace(b->bid, static_cast<std::uint8_t>(index.size()));
                        continue;
                    } else if (const auto* d = std::get_if<DeliverRec>(&r.body)) {
                        label = static_cast<std::uint8_t>(4 * index.at(d->bid) + d->recipient);
                    } else if (const auto* a = std::get_if<AckRec>(&r.body)) {
                        label = static_cast<std::uint8_t>(4 * index.at(a->bid) + 3);
                    } else {
                        continue;
                    }
                    if (len < order.size()) order[len] = label;
                    tick_of[label] = t;
                    ++len;
                }
                ++rep.runs;
                if (len != order.size() || !legal.count(order)) {
                    ++rep.illegal;
                    continue;
                }
                seen.insert(order);
                for (int b = 0; b < 2; ++b) {
                    for (int r = 0; r < 3; ++r) {
                        if (tick_of.at(static_cast<std::uint8_t>(4 * b + 3)) <=
                            tick_of.at(static_cast<std::uint8_t>(4 * b + r))) {
                            ++rep.tick_violations;
                        }
                    }
                }
            }
        }
    }
    rep.distinct = seen.size();
    return rep;
}

}  // namespace macsim::testing
