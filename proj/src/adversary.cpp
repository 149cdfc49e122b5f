#include "macsim/adversary.hpp"

#include <algorithm>
#include <limits>

namespace macsim {

Trigger trigger_of(const Payload& p) {
    if (const auto* m = std::get_if<BacRoundMsg>(&p)) return {TriggerKind::BacRound, m->round};
    if (const auto* m = std::get_if<EstMsg>(&p)) return {TriggerKind::Est, m->phase};
    if (const auto* m = std::get_if<AuxMsg>(&p)) return {TriggerKind::Aux, m->phase};
    return {TriggerKind::Complete, std::get<CompleteMsg>(p).phase};
}

std::pair<double, double> AdversaryView::fault_free_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (NodeId id : fault_free) {
        lo = std::min(lo, values[id]);
        hi = std::max(hi, values[id]);
    }
    if (fault_free.empty()) return {0.0, 1.0};
    return {lo, hi};
}

namespace {

Payload binary_payload(const Trigger& t, std::uint8_t bit, NodeId self) {
    switch (t.kind) {
        case TriggerKind::Est: return EstMsg{t.index, bit};
        case TriggerKind::Aux: return AuxMsg{t.index, bit, self};
        case TriggerKind::Complete: return CompleteMsg{t.index};
        case TriggerKind::BacRound: break;
    }
    return BacRoundMsg{t.index, static_cast<double>(bit)};
}

std::uint8_t majority_estimate(const AdversaryView& view) {
    std::size_t ones = 0;
    for (NodeId id : view.fault_free) ones += view.values[id] >= 0.5 ? 1 : 0;
    return 2 * ones >= view.fault_free.size() ? 1 : 0;
}

}  // namespace

std::vector<Emission> byzantine_emit(const AdversaryStrategy& strategy, const AdversaryView& view,
                                     const Trigger& trigger, NodeId self, std::mt19937_64& rng) {
    std::vector<Emission> out;
    const auto& to = view.fault_free;
    const bool bac = trigger.kind == TriggerKind::BacRound;

    switch (strategy.kind) {
        case AdversaryKind::Silent:
            break;

        case AdversaryKind::Equivocator:
            for (NodeId r : to) {
                const auto bit = static_cast<std::uint8_t>(r % 2);
                out.emplace_back(r, bac ? Payload{BacRoundMsg{trigger.index, static_cast<double>(bit)}}
                                        : binary_payload(trigger, bit, self));
            }
            break;

        case AdversaryKind::Extremist: {
            // Lower half of the recipients (by id) sees m - delta, the upper half M + delta.
            const auto [lo, hi] = view.fault_free_range();
            const std::size_t half = to.size() / 2;
            for (std::size_t k = 0; k < to.size(); ++k) {
                const bool low_side = k < half;
                if (bac) {
                    const double v = low_side ? lo - strategy.delta : hi + strategy.delta;
                    out.emplace_back(to[k], BacRoundMsg{trigger.index, v});
                } else {
                    out.emplace_back(to[k], binary_payload(trigger, low_side ? 0 : 1, self));
                }
            }
            break;
        }

        case AdversaryKind::CoinOpposer: {
            if (bac) {
                // No coin in approximate consensus: pull everyone toward the far end of the range.
                const auto [lo, hi] = view.fault_free_range();
                double mean = 0.0;
                for (NodeId id : to) mean += view.values[id];
                mean /= std::max<std::size_t>(1, to.size());
                const double v = mean >= 0.5 * (lo + hi) ? lo - strategy.delta : hi + strategy.delta;
                for (NodeId r : to) out.emplace_back(r, BacRoundMsg{trigger.index, v});
                break;
            }
            const std::uint8_t bit = view.last_revealed_coin ? static_cast<std::uint8_t>(1 - *view.last_revealed_coin)
                                                             : static_cast<std::uint8_t>(1 - majority_estimate(view));
            for (NodeId r : to) out.emplace_back(r, binary_payload(trigger, bit, self));
            break;
        }

        case AdversaryKind::RandomByzantine: {
            std::bernoulli_distribution omit(0.25);
            std::bernoulli_distribution coin(0.5);
            std::uniform_real_distribution<double> wide(-0.5, 1.5);
            for (NodeId r : to) {
                if (omit(rng)) continue;
                if (bac) {
                    out.emplace_back(r, BacRoundMsg{trigger.index, wide(rng)});
                } else {
                    out.emplace_back(r, binary_payload(trigger, coin(rng) ? 1 : 0, self));
                }
            }
            break;
        }
    }
    return out;
}

std::vector<EnvelopeId> corrupt_schedule(const AdversaryStrategy& strategy, const AdversaryView& view,
                                         std::span<const PendingEnvelope> candidates) {
    std::vector<EnvelopeId> out;
    if (strategy.kind == AdversaryKind::Silent || candidates.empty()) return out;

    // Approximate consensus: hold back the f+1 highest-valued fault-free nodes so they
    // finish their round broadcasts last.
    std::vector<NodeId> ranked = view.fault_free;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](NodeId a, NodeId b) { return view.values[a] > view.values[b]; });
    ranked.resize(std::min<std::size_t>(ranked.size(), view.f + 1));

    for (NodeId target : ranked) {
        for (const auto& c : candidates) {
            if (c.sender == target && std::holds_alternative<BacRoundMsg>(c.payload)) out.push_back(c.id);
        }
    }
    // Binary consensus: hold back AUX messages carrying 1.
    for (const auto& c : candidates) {
        if (const auto* aux = std::get_if<AuxMsg>(&c.payload); aux && aux->bit == 1) out.push_back(c.id);
    }
    return out;
}

}  // namespace macsim
