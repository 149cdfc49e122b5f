#pragma once

#include "macsim/config.hpp"
#include "macsim/types.hpp"

#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace macsim {

/// Protocol moments at which a fault-free node broadcasts; Byzantine nodes act on the
/// first occurrence of each (kind, index) pair in a run.
enum class TriggerKind : std::uint8_t { BacRound, Est, Aux, Complete };

struct Trigger {
    TriggerKind kind = TriggerKind::BacRound;
    std::uint32_t index = 0;  // round or phase
    friend auto operator<=>(const Trigger&, const Trigger&) = default;
};

Trigger trigger_of(const Payload& p);

/// A fault-free envelope whose delivery tick has not been chosen yet.
struct PendingEnvelope {
    EnvelopeId id = 0;
    NodeId sender = 0;
    NodeId recipient = 0;
    Payload payload;
};

/// Read access to the run as the adversary sees it. Coin bits appear only once some
/// fault-free node has flipped for that phase.
struct AdversaryView {
    std::uint32_t n = 0;
    std::uint32_t f = 0;
    std::vector<NodeId> fault_free;
    std::vector<NodeId> byzantine;
    /// Indexed by node id; Byzantine entries are meaningless. Current state value (approximate)
    /// or current estimate bit (binary).
    std::vector<double> values;
    /// Indexed by node id: current round or phase.
    std::vector<std::uint32_t> progress;
    std::optional<std::uint8_t> last_revealed_coin;
    std::size_t pending_events = 0;

    /// [m, M] over fault-free current values.
    std::pair<double, double> fault_free_range() const;
};

using Emission = std::pair<NodeId, Payload>;

/// Per-recipient payloads for Byzantine node `self` at `trigger`; an empty list is silence.
/// Recipients are always fault-free nodes; the engine stamps `self` as the sender.
std::vector<Emission> byzantine_emit(const AdversaryStrategy& strategy, const AdversaryView& view,
                                     const Trigger& trigger, NodeId self, std::mt19937_64& rng);

/// Envelopes the max_adversarial scheduler should hold back, most-delayed first.
std::vector<EnvelopeId> corrupt_schedule(const AdversaryStrategy& strategy, const AdversaryView& view,
                                         std::span<const PendingEnvelope> candidates);

}  // namespace macsim
