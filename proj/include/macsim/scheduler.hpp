#pragma once

#include "macsim/adversary.hpp"
#include "macsim/config.hpp"
#include "macsim/rng.hpp"

#include <optional>
#include <random>

namespace macsim {

/// Chooses delivery and ACK ticks. Every tick it returns is finite, so every policy is fair.
///
/// - fifo: every envelope arrives at send + 1, the ACK one tick after the last delivery.
/// - uniform_random: delays drawn from [1, max_delay].
/// - mover_skew: uniform_random delays; the engine additionally holds ACKs of the slow set
///   (see Engine) so slow nodes complete each round after everyone else.
/// - max_adversarial: Byzantine envelopes arrive next tick; envelopes nominated by the
///   adversary wait [3*max_delay + 1, 4*max_delay]; the rest are uniform.
class Scheduler {
public:
    explicit Scheduler(const SimConfig& cfg);

    SchedulePolicy policy() const noexcept { return policy_; }

    Tick schedule_delay(const PendingEnvelope& env, Tick send_tick, bool byzantine_sender, bool nominated);
    Tick ack_tick(Tick last_fault_free_delivery);

private:
    Tick uniform_delay();

    SchedulePolicy policy_;
    std::uint32_t max_delay_;
    std::mt19937_64 rng_;
};

}  // namespace macsim
