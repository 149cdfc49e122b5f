#include "macsim/scheduler.hpp"

namespace macsim {

Scheduler::Scheduler(const SimConfig& cfg)
    : policy_(cfg.schedule), max_delay_(cfg.max_delay), rng_(make_stream(cfg.seed, Stream::Scheduler)) {}

Tick Scheduler::uniform_delay() {
    std::uniform_int_distribution<std::uint32_t> d(1, max_delay_);
    return d(rng_);
}

Tick Scheduler::schedule_delay(const PendingEnvelope&, Tick send_tick, bool byzantine_sender, bool nominated) {
    switch (policy_) {
        case SchedulePolicy::Fifo:
            return send_tick + 1;
        case SchedulePolicy::UniformRandom:
        case SchedulePolicy::MoverSkew:
            return send_tick + uniform_delay();
        case SchedulePolicy::MaxAdversarial:
            if (byzantine_sender) return send_tick + 1;
            if (nominated) return send_tick + 3 * Tick{max_delay_} + uniform_delay();
            return send_tick + uniform_delay();
    }
    return send_tick + 1;
}

Tick Scheduler::ack_tick(Tick last_fault_free_delivery) {
    if (policy_ == SchedulePolicy::Fifo) return last_fault_free_delivery + 1;
    return last_fault_free_delivery + uniform_delay();
}

}  // namespace macsim
