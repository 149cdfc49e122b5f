#pragma once

#include "macsim/adversary.hpp"
#include "macsim/config.hpp"
#include "macsim/scheduler.hpp"
#include "macsim/trace.hpp"

#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <vector>

namespace macsim {

/// Request to mac-broadcast `payload`. The engine reports the ACK back to the node
/// with the same `tag`.
struct BroadcastAction {
    Payload payload;
    std::uint64_t tag = 0;
};
struct OutputAction {
    double value = 0.0;
};
using Action = std::variant<BroadcastAction, Transition, OutputAction>;
/// Ordered: the engine applies actions in emission order.
using Effects = std::vector<Action>;

/// The fault-free node state machines of one run, as seen by the engine.
class NodeDriver {
public:
    virtual ~NodeDriver() = default;
    virtual Effects on_start(NodeId node) = 0;
    virtual Effects on_deliver(NodeId node, NodeId sender, const Payload& payload) = 0;
    virtual Effects on_ack(NodeId node, std::uint64_t tag) = 0;
    virtual bool all_output() const = 0;
    virtual void fill_view(AdversaryView& view) const = 0;
};

struct Envelope {
    EnvelopeId id = 0;
    BroadcastId bid = 0;
    NodeId sender = 0;
    NodeId recipient = 0;
    Payload payload;
    Tick send_tick = 0;
    Tick deliver_tick = 0;
};

struct MacAck {
    BroadcastId bid = 0;
    Tick ack_tick = 0;
};

/// Single-threaded discrete-event engine for the abstract MAC layer.
///
/// Events are ordered by (tick, enqueue sequence). A fault-free broadcast yields one
/// envelope per node, the sender included, and one ACK scheduled strictly after the
/// latest fault-free delivery. Byzantine broadcasts carry adversary-chosen
/// per-recipient payloads, are stamped with the true sender id and get no ACK.
class Engine {
public:
    Engine(const SimConfig& cfg, NodeDriver& driver);

    BroadcastId mac_broadcast(NodeId sender, const Payload& payload, std::uint64_t tag = 0);
    BroadcastId byzantine_broadcast(NodeId sender, std::span<const Emission> emissions);

    /// Dispatches the next event. Returns its primary record, or nullopt when the queue
    /// is empty. Throws EventCapExceeded once max_events have been dispatched and work remains.
    std::optional<TraceRecord> step();

    /// Steps until `halt` holds or the queue runs dry. On halt a HALT record is appended and,
    /// when the config asks for it, the remaining in-flight messages are delivered without
    /// invoking node handlers.
    const RunTrace& run_to_completion(const std::function<bool()>& halt);

    const RunTrace& trace() const noexcept { return trace_; }
    RunTrace take_trace() { return std::move(trace_); }
    Tick now() const noexcept { return now_; }
    std::size_t pending() const noexcept { return queue_.size() + held_count_; }
    std::uint64_t dispatched() const noexcept { return dispatched_; }
    const std::vector<Envelope>& envelopes() const noexcept { return envelopes_; }
    const std::vector<MacAck>& acks() const noexcept { return acks_; }
    bool halted() const noexcept { return halted_; }

private:
    enum class EventKind : std::uint8_t { Start, Deliver, Ack };
    struct QueuedEvent {
        Tick due;
        std::uint64_t seq;
        EventKind kind;
        std::uint64_t ref;
        bool operator>(const QueuedEvent& o) const { return due != o.due ? due > o.due : seq > o.seq; }
    };
    struct BroadcastState {
        NodeId sender;
        std::uint64_t tag;
        bool byzantine;
        std::optional<std::uint32_t> bac_round;
    };

    void enqueue(Tick due, EventKind kind, std::uint64_t ref);
    void record(RecordBody body);
    void apply(NodeId node, Effects effects);
    void fire_trigger(const Payload& payload);
    AdversaryView make_view() const;
    void release_held(std::uint32_t round);

    SimConfig cfg_;
    NodeDriver& driver_;
    Scheduler scheduler_;
    std::mt19937_64 adversary_rng_;
    std::vector<bool> byzantine_;

    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
    std::uint64_t next_seq_ = 0;
    Tick now_ = 0;
    std::uint64_t dispatched_ = 0;
    bool draining_ = false;
    bool halted_ = false;

    std::vector<Envelope> envelopes_;
    std::vector<BroadcastState> broadcasts_;
    std::vector<MacAck> acks_;
    std::set<Trigger> fired_;

    // mover_skew: ACKs of slow-set round broadcasts wait until every fast node has
    // completed the same round.
    std::vector<bool> slow_;
    std::size_t fast_count_ = 0;
    std::map<std::uint32_t, std::size_t> fast_done_;
    std::map<std::uint32_t, std::vector<std::pair<BroadcastId, Tick>>> held_;
    std::size_t held_count_ = 0;

    RunTrace trace_;
};

}  // namespace macsim
