#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace macsim {

using NodeId = std::uint32_t;
using Tick = std::uint64_t;
using BroadcastId = std::uint64_t;
using EnvelopeId = std::uint64_t;

/// Round message of the approximate-consensus protocol: (sender, value, round).
struct BacRoundMsg {
    std::uint32_t round = 0;
    double value = 0.0;
    friend bool operator==(const BacRoundMsg&, const BacRoundMsg&) = default;
};

struct EstMsg {
    std::uint32_t phase = 0;
    std::uint8_t bit = 0;
    friend bool operator==(const EstMsg&, const EstMsg&) = default;
};

/// `origin` is the node id claimed inside the message; handlers drop it when it
/// disagrees with the authenticated sender.
struct AuxMsg {
    std::uint32_t phase = 0;
    std::uint8_t bit = 0;
    NodeId origin = 0;
    friend bool operator==(const AuxMsg&, const AuxMsg&) = default;
};

struct CompleteMsg {
    std::uint32_t phase = 0;
    friend bool operator==(const CompleteMsg&, const CompleteMsg&) = default;
};

/// Opaque to the engine: it only moves payloads between nodes.
using Payload = std::variant<BacRoundMsg, EstMsg, AuxMsg, CompleteMsg>;

enum class Protocol : std::uint8_t { Bac, Rbc };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EventCapExceeded : public std::runtime_error {
public:
    EventCapExceeded(std::uint64_t cap, std::size_t pending)
        : std::runtime_error("event cap of " + std::to_string(cap) + " reached with " +
                             std::to_string(pending) + " events still queued"),
          cap_(cap),
          pending_(pending) {}
    std::uint64_t cap() const noexcept { return cap_; }
    std::size_t pending() const noexcept { return pending_; }

private:
    std::uint64_t cap_;
    std::size_t pending_;
};

/// Raised by the binary-consensus driver when a fault-free node is about to
/// enter phase `max_phases` before every fault-free node has decided.
class PhaseCapExceeded : public std::runtime_error {
public:
    struct NodePhase {
        NodeId node;
        std::int64_t last_completed;  // -1 when no phase was completed
    };
    PhaseCapExceeded(std::uint32_t cap, std::vector<NodePhase> progress);
    std::uint32_t cap() const noexcept { return cap_; }
    const std::vector<NodePhase>& progress() const noexcept { return progress_; }

private:
    std::uint32_t cap_;
    std::vector<NodePhase> progress_;
};

}  // namespace macsim
