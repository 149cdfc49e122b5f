#pragma once

#include "macsim/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace macsim {

/// Subset of {0,1}, stored as a two-bit mask.
struct BitSet {
    std::uint8_t mask = 0;

    static BitSet of(std::uint8_t bit) { return BitSet{static_cast<std::uint8_t>(1u << bit)}; }
    bool contains(std::uint8_t bit) const { return (mask >> bit) & 1u; }
    void insert(std::uint8_t bit) { mask |= static_cast<std::uint8_t>(1u << bit); }
    bool empty() const { return mask == 0; }
    bool subset_of(BitSet other) const { return (mask & ~other.mask) == 0; }
    int size() const { return (mask & 1u) + ((mask >> 1) & 1u); }
    /// The single element; only meaningful when size() == 1.
    std::uint8_t only() const { return mask == 2 ? 1 : 0; }
    friend bool operator==(BitSet, BitSet) = default;
};

// ---- state transitions emitted by the node state machines ----

/// End of an approximate-consensus round: the trimmed bounds and the new state.
struct BacRoundEnd {
    std::uint32_t round = 0;
    double low = 0.0;
    double high = 0.0;
    double value = 0.0;
    std::uint32_t received = 0;
    friend bool operator==(const BacRoundEnd&, const BacRoundEnd&) = default;
};

/// Start of a binary-consensus phase; `estimate` is the bit sent in the phase's EST broadcast.
struct RbcPhaseStart {
    std::uint32_t phase = 0;
    std::uint8_t estimate = 0;
    friend bool operator==(const RbcPhaseStart&, const RbcPhaseStart&) = default;
};

struct RbcEstValue {
    std::uint32_t phase = 0;
    std::uint8_t bit = 0;
    friend bool operator==(const RbcEstValue&, const RbcEstValue&) = default;
};

/// Condition WAIT satisfied: frozen values, the witnesses (X for bit `witness_bit`, Y),
/// the coin and the resulting estimate.
struct RbcFreeze {
    std::uint32_t phase = 0;
    BitSet values;
    std::uint8_t witness_bit = 0;
    std::vector<NodeId> x;
    std::vector<NodeId> y;
    std::uint8_t coin = 0;
    std::uint8_t next_estimate = 0;
    bool decided = false;
    friend bool operator==(const RbcFreeze&, const RbcFreeze&) = default;
};

using Transition = std::variant<BacRoundEnd, RbcPhaseStart, RbcEstValue, RbcFreeze>;

// ---- trace records ----

struct InitRec {
    NodeId node = 0;
    bool byzantine = false;
    double input = 0.0;
    friend bool operator==(const InitRec&, const InitRec&) = default;
};
struct StartRec {
    NodeId node = 0;
    friend bool operator==(const StartRec&, const StartRec&) = default;
};
/// A Byzantine broadcast has no single payload; per-recipient payloads appear in its deliveries.
struct BroadcastRec {
    NodeId sender = 0;
    BroadcastId bid = 0;
    std::optional<Payload> payload;
    friend bool operator==(const BroadcastRec&, const BroadcastRec&) = default;
};
struct DeliverRec {
    NodeId recipient = 0;
    BroadcastId bid = 0;
    NodeId sender = 0;
    Tick send_tick = 0;
    Payload payload;
    friend bool operator==(const DeliverRec&, const DeliverRec&) = default;
};
struct AckRec {
    NodeId sender = 0;
    BroadcastId bid = 0;
    friend bool operator==(const AckRec&, const AckRec&) = default;
};
struct StateRec {
    NodeId node = 0;
    Transition transition;
    friend bool operator==(const StateRec&, const StateRec&) = default;
};
struct OutputRec {
    NodeId node = 0;
    double value = 0.0;
    friend bool operator==(const OutputRec&, const OutputRec&) = default;
};
/// Marks the point where the halt predicate held; later records are in-flight drain only.
struct HaltRec {
    friend bool operator==(const HaltRec&, const HaltRec&) = default;
};

using RecordBody = std::variant<InitRec, StartRec, BroadcastRec, DeliverRec, AckRec, StateRec, OutputRec, HaltRec>;

struct TraceRecord {
    Tick tick = 0;
    RecordBody body;
    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct RunTrace {
    nlohmann::json config;  // effective configuration, written as the header
    std::vector<TraceRecord> records;
};

class TraceParseError : public std::runtime_error {
public:
    TraceParseError(std::size_t line, const std::string& what)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

std::string format_double(double v);
std::string format_payload(const Payload& p);
std::string format_record(const TraceRecord& r);

/// Header lines followed by one record per line.
void write_trace(std::ostream& os, const RunTrace& trace);
std::string to_text(const RunTrace& trace);

TraceRecord parse_record(std::string_view line, std::size_t line_no = 0);
RunTrace parse_trace(std::istream& is);
RunTrace read_trace_file(const std::string& path);

inline constexpr std::string_view kTraceMagic = "# macsim-trace v1";

}  // namespace macsim
