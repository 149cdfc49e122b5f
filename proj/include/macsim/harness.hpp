#pragma once

#include "macsim/config.hpp"
#include "macsim/report.hpp"
#include "macsim/trace.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace macsim {

class IncompleteRound : public std::runtime_error {
public:
    IncompleteRound(std::uint32_t round, NodeId node)
        : std::runtime_error("fault-free node " + std::to_string(node) + " never completed its round-" +
                             std::to_string(round) + " broadcast"),
          round_(round),
          node_(node) {}
    std::uint32_t round() const noexcept { return round_; }
    NodeId node() const noexcept { return node_; }

private:
    std::uint32_t round_;
    NodeId node_;
};

/// Fault-free nodes of one round in the order they completed the round's broadcast
/// (ACK tick, then id). The first min(2f+1, count) are the first movers.
struct MoverSplit {
    std::vector<NodeId> first;
    std::vector<NodeId> second;
};

MoverSplit identify_movers(const RunTrace& trace, std::uint32_t round, std::uint32_t f);

/// Values held by the fault-free nodes after `level` rounds (level 0 = inputs), split by the
/// movers of round level-1.
struct BacLevel {
    std::uint32_t level = 0;
    double low = 0.0;   // m
    double high = 0.0;  // M
    std::vector<NodeId> first_ids;
    std::vector<double> first_values;
    std::vector<double> second_values;
    double first_median = 0.0;  // diagnostic only
    double spread() const { return high - low; }
};

struct BacMetrics {
    std::uint32_t p_end = 0;
    std::optional<std::uint32_t> last_round;  // highest round index every fault-free node completed
    std::vector<BacLevel> levels;
    double max_contraction = 0.0;   // max over r of spread(r+2) / spread(r), spread(r) > 1e-9
    double mean_contraction = 0.0;
    std::size_t contraction_samples = 0;
    double output_spread = 0.0;
};

struct FreezeEvent {
    Tick tick = 0;
    NodeId node = 0;
    RbcFreeze freeze;
};

struct RbcMetrics {
    std::map<NodeId, std::uint32_t> decision_phase;  // nodes that decided
    std::optional<std::uint32_t> first_decision_phase;
    std::optional<std::uint32_t> all_decided_phase;
    std::uint32_t max_phase = 0;
    std::vector<FreezeEvent> freezes;
};

inline constexpr double kTolerance = 1e-12;

BacMetrics bac_metrics(const RunTrace& trace, const SimConfig& cfg);
RbcMetrics rbc_metrics(const RunTrace& trace);

/// MAC checks plus validity, epsilon_agreement, range, halving, contraction, termination.
CheckReport check_bac_trace(const RunTrace& trace, const SimConfig& cfg);
/// MAC checks plus bc_validity, bc_agreement, singleton_lemma, quorum_claim, persistence,
/// est_values_safety.
CheckReport check_rbc_trace(const RunTrace& trace, const SimConfig& cfg);
/// Dispatches on the protocol recorded in the trace header.
CheckReport check_trace(const RunTrace& trace);

/// Feeds the trace's starts, deliveries and ACKs back through fresh node state machines and
/// compares what they emit with the recorded broadcasts, transitions and outputs.
CheckReport check_replay_consistency(const RunTrace& trace);

enum class RunStatus : std::uint8_t { Completed, EventCap, PhaseCap, Stalled };
std::string to_string(RunStatus s);

struct RunResult {
    SimConfig cfg;
    RunStatus status = RunStatus::Completed;
    std::string error;
    RunTrace trace;
    CheckReport report;
    BacMetrics bac;
    RbcMetrics rbc;
    std::uint64_t events = 0;
};

/// Validates `cfg` (ConfigError on violation), runs it and checks the trace. Cap errors
/// end up in `status`, not as exceptions.
RunResult run_experiment(const SimConfig& cfg);

/// Runs `cfg` and returns only the trace; cap errors propagate.
RunTrace simulate(const SimConfig& cfg);

struct ReplayOutcome {
    bool identical = true;
    std::size_t line = 0;  // first divergent line (1-based, header included)
    std::string expected;
    std::string actual;
};

/// Re-executes the config embedded in `stored_text` and compares the regenerated trace with
/// it line by line. Throws TraceParseError when the header is unreadable.
ReplayOutcome replay_trace(const std::string& stored_text);

}  // namespace macsim
