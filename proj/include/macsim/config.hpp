#pragma once

#include "macsim/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace macsim {

enum class SchedulePolicy : std::uint8_t { UniformRandom, Fifo, MoverSkew, MaxAdversarial };

enum class AdversaryKind : std::uint8_t { Silent, Equivocator, Extremist, CoinOpposer, RandomByzantine };

std::string to_string(SchedulePolicy p);
std::string to_string(AdversaryKind k);
/// Throws ConfigError("unknown scheduler policy ...") for unrecognised names.
SchedulePolicy schedule_from_string(const std::string& s);
AdversaryKind adversary_from_string(const std::string& s);

struct AdversaryStrategy {
    AdversaryKind kind = AdversaryKind::Silent;
    double delta = 0.1;  // extremist offset beyond the fault-free range
};

/// Full description of one run. `n` is harness knowledge only: node state
/// machines receive `f` and their own id, never `n`.
struct SimConfig {
    Protocol protocol = Protocol::Bac;
    std::uint32_t n = 7;
    std::uint32_t f = 1;
    std::vector<NodeId> byzantine_ids;
    std::uint64_t seed = 1;
    SchedulePolicy schedule = SchedulePolicy::UniformRandom;
    AdversaryStrategy adversary;
    double epsilon = 0.01;
    std::uint32_t max_phases = 60;
    std::uint64_t max_events = 5'000'000;
    std::uint32_t max_delay = 8;
    std::uint32_t start_stagger = 0;  // node i starts at tick i * start_stagger
    std::vector<NodeId> slow_nodes;   // mover_skew slow set; empty selects the default
    std::vector<double> inputs;       // one per node; Byzantine entries are ignored
    bool drain = true;                // deliver in-flight messages after the halt

    bool is_byzantine(NodeId id) const;
    std::vector<NodeId> fault_free_ids() const;
};

/// Minimum node count for the protocol: 5f+2 (approximate) or 5f+1 (binary).
std::uint32_t min_nodes(Protocol p, std::uint32_t f);

/// The `f` highest ids, the harness default for the Byzantine set.
std::vector<NodeId> default_byzantine_ids(std::uint32_t n, std::uint32_t f);

/// mover_skew default: every fault-free node except the 2f+1 lowest ids, so those
/// become the first movers of every round.
std::vector<NodeId> default_slow_nodes(const SimConfig& cfg);

/// Named input distributions: uniform, bits, zeros, ones, split, extremes.
/// Anything else is parsed as a comma-separated list of n (or n - |byz|) numbers.
std::vector<double> make_inputs(const SimConfig& cfg, const std::string& spec);

/// Throws ConfigError describing the first violated constraint.
void validate(const SimConfig& cfg);

nlohmann::json to_json(const SimConfig& cfg);
/// Keys absent from `j` keep the value already in `base`.
SimConfig config_from_json(const nlohmann::json& j, SimConfig base = {});

}  // namespace macsim
