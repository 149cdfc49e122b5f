#pragma once

#include "macsim/engine.hpp"

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace macsim {

class InvalidEpsilon : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InsufficientValues : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Smallest non-negative integer p with p >= 2 log_{3/4}(epsilon), for 0 < epsilon <= 1.
std::uint32_t p_end_for(double epsilon);

/// (f+1)-st smallest and (f+1)-st largest of `values`; needs at least 4f+2 of them.
std::pair<double, double> trimmed_bounds(std::span<const double> values, std::uint32_t f);

inline double update_state(double l, double u) { return (l + u) / 2; }

/// One fault-free node of the approximate-consensus protocol.
///
/// Round p: broadcast (v, p), then wait for the broadcast's ACK and for round-p values
/// from at least 4f+2 distinct senders (own value included). Messages for other rounds
/// are kept; the first value per (sender, round) wins.
class BacNode {
public:
    BacNode(NodeId id, std::uint32_t f, double input, std::uint32_t p_end);

    Effects start();
    Effects on_round_message(NodeId sender, const BacRoundMsg& msg);
    Effects on_ack(std::uint64_t tag);

    NodeId id() const noexcept { return id_; }
    std::uint32_t round() const noexcept { return p_; }
    double value() const noexcept { return v_; }
    std::uint32_t p_end() const noexcept { return p_end_; }
    std::optional<double> output() const noexcept { return output_; }
    bool acked() const noexcept { return acked_; }
    /// Values received for round `r`, keyed by sender.
    const std::map<NodeId, double>& inbox(std::uint32_t r) const;

private:
    Effects try_advance();

    NodeId id_;
    std::uint32_t f_;
    std::uint32_t p_ = 0;
    double v_;
    std::uint32_t p_end_;
    bool started_ = false;
    bool acked_ = false;
    std::optional<double> output_;
    std::map<std::uint32_t, std::map<NodeId, double>> inbox_;
};

/// All fault-free approximate-consensus nodes of a run.
class BacDriver final : public NodeDriver {
public:
    explicit BacDriver(const SimConfig& cfg);

    Effects on_start(NodeId node) override;
    Effects on_deliver(NodeId node, NodeId sender, const Payload& payload) override;
    Effects on_ack(NodeId node, std::uint64_t tag) override;
    bool all_output() const override;
    void fill_view(AdversaryView& view) const override;

    const BacNode& node(NodeId id) const { return *nodes_.at(id); }

private:
    std::vector<std::optional<BacNode>> nodes_;
};

}  // namespace macsim
