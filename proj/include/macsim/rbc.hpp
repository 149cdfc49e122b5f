#pragma once

#include "macsim/engine.hpp"
#include "macsim/rng.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

namespace macsim {

/// Trusted-dealer coin: one fair bit per phase, identical at every node.
class CommonCoin {
public:
    explicit CommonCoin(std::uint64_t seed);

    /// Bit for `phase`; also reveals it to the adversary.
    std::uint8_t flip(std::uint32_t phase);
    /// Bit for `phase` without revealing it.
    std::uint8_t peek(std::uint32_t phase);
    std::optional<std::uint8_t> last_revealed() const noexcept { return last_revealed_; }
    bool revealed(std::uint32_t phase) const { return revealed_.count(phase) > 0; }

private:
    std::mt19937_64 gen_;
    std::vector<std::uint8_t> bits_;
    std::set<std::uint32_t> revealed_;
    std::optional<std::uint8_t> last_revealed_;
};

/// What a node has heard in one phase, as far as Condition WAIT is concerned.
/// U is the key set of `aux`.
struct WaitState {
    std::uint32_t f = 0;
    BitSet est_values;
    std::map<NodeId, BitSet> aux;
    std::set<NodeId> complete;
};

struct WaitWitness {
    BitSet values;
    std::uint8_t bit = 0;
    std::vector<NodeId> x;
    std::vector<NodeId> y;
};

/// Condition WAIT. With Good the U-members whose AUX bits are all in est_values and
/// X_v the Good members that sent (AUX, v) and COMPLETE, the condition holds for v iff
/// |X_v| >= 2f+1, |Good| >= |U|-f and |U|-f >= 2f+1. Bit 0 is tried first. X and Y are
/// filled with the smallest ids so the frozen values are reproducible.
std::optional<WaitWitness> check_wait(const WaitState& s);

struct PhaseOutcome {
    std::uint8_t next_estimate = 0;
    bool decide = false;
};

/// After WAIT: values = {v} keeps v and decides when v equals the coin; two values adopt the coin.
PhaseOutcome phase_step(BitSet values, std::uint8_t coin);

/// One fault-free node of the binary-consensus protocol.
///
/// The main loop's broadcasts (EST at phase start, AUX per est_values bit, COMPLETE) each
/// wait for their ACK before the next step. EST relays are background broadcasts.
class RbcNode {
public:
    enum class Stage : std::uint8_t { Idle, EstAck, AwaitEstValues, AuxAck, AwaitWait };

    RbcNode(NodeId id, std::uint32_t f, std::uint8_t input, CommonCoin& coin);

    Effects start();
    Effects on_est(NodeId sender, const EstMsg& m);
    Effects on_aux(NodeId sender, const AuxMsg& m);
    Effects on_complete(NodeId sender, const CompleteMsg& m);
    Effects on_ack(std::uint64_t tag);

    NodeId id() const noexcept { return id_; }
    std::uint32_t phase() const noexcept { return p_; }
    std::uint8_t estimate() const noexcept { return v_; }
    Stage stage() const noexcept { return stage_; }
    std::optional<std::uint8_t> output() const noexcept { return output_; }
    std::optional<std::uint32_t> decision_phase() const noexcept { return decision_phase_; }
    BitSet est_values(std::uint32_t phase) const;
    std::optional<BitSet> frozen_values(std::uint32_t phase) const;
    std::size_t u_size(std::uint32_t phase) const;
    WaitState wait_state(std::uint32_t phase) const;

private:
    struct PhaseState {
        std::set<NodeId> est_senders[2];
        bool relayed[2] = {false, false};
        BitSet est_values;
        std::map<NodeId, BitSet> aux;
        std::set<NodeId> complete;
        std::optional<BitSet> values;
    };

    Effects begin_phase();
    void broadcast_main(Effects& out, Payload payload);
    void continue_main(Effects& out);
    void send_aux(Effects& out);
    void evaluate_wait(Effects& out);

    NodeId id_;
    std::uint32_t f_;
    CommonCoin& coin_;
    std::uint32_t p_ = 0;
    std::uint8_t v_;
    Stage stage_ = Stage::Idle;
    std::optional<std::uint8_t> output_;
    std::optional<std::uint32_t> decision_phase_;
    std::map<std::uint32_t, PhaseState> phases_;
    std::uint64_t next_tag_ = 0;
    std::uint64_t awaiting_tag_ = 0;
    std::vector<Payload> main_queue_;  // AUX broadcasts then COMPLETE, still to send
};

/// All fault-free binary-consensus nodes of a run, sharing one coin.
/// Throws PhaseCapExceeded when a node enters phase max_phases before every node decided.
class RbcDriver final : public NodeDriver {
public:
    explicit RbcDriver(const SimConfig& cfg);

    Effects on_start(NodeId node) override;
    Effects on_deliver(NodeId node, NodeId sender, const Payload& payload) override;
    Effects on_ack(NodeId node, std::uint64_t tag) override;
    bool all_output() const override;
    void fill_view(AdversaryView& view) const override;

    const RbcNode& node(NodeId id) const { return *nodes_.at(id); }
    const CommonCoin& coin() const { return *coin_; }

private:
    Effects guard(NodeId node, Effects effects) const;

    std::uint32_t max_phases_;
    std::unique_ptr<CommonCoin> coin_;
    std::vector<std::optional<RbcNode>> nodes_;
};

}  // namespace macsim
