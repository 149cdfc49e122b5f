#include "macsim/rbc.hpp"

#include <algorithm>

namespace macsim {

CommonCoin::CommonCoin(std::uint64_t seed) : gen_(make_stream(seed, Stream::Coin)) {}

std::uint8_t CommonCoin::peek(std::uint32_t phase) {
    while (bits_.size() <= phase) bits_.push_back(static_cast<std::uint8_t>(gen_() >> 63));
    return bits_[phase];
}

std::uint8_t CommonCoin::flip(std::uint32_t phase) {
    const auto bit = peek(phase);
    revealed_.insert(phase);
    if (phase == *revealed_.rbegin()) last_revealed_ = bit;
    return bit;
}

std::optional<WaitWitness> check_wait(const WaitState& s) {
    const std::size_t quorum = 2 * std::size_t{s.f} + 1;
    const std::size_t u = s.aux.size();
    if (u < s.f + quorum) return std::nullopt;
    const std::size_t y_size = u - s.f;

    std::vector<NodeId> good;  // ascending, since aux is an ordered map
    for (const auto& [sender, bits] : s.aux) {
        if (!bits.empty() && bits.subset_of(s.est_values)) good.push_back(sender);
    }
    if (good.size() < y_size) return std::nullopt;

    for (std::uint8_t v : {std::uint8_t{0}, std::uint8_t{1}}) {
        if (!s.est_values.contains(v)) continue;
        std::vector<NodeId> xv;
        for (NodeId g : good) {
            if (s.aux.at(g).contains(v) && s.complete.count(g)) xv.push_back(g);
        }
        if (xv.size() < quorum) continue;

        WaitWitness w;
        w.bit = v;
        w.x.assign(xv.begin(), xv.begin() + static_cast<std::ptrdiff_t>(std::min(xv.size(), y_size)));
        w.y = w.x;
        for (NodeId g : good) {
            if (w.y.size() == y_size) break;
            if (!std::binary_search(w.x.begin(), w.x.end(), g)) w.y.push_back(g);
        }
        std::sort(w.y.begin(), w.y.end());
        for (NodeId m : w.y) w.values.mask |= s.aux.at(m).mask;
        return w;
    }
    return std::nullopt;
}

PhaseOutcome phase_step(BitSet values, std::uint8_t coin) {
    if (values.size() == 1) return {values.only(), values.only() == coin};
    return {coin, false};
}

RbcNode::RbcNode(NodeId id, std::uint32_t f, std::uint8_t input, CommonCoin& coin)
    : id_(id), f_(f), coin_(coin), v_(input) {}

BitSet RbcNode::est_values(std::uint32_t phase) const {
    const auto it = phases_.find(phase);
    return it == phases_.end() ? BitSet{} : it->second.est_values;
}

std::optional<BitSet> RbcNode::frozen_values(std::uint32_t phase) const {
    const auto it = phases_.find(phase);
    return it == phases_.end() ? std::nullopt : it->second.values;
}

std::size_t RbcNode::u_size(std::uint32_t phase) const {
    const auto it = phases_.find(phase);
    return it == phases_.end() ? 0 : it->second.aux.size();
}

WaitState RbcNode::wait_state(std::uint32_t phase) const {
    WaitState s;
    s.f = f_;
    if (const auto it = phases_.find(phase); it != phases_.end()) {
        s.est_values = it->second.est_values;
        s.aux = it->second.aux;
        s.complete = it->second.complete;
    }
    return s;
}

void RbcNode::broadcast_main(Effects& out, Payload payload) {
    awaiting_tag_ = ++next_tag_;
    out.emplace_back(BroadcastAction{std::move(payload), awaiting_tag_});
}

Effects RbcNode::start() {
    if (stage_ != Stage::Idle) return {};
    return begin_phase();
}

Effects RbcNode::begin_phase() {
    Effects out;
    out.emplace_back(RbcPhaseStart{p_, v_});
    phases_[p_].relayed[v_] = true;
    stage_ = Stage::EstAck;
    broadcast_main(out, EstMsg{p_, v_});
    return out;
}

void RbcNode::send_aux(Effects& out) {
    const BitSet snapshot = phases_[p_].est_values;
    main_queue_.clear();
    for (std::uint8_t b : {std::uint8_t{0}, std::uint8_t{1}}) {
        if (snapshot.contains(b)) main_queue_.emplace_back(AuxMsg{p_, b, id_});
    }
    main_queue_.emplace_back(CompleteMsg{p_});
    stage_ = Stage::AuxAck;
    continue_main(out);
}

void RbcNode::continue_main(Effects& out) {
    if (!main_queue_.empty()) {
        Payload next = main_queue_.front();
        main_queue_.erase(main_queue_.begin());
        broadcast_main(out, std::move(next));
        return;
    }
    stage_ = Stage::AwaitWait;
    evaluate_wait(out);
}

void RbcNode::evaluate_wait(Effects& out) {
    if (stage_ != Stage::AwaitWait) return;
    PhaseState& ps = phases_[p_];
    const auto w = check_wait(wait_state(p_));
    if (!w) return;
    ps.values = w->values;

    const std::uint8_t coin = coin_.flip(p_);
    const PhaseOutcome step = phase_step(w->values, coin);
    RbcFreeze fr{p_, w->values, w->bit, w->x, w->y, coin, step.next_estimate, step.decide};
    out.emplace_back(fr);
    if (fr.decided && !output_) {
        output_ = fr.next_estimate;
        decision_phase_ = p_;
        out.emplace_back(OutputAction{static_cast<double>(fr.next_estimate)});
    }
    v_ = fr.next_estimate;
    ++p_;
    auto next = begin_phase();
    out.insert(out.end(), std::make_move_iterator(next.begin()), std::make_move_iterator(next.end()));
}

Effects RbcNode::on_est(NodeId sender, const EstMsg& m) {
    if (m.bit > 1) return {};
    PhaseState& ps = phases_[m.phase];
    auto& senders = ps.est_senders[m.bit];
    if (!senders.insert(sender).second) return {};

    Effects out;
    if (senders.size() >= f_ + 1 && !ps.relayed[m.bit]) {
        ps.relayed[m.bit] = true;
        out.emplace_back(BroadcastAction{EstMsg{m.phase, m.bit}, ++next_tag_});
    }
    if (senders.size() == 2 * std::size_t{f_} + 1) {
        ps.est_values.insert(m.bit);
        out.emplace_back(RbcEstValue{m.phase, m.bit});
        if (m.phase == p_) {
            if (stage_ == Stage::AwaitEstValues) {
                send_aux(out);
            } else {
                evaluate_wait(out);
            }
        }
    }
    return out;
}

Effects RbcNode::on_aux(NodeId sender, const AuxMsg& m) {
    if (m.origin != sender || m.bit > 1) return {};
    phases_[m.phase].aux[sender].insert(m.bit);
    Effects out;
    if (m.phase == p_) evaluate_wait(out);
    return out;
}

Effects RbcNode::on_complete(NodeId sender, const CompleteMsg& m) {
    phases_[m.phase].complete.insert(sender);
    Effects out;
    if (m.phase == p_) evaluate_wait(out);
    return out;
}

Effects RbcNode::on_ack(std::uint64_t tag) {
    if (tag != awaiting_tag_) return {};
    Effects out;
    if (stage_ == Stage::EstAck) {
        stage_ = Stage::AwaitEstValues;
        if (!phases_[p_].est_values.empty()) send_aux(out);
    } else if (stage_ == Stage::AuxAck) {
        continue_main(out);
    }
    return out;
}

RbcDriver::RbcDriver(const SimConfig& cfg)
    : max_phases_(cfg.max_phases), coin_(std::make_unique<CommonCoin>(cfg.seed)), nodes_(cfg.n) {
    for (NodeId id : cfg.fault_free_ids()) {
        nodes_[id].emplace(id, cfg.f, static_cast<std::uint8_t>(cfg.inputs.at(id) >= 0.5 ? 1 : 0), *coin_);
    }
}

Effects RbcDriver::guard(NodeId node, Effects effects) const {
    if (nodes_[node]->phase() >= max_phases_ && !all_output()) {
        std::vector<PhaseCapExceeded::NodePhase> progress;
        for (const auto& n : nodes_) {
            if (n) progress.push_back({n->id(), static_cast<std::int64_t>(n->phase()) - 1});
        }
        throw PhaseCapExceeded(max_phases_, std::move(progress));
    }
    return effects;
}

Effects RbcDriver::on_start(NodeId node) { return guard(node, nodes_.at(node)->start()); }

Effects RbcDriver::on_deliver(NodeId node, NodeId sender, const Payload& payload) {
    RbcNode& n = *nodes_.at(node);
    if (const auto* m = std::get_if<EstMsg>(&payload)) return guard(node, n.on_est(sender, *m));
    if (const auto* m = std::get_if<AuxMsg>(&payload)) return guard(node, n.on_aux(sender, *m));
    if (const auto* m = std::get_if<CompleteMsg>(&payload)) return guard(node, n.on_complete(sender, *m));
    return {};
}

Effects RbcDriver::on_ack(NodeId node, std::uint64_t tag) { return guard(node, nodes_.at(node)->on_ack(tag)); }

bool RbcDriver::all_output() const {
    return std::all_of(nodes_.begin(), nodes_.end(), [](const auto& n) { return !n || n->output(); });
}

void RbcDriver::fill_view(AdversaryView& view) const {
    for (const auto& n : nodes_) {
        if (!n) continue;
        view.values[n->id()] = n->estimate();
        view.progress[n->id()] = n->phase();
    }
    view.last_revealed_coin = coin_->last_revealed();
}

}  // namespace macsim
