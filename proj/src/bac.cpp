#include "macsim/bac.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace macsim {

std::uint32_t p_end_for(double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0) {
        throw InvalidEpsilon("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
    }
    const double x = 2.0 * std::log(epsilon) / std::log(0.75);
    // x is an exact integer for epsilon = (3/4)^k; absorb rounding noise before the ceiling.
    return static_cast<std::uint32_t>(std::max(0.0, std::ceil(x - 1e-9)));
}

std::pair<double, double> trimmed_bounds(std::span<const double> values, std::uint32_t f) {
    if (values.size() < 4 * std::size_t{f} + 2) {
        throw InsufficientValues("trimmed_bounds needs at least " + std::to_string(4 * f + 2) + " values, got " +
                                 std::to_string(values.size()));
    }
    std::vector<double> v(values.begin(), values.end());
    std::nth_element(v.begin(), v.begin() + f, v.end());
    const double l = v[f];
    const auto hi = v.end() - 1 - f;
    std::nth_element(v.begin(), hi, v.end());
    return {l, *hi};
}

BacNode::BacNode(NodeId id, std::uint32_t f, double input, std::uint32_t p_end)
    : id_(id), f_(f), v_(input), p_end_(p_end) {}

const std::map<NodeId, double>& BacNode::inbox(std::uint32_t r) const {
    static const std::map<NodeId, double> empty;
    const auto it = inbox_.find(r);
    return it == inbox_.end() ? empty : it->second;
}

Effects BacNode::start() {
    if (started_) return {};
    started_ = true;
    return {BroadcastAction{BacRoundMsg{p_, v_}, p_}};
}

Effects BacNode::on_round_message(NodeId sender, const BacRoundMsg& msg) {
    if (!std::isfinite(msg.value)) return {};
    if (!inbox_[msg.round].emplace(sender, msg.value).second) return {};
    return msg.round == p_ ? try_advance() : Effects{};
}

Effects BacNode::on_ack(std::uint64_t tag) {
    if (tag != p_ || output_) return {};
    acked_ = true;
    return try_advance();
}

Effects BacNode::try_advance() {
    const auto& box = inbox(p_);
    if (output_ || !acked_ || box.size() < 4 * std::size_t{f_} + 2) return {};

    std::vector<double> values;
    values.reserve(box.size());
    for (const auto& [_, v] : box) values.push_back(v);
    const auto [l, u] = trimmed_bounds(values, f_);
    v_ = update_state(l, u);

    Effects out;
    out.emplace_back(BacRoundEnd{p_, l, u, v_, static_cast<std::uint32_t>(box.size())});
    ++p_;
    acked_ = false;
    if (p_ > p_end_) {
        output_ = v_;
        out.emplace_back(OutputAction{v_});
    } else {
        out.emplace_back(BroadcastAction{BacRoundMsg{p_, v_}, p_});
    }
    return out;
}

BacDriver::BacDriver(const SimConfig& cfg) : nodes_(cfg.n) {
    const auto p_end = p_end_for(cfg.epsilon);
    for (NodeId id : cfg.fault_free_ids()) nodes_[id].emplace(id, cfg.f, cfg.inputs.at(id), p_end);
}

Effects BacDriver::on_start(NodeId node) { return nodes_.at(node)->start(); }

Effects BacDriver::on_deliver(NodeId node, NodeId sender, const Payload& payload) {
    const auto* msg = std::get_if<BacRoundMsg>(&payload);
    if (!msg) return {};
    return nodes_.at(node)->on_round_message(sender, *msg);
}

Effects BacDriver::on_ack(NodeId node, std::uint64_t tag) { return nodes_.at(node)->on_ack(tag); }

bool BacDriver::all_output() const {
    return std::all_of(nodes_.begin(), nodes_.end(), [](const auto& n) { return !n || n->output(); });
}

void BacDriver::fill_view(AdversaryView& view) const {
    for (const auto& n : nodes_) {
        if (!n) continue;
        view.values[n->id()] = n->value();
        view.progress[n->id()] = n->round();
    }
}

}  // namespace macsim
