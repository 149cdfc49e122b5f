#include "macsim/config.hpp"
#include "macsim/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace macsim {

std::string to_string(Protocol p) { return p == Protocol::Bac ? "bac" : "rbc"; }

Protocol protocol_from_string(const std::string& s) {
    if (s == "bac") return Protocol::Bac;
    if (s == "rbc") return Protocol::Rbc;
    throw ConfigError("unknown protocol '" + s + "' (expected bac or rbc)");
}

std::string to_string(SchedulePolicy p) {
    switch (p) {
        case SchedulePolicy::UniformRandom: return "uniform_random";
        case SchedulePolicy::Fifo: return "fifo";
        case SchedulePolicy::MoverSkew: return "mover_skew";
        case SchedulePolicy::MaxAdversarial: return "max_adversarial";
    }
    return "?";
}

std::string to_string(AdversaryKind k) {
    switch (k) {
        case AdversaryKind::Silent: return "silent";
        case AdversaryKind::Equivocator: return "equivocator";
        case AdversaryKind::Extremist: return "extremist";
        case AdversaryKind::CoinOpposer: return "coin_opposer";
        case AdversaryKind::RandomByzantine: return "random_byzantine";
    }
    return "?";
}

SchedulePolicy schedule_from_string(const std::string& s) {
    for (auto p : {SchedulePolicy::UniformRandom, SchedulePolicy::Fifo, SchedulePolicy::MoverSkew,
                   SchedulePolicy::MaxAdversarial}) {
        if (to_string(p) == s) return p;
    }
    throw ConfigError("unknown scheduler policy '" + s +
                      "' (expected uniform_random, fifo, mover_skew or max_adversarial)");
}

AdversaryKind adversary_from_string(const std::string& s) {
    for (auto k : {AdversaryKind::Silent, AdversaryKind::Equivocator, AdversaryKind::Extremist,
                   AdversaryKind::CoinOpposer, AdversaryKind::RandomByzantine}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown adversary strategy '" + s + "'");
}

PhaseCapExceeded::PhaseCapExceeded(std::uint32_t cap, std::vector<NodePhase> progress)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "phase cap of " << cap << " reached before all fault-free nodes decided; last completed phase:";
          for (const auto& np : progress) os << ' ' << np.node << '=' << np.last_completed;
          return os.str();
      }()),
      cap_(cap),
      progress_(std::move(progress)) {}

bool SimConfig::is_byzantine(NodeId id) const {
    return std::find(byzantine_ids.begin(), byzantine_ids.end(), id) != byzantine_ids.end();
}

std::vector<NodeId> SimConfig::fault_free_ids() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < n; ++i) {
        if (!is_byzantine(i)) out.push_back(i);
    }
    return out;
}

std::uint32_t min_nodes(Protocol p, std::uint32_t f) { return p == Protocol::Bac ? 5 * f + 2 : 5 * f + 1; }

std::vector<NodeId> default_byzantine_ids(std::uint32_t n, std::uint32_t f) {
    std::vector<NodeId> ids;
    for (std::uint32_t k = 0; k < f && k < n; ++k) ids.push_back(n - f + k);
    return ids;
}

std::vector<NodeId> default_slow_nodes(const SimConfig& cfg) {
    const auto ff = cfg.fault_free_ids();
    const std::size_t first = std::min<std::size_t>(ff.size(), 2 * cfg.f + 1);
    return {ff.begin() + static_cast<std::ptrdiff_t>(first), ff.end()};
}

namespace {

std::vector<double> parse_number_list(const std::string& spec) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const auto comma = spec.find(',', pos);
        const auto end = comma == std::string::npos ? spec.size() : comma;
        const std::string tok = spec.substr(pos, end - pos);
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
            throw ConfigError("cannot parse input value '" + tok + "' in --inputs");
        }
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

std::vector<double> make_inputs(const SimConfig& cfg, const std::string& spec) {
    std::vector<double> inputs(cfg.n, 0.0);
    const auto ff = cfg.fault_free_ids();
    auto rng = make_stream(cfg.seed, Stream::Inputs);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    if (spec.empty() || spec == "default") {
        return make_inputs(cfg, cfg.protocol == Protocol::Bac ? "uniform" : "bits");
    }
    if (spec == "uniform") {
        for (NodeId id : ff) inputs[id] = unit(rng);
    } else if (spec == "bits") {
        for (NodeId id : ff) inputs[id] = coin(rng) ? 1.0 : 0.0;
    } else if (spec == "zeros") {
        // all entries already 0
    } else if (spec == "ones") {
        for (NodeId id : ff) inputs[id] = 1.0;
    } else if (spec == "split" || spec == "extremes") {
        for (std::size_t k = 0; k < ff.size(); ++k) {
            inputs[ff[k]] = spec == "split" ? (k < ff.size() / 2 ? 0.0 : 1.0) : static_cast<double>(k % 2);
        }
    } else {
        const auto values = parse_number_list(spec);
        if (values.size() == cfg.n) {
            inputs = values;
        } else if (values.size() == ff.size()) {
            for (std::size_t k = 0; k < ff.size(); ++k) inputs[ff[k]] = values[k];
        } else {
            throw ConfigError("--inputs lists " + std::to_string(values.size()) + " values; expected " +
                              std::to_string(cfg.n) + " (one per node) or " + std::to_string(ff.size()) +
                              " (one per fault-free node)");
        }
    }
    return inputs;
}

void validate(const SimConfig& cfg) {
    const auto need = min_nodes(cfg.protocol, cfg.f);
    if (cfg.n < need) {
        throw ConfigError(std::string(cfg.protocol == Protocol::Bac ? "MAC-BAC requires n >= 5f+2"
                                                                    : "MAC-RBC requires n >= 5f+1") +
                          " (f=" + std::to_string(cfg.f) + " needs n >= " + std::to_string(need) +
                          ", got n=" + std::to_string(cfg.n) + ")");
    }
    if (cfg.byzantine_ids.size() > cfg.f) {
        throw ConfigError("byzantine set has " + std::to_string(cfg.byzantine_ids.size()) +
                          " members but f=" + std::to_string(cfg.f));
    }
    auto sorted = cfg.byzantine_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("byzantine ids must be distinct");
    }
    for (NodeId id : cfg.byzantine_ids) {
        if (id >= cfg.n) throw ConfigError("byzantine id " + std::to_string(id) + " is not below n");
    }
    for (NodeId id : cfg.slow_nodes) {
        if (id >= cfg.n) throw ConfigError("slow node id " + std::to_string(id) + " is not below n");
    }
    if (cfg.protocol == Protocol::Bac && !(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) {
        throw ConfigError("epsilon must lie in (0, 1]");
    }
    if (cfg.max_delay == 0) throw ConfigError("max_delay must be positive");
    if (cfg.inputs.size() != cfg.n) {
        throw ConfigError("expected " + std::to_string(cfg.n) + " inputs, got " + std::to_string(cfg.inputs.size()));
    }
    for (NodeId id = 0; id < cfg.n; ++id) {
        if (cfg.is_byzantine(id)) continue;
        const double x = cfg.inputs[id];
        if (cfg.protocol == Protocol::Bac && !(std::isfinite(x) && x >= 0.0 && x <= 1.0)) {
            throw ConfigError("approximate-consensus inputs must be pre-scaled to [0, 1]");
        }
        if (cfg.protocol == Protocol::Rbc && x != 0.0 && x != 1.0) {
            throw ConfigError("binary-consensus inputs must be 0 or 1");
        }
    }
}

nlohmann::json to_json(const SimConfig& cfg) {
    nlohmann::json j;
    j["protocol"] = to_string(cfg.protocol);
    j["n"] = cfg.n;
    j["f"] = cfg.f;
    j["byzantine"] = cfg.byzantine_ids;
    j["seed"] = cfg.seed;
    j["schedule"] = to_string(cfg.schedule);
    j["adversary"] = to_string(cfg.adversary.kind);
    j["delta"] = cfg.adversary.delta;
    j["epsilon"] = cfg.epsilon;
    j["max_phases"] = cfg.max_phases;
    j["max_events"] = cfg.max_events;
    j["max_delay"] = cfg.max_delay;
    j["start_stagger"] = cfg.start_stagger;
    j["slow_nodes"] = cfg.slow_nodes;
    j["inputs"] = cfg.inputs;
    j["drain"] = cfg.drain;
    return j;
}

SimConfig config_from_json(const nlohmann::json& j, SimConfig base) {
    try {
        if (j.contains("protocol")) base.protocol = protocol_from_string(j.at("protocol").get<std::string>());
        if (j.contains("n")) base.n = j.at("n").get<std::uint32_t>();
        if (j.contains("f")) base.f = j.at("f").get<std::uint32_t>();
        if (j.contains("byzantine")) base.byzantine_ids = j.at("byzantine").get<std::vector<NodeId>>();
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("schedule")) base.schedule = schedule_from_string(j.at("schedule").get<std::string>());
        if (j.contains("adversary")) base.adversary.kind = adversary_from_string(j.at("adversary").get<std::string>());
        if (j.contains("delta")) base.adversary.delta = j.at("delta").get<double>();
        if (j.contains("epsilon")) base.epsilon = j.at("epsilon").get<double>();
        if (j.contains("max_phases")) base.max_phases = j.at("max_phases").get<std::uint32_t>();
        if (j.contains("max_events")) base.max_events = j.at("max_events").get<std::uint64_t>();
        if (j.contains("max_delay")) base.max_delay = j.at("max_delay").get<std::uint32_t>();
        if (j.contains("start_stagger")) base.start_stagger = j.at("start_stagger").get<std::uint32_t>();
        if (j.contains("slow_nodes")) base.slow_nodes = j.at("slow_nodes").get<std::vector<NodeId>>();
        if (j.contains("inputs")) base.inputs = j.at("inputs").get<std::vector<double>>();
        if (j.contains("drain")) base.drain = j.at("drain").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return base;
}

}  // namespace macsim
