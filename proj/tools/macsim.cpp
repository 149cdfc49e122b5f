// macsim: run, sweep, check and replay Byzantine consensus simulations over the abstract MAC layer.
//
// Exit status: 0 all checks pass, 1 a check failed or a replay diverged, 2 usage or config error.

#include "macsim/harness.hpp"
#include "macsim/sweep.hpp"
#include "macsim/trace.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

using namespace macsim;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

/// Flags shared by bac, rbc and sweep. Unset flags leave the config-file value alone.
struct RunFlags {
    std::string config_path;
    std::optional<std::uint32_t> n;
    std::optional<std::uint32_t> f;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> adversary;
    std::optional<std::string> schedule;
    std::optional<std::uint32_t> max_phases;
    std::optional<std::uint64_t> max_events;
    std::optional<std::uint32_t> max_delay;
    std::optional<std::uint32_t> stagger;
    std::optional<double> delta;
    std::optional<std::vector<NodeId>> byzantine;
    std::optional<std::string> inputs;
    std::string trace_out;
};

void add_run_flags(CLI::App* cmd, RunFlags& fl, bool sweep) {
    cmd->add_option("--config", fl.config_path, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
    cmd->add_option("--n", fl.n, "node count (default: the minimum for f)");
    if (!sweep) cmd->add_option("--f", fl.f, "fault bound");
    cmd->add_option("--epsilon", fl.epsilon, "agreement tolerance for bac, in (0, 1]");
    cmd->add_option("--seed", fl.seed, sweep ? "first seed" : "run seed");
    if (!sweep) {
        cmd->add_option("--adversary", fl.adversary,
                        "silent | equivocator | extremist | coin_opposer | random_byzantine");
        cmd->add_option("--schedule", fl.schedule, "uniform_random | fifo | mover_skew | max_adversarial");
        cmd->add_option("--byzantine", fl.byzantine, "Byzantine node ids (default: the f highest ids)")
            ->delimiter(',');
    }
    cmd->add_option("--max-phases", fl.max_phases, "rbc phase cap");
    cmd->add_option("--max-events", fl.max_events, "event cap per run");
    cmd->add_option("--max-delay", fl.max_delay, "largest scheduler delay in ticks");
    cmd->add_option("--stagger", fl.stagger, "node i starts at tick i*stagger");
    cmd->add_option("--delta", fl.delta, "extremist offset beyond the fault-free range");
    cmd->add_option("--inputs", fl.inputs,
                    "uniform | bits | zeros | ones | split | extremes | comma-separated values");
}

/// Defaults < config file < flags. n and the Byzantine set follow f unless given explicitly.
SimConfig resolve(const RunFlags& fl, Protocol protocol) {
    SimConfig cfg;
    cfg.protocol = protocol;
    nlohmann::json file = nlohmann::json::object();
    if (!fl.config_path.empty()) {
        std::ifstream in(fl.config_path);
        try {
            file = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("cannot parse " + fl.config_path + ": " + e.what());
        }
        cfg = config_from_json(file, cfg);
        cfg.protocol = protocol;
    }
    if (fl.f) cfg.f = *fl.f;
    if (fl.n) {
        cfg.n = *fl.n;
    } else if (!file.contains("n")) {
        cfg.n = min_nodes(protocol, cfg.f);
    }
    if (fl.epsilon) cfg.epsilon = *fl.epsilon;
    if (fl.seed) cfg.seed = *fl.seed;
    if (fl.adversary) cfg.adversary.kind = adversary_from_string(*fl.adversary);
    if (fl.schedule) cfg.schedule = schedule_from_string(*fl.schedule);
    if (fl.max_phases) cfg.max_phases = *fl.max_phases;
    if (fl.max_events) cfg.max_events = *fl.max_events;
    if (fl.max_delay) cfg.max_delay = *fl.max_delay;
    if (fl.stagger) cfg.start_stagger = *fl.stagger;
    if (fl.delta) cfg.adversary.delta = *fl.delta;
    if (fl.byzantine) {
        cfg.byzantine_ids = *fl.byzantine;
    } else if (!file.contains("byzantine") || fl.f || fl.n) {
        cfg.byzantine_ids = default_byzantine_ids(cfg.n, cfg.f);
    }
    if (cfg.n < min_nodes(protocol, cfg.f)) validate(cfg);  // report the resilience bound first
    if (fl.inputs) {
        cfg.inputs = make_inputs(cfg, *fl.inputs);
    } else if (!file.contains("inputs") || cfg.inputs.size() != cfg.n) {
        cfg.inputs = make_inputs(cfg, "default");
    }
    validate(cfg);
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_single(const RunFlags& fl, Protocol protocol) {
    const SimConfig cfg = resolve(fl, protocol);
    const RunResult res = run_experiment(cfg);
    if (!fl.trace_out.empty()) write_text(fl.trace_out, to_text(res.trace));

    std::cout << to_string(protocol) << " n=" << cfg.n << " f=" << cfg.f << " seed=" << cfg.seed
              << " adversary=" << to_string(cfg.adversary.kind) << " schedule=" << to_string(cfg.schedule)
              << " status=" << to_string(res.status) << " events=" << res.events << '\n';
    if (!res.error.empty()) std::cout << "  " << res.error << '\n';
    if (protocol == Protocol::Bac) {
        std::cout << "p_end=" << res.bac.p_end << " last_round="
                  << (res.bac.last_round ? std::to_string(*res.bac.last_round) : "-")
                  << " output_spread=" << format_double(res.bac.output_spread)
                  << " max_contraction=" << format_double(res.bac.max_contraction) << '\n';
    } else {
        std::cout << "first_decision_phase="
                  << (res.rbc.first_decision_phase ? std::to_string(*res.rbc.first_decision_phase) : "-")
                  << " all_decided_phase="
                  << (res.rbc.all_decided_phase ? std::to_string(*res.rbc.all_decided_phase) : "-") << '\n';
    }
    for (const auto& r : res.trace.records) {
        if (const auto* o = std::get_if<OutputRec>(&r.body)) {
            std::cout << "output node=" << o->node << " value=" << format_double(o->value) << '\n';
        }
    }
    std::cout << res.report.render();
    const bool ok = res.report.passed() && res.status == RunStatus::Completed;
    if (!ok) {
        std::cout << "FAILED; reproduce with: macsim " << to_string(protocol) << " --seed " << cfg.seed
                  << " --f " << cfg.f << " --n " << cfg.n << " --adversary " << to_string(cfg.adversary.kind)
                  << " --schedule " << to_string(cfg.schedule) << '\n';
    }
    return ok ? kPass : kFail;
}

struct SweepFlags {
    std::string protocol = "bac";
    std::vector<std::uint32_t> fs{1};
    std::uint64_t runs = 1;
    std::vector<std::string> adversaries{"silent"};
    std::vector<std::string> schedules{"uniform_random"};
    std::string csv_out;
    bool serial = false;
};

int run_sweep(const RunFlags& fl, const SweepFlags& sw) {
    const Protocol protocol = protocol_from_string(sw.protocol);
    SweepSpec spec;
    RunFlags base_flags = fl;
    base_flags.f = sw.fs.front();
    spec.base = resolve(base_flags, protocol);
    spec.fs = sw.fs;
    spec.minimal_n = !fl.n;
    if (fl.inputs) spec.inputs = *fl.inputs;
    spec.seeds.resize(sw.runs);
    std::iota(spec.seeds.begin(), spec.seeds.end(), spec.base.seed);
    for (const auto& a : sw.adversaries) spec.adversaries.push_back(adversary_from_string(a));
    for (const auto& s : sw.schedules) spec.schedules.push_back(schedule_from_string(s));

    const auto cells = expand(spec);
    const auto rows = sw.serial ? sweep_serial(cells) : sweep_parallel(cells);
    if (!sw.csv_out.empty()) {
        std::ofstream out(sw.csv_out);
        if (!out) throw std::runtime_error("cannot write " + sw.csv_out);
        write_csv(out, rows);
    }
    const auto summary = summarize(rows);
    write_summary(std::cout, summary);

    int failures = 0;
    for (const auto& r : rows) {
        if (r.passed) continue;
        if (++failures <= 5) {
            std::cout << "FAIL seed=" << r.seed << " f=" << r.f << " " << to_string(r.adversary) << "/"
                      << to_string(r.schedule) << ": " << r.first_failure << '\n';
        }
    }
    std::size_t capped = 0;
    for (const auto& r : rows) capped += r.status != RunStatus::Completed ? 1 : 0;
    std::cout << rows.size() << " runs, " << failures << " with failed checks, " << capped << " capped\n";
    return failures ? kFail : kPass;
}

int run_check(const std::string& path) {
    const RunTrace trace = read_trace_file(path);
    CheckReport rep = check_trace(trace);
    rep.merge(check_replay_consistency(trace));
    std::cout << rep.render();
    if (!rep.passed()) {
        std::cout << "FAILED; trace seed=" << trace.config.value("seed", std::uint64_t{0}) << '\n';
        return kFail;
    }
    return kPass;
}

int run_replay(const std::string& path) {
    const auto outcome = replay_trace(read_text(path));
    if (outcome.identical) {
        std::cout << "replay identical\n";
        return kPass;
    }
    std::cout << "replay diverges at line " << outcome.line << "\n  stored:      " << outcome.actual
              << "\n  regenerated: " << outcome.expected << '\n';
    return kFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine consensus over the abstract MAC layer: simulate, sweep, check, replay"};
    app.require_subcommand(1);

    RunFlags bac_flags, rbc_flags, sweep_flags;
    auto* bac = app.add_subcommand("bac", "run one approximate-consensus experiment");
    add_run_flags(bac, bac_flags, false);
    bac->add_option("--trace-out", bac_flags.trace_out, "write the trace here");

    auto* rbc = app.add_subcommand("rbc", "run one randomized binary-consensus experiment");
    add_run_flags(rbc, rbc_flags, false);
    rbc->add_option("--trace-out", rbc_flags.trace_out, "write the trace here");

    SweepFlags sw;
    auto* sweep = app.add_subcommand("sweep", "run seeds x adversaries x schedules (x f)");
    add_run_flags(sweep, sweep_flags, true);
    sweep->add_option("--protocol", sw.protocol, "bac | rbc")->capture_default_str();
    sweep->add_option("--f", sw.fs, "fault bounds")->delimiter(',')->capture_default_str();
    sweep->add_option("--runs", sw.runs, "seeds per cell, counting up from --seed")->capture_default_str();
    sweep->add_option("--adversary", sw.adversaries, "adversary strategies")->delimiter(',')->capture_default_str();
    sweep->add_option("--schedule", sw.schedules, "scheduler policies")->delimiter(',')->capture_default_str();
    sweep->add_option("--csv-out", sw.csv_out, "write one CSV row per run here");
    sweep->add_flag("--serial", sw.serial, "use the single-threaded reference sweep");

    std::string check_path, replay_path;
    auto* check = app.add_subcommand("check", "run the checkers on a stored trace");
    check->add_option("--trace", check_path, "trace file")->required()->check(CLI::ExistingFile);
    auto* replay = app.add_subcommand("replay", "regenerate a stored trace from its header and compare");
    replay->add_option("--trace", replay_path, "trace file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        if (*bac) return run_single(bac_flags, Protocol::Bac);
        if (*rbc) return run_single(rbc_flags, Protocol::Rbc);
        if (*sweep) return run_sweep(sweep_flags, sw);
        if (*check) return run_check(check_path);
        if (*replay) return run_replay(replay_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const TraceParseError& e) {
        std::cerr << "bad trace: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
