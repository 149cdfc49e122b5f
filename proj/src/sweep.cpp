#include "macsim/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

namespace macsim {

std::vector<SimConfig> expand(const SweepSpec& spec) {
    const auto fs = spec.fs.empty() ? std::vector<std::uint32_t>{spec.base.f} : spec.fs;
    const auto advs = spec.adversaries.empty() ? std::vector<AdversaryKind>{spec.base.adversary.kind} : spec.adversaries;
    const auto scheds = spec.schedules.empty() ? std::vector<SchedulePolicy>{spec.base.schedule} : spec.schedules;
    const auto seeds = spec.seeds.empty() ? std::vector<std::uint64_t>{spec.base.seed} : spec.seeds;

    std::vector<SimConfig> out;
    out.reserve(fs.size() * advs.size() * scheds.size() * seeds.size());
    for (auto f : fs) {
        for (auto a : advs) {
            for (auto s : scheds) {
                for (auto seed : seeds) {
                    SimConfig c = spec.base;
                    c.f = f;
                    if (spec.minimal_n) c.n = min_nodes(c.protocol, f);
                    if (spec.minimal_n || c.byzantine_ids.size() != f) c.byzantine_ids = default_byzantine_ids(c.n, f);
                    c.adversary.kind = a;
                    c.schedule = s;
                    c.seed = seed;
                    c.slow_nodes.clear();
                    c.inputs = make_inputs(c, spec.inputs);
                    validate(c);
                    out.push_back(std::move(c));
                }
            }
        }
    }
    return out;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

SweepRow make_row(const RunResult& r, bool keep_trace) {
    SweepRow row;
    row.protocol = r.cfg.protocol;
    row.f = r.cfg.f;
    row.n = r.cfg.n;
    row.seed = r.cfg.seed;
    row.adversary = r.cfg.adversary.kind;
    row.schedule = r.cfg.schedule;
    row.status = r.status;
    row.passed = r.report.passed();
    row.failed_checks = r.report.failed_names();
    row.events = r.events;
    const std::string text = to_text(r.trace);
    row.digest = fnv1a(text);
    if (keep_trace) row.trace_text = text;
    if (!row.failed_checks.empty()) {
        const auto* c = r.report.find(row.failed_checks.front());
        row.first_failure = c->name + ": " + c->counterexample;
    } else if (r.status != RunStatus::Completed) {
        row.first_failure = r.error;
    }
    if (r.cfg.protocol == Protocol::Bac) {
        row.last_round = r.bac.last_round;
        row.max_contraction = r.bac.max_contraction;
        row.mean_contraction = r.bac.mean_contraction;
        row.output_spread = r.bac.output_spread;
    } else {
        row.first_decision_phase = r.rbc.first_decision_phase;
        row.all_decided_phase = r.rbc.all_decided_phase;
        row.max_phase = r.rbc.max_phase;
    }
    return row;
}

std::vector<SweepRow> sweep_serial(std::span<const SimConfig> cells, const std::set<std::size_t>& keep) {
    std::vector<SweepRow> rows;
    rows.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) rows.push_back(make_row(run_experiment(cells[i]), keep.count(i) > 0));
    return rows;
}

std::vector<SweepRow> sweep_parallel(std::span<const SimConfig> cells, const std::set<std::size_t>& keep) {
    for (const auto& c : cells) validate(c);  // nothing may throw inside the parallel region
    std::vector<SweepRow> rows(cells.size());
    const auto count = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        rows[k] = make_row(run_experiment(cells[k]), keep.count(k) > 0);
    }
    return rows;
}

namespace {

double percentile95(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
    return v[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

std::vector<CellSummary> summarize(std::span<const SweepRow> rows) {
    using Key = std::tuple<Protocol, std::uint32_t, std::uint32_t, AdversaryKind, SchedulePolicy>;
    std::map<Key, std::vector<const SweepRow*>> groups;
    std::vector<Key> order;
    for (const auto& r : rows) {
        const Key k{r.protocol, r.f, r.n, r.adversary, r.schedule};
        auto& g = groups[k];
        if (g.empty()) order.push_back(k);
        g.push_back(&r);
    }
    std::vector<CellSummary> out;
    for (const auto& k : order) {
        CellSummary c;
        std::tie(c.protocol, c.f, c.n, c.adversary, c.schedule) = k;
        std::vector<double> steps;
        double ratio_sum = 0.0;
        std::size_t ratio_count = 0;
        for (const SweepRow* r : groups[k]) {
            ++c.runs;
            c.completed += r->status == RunStatus::Completed ? 1 : 0;
            c.passed += r->passed ? 1 : 0;
            if (r->protocol == Protocol::Bac) {
                if (r->last_round) steps.push_back(*r->last_round + 1.0);
                ratio_sum += r->mean_contraction;
                ++ratio_count;
                c.max_contraction = std::max(c.max_contraction, r->max_contraction);
            } else if (r->first_decision_phase) {
                steps.push_back(*r->first_decision_phase + 1.0);
            }
        }
        double sum = 0.0;
        for (double s : steps) sum += s;
        c.mean_steps = steps.empty() ? 0.0 : sum / static_cast<double>(steps.size());
        c.p95_steps = percentile95(steps);
        c.mean_contraction = ratio_count ? ratio_sum / static_cast<double>(ratio_count) : 0.0;
        out.push_back(c);
    }
    return out;
}

namespace {

template <class T>
std::string opt(const std::optional<T>& v) {
    return v ? std::to_string(*v) : std::string();
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? std::string(1, sep) : "") + v[k];
    return out;
}

}  // namespace

void write_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "protocol,f,n,seed,adversary,schedule,status,passed,failed_checks,events,digest,"
          "last_round,max_contraction,mean_contraction,output_spread,"
          "first_decision_phase,all_decided_phase,max_phase\n";
    for (const auto& r : rows) {
        os << to_string(r.protocol) << ',' << r.f << ',' << r.n << ',' << r.seed << ',' << to_string(r.adversary)
           << ',' << to_string(r.schedule) << ',' << to_string(r.status) << ',' << (r.passed ? 1 : 0) << ','
           << join(r.failed_checks, ';') << ',' << r.events << ',' << r.digest << ',' << opt(r.last_round) << ','
           << format_double(r.max_contraction) << ',' << format_double(r.mean_contraction) << ','
           << format_double(r.output_spread) << ',' << opt(r.first_decision_phase) << ','
           << opt(r.all_decided_phase) << ',' << r.max_phase << '\n';
    }
}

void write_summary(std::ostream& os, std::span<const CellSummary> cells) {
    for (const auto& c : cells) {
        os << to_string(c.protocol) << " f=" << c.f << " n=" << c.n << " " << to_string(c.adversary) << "/"
           << to_string(c.schedule) << ": runs=" << c.runs << " completed=" << c.completed << " passed=" << c.passed
           << " pass_rate=" << format_double(c.pass_rate());
        if (c.protocol == Protocol::Bac) {
            os << " rounds mean=" << format_double(c.mean_steps) << " p95=" << format_double(c.p95_steps)
               << " contraction mean=" << format_double(c.mean_contraction)
               << " max=" << format_double(c.max_contraction);
        } else {
            os << " phases-to-first-decision mean=" << format_double(c.mean_steps)
               << " p95=" << format_double(c.p95_steps);
        }
        os << '\n';
    }
}

}  // namespace macsim
