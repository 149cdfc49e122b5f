#pragma once

#include "macsim/harness.hpp"

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace macsim {

/// Cartesian product of fault bounds, seeds, adversaries and schedules over a base config.
struct SweepSpec {
    SimConfig base;
    std::vector<std::uint32_t> fs;  // empty: base.f only
    std::vector<std::uint64_t> seeds;
    std::vector<AdversaryKind> adversaries;  // empty: base.adversary only
    std::vector<SchedulePolicy> schedules;   // empty: base.schedule only
    std::string inputs = "default";
    bool minimal_n = true;  // n = 5f+2 / 5f+1 per cell; otherwise base.n
};

/// One validated config per cell, in (f, adversary, schedule, seed) order.
std::vector<SimConfig> expand(const SweepSpec& spec);

struct SweepRow {
    Protocol protocol = Protocol::Bac;
    std::uint32_t f = 0;
    std::uint32_t n = 0;
    std::uint64_t seed = 0;
    AdversaryKind adversary = AdversaryKind::Silent;
    SchedulePolicy schedule = SchedulePolicy::UniformRandom;
    RunStatus status = RunStatus::Completed;
    bool passed = false;
    std::vector<std::string> failed_checks;
    std::uint64_t events = 0;
    std::uint64_t digest = 0;  // FNV-1a of the trace text

    // approximate consensus
    std::optional<std::uint32_t> last_round;
    double max_contraction = 0.0;
    double mean_contraction = 0.0;
    double output_spread = 0.0;

    // binary consensus
    std::optional<std::uint32_t> first_decision_phase;
    std::optional<std::uint32_t> all_decided_phase;
    std::uint32_t max_phase = 0;

    std::string trace_text;  // kept only when requested
    std::string first_failure;
};

std::uint64_t fnv1a(std::string_view text);
SweepRow make_row(const RunResult& result, bool keep_trace);

/// `keep` holds the cell indices whose trace text should be kept in the row.
std::vector<SweepRow> sweep_serial(std::span<const SimConfig> cells, const std::set<std::size_t>& keep = {});
/// Same rows as sweep_serial, cells spread over OpenMP threads.
std::vector<SweepRow> sweep_parallel(std::span<const SimConfig> cells, const std::set<std::size_t>& keep = {});

struct CellSummary {
    Protocol protocol = Protocol::Bac;
    std::uint32_t f = 0;
    std::uint32_t n = 0;
    AdversaryKind adversary = AdversaryKind::Silent;
    SchedulePolicy schedule = SchedulePolicy::UniformRandom;
    std::size_t runs = 0;
    std::size_t completed = 0;
    std::size_t passed = 0;
    /// Rounds (last round index + 1) or phases to first decision (decision phase + 1).
    double mean_steps = 0.0;
    double p95_steps = 0.0;
    double mean_contraction = 0.0;
    double max_contraction = 0.0;
    double pass_rate() const { return runs ? static_cast<double>(passed) / static_cast<double>(runs) : 0.0; }
    double completion_rate() const {
        return runs ? static_cast<double>(completed) / static_cast<double>(runs) : 0.0;
    }
};

std::vector<CellSummary> summarize(std::span<const SweepRow> rows);

void write_csv(std::ostream& os, std::span<const SweepRow> rows);
void write_summary(std::ostream& os, std::span<const CellSummary> cells);

}  // namespace macsim
