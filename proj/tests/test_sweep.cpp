#include "doctest.h"

#include "macsim/sweep.hpp"

#include <sstream>

using namespace macsim;

namespace {

SweepSpec small_spec(Protocol p) {
    SweepSpec s;
    s.base.protocol = p;
    s.fs = {1, 2};
    s.adversaries = {AdversaryKind::Silent, AdversaryKind::Equivocator};
    s.schedules = {SchedulePolicy::UniformRandom, SchedulePolicy::MaxAdversarial};
    s.seeds = {1, 2, 3};
    return s;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("expansion order and sizing") {
    const auto cells = expand(small_spec(Protocol::Bac));
    REQUIRE(cells.size() == 24);
    CHECK(cells[0].f == 1);
    CHECK(cells[0].n == 7);
    CHECK(cells[0].seed == 1);
    CHECK(cells[2].seed == 3);
    CHECK(cells[3].schedule == SchedulePolicy::MaxAdversarial);
    CHECK(cells[6].adversary.kind == AdversaryKind::Equivocator);
    CHECK(cells[12].f == 2);
    CHECK(cells[12].n == 12);
    CHECK(cells[12].byzantine_ids == std::vector<NodeId>{10, 11});

    SweepSpec one;
    one.base.seed = 5;
    one.base.inputs.assign(7, 0.5);
    one.base.byzantine_ids = {6};
    CHECK(expand(one).size() == 1);

    SweepSpec bad = small_spec(Protocol::Bac);
    bad.minimal_n = false;
    bad.base.n = 8;
    CHECK_THROWS_AS(expand(bad), ConfigError);  // f=2 needs 12 nodes
}

TEST_CASE("the parallel sweep reproduces the serial one") {
    for (Protocol p : {Protocol::Bac, Protocol::Rbc}) {
        const auto cells = expand(small_spec(p));
        const auto serial = sweep_serial(cells, {0, 5});
        const auto parallel = sweep_parallel(cells, {0, 5});
        REQUIRE(serial.size() == parallel.size());
        for (std::size_t k = 0; k < serial.size(); ++k) {
            CAPTURE(k);
            CHECK(serial[k].digest == parallel[k].digest);
            CHECK(serial[k].seed == parallel[k].seed);
            CHECK(serial[k].passed);
            CHECK(serial[k].events == parallel[k].events);
        }
        CHECK_FALSE(serial[0].trace_text.empty());
        CHECK(serial[0].trace_text == parallel[0].trace_text);
        CHECK(serial[1].trace_text.empty());
        CHECK(fnv1a(serial[5].trace_text) == serial[5].digest);
    }
}

TEST_CASE("summaries and CSV") {
    const auto rows = sweep_serial(expand(small_spec(Protocol::Rbc)));
    const auto cells = summarize(rows);
    CHECK(cells.size() == 8);
    for (const auto& c : cells) {
        CHECK(c.runs == 3);
        CHECK(c.pass_rate() == 1.0);
        CHECK(c.completion_rate() == 1.0);
        CHECK(c.mean_steps >= 1.0);
        CHECK(c.p95_steps >= c.mean_steps - 1e-9);
    }

    std::ostringstream csv;
    write_csv(csv, rows);
    std::istringstream in(csv.str());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "protocol,f,n,seed,adversary,schedule,status,passed,failed_checks,events,digest,last_round,"
          "max_contraction,mean_contraction,output_spread,first_decision_phase,all_decided_phase,max_phase");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == rows.size());

    std::ostringstream summary;
    write_summary(summary, cells);
    CHECK(summary.str().find("phases-to-first-decision") != std::string::npos);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

}
