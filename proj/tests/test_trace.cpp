#include "doctest.h"

#include "macsim/harness.hpp"
#include "macsim/trace.hpp"

#include <limits>
#include <sstream>

using namespace macsim;

TEST_SUITE("trace") {

TEST_CASE("every record kind survives format and parse") {
    RbcFreeze fr;
    fr.phase = 3;
    fr.values.mask = 3;
    fr.witness_bit = 1;
    fr.x = {0, 2, 4};
    fr.y = {0, 1, 2, 4};
    fr.coin = 1;
    fr.next_estimate = 1;
    const std::vector<TraceRecord> records{
        {0, InitRec{3, true, 0.25}},
        {0, StartRec{1}},
        {4, BroadcastRec{2, 17, Payload{BacRoundMsg{5, 0.1 + 0.2}}}},
        {4, BroadcastRec{6, 18, std::nullopt}},
        {7, DeliverRec{0, 17, 2, 4, Payload{AuxMsg{2, 1, 2}}}},
        {8, DeliverRec{1, 18, 6, 4, Payload{EstMsg{0, 0}}}},
        {8, DeliverRec{1, 19, 6, 4, Payload{CompleteMsg{9}}}},
        {9, AckRec{2, 17}},
        {9, StateRec{2, BacRoundEnd{5, 0.125, 0.875, 0.5, 6}}},
        {9, StateRec{2, RbcPhaseStart{4, 1}}},
        {9, StateRec{2, RbcEstValue{4, 0}}},
        {9, StateRec{2, fr}},
        {10, OutputRec{2, 1.0 / 3.0}},
        {11, HaltRec{}},
    };
    for (const auto& r : records) {
        const auto line = format_record(r);
        CAPTURE(line);
        CHECK(parse_record(line) == r);
    }
    CHECK(format_record(records[2]) == "4 BCAST 2 bid=17 BAC r=5 v=0.30000000000000004");
    CHECK(format_record(records[11]) ==
          "9 STATE 2 RBC_FREEZE p=3 values=0,1 xv=1 X=0,2,4 Y=0,1,2,4 coin=1 est=1 decide=0");
}

TEST_CASE("whole traces round-trip byte for byte") {
    for (Protocol p : {Protocol::Bac, Protocol::Rbc}) {
        SimConfig c;
        c.protocol = p;
        c.n = min_nodes(p, 1);
        c.byzantine_ids = default_byzantine_ids(c.n, 1);
        c.adversary.kind = AdversaryKind::RandomByzantine;
        c.seed = 3;
        c.inputs = make_inputs(c, "default");
        const RunTrace t = simulate(c);
        const std::string text = to_text(t);
        std::istringstream in(text);
        const RunTrace back = parse_trace(in);
        CHECK(back.records == t.records);
        CHECK(to_text(back) == text);
    }
}

TEST_CASE("malformed records are rejected with a line number") {
    CHECK_THROWS_AS(parse_record("3 OUTPUT 1 nan"), TraceParseError);
    CHECK_THROWS_AS(parse_record("3 OUTPUT 1 inf"), TraceParseError);
    CHECK_THROWS_AS(parse_record("3 INIT 1 role=ff input=-inf"), TraceParseError);
    CHECK_THROWS_AS(parse_record("3 BCAST 1 bid=2 BAC r=0 v=1e999"), TraceParseError);
    CHECK_THROWS_AS(parse_record("3 FROB 1"), TraceParseError);
    CHECK_THROWS_AS(parse_record("3 ACK 1 bid=2 extra"), TraceParseError);
    CHECK_THROWS_AS(parse_record("3 STATE 1 RBC_PHASE p=0 est=2"), TraceParseError);
    try {
        parse_record("x START 1", 12);
        FAIL("expected a parse error");
    } catch (const TraceParseError& e) {
        CHECK(e.line() == 12);
    }

    std::istringstream no_magic("# something else\n");
    CHECK_THROWS_AS(parse_trace(no_magic), TraceParseError);
    std::istringstream bad_json(std::string(kTraceMagic) + "\n# config {oops\n");
    CHECK_THROWS_AS(parse_trace(bad_json), TraceParseError);
}

TEST_CASE("doubles print in shortest round-trip form") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
    const double third = 1.0 / 3.0;
    CHECK(std::stod(format_double(third)) == third);
}

}
