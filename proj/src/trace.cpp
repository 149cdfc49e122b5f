#include "macsim/trace.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace macsim {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string format_ids(const std::vector<NodeId>& ids) {
    if (ids.empty()) return "-";
    std::string out;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(ids[k]);
    }
    return out;
}

std::string format_bits(BitSet s) {
    if (s.empty()) return "-";
    if (s.size() == 2) return "0,1";
    return std::to_string(s.only());
}

std::string format_transition(const Transition& t) {
    return std::visit(
        overloaded{
            [](const BacRoundEnd& e) {
                return "BAC_ROUND r=" + std::to_string(e.round) + " l=" + format_double(e.low) +
                       " u=" + format_double(e.high) + " v=" + format_double(e.value) +
                       " got=" + std::to_string(e.received);
            },
            [](const RbcPhaseStart& e) {
                return "RBC_PHASE p=" + std::to_string(e.phase) + " est=" + std::to_string(e.estimate);
            },
            [](const RbcEstValue& e) {
                return "RBC_EST_VALUE p=" + std::to_string(e.phase) + " b=" + std::to_string(e.bit);
            },
            [](const RbcFreeze& e) {
                return "RBC_FREEZE p=" + std::to_string(e.phase) + " values=" + format_bits(e.values) +
                       " xv=" + std::to_string(e.witness_bit) + " X=" + format_ids(e.x) + " Y=" + format_ids(e.y) +
                       " coin=" + std::to_string(e.coin) + " est=" + std::to_string(e.next_estimate) +
                       " decide=" + (e.decided ? "1" : "0");
            },
        },
        t);
}

// ---- parsing helpers ----

class Tokens {
public:
    Tokens(std::string_view line, std::size_t line_no) : line_no_(line_no) {
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && line[pos] == ' ') ++pos;
            if (pos >= line.size()) break;
            const auto end = line.find(' ', pos);
            const auto stop = end == std::string_view::npos ? line.size() : end;
            toks_.push_back(line.substr(pos, stop - pos));
            pos = stop;
        }
    }

    std::string_view next() {
        if (idx_ >= toks_.size()) fail("unexpected end of record");
        return toks_[idx_++];
    }
    std::string_view peek() const { return idx_ < toks_.size() ? toks_[idx_] : std::string_view{}; }
    bool done() const { return idx_ >= toks_.size(); }
    void expect_done() const {
        if (!done()) fail("trailing field '" + std::string(toks_[idx_]) + "'");
    }

    /// Consumes `key=value` and returns value.
    std::string_view field(std::string_view key) {
        const auto tok = next();
        if (tok.size() <= key.size() || tok.substr(0, key.size()) != key || tok[key.size()] != '=') {
            fail("expected field '" + std::string(key) + "=', got '" + std::string(tok) + "'");
        }
        return tok.substr(key.size() + 1);
    }

    template <class Int>
    Int integer(std::string_view s) const {
        Int v{};
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
            fail("bad integer '" + std::string(s) + "'");
        }
        return v;
    }
    double real(std::string_view s) const {
        double v{};
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
            fail("bad real '" + std::string(s) + "'");
        }
        return v;
    }
    std::uint8_t bit(std::string_view s) const {
        const auto v = integer<unsigned>(s);
        if (v > 1) fail("bit out of range: '" + std::string(s) + "'");
        return static_cast<std::uint8_t>(v);
    }
    std::vector<NodeId> ids(std::string_view s) const {
        std::vector<NodeId> out;
        if (s == "-") return out;
        std::size_t pos = 0;
        while (true) {
            const auto comma = s.find(',', pos);
            const auto stop = comma == std::string_view::npos ? s.size() : comma;
            out.push_back(integer<NodeId>(s.substr(pos, stop - pos)));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        return out;
    }
    BitSet bits(std::string_view s) const {
        BitSet out;
        for (NodeId b : ids(s)) out.insert(bit(std::to_string(b)));
        return out;
    }

    [[noreturn]] void fail(const std::string& what) const { throw TraceParseError(line_no_, what); }

private:
    std::vector<std::string_view> toks_;
    std::size_t idx_ = 0;
    std::size_t line_no_;
};

Payload parse_payload(Tokens& t) {
    const auto kind = t.next();
    if (kind == "BAC") {
        BacRoundMsg m;
        m.round = t.integer<std::uint32_t>(t.field("r"));
        m.value = t.real(t.field("v"));
        return m;
    }
    if (kind == "EST") {
        EstMsg m;
        m.phase = t.integer<std::uint32_t>(t.field("p"));
        m.bit = t.bit(t.field("b"));
        return m;
    }
    if (kind == "AUX") {
        AuxMsg m;
        m.phase = t.integer<std::uint32_t>(t.field("p"));
        m.bit = t.bit(t.field("b"));
        m.origin = t.integer<NodeId>(t.field("id"));
        return m;
    }
    if (kind == "COMPLETE") {
        CompleteMsg m;
        m.phase = t.integer<std::uint32_t>(t.field("p"));
        return m;
    }
    t.fail("unknown payload kind '" + std::string(kind) + "'");
}

Transition parse_transition(Tokens& t) {
    const auto kind = t.next();
    if (kind == "BAC_ROUND") {
        BacRoundEnd e;
        e.round = t.integer<std::uint32_t>(t.field("r"));
        e.low = t.real(t.field("l"));
        e.high = t.real(t.field("u"));
        e.value = t.real(t.field("v"));
        e.received = t.integer<std::uint32_t>(t.field("got"));
        return e;
    }
    if (kind == "RBC_PHASE") {
        RbcPhaseStart e;
        e.phase = t.integer<std::uint32_t>(t.field("p"));
        e.estimate = t.bit(t.field("est"));
        return e;
    }
    if (kind == "RBC_EST_VALUE") {
        RbcEstValue e;
        e.phase = t.integer<std::uint32_t>(t.field("p"));
        e.bit = t.bit(t.field("b"));
        return e;
    }
    if (kind == "RBC_FREEZE") {
        RbcFreeze e;
        e.phase = t.integer<std::uint32_t>(t.field("p"));
        e.values = t.bits(t.field("values"));
        e.witness_bit = t.bit(t.field("xv"));
        e.x = t.ids(t.field("X"));
        e.y = t.ids(t.field("Y"));
        e.coin = t.bit(t.field("coin"));
        e.next_estimate = t.bit(t.field("est"));
        e.decided = t.bit(t.field("decide")) == 1;
        return e;
    }
    t.fail("unknown transition kind '" + std::string(kind) + "'");
}

}  // namespace

std::string format_payload(const Payload& p) {
    return std::visit(overloaded{
                          [](const BacRoundMsg& m) {
                              return "BAC r=" + std::to_string(m.round) + " v=" + format_double(m.value);
                          },
                          [](const EstMsg& m) {
                              return "EST p=" + std::to_string(m.phase) + " b=" + std::to_string(m.bit);
                          },
                          [](const AuxMsg& m) {
                              return "AUX p=" + std::to_string(m.phase) + " b=" + std::to_string(m.bit) +
                                     " id=" + std::to_string(m.origin);
                          },
                          [](const CompleteMsg& m) { return "COMPLETE p=" + std::to_string(m.phase); },
                      },
                      p);
}

std::string format_record(const TraceRecord& r) {
    const std::string tick = std::to_string(r.tick);
    return std::visit(
        overloaded{
            [&](const InitRec& b) {
                return tick + " INIT " + std::to_string(b.node) + (b.byzantine ? " role=byz" : " role=ff") +
                       " input=" + format_double(b.input);
            },
            [&](const StartRec& b) { return tick + " START " + std::to_string(b.node); },
            [&](const BroadcastRec& b) {
                return tick + " BCAST " + std::to_string(b.sender) + " bid=" + std::to_string(b.bid) + " " +
                       (b.payload ? format_payload(*b.payload) : std::string("byz"));
            },
            [&](const DeliverRec& b) {
                return tick + " DELIVER " + std::to_string(b.recipient) + " bid=" + std::to_string(b.bid) +
                       " from=" + std::to_string(b.sender) + " sent=" + std::to_string(b.send_tick) + " " +
                       format_payload(b.payload);
            },
            [&](const AckRec& b) { return tick + " ACK " + std::to_string(b.sender) + " bid=" + std::to_string(b.bid); },
            [&](const StateRec& b) {
                return tick + " STATE " + std::to_string(b.node) + " " + format_transition(b.transition);
            },
            [&](const OutputRec& b) { return tick + " OUTPUT " + std::to_string(b.node) + " " + format_double(b.value); },
            [&](const HaltRec&) { return tick + " HALT -"; },
        },
        r.body);
}

void write_trace(std::ostream& os, const RunTrace& trace) {
    os << kTraceMagic << '\n';
    os << "# config " << trace.config.dump() << '\n';
    for (const auto& r : trace.records) os << format_record(r) << '\n';
}

std::string to_text(const RunTrace& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

TraceRecord parse_record(std::string_view line, std::size_t line_no) {
    Tokens t(line, line_no);
    TraceRecord r;
    r.tick = t.integer<Tick>(t.next());
    const auto kind = t.next();
    const auto node_tok = t.next();
    auto node = [&] { return t.integer<NodeId>(node_tok); };

    if (kind == "INIT") {
        InitRec b;
        b.node = node();
        const auto role = t.field("role");
        if (role != "ff" && role != "byz") t.fail("bad role '" + std::string(role) + "'");
        b.byzantine = role == "byz";
        b.input = t.real(t.field("input"));
        r.body = b;
    } else if (kind == "START") {
        r.body = StartRec{node()};
    } else if (kind == "BCAST") {
        BroadcastRec b;
        b.sender = node();
        b.bid = t.integer<BroadcastId>(t.field("bid"));
        if (t.peek() == "byz") {
            t.next();
        } else {
            b.payload = parse_payload(t);
        }
        r.body = b;
    } else if (kind == "DELIVER") {
        DeliverRec b;
        b.recipient = node();
        b.bid = t.integer<BroadcastId>(t.field("bid"));
        b.sender = t.integer<NodeId>(t.field("from"));
        b.send_tick = t.integer<Tick>(t.field("sent"));
        b.payload = parse_payload(t);
        r.body = b;
    } else if (kind == "ACK") {
        AckRec b;
        b.sender = node();
        b.bid = t.integer<BroadcastId>(t.field("bid"));
        r.body = b;
    } else if (kind == "STATE") {
        StateRec b;
        b.node = node();
        b.transition = parse_transition(t);
        r.body = b;
    } else if (kind == "OUTPUT") {
        OutputRec b;
        b.node = node();
        b.value = t.real(t.next());
        r.body = b;
    } else if (kind == "HALT") {
        if (node_tok != "-") t.fail("HALT takes no node");
        r.body = HaltRec{};
    } else {
        t.fail("unknown record kind '" + std::string(kind) + "'");
    }
    t.expect_done();
    return r;
}

RunTrace parse_trace(std::istream& is) {
    RunTrace trace;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line) || line != kTraceMagic) throw TraceParseError(1, "missing trace header");
    ++line_no;
    if (!std::getline(is, line) || line.rfind("# config ", 0) != 0) throw TraceParseError(2, "missing config header");
    ++line_no;
    try {
        trace.config = nlohmann::json::parse(line.substr(9));
    } catch (const nlohmann::json::exception& e) {
        throw TraceParseError(2, std::string("bad config json: ") + e.what());
    }
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        trace.records.push_back(parse_record(line, line_no));
    }
    return trace;
}

RunTrace read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
    return parse_trace(in);
}

}  // namespace macsim
