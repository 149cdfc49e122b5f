#include "macsim/report.hpp"

#include <algorithm>
#include <sstream>

namespace macsim {

CheckResult& CheckReport::add(std::string name) {
    auto it = std::find_if(checks_.begin(), checks_.end(), [&](const CheckResult& c) { return c.name == name; });
    if (it != checks_.end()) return *it;
    CheckResult c;
    c.name = std::move(name);
    checks_.push_back(std::move(c));
    return checks_.back();
}

CheckResult& CheckReport::get(std::string_view name) { return add(std::string(name)); }

void CheckReport::fail(std::string_view name, std::optional<Tick> tick, std::string what) {
    CheckResult& c = get(name);
    if (!c.passed) return;
    c.passed = false;
    c.tick = tick;
    c.counterexample = std::move(what);
}

void CheckReport::not_applicable(std::string_view name, std::string why) {
    CheckResult& c = get(name);
    c.applicable = false;
    c.counterexample = std::move(why);
}

bool CheckReport::passed() const {
    return std::all_of(checks_.begin(), checks_.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* CheckReport::find(std::string_view name) const {
    for (const auto& c : checks_) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

std::vector<std::string> CheckReport::failed_names() const {
    std::vector<std::string> out;
    for (const auto& c : checks_) {
        if (!c.passed) out.push_back(c.name);
    }
    return out;
}

void CheckReport::merge(const CheckReport& other) {
    for (const auto& c : other.checks_) {
        CheckResult& mine = get(c.name);
        if (!c.passed && mine.passed) mine = c;
    }
}

std::string CheckReport::render() const {
    std::ostringstream os;
    for (const auto& c : checks_) {
        os << (c.passed ? (c.applicable ? "pass" : "n/a ") : "FAIL") << "  " << c.name;
        if (!c.counterexample.empty()) {
            os << "  (";
            if (c.tick) os << "tick " << *c.tick << ": ";
            os << c.counterexample << ')';
        }
        os << '\n';
    }
    return os.str();
}

nlohmann::json CheckReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks_) {
        nlohmann::json j{{"check", c.name}, {"passed", c.passed}, {"applicable", c.applicable}};
        if (c.tick) j["tick"] = *c.tick;
        if (!c.counterexample.empty()) j["detail"] = c.counterexample;
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace macsim
