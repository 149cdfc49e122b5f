#pragma once

#include "macsim/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace macsim {

struct CheckResult {
    std::string name;
    bool passed = true;
    bool applicable = true;
    std::optional<Tick> tick;      // where the first counterexample sits
    std::string counterexample;    // empty when passed
};

/// Named checks in a fixed order; each keeps only its first counterexample.
class CheckReport {
public:
    CheckResult& add(std::string name);
    /// Marks `name` failed unless it already holds a counterexample.
    void fail(std::string_view name, std::optional<Tick> tick, std::string what);
    void not_applicable(std::string_view name, std::string why);

    bool passed() const;
    const CheckResult* find(std::string_view name) const;
    std::vector<std::string> failed_names() const;
    const std::vector<CheckResult>& checks() const noexcept { return checks_; }

    void merge(const CheckReport& other);
    std::string render() const;
    nlohmann::json to_json() const;

private:
    CheckResult& get(std::string_view name);
    std::vector<CheckResult> checks_;
};

}  // namespace macsim
