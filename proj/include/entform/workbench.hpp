#pragma once

#include <optional>
#include <string>
#include <vector>

#include "entform/enclosure.hpp"
#include "entform/scenario.hpp"

#include "json.hpp"

namespace entform {

// One exact identity with a pass/fail verdict and a minimal witness on failure.
struct Certificate {
    std::string name;
    bool pass = true;
    std::string witness;
};

// A measured quantity with its window and enclosure width.
struct MeasuredConstant {
    std::string name;
    Enclosure value;
    std::string window;
    Rational width = Rational(0);
};

struct SuiteResult {
    std::string name;
    std::vector<Certificate> certificates;
    std::vector<MeasuredConstant> constants;
    long runtime_ms = 0;
    std::vector<std::string> notes;
};

struct Report {
    std::string scenario_name;
    GridModel window{1, 0, 0};
    std::vector<SuiteResult> suites;

    bool all_certificates_pass() const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Runs the scenario's suites (or `only` when nonempty): validate | decompose |
// identities | t1 | sparse | weighted | bench. Honors ENTFORM_THREADS for
// running independent suites concurrently.
Report run_scenario(const Scenario& sc, const std::vector<std::string>& only = {},
                    const std::string& engine = "both");

SuiteResult run_suite(const Scenario& sc, const std::string& name, const std::string& engine = "both");

}  // namespace entform
