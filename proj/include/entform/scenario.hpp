#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "entform/forms.hpp"
#include "entform/hypergraph.hpp"
#include "entform/kernel.hpp"
#include "entform/stepfn.hpp"
#include "entform/weights.hpp"

#include "json.hpp"

namespace entform {

// Parsed scenario: everything a suite run needs, fully materialized.
struct Scenario {
    int schema_version = 1;
    GridModel model;
    Hypergraph hypergraph;
    std::string kernel_kind;  // "zero" | "twisted" | "cells" | "coefficients"
    PerfectDyadicKernel kernel;
    FunctionTuple functions;
    std::optional<WeightTuple> weights;
    std::optional<std::vector<PExp>> exponents;
    std::vector<std::string> suites;
    uint64_t seed = 0;
    Rational width = Rational(1, 1 << 20);

    Scenario() : kernel(GridModel{1, 0, 0}, KernelArrangement{{1}}) {}
};

// Throws std::invalid_argument with a field path on schema violations.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

// Textual cube form "k:(l1,...,lr)".
std::string cube_to_string(const DyadicCube& q);
std::optional<DyadicCube> cube_from_string(const std::string& s);

// Deterministic generation; profiles: random-kernel-via-coefficients,
// random-tuple, spike, constant.
struct GenerateOptions {
    std::string profile = "random-tuple";
    uint64_t seed = 0;
    int r = 2;
    int L = 1;
    int N = 1;
    std::vector<int> class_sizes;  // default: all 2
    std::vector<std::string> suites;
    std::optional<Rational> coeff_cap;  // bound on |lambda| for random kernels
};

nlohmann::json generate_scenario(const GenerateOptions& opt);

}  // namespace entform
