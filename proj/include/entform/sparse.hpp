#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "entform/dyadic.hpp"
#include "entform/enclosure.hpp"
#include "entform/forms.hpp"
#include "entform/hypergraph.hpp"
#include "entform/kernel.hpp"
#include "entform/stepfn.hpp"

namespace entform {

// The stopping comparison [F^d]_Q^(1/d) > 2^M [F^d]_Q0^(1/d) with
// M = log2(2|E|)/min_d is decided exactly by cross-powering: the pair
// (2|E|, min_d) is all that is ever needed.
struct StoppingConfig {
    Integer two_e;
    Integer min_d;

    static StoppingConfig of(const Hypergraph& h, const Thresholds& t);
};

// Maximal cubes strictly inside q0 whose inflated average test fires for some edge.
std::vector<DyadicCube> stopping_cubes(const Hypergraph& h, const DyadicCube& q0,
                                       const FunctionTuple& f, const Thresholds& t,
                                       const StoppingConfig& cfg);

struct SparseFamily {
    GridModel model;
    std::vector<DyadicCube> roots;
    std::vector<DyadicCube> cubes;  // all members, coarse to fine per root
    // M_Q for every member; E_Q = Q minus the union of these children.
    std::unordered_map<DyadicCube, std::vector<DyadicCube>, CubeHash> stopping;
    Rational certified_c = Rational(1, 2);

    Rational exceptional_volume(const DyadicCube& q) const;
};

SparseFamily build_sparse_family(const Hypergraph& h, const FunctionTuple& f, const Thresholds& t,
                                 const StoppingConfig& cfg, const GridModel& model);

struct SparseCertificates {
    bool measure_bound = true;        // sum over M_Q of |Q'| <= |Q|/2
    bool exceptional_half = true;     // |E_Q| >= |Q|/2
    bool exceptional_disjoint = true; // cellwise across the family
    Rational min_exceptional_ratio = Rational(1);
    std::optional<DyadicCube> witness;
};

SparseCertificates verify_sparse_family(const SparseFamily& s);

// Convex tree per member: the cubes below Q with stopping-cube descendants carved out.
std::unordered_map<DyadicCube, ConvexTree, CubeHash> partition_trees(const SparseFamily& s,
                                                                     const GridModel& model);

// Theta_S(F) = sum_Q |Q| prod_e [|F_e|^{d_e}]_Q^(1/d_e), certified to `width`.
Enclosure sparse_form(const SparseFamily& s, const Hypergraph& h, const FunctionTuple& f,
                      const Thresholds& t, const Rational& width);

struct DominationResult {
    Rational lambda;       // Lambda_E(F), exact
    Enclosure theta;       // Theta over the constructed family
    Enclosure ratio;       // |Lambda| / Theta
    bool degenerate = false;  // Theta == 0 with Lambda != 0 (support escaped the window)
};

DominationResult domination_ratio(const Hypergraph& h, const PerfectDyadicKernel& k,
                                  const FunctionTuple& f, const Rational& width);

}  // namespace entform
