#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entform/enclosure.hpp"
#include "entform/forms.hpp"
#include "entform/hypergraph.hpp"
#include "entform/kernel.hpp"
#include "entform/sparse.hpp"
#include "entform/stepfn.hpp"

namespace entform {

// Exponents p_e in (d_e, inf] with sum 1/p_e = 1, plus the derived quantities
// used by the weighted machinery.
struct ExponentTuple {
    std::vector<PExp> per_edge;

    // Derived, aligned with edges:
    std::vector<Rational> r_e;        // 1/d_e - 1/p_e
    Rational r_total = Rational(0);   // sum of r_e
    Rational m_exp = Rational(0);     // max_e d_e/(p_e - d_e)
    std::vector<Rational> alpha;      // d_e/(p_e - d_e); h_e = w_e^(-alpha_e)

    static ExponentTuple of(const Hypergraph& h, const Thresholds& t, const std::vector<PExp>& p);
    Rational holder_exponent() const { return Rational(1) + m_exp; }  // max_e p_e/(p_e-d_e)
};

// One strictly positive rational weight per edge label.
struct WeightTuple {
    std::map<std::string, Weight> by_label;

    const Weight& at(const std::string& label) const;
};

// Dual weight h_e = w_e^(-alpha) cellwise: exact rationals when every cell is a
// perfect power, certified roots otherwise.
struct DualWeight {
    std::vector<Root> cells;
    std::optional<std::vector<Rational>> exact;  // present iff every cell is rational
};

DualWeight dual_weight(const Weight& w, const Rational& alpha);

struct CondMuckReport {
    bool holds = true;
    std::optional<std::vector<long>> worst_cell;
    Rational worst_violation = Rational(0);  // |prod w^(U/p) - 1| cross-powered
};

// Cellwise prod_e w_e^(1/p_e) = 1, checked exactly by integer cross-powering.
CondMuckReport condmuck_check(const Hypergraph& h, const WeightTuple& w, const ExponentTuple& p);

struct MuckenhouptResult {
    Enclosure value;
    std::optional<Root> exact;          // present when every per-cube factor is a Root
    std::optional<DyadicCube> witness;  // cube attaining the sup
};

MuckenhouptResult muckenhoupt_constant(const Hypergraph& h, const WeightTuple& w,
                                       const ExponentTuple& p, const Thresholds& t,
                                       const GridModel& model, const Rational& width);

struct WeightedRatioResult {
    Rational lambda;
    Enclosure denominator;
    Enclosure ratio;
    bool degenerate = false;  // zero denominator with nonzero numerator
};

// |Lambda_E(F)| / ([w]^(max p/(p-d)) prod_e ||F_e||_{L^{p_e}(w_e)}).
WeightedRatioResult weighted_estimate_ratio(const Hypergraph& h, const PerfectDyadicKernel& k,
                                            const FunctionTuple& f, const WeightTuple& w,
                                            const ExponentTuple& p, const Rational& width);

// ||M_{d,w} f||_{L^p(w)} / ||f||_{L^p(w)} for p > d.
Enclosure maximal_bound_ratio(const StepFunction& f, unsigned long d, const Weight& w,
                              const Rational& p, const Rational& width);

struct WeightedSplittingReport {
    bool identity_exact = true;        // A_Q * B_Q * C_Q = Theta summand, every cube
    bool first_factor_bounded = true;  // A_Q <= [w]
    bool second_factor_bounded = true; // prod (|Q|[h]_Q / int_{E_Q} h)^(1/p) <= c^(-rm) [w]^m
    Certified holder_step = Certified::True;   // sum_Q C_Q <= prod_e (sum_Q int_{E_Q} (MG)^p h)^(1/p)
    Certified maximal_step = Certified::True;  // ... <= prod_e ||M_{d,h} G_e||_{L^{p_e}(h_e)}
    std::optional<DyadicCube> witness;
};

WeightedSplittingReport sparse_weighted_decomposition_check(const SparseFamily& s, const Hypergraph& h,
                                                            const FunctionTuple& f, const WeightTuple& w,
                                                            const ExponentTuple& p, const Thresholds& t,
                                                            const Rational& width);

// w_e = base^(den(alpha_e) * factors_e) cellwise; with sum_e factors_e * c_e = 0
// (c_e below) the tuple satisfies (condMuck) exactly and every dual is rational.
WeightTuple weights_from_powers(const Hypergraph& h, const ExponentTuple& p, const StepFunction& base,
                                const std::vector<long>& factors);

// c_e = den(alpha_e) * U/p_e for the common denominator U of the 1/p_e; kicks of
// the form (t_i += c_j * delta, t_j -= c_i * delta) keep sum t_e c_e = 0.
std::vector<Integer> condmuck_kick_coeffs(const ExponentTuple& p);

// Synthesizes the last edge's weight from the others so (condMuck) holds exactly;
// requires a finite last exponent and power-compatible inputs.
Weight synthesize_last_weight(const Hypergraph& h, const ExponentTuple& p,
                              const std::vector<Weight>& others);

}  // namespace entform
