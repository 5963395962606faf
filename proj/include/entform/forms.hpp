#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entform/dyadic.hpp"
#include "entform/hypergraph.hpp"
#include "entform/kernel.hpp"
#include "entform/rational.hpp"
#include "entform/root.hpp"
#include "entform/stepfn.hpp"

namespace entform {

// One function per edge label; surgery-produced graphs share labels, so several
// edges may point at the same function.
struct FunctionTuple {
    std::map<std::string, StepFunction> by_label;

    const StepFunction& at(const std::string& label) const;
    bool covers(const Hypergraph& h) const;
    bool nonnegative() const;
    FunctionTuple absolute() const;
};

enum class Engine { Naive, Factorized };

// [F]_{H,S,Q}: the edge-function product integrated against per-vertex Haar
// factors at scale Q, cancellative exactly on the selected vertices.
Rational paraproduct_term(const Hypergraph& h, const Selection& s, const DyadicCube& q,
                          const FunctionTuple& f);

// Product of the edge functions integrated over an n-dimensional block with one
// interval per vertex (axis order = arrangement order).
Rational block_pairing(const Hypergraph& h, const std::vector<DyadicInterval>& per_axis,
                       const FunctionTuple& f);

// Binds a hypergraph and kernel; the factorized engine reuses the kernel's
// diagonal Haar analysis across evaluations.
class FormEvaluator {
  public:
    FormEvaluator(const Hypergraph& h, const PerfectDyadicKernel& k);

    Rational evaluate(const FunctionTuple& f, Engine engine) const;
    const DiagonalHaarCoefficients& coefficients() const;

  private:
    Rational evaluate_naive(const FunctionTuple& f) const;
    Rational evaluate_factorized(const FunctionTuple& f) const;

    const Hypergraph* h_;
    const PerfectDyadicKernel* k_;
    mutable std::optional<DiagonalHaarCoefficients> coeffs_;
};

Rational evaluate_form(const Hypergraph& h, const PerfectDyadicKernel& k, const FunctionTuple& f,
                       Engine engine);

// Box operator applied to the averaging term B_Q = [F]_{H,(empty),Q}.
Rational box_term(const Hypergraph& h, const DyadicCube& q, const FunctionTuple& f);
// box B_Q minus the sum of [F]_{H,S,Q} over even nonempty selections; identically zero.
Rational difference_identity_residual(const Hypergraph& h, const DyadicCube& q, const FunctionTuple& f);

// Sum over even-cardinality subsets of {1..m} of the Haar-weighted integrals of
// a joint nonnegative function; nonnegative by construction.
Rational symmetrized_sum(const StepFunction& f, const std::vector<DyadicInterval>& intervals);

// prod_e [F_e^M]_Q - ([F]_{H,(empty),Q})^M for a complete hypergraph: the
// M-th-powered gap, same sign as the un-powered one; nonnegative.
Rational holder_gap(const Hypergraph& h, const DyadicCube& q, const FunctionTuple& f);

struct LocalizedForm {
    const Hypergraph* h = nullptr;
    Selection s;
    // Coefficient field for the selection; absent field means lambda == 1.
    std::optional<std::unordered_map<DyadicCube, Rational, CubeHash>> lambda;
    ConvexTree tree;
};

// sum_{Q in tree} |Q| lambda_Q [F]_{H,S,Q}.
Rational evaluate_entangled_paraproduct(const LocalizedForm& lf, const FunctionTuple& f);

// Partial integral against all variables except edge e0's; satisfies
// integral(T_e0 * F_e0) = Lambda exactly.
StepFunction t_e0(const Hypergraph& h, const PerfectDyadicKernel& k, int e0, const FunctionTuple& f);

struct ConditionDiagnostics {
    Rational wbp;
    std::optional<DyadicCube> wbp_witness;
    std::vector<Root> t1bmo;         // per edge, L2 oscillation
    std::vector<Rational> t1bmo_l1;  // per edge, L1 oscillation
    std::vector<Rational> l1ratio;   // per edge
    std::vector<std::optional<DyadicCube>> l1_witness;
};

ConditionDiagnostics condition_diagnostics(const Hypergraph& h, const PerfectDyadicKernel& k);

// |Lambda_T(F)| / (|Q_T| prod_e max_{Q in tree+leaves} [F_e^{d_e}]_Q^{1/d_e});
// zero denominator reports zero.
Root tree_constant(const LocalizedForm& lf, const FunctionTuple& f);

}  // namespace entform
