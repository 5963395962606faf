#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "entform/dyadic.hpp"
#include "entform/hypergraph.hpp"
#include "entform/rational.hpp"
#include "entform/root.hpp"
#include "entform/stepfn.hpp"

namespace entform {

// Vertex-to-axis map: class i contributes n_i consecutive axes.
struct KernelArrangement {
    std::vector<int> class_sizes;

    static KernelArrangement of(const Hypergraph& h);
    int r() const { return static_cast<int>(class_sizes.size()); }
    int n() const;
    std::vector<int> offsets() const;
    int class_of_axis(int axis) const;
    bool operator==(const KernelArrangement&) const = default;
};

// Sparse exact step kernel on the n-dimensional grid (cells of side 2^-N).
class PerfectDyadicKernel {
  public:
    PerfectDyadicKernel(GridModel model, KernelArrangement arr);

    const GridModel& model() const { return model_; }
    const KernelArrangement& arrangement() const { return arr_; }
    int n() const { return arr_.n(); }
    Rational cell_volume() const;

    uint64_t flatten(std::span<const long> coords) const;
    std::vector<long> unflatten(uint64_t flat) const;

    void add_cell(std::span<const long> coords, const Rational& v);
    Rational value_at(std::span<const long> coords) const;
    const std::unordered_map<uint64_t, Rational>& cells() const { return cells_; }

    PerfectDyadicKernel scaled(const Rational& c) const;
    friend PerfectDyadicKernel operator+(const PerfectDyadicKernel& a, const PerfectDyadicKernel& b);
    bool same_cells(const PerfectDyadicKernel& other) const;

  private:
    GridModel model_;
    KernelArrangement arr_;
    std::unordered_map<uint64_t, Rational> cells_;  // zero entries dropped
};

// Coefficient fields of the diagonal Haar expansion. Selections are encoded as
// axis bitmasks; cube keys refer to r-dimensional diagonal cubes. The coarse
// part stores top-scale block averages for every n-dimensional top block.
struct DiagonalHaarCoefficients {
    GridModel model;
    KernelArrangement arr;
    std::map<uint64_t, std::unordered_map<DyadicCube, Rational, CubeHash>> per_selection;
    std::map<uint64_t, Rational> coarse;  // top-block bitmask (bit a set = positive axis a)

    uint64_t selection_mask(const Hypergraph& h, const Selection& s) const;
    void add(uint64_t sel_mask, const DyadicCube& q, const Rational& lambda);
};

enum class ParaproductClass { C1, C2, NC };

struct PerfectDyadicReport {
    bool valid = false;
    Rational max_violation;                  // largest value spread over an off-diagonal cube
    std::optional<DyadicCube> witness;       // n-dimensional cube realizing it
    long cubes_checked = 0;
};

struct SizeConstantReport {
    bool vacuous = false;                    // n <= r: the size bound carries no content
    Rational constant;                       // certified C over worst-case cell corners
    Rational corner_lower;                   // same maximum with best-case corners
    std::optional<std::vector<long>> witness_cell;
};

PerfectDyadicReport validate_perfect_dyadic(const PerfectDyadicKernel& k);

SizeConstantReport size_constant_report(const PerfectDyadicKernel& k);
Root size_constant(const PerfectDyadicKernel& k);

// Diagonal Haar analysis: lambda^S_Q = |Q_r|^-1 <K, b^S_Q> for every nonempty
// selection and every diagonal cube at scales -N+1..L, plus top-block averages.
DiagonalHaarCoefficients analyze(const PerfectDyadicKernel& k, const Hypergraph& h);

PerfectDyadicKernel synthesize(const DiagonalHaarCoefficients& c);

ParaproductClass classify(const Hypergraph& h, const Selection& s);

Rational coeff_linf(const DiagonalHaarCoefficients& c, const Hypergraph& h, const Selection& s);
Root coeff_bmo(const DiagonalHaarCoefficients& c, const Hypergraph& h, const Selection& s);

// Twisted-paraproduct generator: complete hypergraph, every class of size 2.
PerfectDyadicKernel twisted_kernel(const GridModel& model, const Hypergraph& h);

// Sum of K over the diagonal block of every r-dimensional model cube.
class KernelBlockSums {
  public:
    KernelBlockSums(const PerfectDyadicKernel& k);
    // Integral of K over the n-dim diagonal block of q; zero if no support there.
    Rational block_integral(const DyadicCube& q) const;

  private:
    std::unordered_map<DyadicCube, Rational, CubeHash> sums_;
    Rational zero_;
};

}  // namespace entform
