#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "entform/dyadic.hpp"
#include "entform/enclosure.hpp"
#include "entform/rational.hpp"
#include "entform/root.hpp"

namespace entform {

// Exact step function on the model's finest grid. `dims` axes (model.r unless
// stated otherwise), each axis split into 2^(L+N+1) cells; axis 0 varies fastest
// in the flat layout.
class StepFunction {
  public:
    StepFunction(GridModel model, int dims);
    explicit StepFunction(GridModel model) : StepFunction(model, model.r) {}

    static StepFunction constant(const GridModel& model, const Rational& value, int dims);
    static StepFunction constant(const GridModel& model, const Rational& value) {
        return constant(model, value, model.r);
    }
    static StepFunction indicator(const GridModel& model, const DyadicCube& q);

    const GridModel& model() const { return model_; }
    int dims() const { return dims_; }
    size_t cell_count() const { return cells_.size(); }

    size_t flat_index(std::span<const long> coords) const;
    std::vector<long> coords_of(size_t flat) const;

    const Rational& at(std::span<const long> coords) const { return cells_[flat_index(coords)]; }
    const Rational& at_flat(size_t flat) const { return cells_[flat]; }
    void set(std::span<const long> coords, Rational value) { cells_[flat_index(coords)] = std::move(value); }
    void set_flat(size_t flat, Rational value) { cells_[flat] = std::move(value); }
    const std::vector<Rational>& cells() const { return cells_; }

    Rational cell_volume() const;  // (2^-N)^dims

    bool nonnegative() const;
    bool strictly_positive() const;
    Rational max_abs() const;
    StepFunction abs() const;
    StepFunction scaled(const Rational& c) const;

    bool operator==(const StepFunction& other) const {
        return model_ == other.model_ && dims_ == other.dims_ && cells_ == other.cells_;
    }

  private:
    GridModel model_;
    int dims_;
    std::vector<Rational> cells_;
};

void for_each_cell_in(const GridModel& m, const DyadicCube& q,
                      const std::function<void(std::span<const long>)>& fn);

// Sums of a per-cell field over every model cube, aggregated bottom-up.
class CubeSums {
  public:
    CubeSums(GridModel model, int dims, const std::vector<Rational>& cell_values);

    // Also answers leaf-scale cubes (sum = value of containing cell scaled by volume share).
    Rational sum(const DyadicCube& q) const;
    Rational average(const DyadicCube& q) const;

  private:
    GridModel model_;
    int dims_;
    std::vector<std::vector<Rational>> levels_;  // [k + N] -> sums at scale k
};

// [f]_Q; admits leaf-scale cubes (value of the containing cell).
Rational average(const StepFunction& f, const DyadicCube& q);
Rational cube_sum(const StepFunction& f, const DyadicCube& q);

// [f^d]_Q^(1/d) for f >= 0 on Q.
Root power_average(const StepFunction& f, const DyadicCube& q, unsigned long d);

// sup_Q (|Q|^-1 int_Q |f - [f]_Q|^2)^(1/2) over model cubes.
Root bmo_l2(const StepFunction& f);
// sup_Q |Q|^-1 int_Q |f - [f]_Q|.
Rational bmo_l1(const StepFunction& f);

// Strictly positive step function.
class Weight {
  public:
    explicit Weight(StepFunction f);
    const StepFunction& fn() const { return fn_; }

  private:
    StepFunction fn_;
};

// Exponent from [1, inf].
struct PExp {
    bool infinite = false;
    Rational value = Rational(1);

    static PExp inf() { return {true, Rational(0)}; }
    static PExp of(Rational v) { return {false, std::move(v)}; }
    Rational reciprocal() const { return infinite ? Rational(0) : Rational(1) / value; }
    std::string to_string() const { return infinite ? "inf" : fraction_string(value); }
};

struct NormResult {
    std::optional<Root> exact;  // present when the norm is an exact Root
    Enclosure box;
};

// L^p norm, optionally weighted; exact Root for integer p (and p = inf),
// certified enclosure otherwise.
NormResult lp_norm(const StepFunction& f, const PExp& p, const Weight* w, const Rational& width);

// Per-cell values of the weighted maximal function M_{d,w} f.
struct MaximalField {
    GridModel model;
    int dims = 0;
    std::vector<Root> cells;
};

MaximalField weighted_maximal(const StepFunction& f, unsigned long d, const Weight& w);

}  // namespace entform
