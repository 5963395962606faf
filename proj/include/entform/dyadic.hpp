#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "entform/rational.hpp"

namespace entform {

// Finite dyadic universe: domain [-2^L, 2^L)^r, cube sides 2^k for -N <= k <= L.
// Finest cells have side 2^-N; leaf-scale cubes (side 2^(-N-1)) exist only as
// children of finest cubes, for tree leaves.
struct GridModel {
    int r = 1;
    int L = 0;
    int N = 0;

    int top_scale() const { return L; }
    int finest_scale() const { return -N; }
    int leaf_scale() const { return -N - 1; }
    int scale_count() const { return L + N + 1; }
    long cells_per_axis() const { return 1L << (L + N + 1); }
    long half_cells_per_axis() const { return 1L << (L + N); }
    // Positions per axis for intervals of scale k.
    long positions_per_axis(int k) const { return 1L << (L - k + 1); }
    bool scale_in_model(int k) const { return k >= -N && k <= L; }
    bool valid() const;
    std::string to_string() const;
    bool operator==(const GridModel&) const = default;
};

// [2^k l, 2^k (l+1))
struct DyadicInterval {
    int k = 0;
    long l = 0;

    Rational left() const;
    Rational length() const { return pow_rat(Rational(2), k); }
    DyadicInterval left_half() const { return {k - 1, 2 * l}; }
    DyadicInterval right_half() const { return {k - 1, 2 * l + 1}; }
    DyadicInterval parent() const;
    bool contains(const DyadicInterval& other) const;
    // Signed finest-cell range [first, last) for scales >= -N.
    long first_cell(const GridModel& m) const;
    long cell_count(const GridModel& m) const;
    std::string to_string() const { return std::to_string(k) + ":" + std::to_string(l); }
    bool operator==(const DyadicInterval&) const = default;
};

bool interval_in_model(const GridModel& m, const DyadicInterval& i);

// h^0 (variant 0) or h^1 (variant 1) at a rational point.
Rational haar(const DyadicInterval& i, int variant, const Rational& x);

struct DyadicCube {
    int k = 0;
    std::vector<long> pos;  // one interval position per axis

    int dim() const { return static_cast<int>(pos.size()); }
    DyadicInterval interval(int axis) const { return {k, pos[static_cast<size_t>(axis)]}; }
    Rational volume() const { return pow_rat(Rational(2), k * dim()); }
    DyadicCube parent() const;
    bool contains(const DyadicCube& other) const;
    std::string to_string() const;
    bool operator==(const DyadicCube&) const = default;
};

struct CubeHash {
    size_t operator()(const DyadicCube& q) const {
        size_t h = std::hash<int>()(q.k);
        for (long v : q.pos) h = h * 1000003u + std::hash<long>()(v);
        return h;
    }
};

using CubeSet = std::unordered_set<DyadicCube, CubeHash>;

bool cube_in_model(const GridModel& m, const DyadicCube& q);

// The 2^dim half-side subcubes; throws for finest-scale input.
std::vector<DyadicCube> children(const GridModel& m, const DyadicCube& q);
// Same, but admits finest-scale input (children land at leaf scale).
std::vector<DyadicCube> children_unchecked(const DyadicCube& q);

// The 2^r cubes of side 2^L tiling the domain.
std::vector<DyadicCube> top_cubes(const GridModel& m);
// Every cube at model scales, coarse to fine.
std::vector<DyadicCube> all_model_cubes(const GridModel& m);
void for_each_model_cube(const GridModel& m, const std::function<void(const DyadicCube&)>& fn);
// Model-scale cubes contained in q, including q itself.
std::vector<DyadicCube> cubes_below(const GridModel& m, const DyadicCube& q);

struct ConvexTree {
    DyadicCube root;
    CubeSet members;
    std::vector<DyadicCube> leaves;  // non-members whose parent is a member
};

// Members: model-scale cubes inside root not contained in any stop cube.
// Every stop cube must lie strictly inside root.
ConvexTree build_convex_tree(const GridModel& m, const DyadicCube& root, const std::vector<DyadicCube>& stop);

// Root membership, containment, and closedness under intermediate cubes.
bool validate_convex(const GridModel& m, const ConvexTree& t);

}  // namespace entform
