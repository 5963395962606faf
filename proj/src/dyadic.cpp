#include "entform/dyadic.hpp"

#include <algorithm>
#include <stdexcept>

namespace entform {

bool GridModel::valid() const {
    if (r < 1 || L < 0 || N < 0) return false;
    // Flattened cell indices must fit in 63 bits.
    return static_cast<long>(r) * (L + N + 1) <= 62;
}

std::string GridModel::to_string() const {
    return "r=" + std::to_string(r) + " L=" + std::to_string(L) + " N=" + std::to_string(N);
}

Rational DyadicInterval::left() const { return Rational(l) * pow_rat(Rational(2), k); }

DyadicInterval DyadicInterval::parent() const {
    const long p = l >= 0 ? l / 2 : (l - 1) / 2;
    return {k + 1, p};
}

bool DyadicInterval::contains(const DyadicInterval& other) const {
    if (other.k > k) return false;
    const int shift = k - other.k;
    const long scaled = other.l >= 0 ? (other.l >> shift) : ~((~other.l) >> shift);
    return scaled == l;
}

long DyadicInterval::first_cell(const GridModel& m) const {
    if (k < m.finest_scale()) throw std::logic_error("first_cell: below finest scale");
    return l << (k + m.N);
}

long DyadicInterval::cell_count(const GridModel& m) const {
    if (k < m.finest_scale()) throw std::logic_error("cell_count: below finest scale");
    return 1L << (k + m.N);
}

bool interval_in_model(const GridModel& m, const DyadicInterval& i) {
    if (!m.scale_in_model(i.k)) return false;
    const long half = 1L << (m.L - i.k);
    return i.l >= -half && i.l < half;
}

Rational haar(const DyadicInterval& i, int variant, const Rational& x) {
    if (variant != 0 && variant != 1) throw std::invalid_argument("haar: variant must be 0 or 1");
    const Rational left = i.left();
    const Rational len = i.length();
    if (x < left || x >= left + len) return Rational(0);
    const Rational inv = Rational(1) / len;
    if (variant == 0) return inv;
    return x < left + len / 2 ? inv : Rational(-inv);
}

DyadicCube DyadicCube::parent() const {
    DyadicCube p{k + 1, pos};
    for (auto& v : p.pos) v = v >= 0 ? v / 2 : (v - 1) / 2;
    return p;
}

bool DyadicCube::contains(const DyadicCube& other) const {
    if (other.dim() != dim()) return false;
    for (int a = 0; a < dim(); ++a) {
        if (!interval(a).contains(other.interval(a))) return false;
    }
    return true;
}

std::string DyadicCube::to_string() const {
    std::string s = std::to_string(k) + ":(";
    for (size_t a = 0; a < pos.size(); ++a) {
        if (a) s += ",";
        s += std::to_string(pos[a]);
    }
    return s + ")";
}

bool cube_in_model(const GridModel& m, const DyadicCube& q) {
    if (q.dim() != m.r) return false;
    for (int a = 0; a < q.dim(); ++a) {
        if (!interval_in_model(m, q.interval(a))) return false;
    }
    return true;
}

std::vector<DyadicCube> children_unchecked(const DyadicCube& q) {
    std::vector<DyadicCube> out;
    const int d = q.dim();
    out.reserve(static_cast<size_t>(1) << d);
    for (unsigned long mask = 0; mask < (1UL << d); ++mask) {
        DyadicCube c{q.k - 1, q.pos};
        for (int a = 0; a < d; ++a) {
            c.pos[static_cast<size_t>(a)] = 2 * q.pos[static_cast<size_t>(a)] + ((mask >> a) & 1);
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<DyadicCube> children(const GridModel& m, const DyadicCube& q) {
    if (q.k <= m.finest_scale()) throw std::invalid_argument("children: cube at finest scale");
    if (!cube_in_model(m, q)) throw std::invalid_argument("children: cube outside model");
    return children_unchecked(q);
}

std::vector<DyadicCube> top_cubes(const GridModel& m) {
    std::vector<DyadicCube> out;
    for (unsigned long mask = 0; mask < (1UL << m.r); ++mask) {
        DyadicCube q{m.L, std::vector<long>(static_cast<size_t>(m.r))};
        for (int a = 0; a < m.r; ++a) q.pos[static_cast<size_t>(a)] = ((mask >> a) & 1) ? 0 : -1;
        out.push_back(std::move(q));
    }
    return out;
}

void for_each_model_cube(const GridModel& m, const std::function<void(const DyadicCube&)>& fn) {
    for (int k = m.L; k >= m.finest_scale(); --k) {
        const long half = 1L << (m.L - k);
        DyadicCube q{k, std::vector<long>(static_cast<size_t>(m.r), -half)};
        while (true) {
            fn(q);
            int a = 0;
            while (a < m.r) {
                if (++q.pos[static_cast<size_t>(a)] < half) break;
                q.pos[static_cast<size_t>(a)] = -half;
                ++a;
            }
            if (a == m.r) break;
        }
    }
}

std::vector<DyadicCube> all_model_cubes(const GridModel& m) {
    std::vector<DyadicCube> out;
    for_each_model_cube(m, [&out](const DyadicCube& q) { out.push_back(q); });
    return out;
}

std::vector<DyadicCube> cubes_below(const GridModel& m, const DyadicCube& q) {
    std::vector<DyadicCube> out;
    if (!cube_in_model(m, q)) return out;
    std::vector<DyadicCube> frontier{q};
    while (!frontier.empty()) {
        std::vector<DyadicCube> next;
        for (auto& c : frontier) {
            if (c.k > m.finest_scale()) {
                for (auto& ch : children_unchecked(c)) next.push_back(std::move(ch));
            }
            out.push_back(std::move(c));
        }
        frontier = std::move(next);
    }
    return out;
}

ConvexTree build_convex_tree(const GridModel& m, const DyadicCube& root,
                             const std::vector<DyadicCube>& stop) {
    if (!cube_in_model(m, root)) throw std::invalid_argument("build_convex_tree: root outside model");
    for (const auto& s : stop) {
        if (!(root.contains(s) && !(s == root))) {
            throw std::invalid_argument("build_convex_tree: stop cube not strictly inside root");
        }
    }
    ConvexTree t;
    t.root = root;
    for (const auto& q : cubes_below(m, root)) {
        bool carved = false;
        for (const auto& s : stop) {
            if (s.contains(q)) {
                carved = true;
                break;
            }
        }
        if (!carved) t.members.insert(q);
    }
    for (const auto& q : t.members) {
        for (const auto& c : children_unchecked(q)) {
            if (!t.members.contains(c)) t.leaves.push_back(c);
        }
    }
    std::sort(t.leaves.begin(), t.leaves.end(), [](const DyadicCube& a, const DyadicCube& b) {
        if (a.k != b.k) return a.k > b.k;
        return a.pos < b.pos;
    });
    return t;
}

bool validate_convex(const GridModel&, const ConvexTree& t) {
    if (!t.members.contains(t.root)) return false;
    for (const auto& q : t.members) {
        if (!t.root.contains(q)) return false;
        if (q == t.root) continue;
        if (!t.members.contains(q.parent())) return false;
    }
    for (const auto& leaf : t.leaves) {
        if (t.members.contains(leaf)) return false;
        if (!t.members.contains(leaf.parent())) return false;
    }
    return true;
}

}  // namespace entform
