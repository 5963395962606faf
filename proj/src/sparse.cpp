#include "entform/sparse.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <stdexcept>

namespace entform {

StoppingConfig StoppingConfig::of(const Hypergraph& h, const Thresholds& t) {
    if (h.edges.empty()) throw std::invalid_argument("StoppingConfig: no edges");
    return {Integer(2) * Integer(static_cast<long>(h.edges.size())), t.min_d()};
}

namespace {

// Per distinct edge function: aggregated sums of F^d and the cross-powered
// qualification test against a fixed base cube.
struct EdgeScan {
    const Hypergraph* h = nullptr;
    const StoppingConfig* cfg = nullptr;
    std::vector<unsigned long> d;          // per edge
    std::vector<const CubeSums*> sums;     // per edge, aliased into the pool
    std::vector<std::unique_ptr<CubeSums>> pool;

    static EdgeScan build(const Hypergraph& h, const FunctionTuple& f, const Thresholds& t,
                          const StoppingConfig& cfg, const GridModel& model) {
        EdgeScan scan;
        scan.h = &h;
        scan.cfg = &cfg;
        std::map<std::pair<std::string, unsigned long>, const CubeSums*> cache;
        for (size_t e = 0; e < h.edges.size(); ++e) {
            const auto& label = h.edge_labels[e];
            const unsigned long de = t.per_edge[e].get_ui();
            scan.d.push_back(de);
            const auto key = std::make_pair(label, de);
            auto it = cache.find(key);
            if (it == cache.end()) {
                const auto& fn = f.at(label);
                if (!fn.nonnegative()) throw std::domain_error("stopping scan: negative function values");
                if (!(fn.model() == model)) throw std::invalid_argument("stopping scan: model mismatch");
                std::vector<Rational> powered(fn.cell_count());
                for (size_t i = 0; i < fn.cell_count(); ++i) {
                    powered[i] = pow_rat(fn.at_flat(i), static_cast<long>(de));
                }
                scan.pool.push_back(std::make_unique<CubeSums>(model, fn.dims(), powered));
                it = cache.emplace(key, scan.pool.back().get()).first;
            }
            scan.sums.push_back(it->second);
        }
        return scan;
    }

    // [F_e^{d_e}]_Q^{1/d_e} > 2^M [F_e^{d_e}]_{Q0}^{1/d_e}, cross-powered to
    // avg_Q^{min_d} > (2|E|)^{d_e} avg_{Q0}^{min_d}.
    bool qualifies(size_t e, const DyadicCube& q, const std::vector<Rational>& base_pow) const {
        const Rational avg = sums[e]->average(q);
        if (avg == 0) return false;
        const long min_d = static_cast<long>(cfg->min_d.get_si());
        return pow_rat(avg, min_d) > base_pow[e];
    }

    // (2|E|)^{d_e} avg_{Q0}^{min_d} per edge.
    std::vector<Rational> base_powers(const DyadicCube& q0) const {
        std::vector<Rational> out;
        const long min_d = static_cast<long>(cfg->min_d.get_si());
        for (size_t e = 0; e < d.size(); ++e) {
            const Rational avg0 = sums[e]->average(q0);
            out.push_back(Rational(pow_int(cfg->two_e, d[e])) * pow_rat(avg0, min_d));
        }
        return out;
    }
};

void collect_maximal(const EdgeScan& scan, const GridModel& m, const DyadicCube& q,
                     const std::vector<Rational>& base_pow, bool is_base,
                     std::vector<DyadicCube>& out) {
    if (!is_base) {
        for (size_t e = 0; e < scan.d.size(); ++e) {
            if (scan.qualifies(e, q, base_pow)) {
                out.push_back(q);
                return;  // maximal: do not descend
            }
        }
    }
    if (q.k == m.finest_scale()) return;
    for (const auto& child : children_unchecked(q)) collect_maximal(scan, m, child, base_pow, false, out);
}

}  // namespace

std::vector<DyadicCube> stopping_cubes(const Hypergraph& h, const DyadicCube& q0,
                                       const FunctionTuple& f, const Thresholds& t,
                                       const StoppingConfig& cfg) {
    const GridModel m = f.at(h.edge_labels.front()).model();
    const auto scan = EdgeScan::build(h, f, t, cfg, m);
    std::vector<DyadicCube> out;
    collect_maximal(scan, m, q0, scan.base_powers(q0), true, out);
    std::sort(out.begin(), out.end(), [](const DyadicCube& a, const DyadicCube& b) {
        if (a.k != b.k) return a.k > b.k;
        return a.pos < b.pos;
    });
    return out;
}

SparseFamily build_sparse_family(const Hypergraph& h, const FunctionTuple& f, const Thresholds& t,
                                 const StoppingConfig& cfg, const GridModel& model) {
    const auto scan = EdgeScan::build(h, f, t, cfg, model);
    SparseFamily fam;
    fam.model = model;

    for (const auto& top : top_cubes(model)) {
        bool touched = false;
        for (size_t e = 0; e < h.edges.size() && !touched; ++e) {
            touched = scan.sums[e]->sum(top) != 0;
        }
        if (touched) fam.roots.push_back(top);
    }

    std::vector<DyadicCube> frontier = fam.roots;
    while (!frontier.empty()) {
        std::vector<DyadicCube> next;
        for (const auto& q : frontier) {
            std::vector<DyadicCube> stops;
            collect_maximal(scan, model, q, scan.base_powers(q), true, stops);
            std::sort(stops.begin(), stops.end(), [](const DyadicCube& a, const DyadicCube& b) {
                if (a.k != b.k) return a.k > b.k;
                return a.pos < b.pos;
            });
            fam.cubes.push_back(q);
            for (const auto& s : stops) next.push_back(s);
            fam.stopping.emplace(q, std::move(stops));
        }
        frontier = std::move(next);
    }
    return fam;
}

Rational SparseFamily::exceptional_volume(const DyadicCube& q) const {
    const auto it = stopping.find(q);
    if (it == stopping.end()) throw std::invalid_argument("exceptional_volume: not a family cube");
    Rational vol = q.volume();
    for (const auto& s : it->second) vol -= s.volume();
    return vol;
}

SparseCertificates verify_sparse_family(const SparseFamily& s) {
    SparseCertificates cert;
    for (const auto& q : s.cubes) {
        const auto& stops = s.stopping.at(q);
        Rational carved(0);
        for (const auto& c : stops) carved += c.volume();
        if (!(carved <= q.volume() / 2)) {
            cert.measure_bound = false;
            cert.witness = q;
        }
        const Rational ratio = (q.volume() - carved) / q.volume();
        if (ratio < cert.min_exceptional_ratio) cert.min_exceptional_ratio = ratio;
        if (!(ratio >= s.certified_c)) {
            cert.exceptional_half = false;
            cert.witness = q;
        }
    }
    // Cellwise disjointness of the exceptional sets: walk the scale chain of
    // every cell and count the family cubes whose E_Q contains it.
    for (const auto& root : s.roots) {
        bool bad = false;
        for_each_cell_in(s.model, root, [&](std::span<const long> coords) {
            if (bad) return;
            int owners = 0;
            DyadicCube q{s.model.finest_scale(), std::vector<long>(coords.begin(), coords.end())};
            for (int k = s.model.finest_scale(); k <= root.k; ++k) {
                const auto it = s.stopping.find(q);
                if (it != s.stopping.end()) {
                    bool carved = false;
                    for (const auto& c : it->second) {
                        if (c.contains(DyadicCube{s.model.finest_scale(),
                                                  std::vector<long>(coords.begin(), coords.end())})) {
                            carved = true;
                            break;
                        }
                    }
                    if (!carved) ++owners;
                }
                q = q.parent();
            }
            if (owners > 1) bad = true;
        });
        if (bad) {
            cert.exceptional_disjoint = false;
            cert.witness = root;
        }
    }
    return cert;
}

std::unordered_map<DyadicCube, ConvexTree, CubeHash> partition_trees(const SparseFamily& s,
                                                                     const GridModel& model) {
    std::unordered_map<DyadicCube, ConvexTree, CubeHash> out;
    for (const auto& q : s.cubes) {
        out.emplace(q, build_convex_tree(model, q, s.stopping.at(q)));
    }
    return out;
}

Enclosure sparse_form(const SparseFamily& s, const Hypergraph& h, const FunctionTuple& f,
                      const Thresholds& t, const Rational& width) {
    std::map<std::string, StepFunction> absolute;
    for (const auto& label : h.edge_labels) {
        if (!absolute.contains(label)) absolute.emplace(label, f.at(label).abs());
    }
    std::vector<Root> terms;
    terms.reserve(s.cubes.size());
    for (const auto& q : s.cubes) {
        Root term(q.volume());
        for (size_t e = 0; e < h.edges.size(); ++e) {
            term = term * power_average(absolute.at(h.edge_labels[e]), q, t.per_edge[e].get_ui());
        }
        if (!term.is_zero()) terms.push_back(std::move(term));
    }
    return sum_enclosure(terms, width);
}

DominationResult domination_ratio(const Hypergraph& h, const PerfectDyadicKernel& k,
                                  const FunctionTuple& f, const Rational& width) {
    require_complete_components(h);
    if (!f.nonnegative()) throw std::domain_error("domination_ratio: tuple must be nonnegative");
    const auto t = thresholds(h);
    const auto cfg = StoppingConfig::of(h, t);

    DominationResult out;
    out.lambda = evaluate_form(h, k, f, Engine::Factorized);
    const auto fam = build_sparse_family(h, f, t, cfg, k.model());
    out.theta = sparse_form(fam, h, f, t, width);
    const Rational mag = abs_rat(out.lambda);
    if (out.theta.lo == 0) {
        if (mag == 0 && out.theta.hi == 0) {
            out.ratio = Enclosure(Rational(0));
        } else {
            out.degenerate = true;
        }
        return out;
    }
    out.ratio = div_pos(Enclosure(mag), out.theta);
    return out;
}

}  // namespace entform
