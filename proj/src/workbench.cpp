#include "entform/workbench.hpp"

#include <chrono>
#include <cstdlib>
#include <future>
#include <random>
#include <sstream>

#include "entform/forms.hpp"
#include "entform/sparse.hpp"
#include "entform/weights.hpp"

namespace entform {

namespace {

using Clock = std::chrono::steady_clock;

long ms_since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

class SuiteRng {
  public:
    explicit SuiteRng(uint64_t seed) : eng_(seed) {}
    uint64_t next() { return eng_(); }
    long uniform(long lo, long hi) { return lo + static_cast<long>(next() % static_cast<uint64_t>(hi - lo + 1)); }

  private:
    std::mt19937_64 eng_;
};

std::string window_tag(const GridModel& m) {
    return "L=" + std::to_string(m.L) + ",N=" + std::to_string(m.N);
}

void add_constant(SuiteResult& out, const GridModel& m, const std::string& name, Enclosure value,
                  Rational width = Rational(0)) {
    out.constants.push_back({name, std::move(value), window_tag(m), std::move(width)});
}

void add_cert(SuiteResult& out, const std::string& name, bool pass, const std::string& witness = "") {
    out.certificates.push_back({name, pass, pass ? "" : witness});
}

DyadicCube random_cube(SuiteRng& rng, const GridModel& m, int min_scale) {
    const int k = static_cast<int>(rng.uniform(min_scale, m.top_scale()));
    const long half = 1L << (m.L - k);
    DyadicCube q{k, std::vector<long>(static_cast<size_t>(m.r))};
    for (int a = 0; a < m.r; ++a) q.pos[static_cast<size_t>(a)] = rng.uniform(-half, half - 1);
    return q;
}

Selection selection_from_mask(const Hypergraph& h, uint64_t mask) {
    Selection s = Selection::empty(h.r);
    const auto off = h.class_offsets();
    for (int i = 0; i < h.r; ++i) {
        for (int j = 0; j < h.class_size(i); ++j) {
            if ((mask >> (off[static_cast<size_t>(i)] + j)) & 1) s.per_class[static_cast<size_t>(i)].push_back(j);
        }
    }
    return s;
}

std::string selection_tag(const Hypergraph& h, const Selection& s) {
    std::string tag = "(";
    for (int i = 0; i < h.r; ++i) {
        if (i) tag += ";";
        const auto& cls = s.per_class[static_cast<size_t>(i)];
        for (size_t j = 0; j < cls.size(); ++j) {
            if (j) tag += ",";
            tag += h.classes[static_cast<size_t>(i)][static_cast<size_t>(cls[j])];
        }
    }
    return tag + ")";
}

// Exact inner product of two L2-normalized diagonal Haar tensors, axis by axis.
Rational basis_inner_product(const GridModel&, const KernelArrangement& arr, uint64_t sel_a,
                             const DyadicCube& qa, uint64_t sel_b, const DyadicCube& qb) {
    Rational prod(1);
    for (int axis = 0; axis < arr.n(); ++axis) {
        const DyadicInterval ia = qa.interval(arr.class_of_axis(axis));
        const DyadicInterval ib = qb.interval(arr.class_of_axis(axis));
        const int ea = static_cast<int>((sel_a >> axis) & 1);
        const int eb = static_cast<int>((sel_b >> axis) & 1);
        Rational factor(0);
        if (ia == ib) {
            factor = ea == eb ? Rational(1) / ia.length() : Rational(0);
        } else if (ib.contains(ia) ) {
            // h^{eb} is constant on ia
            if (ea == 1) {
                factor = 0;
            } else {
                const Rational mid = ia.left() + ia.length() / 2;
                factor = haar(ib, eb, mid);
            }
        } else if (ia.contains(ib)) {
            if (eb == 1) {
                factor = 0;
            } else {
                const Rational mid = ib.left() + ib.length() / 2;
                factor = haar(ia, ea, mid);
            }
        } else {
            factor = 0;
        }
        if (factor == 0) return Rational(0);
        prod *= factor;
    }
    // L2 normalization |Qa|^(1/2)|Qb|^(1/2) over the n-dimensional blocks
    Rational na(1), nb(1);
    for (int axis = 0; axis < arr.n(); ++axis) {
        na *= qa.interval(arr.class_of_axis(axis)).length();
        nb *= qb.interval(arr.class_of_axis(axis)).length();
    }
    // a nonzero factor product forces Q = Q' (mixed scales or positions hit a
    // vanishing factor first), so the normalization sqrt(na*nb) is rational here
    Root norm = Root(na, 2) * Root(nb, 2);
    return prod * norm.as_rational().value();
}

// Grid-level oracle for the same inner product: per-axis cell sums.
Rational basis_inner_product_cells(const GridModel& m, const KernelArrangement& arr, uint64_t sel_a,
                                   const DyadicCube& qa, uint64_t sel_b, const DyadicCube& qb) {
    Rational prod(1);
    const Rational cell_len = pow_rat(Rational(1, 2), m.N);
    for (int axis = 0; axis < arr.n(); ++axis) {
        const DyadicInterval ia = qa.interval(arr.class_of_axis(axis));
        const DyadicInterval ib = qb.interval(arr.class_of_axis(axis));
        const int ea = static_cast<int>((sel_a >> axis) & 1);
        const int eb = static_cast<int>((sel_b >> axis) & 1);
        Rational factor(0);
        const long half = m.half_cells_per_axis();
        for (long c = -half; c < half; ++c) {
            const Rational x = Rational(c) * cell_len + cell_len / 2;
            factor += haar(ia, ea, x) * haar(ib, eb, x) * cell_len;
        }
        if (factor == 0) return Rational(0);
        prod *= factor;
    }
    Rational na(1), nb(1);
    for (int axis = 0; axis < arr.n(); ++axis) {
        na *= qa.interval(arr.class_of_axis(axis)).length();
        nb *= qb.interval(arr.class_of_axis(axis)).length();
    }
    Root norm = Root(na, 2) * Root(nb, 2);
    return prod * norm.as_rational().value();
}

SuiteResult suite_validate(const Scenario& sc) {
    SuiteResult out;
    out.name = "validate";
    const auto start = Clock::now();
    const auto rep = validate(sc.hypergraph);
    add_cert(out, "hypergraph-structural", rep.structurally_valid,
             rep.issues.empty() ? "" : rep.issues.front().code + ": " + rep.issues.front().detail);
    add_cert(out, "hypergraph-admissible", rep.admissible,
             rep.issues.empty() ? "" : rep.issues.front().code + ": " + rep.issues.front().detail);
    const auto coherence = check_label_coherence(sc.hypergraph);
    add_cert(out, "edge-label-coherence", coherence.empty(),
             coherence.empty() ? "" : coherence.front().detail);
    const auto proper = check_proper(sc.hypergraph);
    add_cert(out, "proper-labeling", proper.empty(), proper.empty() ? "" : proper.front().detail);

    const auto krep = validate_perfect_dyadic(sc.kernel);
    add_cert(out, "kernel-perfect-dyadic", krep.valid,
             krep.witness ? "cube " + cube_to_string(*krep.witness) + " spread " +
                                fraction_string(krep.max_violation)
                          : "");
    const auto srep = size_constant_report(sc.kernel);
    if (srep.vacuous) {
        out.notes.push_back("size bound vacuous: n <= r");
    } else {
        add_constant(out, sc.model, "size-constant", Enclosure(srep.constant));
        add_constant(out, sc.model, "size-constant-corner-lower", Enclosure(srep.corner_lower));
    }
    if (sc.weights && sc.exponents) {
        const auto t = thresholds(sc.hypergraph);
        const auto p = ExponentTuple::of(sc.hypergraph, t, *sc.exponents);
        const auto cm = condmuck_check(sc.hypergraph, *sc.weights, p);
        add_cert(out, "condmuck-normalization", cm.holds,
                 cm.worst_cell ? "violation " + fraction_string(cm.worst_violation) : "");
    }
    out.runtime_ms = ms_since(start);
    return out;
}

SuiteResult suite_decompose(const Scenario& sc) {
    SuiteResult out;
    out.name = "decompose";
    const auto start = Clock::now();
    const auto dec = decompose(sc.hypergraph);
    add_constant(out, sc.model, "component-count", Enclosure(Rational(static_cast<long>(dec.components.size()))));
    add_constant(out, sc.model, "isolated-vertices", Enclosure(Rational(static_cast<long>(dec.isolated.size()))));
    for (size_t l = 0; l < dec.components.size(); ++l) {
        std::string sizes;
        for (int s : dec.components[l].class_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
        out.notes.push_back("component " + std::to_string(l) + ": sizes (" + sizes + ")" +
                            (dec.components[l].complete ? " complete" : " incomplete"));
    }
    // reassembly is the identity on vertex and edge sets
    size_t vertices = dec.isolated.size();
    size_t edges = 0;
    for (const auto& comp : dec.components) {
        for (const auto& cls : comp.class_vertices) vertices += cls.size();
        edges += comp.edge_ids.size();
    }
    add_cert(out, "decompose-reassembles", vertices == static_cast<size_t>(sc.hypergraph.n()) &&
                                               edges == sc.hypergraph.edges.size());
    const auto t = thresholds(sc.hypergraph);
    for (size_t e = 0; e < t.per_edge.size(); ++e) {
        add_constant(out, sc.model, "threshold-d[" + sc.hypergraph.edge_labels[e] + "]",
                     Enclosure(Rational(t.per_edge[e])));
    }
    add_constant(out, sc.model, "threshold-reciprocal-sum", Enclosure(t.reciprocal_sum()));
    const auto witness = feasible_exponents(t);
    add_cert(out, "exponent-range-nonempty", witness.has_value());
    if (witness) {
        std::string p;
        for (const auto& pe : witness->p) p += (p.empty() ? "" : ",") + fraction_string(pe);
        out.notes.push_back("feasible exponents: (" + p + ")");
    }
    out.runtime_ms = ms_since(start);
    return out;
}

SuiteResult suite_identities(const Scenario& sc, const std::string& engine) {
    SuiteResult out;
    out.name = "identities";
    const auto start = Clock::now();
    SuiteRng rng(sc.seed ^ 0x1d3ac3u);
    const GridModel& m = sc.model;
    const Hypergraph& h = sc.hypergraph;
    const FormEvaluator ev(h, sc.kernel);

    // engine agreement (and with it the Haar decomposition pairing identity)
    if (engine == "both") {
        const Rational naive = ev.evaluate(sc.functions, Engine::Naive);
        const Rational fact = ev.evaluate(sc.functions, Engine::Factorized);
        add_cert(out, "engine-equivalence", naive == fact,
                 "naive " + fraction_string(naive) + " vs factorized " + fraction_string(fact));
        add_constant(out, m, "lambda", Enclosure(naive));
    } else {
        const Engine e = engine == "naive" ? Engine::Naive : Engine::Factorized;
        add_constant(out, m, "lambda", Enclosure(ev.evaluate(sc.functions, e)));
        out.notes.push_back("engine-equivalence skipped: single engine requested");
    }

    // analysis/synthesis round trip
    add_cert(out, "analyze-synthesize-roundtrip", synthesize(ev.coefficients()).same_cells(sc.kernel));

    // the Haar decomposition pairing, assembled term by term through the
    // one-shot contraction path (independent of the evaluator's table engine)
    {
        const auto& coeffs = ev.coefficients();
        Rational total(0);
        for (const auto& [mask, field] : coeffs.per_selection) {
            const Selection s = selection_from_mask(h, mask);
            for (const auto& [q, lambda] : field) {
                total += q.volume() * lambda * paraproduct_term(h, s, q, sc.functions);
            }
        }
        for (const auto& [top, avg] : coeffs.coarse) {
            std::vector<DyadicInterval> per_axis;
            for (int a = 0; a < h.n(); ++a) per_axis.push_back({m.L, ((top >> a) & 1) ? 0L : -1L});
            total += avg * block_pairing(h, per_axis, sc.functions);
        }
        const Rational reference = ev.evaluate(sc.functions, Engine::Naive);
        add_cert(out, "haar-decomposition-pairing", total == reference,
                 fraction_string(total) + " vs " + fraction_string(reference));
    }

    // difference identity at sampled cubes (all cubes when the window is small)
    {
        bool pass = true;
        std::string witness;
        std::vector<DyadicCube> cubes;
        const auto all = all_model_cubes(m);
        size_t eligible = 0;
        for (const auto& q : all) eligible += q.k > m.finest_scale() ? 1 : 0;
        if (eligible <= 40) {
            for (const auto& q : all) {
                if (q.k > m.finest_scale()) cubes.push_back(q);
            }
        } else {
            for (int i = 0; i < 24; ++i) cubes.push_back(random_cube(rng, m, m.finest_scale() + 1));
        }
        for (const auto& q : cubes) {
            const Rational residual = difference_identity_residual(h, q, sc.functions);
            if (residual != 0) {
                pass = false;
                witness = "cube " + cube_to_string(q) + " residual " + fraction_string(residual);
                break;
            }
        }
        add_cert(out, "difference-identity-residual", pass, witness);
    }

    // duality of the partial integrals
    {
        bool pass = true;
        std::string witness;
        const Rational lambda = ev.evaluate(sc.functions, Engine::Naive);
        for (int e = 0; e < static_cast<int>(h.edges.size()); ++e) {
            const auto te = t_e0(h, sc.kernel, e, sc.functions);
            const auto& fe = sc.functions.at(h.edge_labels[static_cast<size_t>(e)]);
            Rational pairing(0);
            for (size_t i = 0; i < te.cell_count(); ++i) pairing += te.at_flat(i) * fe.at_flat(i);
            pairing *= te.cell_volume();
            if (pairing != lambda) {
                pass = false;
                witness = "edge " + h.edge_labels[static_cast<size_t>(e)];
                break;
            }
        }
        add_cert(out, "partial-integral-duality", pass, witness);
    }

    // telescoping over a random convex tree
    {
        const DyadicCube root = random_cube(rng, m, m.finest_scale() + 1);
        std::vector<DyadicCube> stops;
        for (int s = 0; s < 2; ++s) {
            const auto q = random_cube(rng, m, m.finest_scale());
            if (root.contains(q) && !(q == root)) stops.push_back(q);
        }
        const auto tree = build_convex_tree(m, root, stops);
        const Selection empty = Selection::empty(h.r);
        Rational lhs(0);
        for (const auto& q : tree.members) {
            for (const auto& c : children_unchecked(q)) {
                lhs += c.volume() * paraproduct_term(h, empty, c, sc.functions);
            }
            lhs -= q.volume() * paraproduct_term(h, empty, q, sc.functions);
        }
        Rational rhs(0);
        for (const auto& leaf : tree.leaves) {
            rhs += leaf.volume() * paraproduct_term(h, empty, leaf, sc.functions);
        }
        rhs -= root.volume() * paraproduct_term(h, empty, root, sc.functions);
        add_cert(out, "telescoping-identity", lhs == rhs,
                 "root " + cube_to_string(root) + ": " + fraction_string(lhs) + " vs " + fraction_string(rhs));
    }

    // Haar tensor orthonormality over the representable window
    {
        const auto& arr = sc.kernel.arrangement();
        std::vector<DyadicCube> cubes;
        for (const auto& q : all_model_cubes(m)) {
            if (q.k > m.finest_scale()) cubes.push_back(q);
        }
        const uint64_t nsel = (1ULL << arr.n()) - 1;
        const size_t count = cubes.size() * static_cast<size_t>(nsel);
        bool pass = true;
        std::string witness;
        auto check_pair = [&](uint64_t sa, const DyadicCube& qa, uint64_t sb, const DyadicCube& qb) {
            const Rational ip = basis_inner_product(m, arr, sa, qa, sb, qb);
            const Rational expected = (sa == sb && qa == qb) ? Rational(1) : Rational(0);
            if (ip != expected) {
                pass = false;
                witness = cube_to_string(qa) + "/" + cube_to_string(qb);
            }
        };
        if (count <= 160) {
            for (const auto& qa : cubes) {
                for (uint64_t sa = 1; sa <= nsel && pass; ++sa) {
                    for (const auto& qb : cubes) {
                        for (uint64_t sb = 1; sb <= nsel && pass; ++sb) check_pair(sa, qa, sb, qb);
                    }
                }
            }
        } else {
            for (int i = 0; i < 400 && pass; ++i) {
                const auto& qa = cubes[static_cast<size_t>(rng.uniform(0, static_cast<long>(cubes.size()) - 1))];
                const auto& qb = cubes[static_cast<size_t>(rng.uniform(0, static_cast<long>(cubes.size()) - 1))];
                const uint64_t sa = static_cast<uint64_t>(rng.uniform(1, static_cast<long>(nsel)));
                const uint64_t sb = static_cast<uint64_t>(rng.uniform(1, static_cast<long>(nsel)));
                check_pair(sa, qa, sb, qb);
                check_pair(sa, qa, sa, qa);
            }
            out.notes.push_back("orthonormality sampled: window too large for all pairs");
        }
        // grid-level spot check of the closed-form inner products
        for (int i = 0; i < 6 && pass; ++i) {
            const auto& qa = cubes[static_cast<size_t>(rng.uniform(0, static_cast<long>(cubes.size()) - 1))];
            const auto& qb = cubes[static_cast<size_t>(rng.uniform(0, static_cast<long>(cubes.size()) - 1))];
            const uint64_t sa = static_cast<uint64_t>(rng.uniform(1, static_cast<long>(nsel)));
            const uint64_t sb = static_cast<uint64_t>(rng.uniform(1, static_cast<long>(nsel)));
            if (basis_inner_product(m, arr, sa, qa, sb, qb) !=
                basis_inner_product_cells(m, arr, sa, qa, sb, qb)) {
                pass = false;
                witness = "cellwise mismatch " + cube_to_string(qa) + "/" + cube_to_string(qb);
            }
        }
        add_cert(out, "haar-tensor-orthonormality", pass, witness);
    }

    // nonnegativity laws on the absolute tuple
    {
        const auto abs_tuple = sc.functions.absolute();
        const auto t = thresholds(h);
        bool pass = true;
        std::string witness;
        for (int i = 0; i < 8 && pass; ++i) {
            const auto q = random_cube(rng, m, m.finest_scale());
            if (t.complete_m && holder_gap(h, q, abs_tuple) < 0) {
                pass = false;
                witness = "holder gap at " + cube_to_string(q);
            }
        }
        add_cert(out, "holder-gap-nonnegative", pass, witness);
    }

    out.runtime_ms = ms_since(start);
    return out;
}

SuiteResult suite_t1(const Scenario& sc) {
    SuiteResult out;
    out.name = "t1";
    const auto start = Clock::now();
    const auto diag = condition_diagnostics(sc.hypergraph, sc.kernel);
    add_constant(out, sc.model, "wbp", Enclosure(diag.wbp));
    if (diag.wbp_witness) out.notes.push_back("wbp witness: " + cube_to_string(*diag.wbp_witness));
    for (size_t e = 0; e < diag.t1bmo.size(); ++e) {
        const auto& label = sc.hypergraph.edge_labels[e];
        add_constant(out, sc.model, "t1bmo[" + label + "]", enclose_root(diag.t1bmo[e], sc.width),
                     sc.width);
        add_constant(out, sc.model, "t1bmo-l1[" + label + "]", Enclosure(diag.t1bmo_l1[e]));
        // both oscillation norms together with their ratio; comparability is a
        // reported observation, never asserted
        if (!diag.t1bmo[e].is_zero()) {
            const Enclosure l2 = enclose_root(diag.t1bmo[e], sc.width);
            if (l2.lo > 0) {
                add_constant(out, sc.model, "t1bmo-l1/l2[" + label + "]",
                             div_pos(Enclosure(diag.t1bmo_l1[e]), l2), sc.width);
            }
        }
    }
    for (size_t e = 0; e < diag.l1ratio.size(); ++e) {
        add_constant(out, sc.model, "l1ratio[" + sc.hypergraph.edge_labels[e] + "]",
                     Enclosure(diag.l1ratio[e]));
    }
    // coefficient norms per selection, with the paraproduct class
    const FormEvaluator ev(sc.hypergraph, sc.kernel);
    for (const auto& [mask, field] : ev.coefficients().per_selection) {
        const Selection s = selection_from_mask(sc.hypergraph, mask);
        const auto cls = classify(sc.hypergraph, s);
        const std::string cname = cls == ParaproductClass::C1 ? "C1"
                                  : cls == ParaproductClass::C2 ? "C2"
                                                                : "NC";
        const std::string tag = selection_tag(sc.hypergraph, s) + ":" + cname;
        add_constant(out, sc.model, "coeff-linf" + tag,
                     Enclosure(coeff_linf(ev.coefficients(), sc.hypergraph, s)));
        add_constant(out, sc.model, "coeff-bmo" + tag,
                     enclose_root(coeff_bmo(ev.coefficients(), sc.hypergraph, s), sc.width), sc.width);
    }
    out.runtime_ms = ms_since(start);
    return out;
}

SuiteResult suite_sparse(const Scenario& sc) {
    SuiteResult out;
    out.name = "sparse";
    const auto start = Clock::now();
    const GridModel& m = sc.model;
    const Hypergraph& h = sc.hypergraph;
    const auto t = thresholds(h);
    const auto cfg = StoppingConfig::of(h, t);
    const auto abs_tuple = sc.functions.absolute();

    const auto fam = build_sparse_family(h, abs_tuple, t, cfg, m);
    add_constant(out, m, "family-size", Enclosure(Rational(static_cast<long>(fam.cubes.size()))));
    const auto cert = verify_sparse_family(fam);
    add_cert(out, "stopping-measure-bound", cert.measure_bound,
             cert.witness ? cube_to_string(*cert.witness) : "");
    add_cert(out, "exceptional-half-volume", cert.exceptional_half,
             cert.witness ? cube_to_string(*cert.witness) : "");
    add_cert(out, "exceptional-disjoint", cert.exceptional_disjoint,
             cert.witness ? cube_to_string(*cert.witness) : "");
    add_constant(out, m, "min-exceptional-ratio", Enclosure(cert.min_exceptional_ratio));
    {
        size_t listed = 0;
        for (const auto& q : fam.cubes) {
            if (listed == 24) {
                out.notes.push_back("... " + std::to_string(fam.cubes.size() - listed) + " more cubes");
                break;
            }
            out.notes.push_back("cube " + cube_to_string(q) + " |E_Q| = " +
                                fraction_string(fam.exceptional_volume(q)));
            ++listed;
        }
    }

    // tree partition: convex, and every cube below a root sits in exactly one tree
    {
        const auto trees = partition_trees(fam, m);
        bool convex = true;
        for (const auto& [q, tree] : trees) convex &= validate_convex(m, tree);
        add_cert(out, "tree-convexity", convex);
        bool partition = true;
        std::string witness;
        for (const auto& root : fam.roots) {
            for (const auto& q : cubes_below(m, root)) {
                int count = 0;
                for (const auto& [base, tree] : trees) count += tree.members.contains(q) ? 1 : 0;
                if (count != 1) {
                    partition = false;
                    witness = cube_to_string(q) + " in " + std::to_string(count) + " trees";
                    break;
                }
            }
            if (!partition) break;
        }
        add_cert(out, "tree-partition", partition, witness);

        // leaf inflation: [F^d]_leaf^(min_d) <= 2^(r min_d) (2|E|)^(d_e) [F^d]_base^(min_d)
        bool leaf_ok = true;
        std::string leaf_witness;
        const long min_d = static_cast<long>(cfg.min_d.get_si());
        for (size_t e = 0; e < h.edges.size() && leaf_ok; ++e) {
            const auto& fn = abs_tuple.at(h.edge_labels[e]);
            const unsigned long de = t.per_edge[e].get_ui();
            std::vector<Rational> powered(fn.cell_count());
            for (size_t i = 0; i < fn.cell_count(); ++i) {
                powered[i] = pow_rat(fn.at_flat(i), static_cast<long>(de));
            }
            CubeSums sums(m, h.r, powered);
            for (const auto& base : fam.cubes) {
                const Rational bound = pow_rat(Rational(2), static_cast<long>(h.r) * min_d) *
                                       Rational(pow_int(cfg.two_e, de)) *
                                       pow_rat(sums.average(base), min_d);
                for (const auto& leaf : trees.at(base).leaves) {
                    if (!(pow_rat(sums.average(leaf), min_d) <= bound)) {
                        leaf_ok = false;
                        leaf_witness = "leaf " + cube_to_string(leaf) + " under " + cube_to_string(base);
                        break;
                    }
                }
                if (!leaf_ok) break;
            }
        }
        add_cert(out, "leaf-inflation-bound", leaf_ok, leaf_witness);
    }

    // localized tree constants per coefficient selection, maximized over the
    // partition trees
    {
        const auto trees = partition_trees(fam, m);
        const FormEvaluator ev(h, sc.kernel);
        int reported = 0;
        for (const auto& [mask, field] : ev.coefficients().per_selection) {
            if (reported >= 3) break;  // keep reports bounded on dense coefficient fields
            const Selection s = selection_from_mask(h, mask);
            std::optional<Root> best;
            for (const auto& base : fam.cubes) {
                LocalizedForm lf;
                lf.h = &h;
                lf.s = s;
                lf.lambda = field;
                lf.tree = trees.at(base);
                Root ratio = tree_constant(lf, abs_tuple);
                if (!best || best->compare(ratio) == std::strong_ordering::less) best = std::move(ratio);
            }
            if (best) {
                add_constant(out, m, "tree-constant" + selection_tag(h, s), enclose_root(*best, sc.width),
                             sc.width);
            }
            ++reported;
        }
    }

    const auto theta = sparse_form(fam, h, abs_tuple, t, sc.width);
    add_constant(out, m, "theta", theta, sc.width);
    const auto dom = domination_ratio(h, sc.kernel, abs_tuple, sc.width);
    if (dom.degenerate) {
        out.notes.push_back("domination ratio degenerate: support escaped the window");
    } else {
        add_constant(out, m, "domination-ratio", dom.ratio, sc.width);
    }
    out.runtime_ms = ms_since(start);
    return out;
}

SuiteResult suite_weighted(const Scenario& sc) {
    SuiteResult out;
    out.name = "weighted";
    const auto start = Clock::now();
    if (!sc.weights || !sc.exponents) {
        add_cert(out, "weighted-inputs-present", false, "scenario carries no weights/exponents");
        out.runtime_ms = ms_since(start);
        return out;
    }
    const GridModel& m = sc.model;
    const Hypergraph& h = sc.hypergraph;
    const auto t = thresholds(h);
    const auto p = ExponentTuple::of(h, t, *sc.exponents);
    const auto& w = *sc.weights;

    const auto cm = condmuck_check(h, w, p);
    add_cert(out, "condmuck-normalization", cm.holds,
             cm.worst_cell ? "violation " + fraction_string(cm.worst_violation) : "");

    const auto mw = muckenhoupt_constant(h, w, p, t, m, sc.width);
    add_constant(out, m, "muckenhoupt", mw.value, sc.width);
    if (mw.witness) out.notes.push_back("muckenhoupt witness: " + cube_to_string(*mw.witness));

    const auto ratio = weighted_estimate_ratio(h, sc.kernel, sc.functions, w, p, sc.width);
    if (ratio.degenerate) {
        out.notes.push_back("weighted ratio degenerate: zero denominator");
    } else {
        add_constant(out, m, "weighted-ratio", ratio.ratio, sc.width);
    }
    add_constant(out, m, "weighted-ratio-exponent", Enclosure(p.holder_exponent()));

    // maximal operator sanity per edge with a finite exponent
    for (size_t e = 0; e < h.edges.size(); ++e) {
        if (p.per_edge[e].infinite) continue;
        const auto& label = h.edge_labels[e];
        const auto& fe = sc.functions.at(label);
        if (fe.max_abs() == 0) continue;
        const auto mb = maximal_bound_ratio(fe.abs(), t.per_edge[e].get_ui(), w.at(label),
                                            p.per_edge[e].value, sc.width);
        add_constant(out, m, "maximal-ratio[" + label + "]", mb, sc.width);
    }

    // the weighted splitting of the sparse form
    const auto abs_tuple = sc.functions.absolute();
    const auto cfg = StoppingConfig::of(h, t);
    const auto fam = build_sparse_family(h, abs_tuple, t, cfg, m);
    const auto split = sparse_weighted_decomposition_check(fam, h, abs_tuple, w, p, t, sc.width);
    add_cert(out, "splitting-factor-identity", split.identity_exact,
             split.witness ? cube_to_string(*split.witness) : "");
    add_cert(out, "splitting-first-factor-bound", split.first_factor_bounded,
             split.witness ? cube_to_string(*split.witness) : "");
    add_cert(out, "splitting-second-factor-bound", split.second_factor_bounded,
             split.witness ? cube_to_string(*split.witness) : "");
    add_cert(out, "splitting-holder-step", split.holder_step != Certified::False);
    add_cert(out, "splitting-maximal-step", split.maximal_step != Certified::False);
    if (split.holder_step == Certified::Undecided) out.notes.push_back("holder step undecided at width");
    if (split.maximal_step == Certified::Undecided) out.notes.push_back("maximal step undecided at width");
    out.runtime_ms = ms_since(start);
    return out;
}

SuiteResult suite_bench(const Scenario& sc) {
    SuiteResult out;
    out.name = "bench";
    const auto start = Clock::now();
    const FormEvaluator ev(sc.hypergraph, sc.kernel);
    (void)ev.coefficients();  // analysis is part of evaluator setup
    const int reps = 3;
    Rational naive_val, fact_val;
    const auto t_naive = Clock::now();
    for (int i = 0; i < reps; ++i) naive_val = ev.evaluate(sc.functions, Engine::Naive);
    const double naive_us =
        static_cast<double>(
            std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t_naive).count()) /
        reps;
    const auto t_fact = Clock::now();
    for (int i = 0; i < reps; ++i) fact_val = ev.evaluate(sc.functions, Engine::Factorized);
    const double fact_us =
        static_cast<double>(
            std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t_fact).count()) /
        reps;
    add_cert(out, "engine-equivalence", naive_val == fact_val);
    add_constant(out, sc.model, "naive-us", Enclosure(Rational(static_cast<long>(naive_us))));
    add_constant(out, sc.model, "factorized-us", Enclosure(Rational(static_cast<long>(fact_us))));
    if (fact_us > 0) {
        out.notes.push_back("speedup: " + std::to_string(naive_us / fact_us) + "x");
    }
    out.runtime_ms = ms_since(start);
    return out;
}

}  // namespace

SuiteResult run_suite(const Scenario& sc, const std::string& name, const std::string& engine) {
    if (name == "validate") return suite_validate(sc);
    if (name == "decompose") return suite_decompose(sc);
    if (name == "identities") return suite_identities(sc, engine);
    if (name == "t1") return suite_t1(sc);
    if (name == "sparse") return suite_sparse(sc);
    if (name == "weighted") return suite_weighted(sc);
    if (name == "bench") return suite_bench(sc);
    SuiteResult out;
    out.name = name;
    add_cert(out, "known-suite", false, "unknown suite: " + name);
    return out;
}

bool Report::all_certificates_pass() const {
    for (const auto& suite : suites) {
        for (const auto& cert : suite.certificates) {
            if (!cert.pass) return false;
        }
    }
    return true;
}

Report run_scenario(const Scenario& sc, const std::vector<std::string>& only, const std::string& engine) {
    Report rep;
    rep.window = sc.model;
    const std::vector<std::string>& names = only.empty() ? sc.suites : only;
    int threads = 1;
    if (const char* env = std::getenv("ENTFORM_THREADS")) {
        threads = std::max(1, std::atoi(env));
    }
    if (threads > 1 && names.size() > 1) {
        std::vector<std::future<SuiteResult>> futures;
        for (const auto& name : names) {
            futures.push_back(std::async(std::launch::async,
                                         [&sc, name, engine] { return run_suite(sc, name, engine); }));
        }
        for (auto& f : futures) rep.suites.push_back(f.get());
    } else {
        for (const auto& name : names) rep.suites.push_back(run_suite(sc, name, engine));
    }
    return rep;
}

nlohmann::json Report::to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario_name;
    j["window"] = {{"r", window.r}, {"L", window.L}, {"N", window.N}};
    j["all_certificates_pass"] = all_certificates_pass();
    nlohmann::json suites_json = nlohmann::json::array();
    for (const auto& suite : suites) {
        nlohmann::json js;
        js["name"] = suite.name;
        js["runtime_ms"] = suite.runtime_ms;
        js["notes"] = suite.notes;
        nlohmann::json certs = nlohmann::json::array();
        for (const auto& c : suite.certificates) {
            certs.push_back({{"name", c.name}, {"pass", c.pass}, {"witness", c.witness}});
        }
        js["certificates"] = certs;
        nlohmann::json consts = nlohmann::json::array();
        for (const auto& c : suite.constants) {
            consts.push_back({{"name", c.name},
                              {"lo", fraction_string(c.value.lo)},
                              {"hi", fraction_string(c.value.hi)},
                              {"dec", decimal_string(c.value.lo, 9)},
                              {"width", fraction_string(c.width)},
                              {"window", c.window}});
        }
        js["constants"] = consts;
        suites_json.push_back(js);
    }
    j["suites"] = suites_json;
    return j;
}

std::string Report::to_csv() const {
    std::ostringstream out;
    out << "suite,kind,name,pass,lo,hi,dec,width,window\n";
    for (const auto& suite : suites) {
        for (const auto& c : suite.certificates) {
            out << suite.name << ",certificate," << c.name << "," << (c.pass ? "1" : "0") << ",,,,,\n";
        }
        for (const auto& c : suite.constants) {
            out << suite.name << ",constant," << c.name << ",," << fraction_string(c.value.lo) << ","
                << fraction_string(c.value.hi) << "," << decimal_string(c.value.lo, 9) << ","
                << fraction_string(c.width) << "," << c.window << "\n";
        }
    }
    return out.str();
}

}  // namespace entform
