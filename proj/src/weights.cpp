#include "entform/weights.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace entform {

namespace {

// Exact Root or certified enclosure, whichever the inputs allow.
struct XVal {
    std::optional<Root> exact;
    Enclosure box;

    static XVal of_root(const Root& r, const Rational& width) {
        return {r, enclose_root(r, width)};
    }
    static XVal of_enclosure(Enclosure e) { return {std::nullopt, std::move(e)}; }

    XVal mul(const XVal& other, const Rational& width) const {
        if (exact && other.exact) return of_root(*exact * *other.exact, width);
        return of_enclosure(mul_nonneg(box, other.box));
    }
    XVal pow(const Rational& e, const Rational& width) const {
        if (exact) return of_root(exact->pow(e), width);
        return of_enclosure(pow_nonneg(box, e, width));
    }
};

Rational reciprocal(const PExp& p) { return p.reciprocal(); }

}  // namespace

ExponentTuple ExponentTuple::of(const Hypergraph& h, const Thresholds& t, const std::vector<PExp>& p) {
    if (p.size() != h.edges.size()) throw std::invalid_argument("ExponentTuple: one exponent per edge");
    ExponentTuple out;
    out.per_edge = p;
    Rational recip_sum(0);
    for (size_t e = 0; e < p.size(); ++e) {
        const Rational d(t.per_edge[e]);
        if (!p[e].infinite) {
            if (!(p[e].value > d)) throw std::invalid_argument("ExponentTuple: requires p_e > d_e");
            out.r_e.push_back(Rational(1) / d - Rational(1) / p[e].value);
            out.alpha.push_back(d / (p[e].value - d));
            out.m_exp = std::max(out.m_exp, Rational(d / (p[e].value - d)));
        } else {
            out.r_e.push_back(Rational(1) / d);
            out.alpha.push_back(Rational(0));
        }
        out.r_total += out.r_e.back();
        recip_sum += reciprocal(p[e]);
    }
    if (recip_sum != 1) throw std::invalid_argument("ExponentTuple: exponent reciprocals must sum to 1");
    return out;
}

const Weight& WeightTuple::at(const std::string& label) const {
    const auto it = by_label.find(label);
    if (it == by_label.end()) throw std::invalid_argument("WeightTuple: no weight for label " + label);
    return it->second;
}

DualWeight dual_weight(const Weight& w, const Rational& alpha) {
    DualWeight out;
    out.cells.reserve(w.fn().cell_count());
    std::vector<Rational> exact;
    exact.reserve(w.fn().cell_count());
    bool all_exact = true;
    for (size_t i = 0; i < w.fn().cell_count(); ++i) {
        Root cell = Root::pow(w.fn().at_flat(i), -alpha);
        if (all_exact) {
            if (auto r = cell.as_rational()) {
                exact.push_back(*r);
            } else {
                all_exact = false;
            }
        }
        out.cells.push_back(std::move(cell));
    }
    if (all_exact) out.exact = std::move(exact);
    return out;
}

CondMuckReport condmuck_check(const Hypergraph& h, const WeightTuple& w, const ExponentTuple& p) {
    CondMuckReport rep;
    // common denominator U of the 1/p_e, so every exponent U/p_e is an integer
    Integer u(1);
    std::vector<Rational> recips;
    for (const auto& pe : p.per_edge) {
        recips.push_back(reciprocal(pe));
        mpz_lcm(u.get_mpz_t(), u.get_mpz_t(), Integer(recips.back().get_den()).get_mpz_t());
    }
    const StepFunction& first = w.at(h.edge_labels.front()).fn();
    for (size_t i = 0; i < first.cell_count(); ++i) {
        Rational prod(1);
        for (size_t e = 0; e < h.edges.size(); ++e) {
            const Rational uq = recips[e] * Rational(u);  // integral by construction
            prod *= pow_rat(w.at(h.edge_labels[e]).fn().at_flat(i), uq.get_num().get_si());
        }
        const Rational violation = abs_rat(prod - 1);
        if (violation > rep.worst_violation) {
            rep.worst_violation = violation;
            rep.worst_cell = first.coords_of(i);
            rep.holds = false;
        }
    }
    return rep;
}

MuckenhouptResult muckenhoupt_constant(const Hypergraph& h, const WeightTuple& w,
                                       const ExponentTuple& p, const Thresholds& t,
                                       const GridModel& model, const Rational& width) {
    (void)t;
    // duals per edge, deduplicated by (label, alpha)
    std::map<std::pair<std::string, Rational>, DualWeight> duals;
    std::map<std::pair<std::string, Rational>, std::optional<CubeSums>> sums;
    for (size_t e = 0; e < h.edges.size(); ++e) {
        const auto key = std::make_pair(h.edge_labels[e], p.alpha[e]);
        if (duals.contains(key)) continue;
        DualWeight d = dual_weight(w.at(h.edge_labels[e]), p.alpha[e]);
        if (d.exact) {
            sums.emplace(key, CubeSums(model, model.r, *d.exact));
        } else {
            sums.emplace(key, std::nullopt);
        }
        duals.emplace(key, std::move(d));
    }
    const Rational cell_vol = pow_rat(Rational(1, 2), static_cast<long>(model.N) * model.r);
    const StepFunction probe(model, model.r);

    MuckenhouptResult out;
    bool all_exact = true;
    bool first = true;
    Rational lo(0), hi(0);
    std::optional<Root> best_exact;
    for_each_model_cube(model, [&](const DyadicCube& q) {
        XVal factor = XVal::of_root(Root(Rational(1)), width);
        for (size_t e = 0; e < h.edges.size(); ++e) {
            const auto key = std::make_pair(h.edge_labels[e], p.alpha[e]);
            const auto& s = sums.at(key);
            XVal avg = s ? XVal::of_root(Root(s->average(q)), width) : XVal{};
            if (!s) {
                std::vector<Root> terms;
                const auto& cells = duals.at(key).cells;
                for_each_cell_in(model, q, [&](std::span<const long> coords) {
                    terms.push_back(cell_vol * cells[probe.flat_index(coords)]);
                });
                avg = XVal::of_enclosure(Rational(1) / q.volume() * sum_enclosure(terms, width / 4));
            }
            factor = factor.mul(avg.pow(p.r_e[e], width / 4), width / 4);
        }
        if (!factor.exact) all_exact = false;
        if (factor.exact &&
            (!best_exact || best_exact->compare(*factor.exact) == std::strong_ordering::less)) {
            best_exact = factor.exact;
            out.witness = q;
        } else if (!factor.exact && (first || factor.box.hi > hi)) {
            out.witness = q;
        }
        lo = std::max(lo, factor.box.lo);
        hi = std::max(hi, factor.box.hi);
        first = false;
    });
    out.value = Enclosure(lo, hi);
    if (all_exact && best_exact) {
        out.exact = best_exact;
        out.value = enclose_root(*best_exact, width);
    }
    return out;
}

WeightedRatioResult weighted_estimate_ratio(const Hypergraph& h, const PerfectDyadicKernel& k,
                                            const FunctionTuple& f, const WeightTuple& w,
                                            const ExponentTuple& p, const Rational& width) {
    require_complete_components(h);
    const auto t = thresholds(h);
    WeightedRatioResult out;
    out.lambda = evaluate_form(h, k, f, Engine::Factorized);

    const auto mw = muckenhoupt_constant(h, w, p, t, k.model(), width / 4);
    Enclosure denom = pow_nonneg(mw.value, p.holder_exponent(), width / 4);
    for (size_t e = 0; e < h.edges.size(); ++e) {
        const auto norm =
            lp_norm(f.at(h.edge_labels[e]), p.per_edge[e], &w.at(h.edge_labels[e]), width / 4);
        denom = mul_nonneg(denom, norm.box);
    }
    out.denominator = denom;
    const Rational mag = abs_rat(out.lambda);
    if (mag == 0) {
        out.ratio = Enclosure(Rational(0));
        return out;
    }
    if (denom.lo == 0) {
        out.degenerate = true;
        return out;
    }
    out.ratio = div_pos(Enclosure(mag), denom);
    return out;
}

Enclosure maximal_bound_ratio(const StepFunction& f, unsigned long d, const Weight& w,
                              const Rational& p, const Rational& width) {
    if (!(p > Rational(static_cast<long>(d)))) {
        throw std::invalid_argument("maximal_bound_ratio: requires p > d");
    }
    const auto mf = weighted_maximal(f, d, w);
    std::vector<Root> terms;
    const Rational vol = f.cell_volume();
    for (size_t i = 0; i < mf.cells.size(); ++i) {
        if (mf.cells[i].is_zero()) continue;
        terms.push_back((vol * w.fn().at_flat(i)) * mf.cells[i].pow(p));
    }
    const Enclosure num_inner = sum_enclosure(terms, width / 4);
    const Enclosure numerator = pow_nonneg(num_inner, Rational(1) / p, width / 4);
    const auto fnorm = lp_norm(f, PExp::of(p), &w, width / 4);
    if (fnorm.box.lo == 0) throw std::domain_error("maximal_bound_ratio: zero function");
    return div_pos(numerator, fnorm.box);
}

WeightedSplittingReport sparse_weighted_decomposition_check(const SparseFamily& s, const Hypergraph& h,
                                                            const FunctionTuple& f, const WeightTuple& w,
                                                            const ExponentTuple& p, const Thresholds& t,
                                                            const Rational& width) {
    if (!f.nonnegative()) throw std::domain_error("weighted splitting: tuple must be nonnegative");
    WeightedSplittingReport rep;
    const GridModel& model = s.model;
    const Rational cell_vol = pow_rat(Rational(1, 2), static_cast<long>(model.N) * model.r);
    const size_t ne = h.edges.size();

    // Per edge: dual cells (exact or roots), aggregated sums of h and of F^d.
    struct EdgeData {
        DualWeight dual;
        std::optional<CubeSums> h_sums;   // exact path
        std::optional<CubeSums> fd_sums;  // F^d is always rational
        unsigned long d = 1;
    };
    std::vector<EdgeData> edges(ne);
    for (size_t e = 0; e < ne; ++e) {
        auto& ed = edges[e];
        ed.d = t.per_edge[e].get_ui();
        ed.dual = dual_weight(w.at(h.edge_labels[e]), p.alpha[e]);
        if (ed.dual.exact) {
            ed.h_sums.emplace(model, model.r, *ed.dual.exact);
        }
        const auto& fn = f.at(h.edge_labels[e]);
        std::vector<Rational> powered(fn.cell_count());
        for (size_t i = 0; i < fn.cell_count(); ++i) {
            powered[i] = pow_rat(fn.at_flat(i), static_cast<long>(ed.d));
        }
        ed.fd_sums.emplace(model, model.r, powered);
    }

    const StepFunction probe(model, model.r);
    const auto h_integral = [&](size_t e, const DyadicCube& q, const Rational& w8) -> XVal {
        if (edges[e].h_sums) return XVal::of_root(Root(edges[e].h_sums->sum(q)), w8);
        std::vector<Root> terms;
        for_each_cell_in(model, q, [&](std::span<const long> coords) {
            terms.push_back(cell_vol * edges[e].dual.cells[probe.flat_index(coords)]);
        });
        return XVal::of_enclosure(sum_enclosure(terms, w8));
    };

    // Muckenhoupt constant for the uniform bounds.
    const auto mw = muckenhoupt_constant(h, w, p, t, model, width / 8);
    // c^{-r m} [w]^m with c = certified sparseness constant.
    const XVal mw_val = mw.exact ? XVal::of_root(*mw.exact, width / 8) : XVal::of_enclosure(mw.value);
    const XVal c_pow = XVal::of_root(Root::pow(Rational(1) / s.certified_c, p.r_total * p.m_exp), width / 8);
    const XVal second_bound = c_pow.mul(mw_val.pow(p.m_exp, width / 8), width / 8);

    // Per-cell maximal values (MG)_e, needed for the recombination bounds.
    std::vector<std::vector<XVal>> mg(ne);
    for (size_t e = 0; e < ne; ++e) {
        mg[e].reserve(probe.cell_count());
        for (size_t i = 0; i < probe.cell_count(); ++i) {
            const auto coords = probe.coords_of(i);
            DyadicCube q{model.finest_scale(), coords};
            std::optional<Rational> best_exact;
            Enclosure best_box(Rational(0));
            for (int k = model.finest_scale(); k <= model.L; ++k) {
                const Rational fd = edges[e].fd_sums->sum(q);
                const XVal hq = h_integral(e, q, width / 8);
                if (hq.exact) {
                    const Rational ratio = fd / hq.exact->as_rational().value();
                    if (!best_exact || ratio > *best_exact) best_exact = ratio;
                } else {
                    const Enclosure ratio = div_pos(Enclosure(fd), hq.box);
                    best_box.lo = std::max(best_box.lo, ratio.lo);
                    best_box.hi = std::max(best_box.hi, ratio.hi);
                }
                q = q.parent();
            }
            if (best_exact) {
                mg[e].push_back(XVal::of_root(Root(*best_exact, edges[e].d), width / 8));
            } else {
                mg[e].push_back(XVal::of_enclosure(
                    pow_nonneg(best_box, Rational(1, static_cast<long>(edges[e].d)), width / 8)));
            }
        }
    }

    // Factor checks per family cube plus the summed recombination. Sums carry
    // exact rational values whenever every term is rational, so comparisons at
    // equality still certify.
    struct ESum {
        std::optional<Rational> exact = Rational(0);
        Enclosure box = Enclosure(Rational(0));
        void add(const XVal& v) {
            box = box + v.box;
            if (exact && v.exact) {
                if (auto r = v.exact->as_rational()) {
                    *exact += *r;
                    return;
                }
            }
            exact.reset();
        }
        XVal value(const Rational& w8) const {
            if (exact) return XVal::of_root(Root(*exact), w8);
            return XVal::of_enclosure(box);
        }
    };
    const auto cmp_le = [](const XVal& a, const XVal& b) {
        if (a.exact && b.exact) {
            return a.exact->compare(*b.exact) != std::strong_ordering::greater ? Certified::True
                                                                               : Certified::False;
        }
        return certified_le(a.box, b.box);
    };
    const auto sup_of = [](const std::vector<XVal>& vals, const Rational&) {
        bool all_exact = true;
        for (const auto& v : vals) all_exact &= v.exact.has_value();
        if (all_exact && !vals.empty()) {
            Root best = *vals.front().exact;
            Enclosure box = vals.front().box;
            for (const auto& v : vals) {
                if (best.compare(*v.exact) == std::strong_ordering::less) best = *v.exact;
                box.lo = std::max(box.lo, v.box.lo);
                box.hi = std::max(box.hi, v.box.hi);
            }
            return XVal{best, box};
        }
        Enclosure box(Rational(0));
        for (const auto& v : vals) {
            box.lo = std::max(box.lo, v.box.lo);
            box.hi = std::max(box.hi, v.box.hi);
        }
        return XVal::of_enclosure(box);
    };

    ESum lhs_sum;
    for (const auto& q : s.cubes) {
        const auto& stops = s.stopping.at(q);
        XVal a_q = XVal::of_root(Root(Rational(1)), width / 8);
        XVal b_q = XVal::of_root(Root(q.volume()), width / 8);
        XVal c_q = XVal::of_root(Root(Rational(1)), width / 8);
        XVal t_q = XVal::of_root(Root(q.volume()), width / 8);
        XVal second_lhs = XVal::of_root(Root(Rational(1)), width / 8);
        for (size_t e = 0; e < ne; ++e) {
            const Rational inv_vol = Rational(1) / q.volume();
            const XVal h_q = h_integral(e, q, width / 8);
            XVal h_eq = h_q;  // integral of h over E_Q
            for (const auto& stop : stops) {
                const XVal h_stop = h_integral(e, stop, width / 8);
                if (h_eq.exact && h_stop.exact) {
                    h_eq = XVal::of_root(Root(h_eq.exact->as_rational().value() -
                                              h_stop.exact->as_rational().value()),
                                         width / 8);
                } else {
                    h_eq = XVal::of_enclosure(
                        Enclosure(h_eq.box.lo - h_stop.box.hi, h_eq.box.hi - h_stop.box.lo));
                }
            }
            const Rational recip = reciprocal(p.per_edge[e]);
            // averages: [h]_Q = integral / |Q|
            XVal h_avg_scaled = h_q.exact ? XVal::of_root(inv_vol * *h_q.exact, width / 8)
                                          : XVal::of_enclosure(inv_vol * h_q.box);
            a_q = a_q.mul(h_avg_scaled.pow(p.r_e[e], width / 8), width / 8);
            // ([h]_Q / int_{E_Q} h)^(1/p), and the second-factor product uses |Q|[h]_Q
            XVal ratio;
            if (h_avg_scaled.exact && h_eq.exact) {
                ratio = XVal::of_root(*h_avg_scaled.exact / *h_eq.exact, width / 8);
            } else {
                ratio = XVal::of_enclosure(div_pos(h_avg_scaled.box, h_eq.box));
            }
            b_q = b_q.mul(ratio.pow(recip, width / 8), width / 8);
            XVal vol_ratio;
            if (ratio.exact) {
                vol_ratio = XVal::of_root(q.volume() * *ratio.exact, width / 8);
            } else {
                vol_ratio = XVal::of_enclosure(q.volume() * ratio.box);
            }
            second_lhs = second_lhs.mul(vol_ratio.pow(recip, width / 8), width / 8);
            // C_Q factor: (int_{E_Q} h)^(1/p) ([F^d]_Q / [h]_Q)^(1/d)
            const Rational fd_avg = edges[e].fd_sums->average(q);
            XVal fh_ratio;
            if (h_avg_scaled.exact) {
                fh_ratio = XVal::of_root(Root(fd_avg) / *h_avg_scaled.exact, width / 8);
            } else {
                fh_ratio = XVal::of_enclosure(div_pos(Enclosure(fd_avg), h_avg_scaled.box));
            }
            c_q = c_q.mul(h_eq.pow(recip, width / 8), width / 8)
                      .mul(fh_ratio.pow(Rational(1, static_cast<long>(edges[e].d)), width / 8), width / 8);
            t_q = t_q.mul(XVal::of_root(Root(fd_avg, edges[e].d), width / 8), width / 8);
        }
        // identity: A * B * C = Theta summand
        const XVal abc = a_q.mul(b_q, width / 8).mul(c_q, width / 8);
        if (abc.exact && t_q.exact) {
            if (!(abc.exact->compare(*t_q.exact) == std::strong_ordering::equal)) {
                rep.identity_exact = false;
                rep.witness = q;
            }
        } else if (abc.box.lo > t_q.box.hi || t_q.box.lo > abc.box.hi) {
            rep.identity_exact = false;
            rep.witness = q;
        }
        // uniform bounds
        if (cmp_le(a_q, mw_val) == Certified::False) {
            rep.first_factor_bounded = false;
            rep.witness = q;
        }
        if (cmp_le(second_lhs, second_bound) == Certified::False) {
            rep.second_factor_bounded = false;
            rep.witness = q;
        }
        lhs_sum.add(c_q);
    }

    // Recombination: sum_Q C_Q <= prod_e (sum_Q int_{E_Q} (MG)^p h)^(1/p), with
    // infinite exponents pulled out as suprema.
    XVal middle = XVal::of_root(Root(Rational(1)), width / 8);
    for (size_t e = 0; e < ne; ++e) {
        if (p.per_edge[e].infinite) {
            // sup over family cubes of ([F^d]_Q/[h]_Q)^(1/d)
            std::vector<XVal> vals;
            for (const auto& q : s.cubes) {
                const Rational fd_avg = edges[e].fd_sums->average(q);
                const XVal hq = h_integral(e, q, width / 8);
                XVal h_avg = hq.exact ? XVal::of_root(Rational(1) / q.volume() * *hq.exact, width / 8)
                                      : XVal::of_enclosure(Rational(1) / q.volume() * hq.box);
                if (h_avg.exact) {
                    vals.push_back(XVal::of_root(
                        Root(fd_avg / h_avg.exact->as_rational().value(), edges[e].d), width / 8));
                } else {
                    vals.push_back(XVal::of_enclosure(
                        pow_nonneg(div_pos(Enclosure(fd_avg), h_avg.box),
                                   Rational(1, static_cast<long>(edges[e].d)), width / 8)));
                }
            }
            middle = middle.mul(sup_of(vals, width / 8), width / 8);
            continue;
        }
        ESum inner;
        for (const auto& q : s.cubes) {
            const auto& stops = s.stopping.at(q);
            for_each_cell_in(model, q, [&](std::span<const long> coords) {
                const DyadicCube cell{model.finest_scale(), std::vector<long>(coords.begin(), coords.end())};
                for (const auto& stop : stops) {
                    if (stop.contains(cell)) return;
                }
                const size_t i = probe.flat_index(coords);
                XVal term = mg[e][i].pow(p.per_edge[e].value, width / 8);
                const XVal hcell = edges[e].dual.exact
                                       ? XVal::of_root(Root((*edges[e].dual.exact)[i]), width / 8)
                                       : XVal::of_root(edges[e].dual.cells[i], width / 8);
                term = term.mul(hcell, width / 8);
                term = term.exact ? XVal::of_root(cell_vol * *term.exact, width / 8)
                                  : XVal::of_enclosure(cell_vol * term.box);
                inner.add(term);
            });
        }
        middle = middle.mul(inner.value(width / 8).pow(reciprocal(p.per_edge[e]), width / 8), width / 8);
    }
    rep.holder_step = cmp_le(lhs_sum.value(width / 8), middle);

    // ... <= prod_e ||M G_e||_{L^{p_e}(h_e)}, norms over the whole grid.
    XVal norms = XVal::of_root(Root(Rational(1)), width / 8);
    for (size_t e = 0; e < ne; ++e) {
        if (p.per_edge[e].infinite) {
            norms = norms.mul(sup_of(mg[e], width / 8), width / 8);
            continue;
        }
        ESum inner;
        for (size_t i = 0; i < mg[e].size(); ++i) {
            XVal term = mg[e][i].pow(p.per_edge[e].value, width / 8);
            const XVal hcell = edges[e].dual.exact
                                   ? XVal::of_root(Root((*edges[e].dual.exact)[i]), width / 8)
                                   : XVal::of_root(edges[e].dual.cells[i], width / 8);
            term = term.mul(hcell, width / 8);
            term = term.exact ? XVal::of_root(cell_vol * *term.exact, width / 8)
                              : XVal::of_enclosure(cell_vol * term.box);
            inner.add(term);
        }
        norms = norms.mul(inner.value(width / 8).pow(reciprocal(p.per_edge[e]), width / 8), width / 8);
    }
    rep.maximal_step = cmp_le(middle, norms);
    return rep;
}

WeightTuple weights_from_powers(const Hypergraph& h, const ExponentTuple& p, const StepFunction& base,
                                const std::vector<long>& factors) {
    if (!base.strictly_positive()) throw std::invalid_argument("weights_from_powers: base must be positive");
    if (factors.size() != h.edges.size()) throw std::invalid_argument("weights_from_powers: one factor per edge");
    WeightTuple out;
    for (size_t e = 0; e < h.edges.size(); ++e) {
        const auto& label = h.edge_labels[e];
        if (out.by_label.contains(label)) continue;
        const long b = static_cast<long>(p.alpha[e].get_den().get_si());
        StepFunction fn(base.model(), base.dims());
        for (size_t i = 0; i < base.cell_count(); ++i) {
            fn.set_flat(i, pow_rat(base.at_flat(i), b * factors[e]));
        }
        out.by_label.emplace(label, Weight(std::move(fn)));
    }
    const auto check = condmuck_check(h, out, p);
    if (!check.holds) throw std::invalid_argument("weights_from_powers: factors violate the normalization");
    return out;
}

std::vector<Integer> condmuck_kick_coeffs(const ExponentTuple& p) {
    Integer u(1);
    std::vector<Rational> recips;
    for (const auto& pe : p.per_edge) {
        recips.push_back(pe.reciprocal());
        mpz_lcm(u.get_mpz_t(), u.get_mpz_t(), Integer(recips.back().get_den()).get_mpz_t());
    }
    std::vector<Integer> out;
    for (size_t e = 0; e < p.per_edge.size(); ++e) {
        const Rational uq = recips[e] * Rational(u);  // integral by construction
        out.push_back(Integer(p.alpha[e].get_den()) * uq.get_num());
    }
    return out;
}

Weight synthesize_last_weight(const Hypergraph& h, const ExponentTuple& p,
                              const std::vector<Weight>& others) {
    const size_t ne = h.edges.size();
    if (others.size() + 1 != ne) throw std::invalid_argument("synthesize_last_weight: needs all but one weight");
    if (p.per_edge.back().infinite) {
        throw std::invalid_argument("synthesize_last_weight: last exponent must be finite");
    }
    const GridModel model = others.front().fn().model();
    StepFunction fn(model, others.front().fn().dims());
    const Rational p_last = p.per_edge.back().value;
    for (size_t i = 0; i < fn.cell_count(); ++i) {
        Root prod(Rational(1));
        for (size_t e = 0; e + 1 < ne; ++e) {
            prod = prod * Root::pow(others[e].fn().at_flat(i), -p_last * p.per_edge[e].reciprocal());
        }
        const auto exact = prod.as_rational();
        if (!exact) {
            throw std::invalid_argument(
                "synthesize_last_weight: inputs are not power-compatible with the exponents");
        }
        fn.set_flat(i, *exact);
    }
    return Weight(std::move(fn));
}

}  // namespace entform
