#include "entform/forms.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace entform {

const StepFunction& FunctionTuple::at(const std::string& label) const {
    const auto it = by_label.find(label);
    if (it == by_label.end()) throw std::invalid_argument("FunctionTuple: no function for label " + label);
    return it->second;
}

bool FunctionTuple::covers(const Hypergraph& h) const {
    for (const auto& label : h.edge_labels) {
        if (!by_label.contains(label)) return false;
    }
    return true;
}

bool FunctionTuple::nonnegative() const {
    for (const auto& [label, fn] : by_label) {
        if (!fn.nonnegative()) return false;
    }
    return true;
}

FunctionTuple FunctionTuple::absolute() const {
    FunctionTuple out;
    for (const auto& [label, fn] : by_label) out.by_label.emplace(label, fn.abs());
    return out;
}

namespace {

enum class WKind { Ind, H0, H1 };

// Flattened integration plan for one variable: a cell range with a sign flip
// point (H1) and a power-of-two normalization (cell length over |I| where the
// weight is Haar-normalized).
struct VarPlan {
    long first_cell = 0;
    long count = 0;
    long flip_at = 0;   // offsets >= flip_at carry sign -1
    int scalar_log2 = 0;
    bool zero = false;
};

VarPlan make_var_plan(const GridModel& m, const DyadicInterval& I, WKind kind) {
    VarPlan p;
    if (m.scale_in_model(I.k)) {
        p.count = I.cell_count(m);
        p.first_cell = I.first_cell(m);
        p.flip_at = p.count;
        switch (kind) {
            case WKind::Ind:
                p.scalar_log2 = -m.N;
                break;
            case WKind::H0:
                p.scalar_log2 = -m.N - I.k;
                break;
            case WKind::H1:
                if (p.count == 1) {
                    p.zero = true;  // oscillation below cell resolution
                } else {
                    p.scalar_log2 = -m.N - I.k;
                    p.flip_at = p.count / 2;
                }
                break;
        }
        return p;
    }
    if (I.k == m.leaf_scale()) {
        p.count = 1;
        p.flip_at = 1;
        p.first_cell = I.l >= 0 ? I.l / 2 : (I.l - 1) / 2;
        switch (kind) {
            case WKind::Ind:
                p.scalar_log2 = -m.N - 1;
                break;
            case WKind::H0:
                p.scalar_log2 = -m.N - 1 - I.k;
                break;
            case WKind::H1:
                p.zero = true;
                break;
        }
        return p;
    }
    throw std::invalid_argument("weight interval outside model scales");
}

struct ComponentJob {
    // Rest variables (all classes after the first in contraction order).
    struct RestVar {
        int cls;
        VarPlan plan;
        size_t stride;  // function-axis stride of its class
    };
    struct FirstVertex {
        VarPlan plan;
        std::vector<int> edge_ids;  // into the edges arrays below
    };
    std::vector<RestVar> rest;
    std::vector<FirstVertex> first;
    size_t first_stride = 0;
    // Per component edge: the function and which rest variables feed its axes.
    std::vector<const StepFunction*> edge_fn;
    std::vector<std::vector<int>> edge_rest_vars;  // indices into rest, aligned with strides
    int scalar_log2 = 0;
    bool zero = false;
};

// Integral over the component of prod_e F_e(x_e) * prod_v w_v(x_v), by direct
// summation: inner loop over the first-class cells, outer odometer over the rest.
Rational contract_component_direct(const GridModel& m, const ComponentJob& job) {
    const long half = m.half_cells_per_axis();

    const size_t nrest = job.rest.size();
    std::vector<long> offset(nrest, 0);
    const size_t nedges = job.edge_fn.size();
    std::vector<size_t> base(nedges);

    Rational total(0);
    Rational term;
    Rational acc;
    Rational prod;
    while (true) {
        int rest_sign = 1;
        for (size_t j = 0; j < nrest; ++j) {
            if (offset[j] >= job.rest[j].plan.flip_at) rest_sign = -rest_sign;
        }
        for (size_t e = 0; e < nedges; ++e) {
            size_t b = 0;
            for (int j : job.edge_rest_vars[e]) {
                const auto& rv = job.rest[static_cast<size_t>(j)];
                b += static_cast<size_t>(rv.plan.first_cell + offset[static_cast<size_t>(j)] + half) * rv.stride;
            }
            base[e] = b;
        }
        prod = 1;
        bool dead = false;
        for (const auto& u : job.first) {
            acc = 0;
            for (long x = 0; x < u.plan.count; ++x) {
                const size_t cell = static_cast<size_t>(u.plan.first_cell + x + half) * job.first_stride;
                term = 1;
                for (int e : u.edge_ids) {
                    term *= job.edge_fn[static_cast<size_t>(e)]->at_flat(base[static_cast<size_t>(e)] + cell);
                }
                if (x < u.plan.flip_at) {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            if (acc == 0) {
                dead = true;
                break;
            }
            prod *= acc;
        }
        if (!dead) {
            if (rest_sign < 0) {
                total -= prod;
            } else {
                total += prod;
            }
        }
        size_t j = 0;
        while (j < nrest) {
            if (++offset[j] < job.rest[j].plan.count) break;
            offset[j] = 0;
            ++j;
        }
        if (j == nrest) break;
    }
    return total * pow_rat(Rational(2), job.scalar_log2);
}

Rational rational_from_i128(__int128 v) {
    const bool neg = v < 0;
    unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
    const uint64_t hi = static_cast<uint64_t>(mag >> 64);
    const uint64_t lo = static_cast<uint64_t>(mag);
    Integer out(0);
    mpz_import(out.get_mpz_t(), 1, 1, sizeof(uint64_t), 0, 0, &hi);
    mpz_mul_2exp(out.get_mpz_t(), out.get_mpz_t(), 64);
    Integer low(0);
    mpz_import(low.get_mpz_t(), 1, 1, sizeof(uint64_t), 0, 0, &lo);
    out += low;
    if (neg) out = -out;
    return Rational(out);
}

int bits_of(uint64_t v) { return v == 0 ? 0 : 64 - __builtin_clzll(v); }

// Edge function scaled to integers by the lcm of its cell denominators; the
// exact fast path uses these when the conservative bit bounds certify that no
// intermediate can overflow.
struct IntFunction {
    bool ok = false;
    std::vector<int64_t> cells;
    int64_t den = 1;
    int max_bits = 0;
};

IntFunction scale_to_integers(const StepFunction& f) {
    IntFunction out;
    Integer d(1);
    for (size_t i = 0; i < f.cell_count(); ++i) {
        mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), f.at_flat(i).get_den_mpz_t());
        if (mpz_sizeinbase(d.get_mpz_t(), 2) > 24) return out;
    }
    out.den = static_cast<int64_t>(d.get_si());
    out.cells.reserve(f.cell_count());
    uint64_t maxabs = 0;
    for (size_t i = 0; i < f.cell_count(); ++i) {
        Integer scaled = f.at_flat(i).get_num() * (d / f.at_flat(i).get_den());
        if (mpz_sizeinbase(scaled.get_mpz_t(), 2) > 30) return out;
        const int64_t v = static_cast<int64_t>(scaled.get_si());
        maxabs = std::max<uint64_t>(maxabs, static_cast<uint64_t>(v < 0 ? -v : v));
        out.cells.push_back(v);
    }
    out.max_bits = bits_of(maxabs);
    out.ok = true;
    return out;
}

// Dyadic-interval id on one axis: finest cells first, then coarser scales.
struct AxisIntervalIds {
    const GridModel* m = nullptr;
    long id(const DyadicInterval& i) const {
        long base = 0;
        for (int k = m->finest_scale(); k < i.k; ++k) base += m->positions_per_axis(k);
        return base + i.l + (m->positions_per_axis(i.k) / 2);
    }
    long total() const {
        long sum = 0;
        for (int k = m->finest_scale(); k <= m->L; ++k) sum += m->positions_per_axis(k);
        return sum;
    }
};

// Prebuilt structure for repeated contractions against one function tuple.
// For every first-class vertex the x-sums of its edge product are aggregated
// over all dyadic intervals of the first axis, turning the per-cube inner sum
// into table lookups.
class ContractionContext {
  public:
    ContractionContext(const Hypergraph& h, const FunctionTuple& f, GridModel m, bool tables)
        : h_(&h), f_(&f), m_(m), dec_(decompose(h)), use_tables_(tables) {
        size_t stride = 1;
        class_stride_.resize(static_cast<size_t>(h.r));
        for (int i = 0; i < h.r; ++i) {
            class_stride_[static_cast<size_t>(i)] = stride;
            stride *= static_cast<size_t>(m.cells_per_axis());
        }
        for (const auto& comp : dec_.components) comps_.push_back(make_plan(comp));
        if (use_tables_) {
            for (const auto& plan : comps_) {
                for (const auto* fn : plan.edge_fn) {
                    if (!int_cache_.contains(fn)) int_cache_.emplace(fn, scale_to_integers(*fn));
                }
            }
        }
    }

    // Integral of prod_e F_e(x_e) * prod_v w_v(x_v) over the whole graph.
    Rational eval(const std::vector<std::vector<std::pair<DyadicInterval, WKind>>>& weights) const {
        Rational result(1);
        for (const auto& v : dec_.isolated) {
            const auto& [interval, kind] = weights[static_cast<size_t>(v.cls)][static_cast<size_t>(v.idx)];
            const VarPlan p = make_var_plan(m_, interval, kind);
            if (p.zero) return Rational(0);
            const long signed_count = p.flip_at >= p.count ? p.count : 2 * p.flip_at - p.count;
            result *= pow_rat(Rational(2), p.scalar_log2) * Rational(signed_count);
            if (result == 0) return result;
        }
        for (const auto& plan : comps_) {
            result *= eval_component(plan, weights);
            if (result == 0) return result;
        }
        return result;
    }

  private:
    struct CompPlan {
        int first_cls = 0;
        std::vector<int> first_vertices;             // vertex idx within the first class
        std::vector<std::pair<int, int>> rest_vars;  // (cls, idx), fixed order
        std::vector<const StepFunction*> edge_fn;
        std::vector<std::vector<int>> edge_rest_vars;
        std::vector<std::vector<int>> first_edges;  // per first vertex: edge positions
        // tables[u][rest_flat * interval_count + interval_id], lazily built
        mutable std::vector<std::vector<Rational>> tables;
        mutable std::vector<std::vector<int64_t>> itables;
        mutable bool tables_built = false;
        mutable bool int_mode = false;
        mutable Rational int_norm = Rational(1);  // 1 / prod of edge denominators
        size_t rest_total = 1;  // product of cells_per_axis over rest vars
    };

    CompPlan make_plan(const Component& comp) const {
        CompPlan plan;
        std::vector<int> order;
        for (int i = 0; i < h_->r; ++i) {
            if (!comp.class_vertices[static_cast<size_t>(i)].empty()) order.push_back(i);
        }
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return comp.class_vertices[static_cast<size_t>(a)].size() >
                   comp.class_vertices[static_cast<size_t>(b)].size();
        });
        plan.first_cls = order.front();
        std::map<std::pair<int, int>, int> rest_index;
        for (size_t oi = 1; oi < order.size(); ++oi) {
            const int cls = order[oi];
            for (int idx : comp.class_vertices[static_cast<size_t>(cls)]) {
                rest_index[{cls, idx}] = static_cast<int>(plan.rest_vars.size());
                plan.rest_vars.emplace_back(cls, idx);
                plan.rest_total *= static_cast<size_t>(m_.cells_per_axis());
            }
        }
        std::map<int, int> first_slot;
        for (int idx : comp.class_vertices[static_cast<size_t>(plan.first_cls)]) {
            first_slot[idx] = static_cast<int>(plan.first_vertices.size());
            plan.first_vertices.push_back(idx);
            plan.first_edges.emplace_back();
        }
        for (int eid : comp.edge_ids) {
            const auto& edge = h_->edges[static_cast<size_t>(eid)];
            const int slot = first_slot.at(edge[static_cast<size_t>(plan.first_cls)]);
            std::vector<int> rest;
            for (int i = 0; i < h_->r; ++i) {
                if (i == plan.first_cls) continue;
                rest.push_back(rest_index.at({i, edge[static_cast<size_t>(i)]}));
            }
            plan.first_edges[static_cast<size_t>(slot)].push_back(static_cast<int>(plan.edge_fn.size()));
            plan.edge_fn.push_back(&f_->at(h_->edge_labels[static_cast<size_t>(eid)]));
            plan.edge_rest_vars.push_back(std::move(rest));
        }
        return plan;
    }

    // Conservative bit bound for the whole integer contraction: table entries,
    // the first-factor products, and the signed total must fit their carriers.
    bool int_bounds_certify(const CompPlan& plan) const {
        int prod_bits = bits_of(plan.rest_total) + 1;
        for (size_t u = 0; u < plan.first_vertices.size(); ++u) {
            int entry_bits = bits_of(static_cast<uint64_t>(m_.cells_per_axis()));
            for (int e : plan.first_edges[u]) {
                const auto& item = int_cache_.at(plan.edge_fn[static_cast<size_t>(e)]);
                if (!item.ok) return false;
                entry_bits += item.max_bits;
            }
            if (entry_bits > 61) return false;  // int64 table entries, plus one bit for differences
            prod_bits += entry_bits + 1;
        }
        return prod_bits <= 124;  // __int128 accumulator
    }

    void build_tables(const CompPlan& plan) const {
        const AxisIntervalIds ids{&m_};
        const size_t interval_count = static_cast<size_t>(ids.total());
        const long half = m_.half_cells_per_axis();
        const size_t per_axis = static_cast<size_t>(m_.cells_per_axis());
        const size_t nrest = plan.rest_vars.size();
        plan.int_mode = int_bounds_certify(plan);
        if (plan.int_mode) {
            plan.int_norm = Rational(1);
            for (size_t e = 0; e < plan.edge_fn.size(); ++e) {
                plan.int_norm /= Rational(int_cache_.at(plan.edge_fn[e]).den);
            }
            build_int_tables(plan, interval_count, half, per_axis, nrest);
            plan.tables_built = true;
            return;
        }
        // layout: [rest_flat * interval_count + interval_id]; every entry is
        // emplaced exactly once, finest cells first, then the aggregation levels
        plan.tables.assign(plan.first_vertices.size(), {});
        for (auto& t : plan.tables) t.reserve(plan.rest_total * interval_count);
        std::vector<long> rest_cells(nrest, -half);
        std::vector<size_t> edge_base(plan.edge_fn.size());
        Rational term;
        while (true) {
            for (size_t e = 0; e < plan.edge_fn.size(); ++e) {
                size_t b = 0;
                for (int j : plan.edge_rest_vars[e]) {
                    const int cls = plan.rest_vars[static_cast<size_t>(j)].first;
                    b += static_cast<size_t>(rest_cells[static_cast<size_t>(j)] + half) *
                         class_stride_[static_cast<size_t>(cls)];
                }
                edge_base[e] = b;
            }
            for (size_t u = 0; u < plan.first_vertices.size(); ++u) {
                auto& table = plan.tables[u];
                const auto& eids = plan.first_edges[u];
                const size_t block = table.size();
                for (size_t x = 0; x < per_axis; ++x) {
                    const size_t cell = x * class_stride_[static_cast<size_t>(plan.first_cls)];
                    if (eids.size() == 2) {
                        table.emplace_back(
                            plan.edge_fn[static_cast<size_t>(eids[0])]->at_flat(edge_base[static_cast<size_t>(eids[0])] + cell) *
                            plan.edge_fn[static_cast<size_t>(eids[1])]->at_flat(edge_base[static_cast<size_t>(eids[1])] + cell));
                    } else {
                        term = 1;
                        for (int e : eids) {
                            term *= plan.edge_fn[static_cast<size_t>(e)]->at_flat(edge_base[static_cast<size_t>(e)] + cell);
                        }
                        table.emplace_back(term);
                    }
                }
                // aggregation: T[parent] = T[left child] + T[right child]
                size_t child_base = 0;
                for (int k = m_.finest_scale() + 1; k <= m_.L; ++k) {
                    const size_t parents = static_cast<size_t>(m_.positions_per_axis(k));
                    for (size_t pp = 0; pp < parents; ++pp) {
                        table.emplace_back(table[block + child_base + 2 * pp] +
                                           table[block + child_base + 2 * pp + 1]);
                    }
                    child_base += 2 * parents;
                }
            }
            size_t j = 0;
            while (j < nrest) {
                if (++rest_cells[j] < half) break;
                rest_cells[j] = -half;
                ++j;
            }
            if (j == nrest) break;
        }
        plan.tables_built = true;
    }

    void build_int_tables(const CompPlan& plan, size_t interval_count, long half, size_t per_axis,
                          size_t nrest) const {
        plan.itables.assign(plan.first_vertices.size(), {});
        for (auto& t : plan.itables) t.reserve(plan.rest_total * interval_count);
        std::vector<const int64_t*> icells(plan.edge_fn.size());
        for (size_t e = 0; e < plan.edge_fn.size(); ++e) {
            icells[e] = int_cache_.at(plan.edge_fn[e]).cells.data();
        }
        std::vector<long> rest_cells(nrest, -half);
        std::vector<size_t> edge_base(plan.edge_fn.size());
        while (true) {
            for (size_t e = 0; e < plan.edge_fn.size(); ++e) {
                size_t b = 0;
                for (int j : plan.edge_rest_vars[e]) {
                    const int cls = plan.rest_vars[static_cast<size_t>(j)].first;
                    b += static_cast<size_t>(rest_cells[static_cast<size_t>(j)] + half) *
                         class_stride_[static_cast<size_t>(cls)];
                }
                edge_base[e] = b;
            }
            for (size_t u = 0; u < plan.first_vertices.size(); ++u) {
                auto& table = plan.itables[u];
                const auto& eids = plan.first_edges[u];
                const size_t block = table.size();
                for (size_t x = 0; x < per_axis; ++x) {
                    const size_t cell = x * class_stride_[static_cast<size_t>(plan.first_cls)];
                    int64_t term = 1;
                    for (int e : eids) term *= icells[static_cast<size_t>(e)][edge_base[static_cast<size_t>(e)] + cell];
                    table.push_back(term);
                }
                size_t child_base = 0;
                for (int k = m_.finest_scale() + 1; k <= m_.L; ++k) {
                    const size_t parents = static_cast<size_t>(m_.positions_per_axis(k));
                    for (size_t pp = 0; pp < parents; ++pp) {
                        table.push_back(table[block + child_base + 2 * pp] +
                                        table[block + child_base + 2 * pp + 1]);
                    }
                    child_base += 2 * parents;
                }
            }
            size_t j = 0;
            while (j < nrest) {
                if (++rest_cells[j] < half) break;
                rest_cells[j] = -half;
                ++j;
            }
            if (j == nrest) break;
        }
    }

    Rational eval_component(const CompPlan& plan,
                            const std::vector<std::vector<std::pair<DyadicInterval, WKind>>>& weights) const {
        // assemble variable plans; zero factors end the component immediately
        int scalar_log2 = 0;
        std::vector<VarPlan>& rest_plans = scratch_rest_;
        rest_plans.clear();
        bool model_scales_only = true;
        for (const auto& [cls, idx] : plan.rest_vars) {
            const auto& [interval, kind] = weights[static_cast<size_t>(cls)][static_cast<size_t>(idx)];
            VarPlan p = make_var_plan(m_, interval, kind);
            if (p.zero) return Rational(0);
            model_scales_only &= m_.scale_in_model(interval.k);
            scalar_log2 += p.scalar_log2;
            rest_plans.push_back(std::move(p));
        }
        std::vector<VarPlan>& first_plans = scratch_first_;
        first_plans.clear();
        std::vector<const DyadicInterval*>& first_intervals = scratch_intervals_;
        first_intervals.clear();
        std::vector<WKind>& first_kinds = scratch_kinds_;
        first_kinds.clear();
        for (int idx : plan.first_vertices) {
            const auto& [interval, kind] = weights[static_cast<size_t>(plan.first_cls)][static_cast<size_t>(idx)];
            VarPlan p = make_var_plan(m_, interval, kind);
            if (p.zero) return Rational(0);
            model_scales_only &= m_.scale_in_model(interval.k);
            scalar_log2 += p.scalar_log2;
            first_plans.push_back(std::move(p));
            first_intervals.push_back(&interval);
            first_kinds.push_back(kind);
        }

        const bool tables_ok = use_tables_ && model_scales_only && !plan.rest_vars.empty() &&
                               plan.rest_total * static_cast<size_t>(AxisIntervalIds{&m_}.total()) <=
                                   (static_cast<size_t>(1) << 22);
        if (!tables_ok) {
            // direct odometer fallback (also handles leaf-scale intervals)
            ComponentJob job;
            job.scalar_log2 = scalar_log2;
            job.first_stride = class_stride_[static_cast<size_t>(plan.first_cls)];
            for (size_t j = 0; j < plan.rest_vars.size(); ++j) {
                job.rest.push_back({plan.rest_vars[j].first, rest_plans[j],
                                    class_stride_[static_cast<size_t>(plan.rest_vars[j].first)]});
            }
            for (size_t u = 0; u < plan.first_vertices.size(); ++u) {
                job.first.push_back({first_plans[u], plan.first_edges[u]});
            }
            job.edge_fn = plan.edge_fn;
            job.edge_rest_vars = plan.edge_rest_vars;
            return contract_component_direct(m_, job);
        }
        if (!plan.tables_built) build_tables(plan);

        const AxisIntervalIds ids{&m_};
        const size_t interval_count = static_cast<size_t>(ids.total());
        const size_t nfirst = plan.first_vertices.size();
        // table row offsets per first vertex: single row for plain sums, or the
        // two child rows for a cancellative difference
        std::vector<size_t>& row_a = scratch_rowa_;
        std::vector<size_t>& row_b = scratch_rowb_;
        std::vector<char>& is_diff = scratch_isdiff_;
        row_a.assign(nfirst, 0);
        row_b.assign(nfirst, 0);
        is_diff.assign(nfirst, 0);
        for (size_t u = 0; u < nfirst; ++u) {
            const DyadicInterval& I = *first_intervals[u];
            if (first_kinds[u] == WKind::H1) {
                row_a[u] = static_cast<size_t>(ids.id(I.left_half()));
                row_b[u] = static_cast<size_t>(ids.id(I.right_half()));
                is_diff[u] = 1;
            } else {
                row_a[u] = static_cast<size_t>(ids.id(I));
                is_diff[u] = 0;
            }
        }

        const long half = m_.half_cells_per_axis();
        const size_t nrest = plan.rest_vars.size();
        std::vector<long> offset(nrest, 0);
        std::vector<size_t> rest_stride(nrest);
        {
            size_t stride = 1;
            for (size_t j = 0; j < nrest; ++j) {
                rest_stride[j] = stride;
                stride *= static_cast<size_t>(m_.cells_per_axis());
            }
        }
        if (plan.int_mode) {
            // machine-integer path; overflow excluded by int_bounds_certify
            __int128 total = 0;
            while (true) {
                int rest_sign = 1;
                size_t rest_flat = 0;
                for (size_t j = 0; j < nrest; ++j) {
                    if (offset[j] >= rest_plans[j].flip_at) rest_sign = -rest_sign;
                    rest_flat += static_cast<size_t>(rest_plans[j].first_cell + offset[j] + half) * rest_stride[j];
                }
                const size_t rest_base = rest_flat * interval_count;
                __int128 prod = rest_sign;
                for (size_t u = 0; u < nfirst && prod != 0; ++u) {
                    const auto& table = plan.itables[u];
                    const int64_t factor = is_diff[u]
                                               ? table[rest_base + row_a[u]] - table[rest_base + row_b[u]]
                                               : table[rest_base + row_a[u]];
                    prod *= factor;
                }
                total += prod;
                size_t j = 0;
                while (j < nrest) {
                    if (++offset[j] < rest_plans[j].count) break;
                    offset[j] = 0;
                    ++j;
                }
                if (j == nrest) break;
            }
            return rational_from_i128(total) * plan.int_norm * pow_rat(Rational(2), scalar_log2);
        }
        Rational total(0);
        Rational prod;
        Rational factor;
        while (true) {
            int rest_sign = 1;
            size_t rest_flat = 0;
            for (size_t j = 0; j < nrest; ++j) {
                if (offset[j] >= rest_plans[j].flip_at) rest_sign = -rest_sign;
                rest_flat += static_cast<size_t>(rest_plans[j].first_cell + offset[j] + half) * rest_stride[j];
            }
            const size_t rest_base = rest_flat * interval_count;
            prod = 1;
            bool dead = false;
            for (size_t u = 0; u < nfirst; ++u) {
                const auto& table = plan.tables[u];
                if (is_diff[u]) {
                    factor = table[rest_base + row_a[u]] - table[rest_base + row_b[u]];
                } else {
                    factor = table[rest_base + row_a[u]];
                }
                if (factor == 0) {
                    dead = true;
                    break;
                }
                prod *= factor;
            }
            if (!dead) {
                if (rest_sign < 0) {
                    total -= prod;
                } else {
                    total += prod;
                }
            }
            size_t j = 0;
            while (j < nrest) {
                if (++offset[j] < rest_plans[j].count) break;
                offset[j] = 0;
                ++j;
            }
            if (j == nrest) break;
        }
        return total * pow_rat(Rational(2), scalar_log2);
    }

    const Hypergraph* h_;
    const FunctionTuple* f_;
    GridModel m_;
    ComponentDecomposition dec_;
    bool use_tables_;
    std::vector<size_t> class_stride_;
    std::vector<CompPlan> comps_;
    // reusable per-evaluation scratch (a context instance is not thread-safe)
    mutable std::vector<VarPlan> scratch_rest_;
    mutable std::vector<VarPlan> scratch_first_;
    mutable std::vector<const DyadicInterval*> scratch_intervals_;
    mutable std::vector<WKind> scratch_kinds_;
    mutable std::vector<size_t> scratch_rowa_;
    mutable std::vector<size_t> scratch_rowb_;
    mutable std::vector<char> scratch_isdiff_;
    std::map<const StepFunction*, IntFunction> int_cache_;
};

// One-shot integral; repeated evaluations should hold a ContractionContext.
Rational contract_graph(const GridModel& m, const Hypergraph& h, const FunctionTuple& f,
                        const std::vector<std::vector<std::pair<DyadicInterval, WKind>>>& weights) {
    return ContractionContext(h, f, m, /*tables=*/false).eval(weights);
}

std::vector<std::vector<std::pair<DyadicInterval, WKind>>> paraproduct_weights(const Hypergraph& h,
                                                                                const Selection& s,
                                                                                const DyadicCube& q) {
    std::vector<std::vector<std::pair<DyadicInterval, WKind>>> w(static_cast<size_t>(h.r));
    for (int i = 0; i < h.r; ++i) {
        const DyadicInterval I = q.interval(i);
        w[static_cast<size_t>(i)].assign(static_cast<size_t>(h.class_size(i)), {I, WKind::H0});
        for (int idx : s.per_class[static_cast<size_t>(i)]) {
            w[static_cast<size_t>(i)][static_cast<size_t>(idx)] = {I, WKind::H1};
        }
    }
    return w;
}

GridModel tuple_model(const FunctionTuple& f, const Hypergraph& h) {
    if (!f.covers(h)) throw std::invalid_argument("function tuple does not cover every edge label");
    const GridModel m = f.by_label.begin()->second.model();
    for (const auto& [label, fn] : f.by_label) {
        if (!(fn.model() == m) || fn.dims() != h.r) {
            throw std::invalid_argument("function tuple grids are inconsistent");
        }
    }
    return m;
}

}  // namespace

Rational paraproduct_term(const Hypergraph& h, const Selection& s, const DyadicCube& q,
                          const FunctionTuple& f) {
    const GridModel m = tuple_model(f, h);
    if (q.dim() != h.r) throw std::invalid_argument("paraproduct_term: cube dimension mismatch");
    return contract_graph(m, h, f, paraproduct_weights(h, s, q));
}

Rational block_pairing(const Hypergraph& h, const std::vector<DyadicInterval>& per_axis,
                       const FunctionTuple& f) {
    const GridModel m = tuple_model(f, h);
    if (static_cast<int>(per_axis.size()) != h.n()) {
        throw std::invalid_argument("block_pairing: one interval per vertex required");
    }
    std::vector<std::vector<std::pair<DyadicInterval, WKind>>> w(static_cast<size_t>(h.r));
    const auto off = h.class_offsets();
    for (int i = 0; i < h.r; ++i) {
        for (int j = 0; j < h.class_size(i); ++j) {
            w[static_cast<size_t>(i)].push_back(
                {per_axis[static_cast<size_t>(off[static_cast<size_t>(i)] + j)], WKind::Ind});
        }
    }
    return contract_graph(m, h, f, w);
}

FormEvaluator::FormEvaluator(const Hypergraph& h, const PerfectDyadicKernel& k) : h_(&h), k_(&k) {
    if (!(KernelArrangement::of(h) == k.arrangement())) {
        throw std::invalid_argument("FormEvaluator: kernel arrangement inconsistent with hypergraph");
    }
}

const DiagonalHaarCoefficients& FormEvaluator::coefficients() const {
    if (!coeffs_) coeffs_ = analyze(*k_, *h_);
    return *coeffs_;
}

Rational FormEvaluator::evaluate_naive(const FunctionTuple& f) const {
    const GridModel m = tuple_model(f, *h_);
    if (!(m == k_->model())) throw std::invalid_argument("evaluate: kernel/tuple model mismatch");
    const auto off = h_->class_offsets();
    const long half = m.half_cells_per_axis();
    const size_t per_axis = static_cast<size_t>(m.cells_per_axis());

    // Per edge: function pointer and the kernel axis of each of its vertices.
    std::vector<const StepFunction*> fns;
    std::vector<std::vector<int>> axes;
    for (size_t e = 0; e < h_->edges.size(); ++e) {
        fns.push_back(&f.at(h_->edge_labels[e]));
        std::vector<int> ax(static_cast<size_t>(h_->r));
        for (int i = 0; i < h_->r; ++i) {
            ax[static_cast<size_t>(i)] = off[static_cast<size_t>(i)] + h_->edges[e][static_cast<size_t>(i)];
        }
        axes.push_back(std::move(ax));
    }

    Rational total(0);
    Rational prod;
    for (const auto& [key, kv] : k_->cells()) {
        const auto coords = k_->unflatten(key);
        prod = kv;
        for (size_t e = 0; e < fns.size(); ++e) {
            size_t flat = 0;
            size_t stride = 1;
            for (int i = 0; i < h_->r; ++i) {
                flat += static_cast<size_t>(coords[static_cast<size_t>(axes[e][static_cast<size_t>(i)])] + half) *
                        stride;
                stride *= per_axis;
            }
            prod *= fns[e]->at_flat(flat);
            if (prod == 0) break;
        }
        total += prod;
    }
    return total * k_->cell_volume();
}

Rational FormEvaluator::evaluate_factorized(const FunctionTuple& f) const {
    const GridModel m = tuple_model(f, *h_);
    if (!(m == k_->model())) throw std::invalid_argument("evaluate: kernel/tuple model mismatch");
    const auto& coeffs = coefficients();
    const auto off = h_->class_offsets();
    const ContractionContext ctx(*h_, f, m, /*tables=*/true);

    Rational total(0);
    for (const auto& [mask, field] : coeffs.per_selection) {
        Selection s = Selection::empty(h_->r);
        for (int i = 0; i < h_->r; ++i) {
            for (int j = 0; j < h_->class_size(i); ++j) {
                if ((mask >> (off[static_cast<size_t>(i)] + j)) & 1) {
                    s.per_class[static_cast<size_t>(i)].push_back(j);
                }
            }
        }
        auto w = paraproduct_weights(*h_, s, DyadicCube{m.L, std::vector<long>(static_cast<size_t>(h_->r), 0)});
        for (const auto& [q, lambda] : field) {
            for (int i = 0; i < h_->r; ++i) {
                const DyadicInterval interval = q.interval(i);
                for (auto& entry : w[static_cast<size_t>(i)]) entry.first = interval;
            }
            const Rational term = ctx.eval(w);
            if (term != 0) total += q.volume() * lambda * term;
        }
    }
    if (!coeffs.coarse.empty()) {
        std::vector<std::vector<std::pair<DyadicInterval, WKind>>> w(static_cast<size_t>(h_->r));
        for (int i = 0; i < h_->r; ++i) {
            w[static_cast<size_t>(i)].assign(static_cast<size_t>(h_->class_size(i)),
                                             {DyadicInterval{m.L, 0}, WKind::Ind});
        }
        for (const auto& [top, avg] : coeffs.coarse) {
            for (int i = 0; i < h_->r; ++i) {
                for (int j = 0; j < h_->class_size(i); ++j) {
                    const int axis = off[static_cast<size_t>(i)] + j;
                    w[static_cast<size_t>(i)][static_cast<size_t>(j)].first =
                        DyadicInterval{m.L, ((top >> axis) & 1) ? 0 : -1};
                }
            }
            const Rational pairing = ctx.eval(w);
            if (pairing != 0) total += avg * pairing;
        }
    }
    return total;
}

Rational FormEvaluator::evaluate(const FunctionTuple& f, Engine engine) const {
    return engine == Engine::Naive ? evaluate_naive(f) : evaluate_factorized(f);
}

Rational evaluate_form(const Hypergraph& h, const PerfectDyadicKernel& k, const FunctionTuple& f,
                       Engine engine) {
    return FormEvaluator(h, k).evaluate(f, engine);
}

Rational box_term(const Hypergraph& h, const DyadicCube& q, const FunctionTuple& f) {
    const GridModel m = tuple_model(f, h);
    if (q.k <= m.finest_scale()) throw std::invalid_argument("box_term: cube at finest scale");
    const Selection empty = Selection::empty(h.r);
    Rational child_mean(0);
    for (const auto& c : children_unchecked(q)) child_mean += paraproduct_term(h, empty, c, f);
    child_mean /= pow_rat(Rational(2), h.r);
    return child_mean - paraproduct_term(h, empty, q, f);
}

Rational difference_identity_residual(const Hypergraph& h, const DyadicCube& q, const FunctionTuple& f) {
    Rational rhs(0);
    for (const auto& s : even_selections(h)) rhs += paraproduct_term(h, s, q, f);
    return box_term(h, q, f) - rhs;
}

Rational symmetrized_sum(const StepFunction& f, const std::vector<DyadicInterval>& intervals) {
    const int mdim = static_cast<int>(intervals.size());
    if (f.dims() != mdim) throw std::invalid_argument("symmetrized_sum: dimension mismatch");
    const GridModel& m = f.model();

    std::vector<VarPlan> plans;
    int scalar_log2 = 0;
    for (const auto& I : intervals) {
        plans.push_back(make_var_plan(m, I, WKind::H0));
        scalar_log2 += plans.back().scalar_log2;
    }
    const Rational scalar = pow_rat(Rational(2), scalar_log2);

    // One pass over the block; each even subset re-weighs the cell by its sign pattern.
    Rational total(0);
    std::vector<long> offset(static_cast<size_t>(mdim), 0);
    std::vector<long> coords(static_cast<size_t>(mdim));
    while (true) {
        unsigned long flips = 0;
        for (int j = 0; j < mdim; ++j) {
            coords[static_cast<size_t>(j)] = plans[static_cast<size_t>(j)].first_cell + offset[static_cast<size_t>(j)];
            // H1 would negate this cell exactly when the offset is past the midpoint.
            const long count = plans[static_cast<size_t>(j)].count;
            if (count > 1 && offset[static_cast<size_t>(j)] >= count / 2) flips |= 1UL << j;
        }
        const Rational& v = f.at(coords);
        if (v < 0) throw std::domain_error("symmetrized_sum: negative input");
        if (v != 0) {
            // Sum of sign products over even subsets S (subsets containing an
            // interval too coarse to oscillate contribute via H1 = 0).
            long weight = 0;
            std::vector<int> usable;
            for (int j = 0; j < mdim; ++j) {
                if (plans[static_cast<size_t>(j)].count > 1) usable.push_back(j);
            }
            for (unsigned long sub = 0; sub < (1UL << usable.size()); ++sub) {
                int bits = std::popcount(sub);
                if (bits % 2 != 0) continue;
                unsigned long mask = 0;
                for (size_t t = 0; t < usable.size(); ++t) {
                    if ((sub >> t) & 1) mask |= 1UL << usable[t];
                }
                weight += (std::popcount(mask & flips) % 2 == 0) ? 1 : -1;
            }
            total += v * Rational(weight);
        }
        int j = 0;
        while (j < mdim) {
            if (++offset[static_cast<size_t>(j)] < plans[static_cast<size_t>(j)].count) break;
            offset[static_cast<size_t>(j)] = 0;
            ++j;
        }
        if (j == mdim) break;
    }
    return total * scalar;
}

Rational holder_gap(const Hypergraph& h, const DyadicCube& q, const FunctionTuple& f) {
    const auto t = thresholds(h);
    if (!t.complete_m) throw std::invalid_argument("holder_gap: hypergraph must be one complete component");
    if (!f.nonnegative()) throw std::domain_error("holder_gap: negative input");
    const long mexp = static_cast<long>(t.complete_m->get_si());

    Rational product(1);
    for (const auto& label : h.edge_labels) {
        const auto& fn = f.at(label);
        Rational avg(0);
        for_each_cell_in(fn.model(), q, [&](std::span<const long> coords) {
            avg += pow_rat(fn.at(coords), mexp);
        });
        avg = avg * fn.cell_volume() / pow_rat(Rational(2), q.k * q.dim());
        product *= avg;
    }
    const Rational base = paraproduct_term(h, Selection::empty(h.r), q, f);
    return product - pow_rat(base, mexp);
}

Rational evaluate_entangled_paraproduct(const LocalizedForm& lf, const FunctionTuple& f) {
    if (!lf.h) throw std::invalid_argument("LocalizedForm: missing hypergraph");
    Rational total(0);
    for (const auto& q : lf.tree.members) {
        Rational lambda(1);
        if (lf.lambda) {
            const auto it = lf.lambda->find(q);
            if (it == lf.lambda->end()) continue;
            lambda = it->second;
        }
        const Rational term = paraproduct_term(*lf.h, lf.s, q, f);
        if (term != 0) total += q.volume() * lambda * term;
    }
    return total;
}

StepFunction t_e0(const Hypergraph& h, const PerfectDyadicKernel& k, int e0, const FunctionTuple& f) {
    if (e0 < 0 || e0 >= static_cast<int>(h.edges.size())) throw std::invalid_argument("t_e0: unknown edge");
    const GridModel& m = k.model();
    const auto off = h.class_offsets();
    const long half = m.half_cells_per_axis();
    const size_t per_axis = static_cast<size_t>(m.cells_per_axis());

    std::vector<const StepFunction*> fns;
    std::vector<std::vector<int>> axes;
    for (size_t e = 0; e < h.edges.size(); ++e) {
        if (static_cast<int>(e) == e0) continue;
        const auto& fn = f.at(h.edge_labels[e]);
        if (!(fn.model() == m) || fn.dims() != h.r) throw std::invalid_argument("t_e0: grid mismatch");
        fns.push_back(&fn);
        std::vector<int> ax(static_cast<size_t>(h.r));
        for (int i = 0; i < h.r; ++i) {
            ax[static_cast<size_t>(i)] = off[static_cast<size_t>(i)] + h.edges[e][static_cast<size_t>(i)];
        }
        axes.push_back(std::move(ax));
    }
    std::vector<int> out_axes(static_cast<size_t>(h.r));
    for (int i = 0; i < h.r; ++i) {
        out_axes[static_cast<size_t>(i)] = off[static_cast<size_t>(i)] + h.edges[static_cast<size_t>(e0)][static_cast<size_t>(i)];
    }

    StepFunction out(m, h.r);
    const Rational integrated_vol = pow_rat(Rational(1, 2), static_cast<long>(m.N) * (h.n() - h.r));
    std::vector<long> cell(static_cast<size_t>(h.r));
    Rational prod;
    for (const auto& [key, kv] : k.cells()) {
        const auto coords = k.unflatten(key);
        prod = kv;
        for (size_t e = 0; e < fns.size(); ++e) {
            size_t flat = 0;
            size_t stride = 1;
            for (int i = 0; i < h.r; ++i) {
                flat += static_cast<size_t>(coords[static_cast<size_t>(axes[e][static_cast<size_t>(i)])] + half) *
                        stride;
                stride *= per_axis;
            }
            prod *= fns[e]->at_flat(flat);
            if (prod == 0) break;
        }
        if (prod == 0) continue;
        for (int i = 0; i < h.r; ++i) cell[static_cast<size_t>(i)] = coords[static_cast<size_t>(out_axes[static_cast<size_t>(i)])];
        const size_t flat = out.flat_index(cell);
        out.set_flat(flat, out.at_flat(flat) + prod * integrated_vol);
    }
    return out;
}

ConditionDiagnostics condition_diagnostics(const Hypergraph& h, const PerfectDyadicKernel& k) {
    require_complete_components(h);
    const auto dec = decompose(h);
    if (!dec.isolated.empty()) {
        throw std::invalid_argument("condition_diagnostics: isolated vertices are not supported");
    }
    const GridModel& m = k.model();
    ConditionDiagnostics out;

    // Weak boundedness: sup_Q |Lambda(1_Q,...,1_Q)| / |Q| over model cubes.
    {
        KernelBlockSums sums(k);
        out.wbp = Rational(0);
        for_each_model_cube(m, [&](const DyadicCube& q) {
            const Rational ratio = abs_rat(sums.block_integral(q)) / q.volume();
            if (ratio > out.wbp) {
                out.wbp = ratio;
                out.wbp_witness = q;
            }
        });
    }

    // T(1) oscillation seminorms per edge, in both the L2 and L1 senses.
    {
        FunctionTuple ones;
        for (const auto& label : h.edge_labels) {
            ones.by_label.emplace(label, StepFunction::constant(m, Rational(1), h.r));
        }
        for (int e = 0; e < static_cast<int>(h.edges.size()); ++e) {
            const auto te = t_e0(h, k, e, ones);
            out.t1bmo.push_back(bmo_l2(te));
            out.t1bmo_l1.push_back(bmo_l1(te));
        }
    }

    // L1 localization ratios per edge, one diagonal-bucket pass per scale.
    {
        const auto off = h.class_offsets();
        const Rational integrated_vol = pow_rat(Rational(1, 2), static_cast<long>(m.N) * (h.n() - h.r));
        const Rational cell_vol_r = pow_rat(Rational(1, 2), static_cast<long>(m.N) * h.r);
        for (int e0 = 0; e0 < static_cast<int>(h.edges.size()); ++e0) {
            std::vector<int> out_axes(static_cast<size_t>(h.r));
            for (int i = 0; i < h.r; ++i) {
                out_axes[static_cast<size_t>(i)] =
                    off[static_cast<size_t>(i)] + h.edges[static_cast<size_t>(e0)][static_cast<size_t>(i)];
            }
            Rational best(0);
            std::optional<DyadicCube> witness;
            for (int scale = m.finest_scale(); scale <= m.L; ++scale) {
                std::unordered_map<DyadicCube, std::unordered_map<uint64_t, Rational>, CubeHash> buckets;
                for (const auto& [key, kv] : k.cells()) {
                    const auto coords = k.unflatten(key);
                    std::vector<long> class_pos(static_cast<size_t>(m.r));
                    bool diagonal = true;
                    for (int i = 0; i < m.r && diagonal; ++i) {
                        const long p0 = coords[static_cast<size_t>(off[static_cast<size_t>(i)])] >> (scale + m.N);
                        class_pos[static_cast<size_t>(i)] = p0;
                        for (int a = off[static_cast<size_t>(i)] + 1; a < off[static_cast<size_t>(i) + 1]; ++a) {
                            if ((coords[static_cast<size_t>(a)] >> (scale + m.N)) != p0) {
                                diagonal = false;
                                break;
                            }
                        }
                    }
                    if (!diagonal) continue;
                    uint64_t cellkey = 0;
                    for (int i = 0; i < h.r; ++i) {
                        cellkey = cellkey * static_cast<uint64_t>(m.cells_per_axis()) +
                                  static_cast<uint64_t>(coords[static_cast<size_t>(out_axes[static_cast<size_t>(i)])] +
                                                        m.half_cells_per_axis());
                    }
                    buckets[DyadicCube{scale, class_pos}][cellkey] += kv;
                }
                for (const auto& [q, cells] : buckets) {
                    Rational l1(0);
                    for (const auto& [cellkey, sum] : cells) l1 += abs_rat(sum);
                    l1 *= integrated_vol * cell_vol_r;
                    const Rational ratio = l1 / q.volume();
                    if (ratio > best) {
                        best = ratio;
                        witness = q;
                    }
                }
            }
            out.l1ratio.push_back(best);
            out.l1_witness.push_back(witness);
        }
    }
    return out;
}

Root tree_constant(const LocalizedForm& lf, const FunctionTuple& f) {
    if (!lf.h) throw std::invalid_argument("LocalizedForm: missing hypergraph");
    if (!f.nonnegative()) throw std::domain_error("tree_constant: negative input");
    if (lf.s.is_empty()) throw std::invalid_argument("tree_constant: empty selection");
    const auto t = thresholds(*lf.h);

    const Rational numerator = abs_rat(evaluate_entangled_paraproduct(lf, f));

    Root denominator(lf.tree.root.volume());
    for (size_t e = 0; e < lf.h->edges.size(); ++e) {
        const auto& fn = f.at(lf.h->edge_labels[e]);
        const unsigned long d = t.per_edge[e].get_ui();
        std::optional<Root> best;
        const auto consider = [&](const DyadicCube& q) {
            Root v = power_average(fn, q, d);
            if (!best || best->compare(v) == std::strong_ordering::less) best = std::move(v);
        };
        for (const auto& q : lf.tree.members) consider(q);
        for (const auto& q : lf.tree.leaves) consider(q);
        if (!best || best->is_zero()) return Root(Rational(0));
        denominator = denominator * *best;
    }
    return Root(numerator) / denominator;
}

}  // namespace entform
