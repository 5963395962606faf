#include "entform/kernel.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace entform {

KernelArrangement KernelArrangement::of(const Hypergraph& h) {
    KernelArrangement arr;
    for (int i = 0; i < h.r; ++i) arr.class_sizes.push_back(h.class_size(i));
    return arr;
}

int KernelArrangement::n() const {
    int total = 0;
    for (int s : class_sizes) total += s;
    return total;
}

std::vector<int> KernelArrangement::offsets() const {
    std::vector<int> off(class_sizes.size() + 1, 0);
    for (size_t i = 0; i < class_sizes.size(); ++i) off[i + 1] = off[i] + class_sizes[i];
    return off;
}

int KernelArrangement::class_of_axis(int axis) const {
    int i = 0;
    for (int s : class_sizes) {
        if (axis < s) return i;
        axis -= s;
        ++i;
    }
    throw std::out_of_range("class_of_axis");
}

PerfectDyadicKernel::PerfectDyadicKernel(GridModel model, KernelArrangement arr)
    : model_(model), arr_(std::move(arr)) {
    if (!model_.valid() || model_.r != arr_.r()) {
        throw std::invalid_argument("PerfectDyadicKernel: model/arrangement mismatch");
    }
    if (static_cast<long>(arr_.n()) * (model_.L + model_.N + 1) > 62) {
        throw std::invalid_argument("PerfectDyadicKernel: grid too large to index");
    }
}

Rational PerfectDyadicKernel::cell_volume() const {
    return pow_rat(Rational(1, 2), static_cast<long>(model_.N) * arr_.n());
}

uint64_t PerfectDyadicKernel::flatten(std::span<const long> coords) const {
    const long half = model_.half_cells_per_axis();
    const uint64_t per_axis = static_cast<uint64_t>(model_.cells_per_axis());
    uint64_t flat = 0;
    uint64_t stride = 1;
    for (int a = 0; a < arr_.n(); ++a) {
        const long c = coords[static_cast<size_t>(a)];
        if (c < -half || c >= half) throw std::out_of_range("kernel flatten: cell outside domain");
        flat += static_cast<uint64_t>(c + half) * stride;
        stride *= per_axis;
    }
    return flat;
}

std::vector<long> PerfectDyadicKernel::unflatten(uint64_t flat) const {
    const long half = model_.half_cells_per_axis();
    const uint64_t per_axis = static_cast<uint64_t>(model_.cells_per_axis());
    std::vector<long> coords(static_cast<size_t>(arr_.n()));
    for (int a = 0; a < arr_.n(); ++a) {
        coords[static_cast<size_t>(a)] = static_cast<long>(flat % per_axis) - half;
        flat /= per_axis;
    }
    return coords;
}

void PerfectDyadicKernel::add_cell(std::span<const long> coords, const Rational& v) {
    if (v == 0) return;
    const uint64_t key = flatten(coords);
    auto [it, inserted] = cells_.try_emplace(key, v);
    if (!inserted) {
        it->second += v;
        if (it->second == 0) cells_.erase(it);
    }
}

Rational PerfectDyadicKernel::value_at(std::span<const long> coords) const {
    const auto it = cells_.find(flatten(coords));
    return it == cells_.end() ? Rational(0) : it->second;
}

PerfectDyadicKernel PerfectDyadicKernel::scaled(const Rational& c) const {
    PerfectDyadicKernel out(model_, arr_);
    if (c == 0) return out;
    out.cells_ = cells_;
    for (auto& [key, v] : out.cells_) v *= c;
    return out;
}

PerfectDyadicKernel operator+(const PerfectDyadicKernel& a, const PerfectDyadicKernel& b) {
    if (!(a.model_ == b.model_) || !(a.arr_ == b.arr_)) {
        throw std::invalid_argument("kernel sum: grid mismatch");
    }
    PerfectDyadicKernel out = a;
    for (const auto& [key, v] : b.cells_) {
        auto [it, inserted] = out.cells_.try_emplace(key, v);
        if (!inserted) {
            it->second += v;
            if (it->second == 0) out.cells_.erase(it);
        }
    }
    return out;
}

bool PerfectDyadicKernel::same_cells(const PerfectDyadicKernel& other) const {
    return model_ == other.model_ && arr_ == other.arr_ && cells_ == other.cells_;
}

uint64_t DiagonalHaarCoefficients::selection_mask(const Hypergraph& h, const Selection& s) const {
    const auto off = h.class_offsets();
    uint64_t mask = 0;
    for (int i = 0; i < h.r; ++i) {
        for (int j : s.per_class[static_cast<size_t>(i)]) {
            mask |= 1ULL << (off[static_cast<size_t>(i)] + j);
        }
    }
    return mask;
}

void DiagonalHaarCoefficients::add(uint64_t sel_mask, const DyadicCube& q, const Rational& lambda) {
    if (lambda == 0) return;
    per_selection[sel_mask][q] = lambda;
}

namespace {

struct SupportItem {
    std::vector<long> coords;
    Rational value;
};

bool classwise_equal(const KernelArrangement& arr, const std::vector<long>& vals) {
    const auto off = arr.offsets();
    for (int i = 0; i < arr.r(); ++i) {
        for (int a = off[static_cast<size_t>(i)] + 1; a < off[static_cast<size_t>(i) + 1]; ++a) {
            if (vals[static_cast<size_t>(a)] != vals[static_cast<size_t>(off[static_cast<size_t>(i)])]) {
                return false;
            }
        }
    }
    return true;
}

// Position of the scale-k interval containing signed cell coordinate c.
long interval_pos(long c, int k, int n_scale) { return c >> (k + n_scale); }

struct ConstancyScan {
    const PerfectDyadicKernel& k;
    PerfectDyadicReport rep;

    void visit(int scale, const std::vector<long>& pos, std::vector<SupportItem>& items) {
        ++rep.cubes_checked;
        if (items.empty()) return;  // constant zero below here
        const GridModel& m = k.model();
        std::vector<long> axis_pos = pos;
        if (!classwise_equal(k.arrangement(), axis_pos)) {
            // Off-diagonal: every finest cell inside must carry one value.
            unsigned long cell_count = 1;
            for (int a = 0; a < k.n(); ++a) cell_count <<= (scale + m.N);
            Rational lo = items.front().value;
            Rational hi = lo;
            for (const auto& item : items) {
                lo = std::min(lo, item.value);
                hi = std::max(hi, item.value);
            }
            if (items.size() < cell_count) {
                lo = std::min(lo, Rational(0));
                hi = std::max(hi, Rational(0));
            }
            const Rational violation = hi - lo;
            if (violation > rep.max_violation) {
                rep.max_violation = violation;
                rep.witness = DyadicCube{scale, pos};
            }
            return;  // descendants cannot widen the spread
        }
        if (scale == m.finest_scale()) return;
        // Diagonal cube: split the support among the 2^n children.
        std::unordered_map<uint64_t, std::vector<SupportItem>> by_child;
        for (auto& item : items) {
            uint64_t child = 0;
            for (int a = 0; a < k.n(); ++a) {
                const long bit = interval_pos(item.coords[static_cast<size_t>(a)], scale - 1, m.N) -
                                 2 * interval_pos(item.coords[static_cast<size_t>(a)], scale, m.N);
                child |= static_cast<uint64_t>(bit) << a;
            }
            by_child[child].push_back(std::move(item));
        }
        for (auto& [child, child_items] : by_child) {
            std::vector<long> child_pos(pos.size());
            for (int a = 0; a < k.n(); ++a) {
                child_pos[static_cast<size_t>(a)] = 2 * pos[static_cast<size_t>(a)] +
                                                    static_cast<long>((child >> a) & 1);
            }
            visit(scale - 1, child_pos, child_items);
        }
    }
};

}  // namespace

PerfectDyadicReport validate_perfect_dyadic(const PerfectDyadicKernel& k) {
    const GridModel& m = k.model();
    std::unordered_map<uint64_t, std::vector<SupportItem>> by_top;
    for (const auto& [key, value] : k.cells()) {
        auto coords = k.unflatten(key);
        uint64_t top = 0;
        for (int a = 0; a < k.n(); ++a) {
            if (coords[static_cast<size_t>(a)] >= 0) top |= 1ULL << a;
        }
        by_top[top].push_back({std::move(coords), value});
    }
    ConstancyScan scan{k, {}};
    for (auto& [top, items] : by_top) {
        std::vector<long> pos(static_cast<size_t>(k.n()));
        for (int a = 0; a < k.n(); ++a) pos[static_cast<size_t>(a)] = ((top >> a) & 1) ? 0 : -1;
        scan.visit(m.L, pos, items);
    }
    scan.rep.valid = scan.rep.max_violation == 0;
    return scan.rep;
}

SizeConstantReport size_constant_report(const PerfectDyadicKernel& k) {
    SizeConstantReport rep;
    const int n = k.n();
    const int r = k.arrangement().r();
    if (n <= r) {
        rep.vacuous = true;
        return rep;
    }
    const auto off = k.arrangement().offsets();
    const long power = n - r;
    const Rational cell = pow_rat(Rational(1, 2), k.model().N);
    for (const auto& [key, value] : k.cells()) {
        const auto coords = k.unflatten(key);
        if (classwise_equal(k.arrangement(), coords)) continue;  // cell meets the diagonal
        // Distance sums decouple across classes; scan each class's corner patterns.
        long dmax_units = 0;
        long dmin_units = 0;
        for (int i = 0; i < r; ++i) {
            const int lo = off[static_cast<size_t>(i)];
            const int hi = off[static_cast<size_t>(i) + 1];
            const int w = hi - lo;
            long best_max = 0;
            long best_min = 0;
            bool first = true;
            for (unsigned long bits = 0; bits < (1UL << w); ++bits) {
                long sum = 0;
                for (int a1 = 0; a1 < w; ++a1) {
                    for (int a2 = a1 + 1; a2 < w; ++a2) {
                        const long x1 = coords[static_cast<size_t>(lo + a1)] + static_cast<long>((bits >> a1) & 1);
                        const long x2 = coords[static_cast<size_t>(lo + a2)] + static_cast<long>((bits >> a2) & 1);
                        sum += std::abs(x1 - x2);
                    }
                }
                if (first || sum > best_max) best_max = sum;
                if (first || sum < best_min) best_min = sum;
                first = false;
            }
            dmax_units += best_max;
            dmin_units += best_min;
        }
        const Rational amount = abs_rat(value);
        const Rational cand = amount * pow_rat(Rational(dmax_units) * cell, power);
        if (cand > rep.constant) {
            rep.constant = cand;
            rep.witness_cell = coords;
        }
        if (dmin_units > 0) {
            const Rational low = amount * pow_rat(Rational(dmin_units) * cell, power);
            rep.corner_lower = std::max(rep.corner_lower, low);
        }
    }
    return rep;
}

Root size_constant(const PerfectDyadicKernel& k) { return Root(size_constant_report(k).constant); }

DiagonalHaarCoefficients analyze(const PerfectDyadicKernel& k, const Hypergraph& h) {
    if (!(KernelArrangement::of(h) == k.arrangement())) {
        throw std::invalid_argument("analyze: arrangement inconsistent with hypergraph classes");
    }
    const GridModel& m = k.model();
    const int n = k.n();
    const auto off = k.arrangement().offsets();
    DiagonalHaarCoefficients out{m, k.arrangement(), {}, {}};
    const Rational cell_vol = k.cell_volume();

    // Decode the support once.
    std::vector<SupportItem> support;
    support.reserve(k.cells().size());
    for (const auto& [key, value] : k.cells()) support.push_back({k.unflatten(key), value});

    // Coarse part: averages over all n-dimensional top blocks.
    {
        std::map<uint64_t, Rational> sums;
        for (const auto& item : support) {
            uint64_t top = 0;
            for (int a = 0; a < n; ++a) {
                if (item.coords[static_cast<size_t>(a)] >= 0) top |= 1ULL << a;
            }
            sums[top] += item.value;
        }
        const Rational block_vol = pow_rat(Rational(2), static_cast<long>(m.L) * n);
        for (auto& [top, sum] : sums) {
            const Rational avg = sum * cell_vol / block_vol;
            if (avg != 0) out.coarse[top] = avg;
        }
    }

    // Cancellative coefficients scale by scale. At the finest model scale the
    // Haar oscillation sits inside one cell, so those pairings vanish.
    for (int scale = m.finest_scale() + 1; scale <= m.L; ++scale) {
        std::unordered_map<DyadicCube, std::unordered_map<uint64_t, Rational>, CubeHash> buckets;
        for (const auto& item : support) {
            std::vector<long> class_pos(static_cast<size_t>(m.r));
            bool diagonal = true;
            for (int i = 0; i < m.r && diagonal; ++i) {
                const long p0 = interval_pos(item.coords[static_cast<size_t>(off[static_cast<size_t>(i)])],
                                             scale, m.N);
                class_pos[static_cast<size_t>(i)] = p0;
                for (int a = off[static_cast<size_t>(i)] + 1; a < off[static_cast<size_t>(i) + 1]; ++a) {
                    if (interval_pos(item.coords[static_cast<size_t>(a)], scale, m.N) != p0) {
                        diagonal = false;
                        break;
                    }
                }
            }
            if (!diagonal) continue;
            uint64_t orthant = 0;
            for (int a = 0; a < n; ++a) {
                const long bit = interval_pos(item.coords[static_cast<size_t>(a)], scale - 1, m.N) & 1;
                orthant |= static_cast<uint64_t>(bit) << a;
            }
            buckets[DyadicCube{scale, class_pos}][orthant] += item.value;
        }
        const Rational inv_qr = pow_rat(Rational(1, 2), static_cast<long>(scale) * m.r);
        for (const auto& [q, orthants] : buckets) {
            for (uint64_t sel = 1; sel < (1ULL << n); ++sel) {
                Rational coeff(0);
                for (const auto& [orthant, sum] : orthants) {
                    if (std::popcount(sel & orthant) % 2 == 0) {
                        coeff += sum;
                    } else {
                        coeff -= sum;
                    }
                }
                if (coeff != 0) out.add(sel, q, coeff * cell_vol * inv_qr);
            }
        }
    }
    return out;
}

namespace {

// Iterate the finest cells of the n-dim block spanned by axis intervals at one scale.
void for_each_block_cell(const GridModel& m, int n, std::span<const long> axis_pos, int scale,
                         const std::function<void(std::span<const long>)>& fn) {
    std::vector<long> first(static_cast<size_t>(n));
    const long count = 1L << (scale + m.N);
    for (int a = 0; a < n; ++a) first[static_cast<size_t>(a)] = axis_pos[static_cast<size_t>(a)] << (scale + m.N);
    std::vector<long> coords = first;
    while (true) {
        fn(coords);
        int a = 0;
        while (a < n) {
            if (++coords[static_cast<size_t>(a)] < first[static_cast<size_t>(a)] + count) break;
            coords[static_cast<size_t>(a)] = first[static_cast<size_t>(a)];
            ++a;
        }
        if (a == n) break;
    }
}

}  // namespace

PerfectDyadicKernel synthesize(const DiagonalHaarCoefficients& c) {
    PerfectDyadicKernel out(c.model, c.arr);
    const GridModel& m = c.model;
    const int n = c.arr.n();
    const int r = c.arr.r();
    const auto off = c.arr.offsets();
    for (const auto& [sel, field] : c.per_selection) {
        for (const auto& [q, lambda] : field) {
            if (q.k <= m.finest_scale() || q.k > m.L) {
                throw std::invalid_argument("synthesize: coefficient scale outside representable range");
            }
            // |Q_r| lambda * prod h = lambda * sign * side^(r-n) on each cell of the block
            const Rational magnitude = lambda * pow_rat(Rational(2), static_cast<long>(q.k) * (r - n));
            std::vector<long> axis_pos(static_cast<size_t>(n));
            for (int a = 0; a < n; ++a) {
                axis_pos[static_cast<size_t>(a)] = q.pos[static_cast<size_t>(c.arr.class_of_axis(a))];
            }
            for_each_block_cell(m, n, axis_pos, q.k, [&](std::span<const long> coords) {
                int parity = 0;
                for (int a = 0; a < n; ++a) {
                    if (((sel >> a) & 1) == 0) continue;
                    parity ^= static_cast<int>(interval_pos(coords[static_cast<size_t>(a)], q.k - 1, m.N) & 1);
                }
                out.add_cell(coords, parity ? Rational(-magnitude) : magnitude);
            });
        }
    }
    for (const auto& [top, avg] : c.coarse) {
        std::vector<long> axis_pos(static_cast<size_t>(n));
        for (int a = 0; a < n; ++a) axis_pos[static_cast<size_t>(a)] = ((top >> a) & 1) ? 0 : -1;
        for_each_block_cell(m, n, axis_pos, m.L, [&](std::span<const long> coords) { out.add_cell(coords, avg); });
    }
    return out;
}

ParaproductClass classify(const Hypergraph& h, const Selection& s) {
    if (s.is_empty()) throw std::invalid_argument("classify: empty selection");
    if (s.max_class_count() >= 2) return ParaproductClass::C1;
    const auto dec = decompose(h);
    // Distinct components among the selected vertices; isolated vertices count alone.
    std::vector<int> comps;
    int isolated_tag = -2;
    for (const auto& v : s.vertices()) {
        const int c = dec.component_of(v);
        comps.push_back(c >= 0 ? c : isolated_tag--);
    }
    std::sort(comps.begin(), comps.end());
    comps.erase(std::unique(comps.begin(), comps.end()), comps.end());
    return comps.size() >= 2 ? ParaproductClass::C2 : ParaproductClass::NC;
}

Rational coeff_linf(const DiagonalHaarCoefficients& c, const Hypergraph& h, const Selection& s) {
    const auto it = c.per_selection.find(c.selection_mask(h, s));
    Rational best(0);
    if (it == c.per_selection.end()) return best;
    for (const auto& [q, lambda] : it->second) best = std::max(best, abs_rat(lambda));
    return best;
}

Root coeff_bmo(const DiagonalHaarCoefficients& c, const Hypergraph& h, const Selection& s) {
    const auto it = c.per_selection.find(c.selection_mask(h, s));
    if (it == c.per_selection.end()) return Root(Rational(0));
    const GridModel& m = c.model;
    // Bottom-up Carleson sums over the full r-dimensional cube tree.
    std::unordered_map<DyadicCube, Rational, CubeHash> below;
    Rational best(0);
    for (int k = m.finest_scale(); k <= m.L; ++k) {
        const long half = 1L << (m.L - k);
        DyadicCube q{k, std::vector<long>(static_cast<size_t>(m.r), -half)};
        while (true) {
            Rational total(0);
            if (k > m.finest_scale()) {
                for (const auto& child : children_unchecked(q)) {
                    const auto cit = below.find(child);
                    if (cit != below.end()) total += cit->second;
                }
            }
            const auto lit = it->second.find(q);
            if (lit != it->second.end()) total += q.volume() * lit->second * lit->second;
            if (total != 0) {
                below[q] = total;
                const Rational ratio = total / q.volume();
                if (ratio > best) best = ratio;
            }
            int a = 0;
            while (a < m.r) {
                if (++q.pos[static_cast<size_t>(a)] < half) break;
                q.pos[static_cast<size_t>(a)] = -half;
                ++a;
            }
            if (a == m.r) break;
        }
    }
    return Root(best, 2);
}

PerfectDyadicKernel twisted_kernel(const GridModel& model, const Hypergraph& h) {
    const auto rep = validate(h);
    if (!rep.admissible) throw std::invalid_argument("twisted_kernel: hypergraph not admissible");
    for (int i = 0; i < h.r; ++i) {
        if (h.class_size(i) != 2) throw std::invalid_argument("twisted_kernel: every class must have size 2");
    }
    const auto dec = decompose(h);
    if (dec.components.size() != 1) throw std::invalid_argument("twisted_kernel: hypergraph must be complete");
    if (model.r != h.r) throw std::invalid_argument("twisted_kernel: model dimension mismatch");

    PerfectDyadicKernel out(model, KernelArrangement::of(h));
    const int n = out.n();
    for (int scale = model.finest_scale() + 1; scale <= model.L; ++scale) {
        const long half = 1L << (model.L - scale);
        const Rational magnitude = pow_rat(Rational(1, 2), static_cast<long>(scale) * model.r);
        DyadicCube q{scale, std::vector<long>(static_cast<size_t>(model.r), -half)};
        while (true) {
            std::vector<long> axis_pos(static_cast<size_t>(n));
            for (int a = 0; a < n; ++a) {
                axis_pos[static_cast<size_t>(a)] =
                    q.pos[static_cast<size_t>(out.arrangement().class_of_axis(a))];
            }
            for_each_block_cell(model, n, axis_pos, scale, [&](std::span<const long> coords) {
                const int s0 = static_cast<int>(interval_pos(coords[0], scale - 1, model.N) & 1);
                const int s1 = static_cast<int>(interval_pos(coords[1], scale - 1, model.N) & 1);
                out.add_cell(coords, (s0 ^ s1) ? Rational(-magnitude) : magnitude);
            });
            int a = 0;
            while (a < model.r) {
                if (++q.pos[static_cast<size_t>(a)] < half) break;
                q.pos[static_cast<size_t>(a)] = -half;
                ++a;
            }
            if (a == model.r) break;
        }
    }
    return out;
}

KernelBlockSums::KernelBlockSums(const PerfectDyadicKernel& k) : zero_(0) {
    const GridModel& m = k.model();
    const auto off = k.arrangement().offsets();
    const Rational cell_vol = k.cell_volume();
    for (const auto& [key, value] : k.cells()) {
        const auto coords = k.unflatten(key);
        for (int scale = m.finest_scale(); scale <= m.L; ++scale) {
            std::vector<long> class_pos(static_cast<size_t>(m.r));
            bool diagonal = true;
            for (int i = 0; i < m.r && diagonal; ++i) {
                const long p0 = interval_pos(coords[static_cast<size_t>(off[static_cast<size_t>(i)])], scale, m.N);
                class_pos[static_cast<size_t>(i)] = p0;
                for (int a = off[static_cast<size_t>(i)] + 1; a < off[static_cast<size_t>(i) + 1]; ++a) {
                    if (interval_pos(coords[static_cast<size_t>(a)], scale, m.N) != p0) {
                        diagonal = false;
                        break;
                    }
                }
            }
            if (!diagonal) continue;
            sums_[DyadicCube{scale, class_pos}] += value * cell_vol;
        }
    }
}

Rational KernelBlockSums::block_integral(const DyadicCube& q) const {
    const auto it = sums_.find(q);
    return it == sums_.end() ? zero_ : it->second;
}

}  // namespace entform
