#include "entform/stepfn.hpp"

#include <stdexcept>

namespace entform {

namespace {

size_t checked_total(const GridModel& m, int dims) {
    if (!m.valid() || dims < 1) throw std::invalid_argument("StepFunction: invalid model");
    if (static_cast<long>(dims) * (m.L + m.N + 1) > 62) {
        throw std::invalid_argument("StepFunction: grid too large to index");
    }
    size_t total = 1;
    for (int a = 0; a < dims; ++a) total *= static_cast<size_t>(m.cells_per_axis());
    return total;
}

}  // namespace

StepFunction::StepFunction(GridModel model, int dims)
    : model_(model), dims_(dims), cells_(checked_total(model, dims), Rational(0)) {}

StepFunction StepFunction::constant(const GridModel& model, const Rational& value, int dims) {
    StepFunction f(model, dims);
    for (auto& c : f.cells_) c = value;
    return f;
}

StepFunction StepFunction::indicator(const GridModel& model, const DyadicCube& q) {
    StepFunction f(model, q.dim());
    for_each_cell_in(model, q, [&f](std::span<const long> coords) { f.set(coords, Rational(1)); });
    return f;
}

size_t StepFunction::flat_index(std::span<const long> coords) const {
    if (static_cast<int>(coords.size()) != dims_) throw std::invalid_argument("flat_index: dims mismatch");
    const long half = model_.half_cells_per_axis();
    const size_t per_axis = static_cast<size_t>(model_.cells_per_axis());
    size_t flat = 0;
    size_t stride = 1;
    for (int a = 0; a < dims_; ++a) {
        const long c = coords[static_cast<size_t>(a)];
        if (c < -half || c >= half) throw std::out_of_range("flat_index: cell outside domain");
        flat += static_cast<size_t>(c + half) * stride;
        stride *= per_axis;
    }
    return flat;
}

std::vector<long> StepFunction::coords_of(size_t flat) const {
    const long half = model_.half_cells_per_axis();
    const size_t per_axis = static_cast<size_t>(model_.cells_per_axis());
    std::vector<long> coords(static_cast<size_t>(dims_));
    for (int a = 0; a < dims_; ++a) {
        coords[static_cast<size_t>(a)] = static_cast<long>(flat % per_axis) - half;
        flat /= per_axis;
    }
    return coords;
}

Rational StepFunction::cell_volume() const {
    return pow_rat(Rational(1, 2), static_cast<long>(model_.N) * dims_);
}

bool StepFunction::nonnegative() const {
    for (const auto& c : cells_) {
        if (c < 0) return false;
    }
    return true;
}

bool StepFunction::strictly_positive() const {
    for (const auto& c : cells_) {
        if (c <= 0) return false;
    }
    return true;
}

Rational StepFunction::max_abs() const {
    Rational m(0);
    for (const auto& c : cells_) m = std::max(m, abs_rat(c));
    return m;
}

StepFunction StepFunction::abs() const {
    StepFunction out = *this;
    for (auto& c : out.cells_) c = abs_rat(c);
    return out;
}

StepFunction StepFunction::scaled(const Rational& c) const {
    StepFunction out = *this;
    for (auto& v : out.cells_) v *= c;
    return out;
}

void for_each_cell_in(const GridModel& m, const DyadicCube& q,
                      const std::function<void(std::span<const long>)>& fn) {
    const int dims = q.dim();
    if (q.k < m.finest_scale()) throw std::invalid_argument("for_each_cell_in: cube below finest scale");
    std::vector<long> first(static_cast<size_t>(dims));
    long count = 1;
    for (int a = 0; a < dims; ++a) first[static_cast<size_t>(a)] = q.interval(a).first_cell(m);
    count = q.interval(0).cell_count(m);
    std::vector<long> coords = first;
    while (true) {
        fn(coords);
        int a = 0;
        while (a < dims) {
            if (++coords[static_cast<size_t>(a)] < first[static_cast<size_t>(a)] + count) break;
            coords[static_cast<size_t>(a)] = first[static_cast<size_t>(a)];
            ++a;
        }
        if (a == dims) break;
    }
}

CubeSums::CubeSums(GridModel model, int dims, const std::vector<Rational>& cell_values)
    : model_(model), dims_(dims) {
    const size_t expected = checked_total(model, dims);
    if (cell_values.size() != expected) throw std::invalid_argument("CubeSums: cell vector size mismatch");
    levels_.resize(static_cast<size_t>(model.scale_count()));
    levels_[0] = cell_values;
    // Scale the finest level by cell volume so entries are integrals, not values.
    const Rational vol = pow_rat(Rational(1, 2), static_cast<long>(model.N) * dims);
    for (auto& v : levels_[0]) v *= vol;
    for (int k = model.finest_scale() + 1; k <= model.L; ++k) {
        const size_t level = static_cast<size_t>(k + model.N);
        const size_t child_per_axis = static_cast<size_t>(model.positions_per_axis(k - 1));
        const size_t per_axis = static_cast<size_t>(model.positions_per_axis(k));
        size_t total = 1;
        for (int a = 0; a < dims; ++a) total *= per_axis;
        levels_[level].assign(total, Rational(0));
        // Accumulate children into parents.
        const size_t child_total = levels_[level - 1].size();
        for (size_t flat = 0; flat < child_total; ++flat) {
            size_t rest = flat;
            size_t parent = 0;
            size_t stride = 1;
            for (int a = 0; a < dims; ++a) {
                const size_t c = rest % child_per_axis;
                rest /= child_per_axis;
                parent += (c / 2) * stride;
                stride *= per_axis;
            }
            levels_[level][parent] += levels_[level - 1][flat];
        }
    }
}

Rational CubeSums::sum(const DyadicCube& q) const {
    if (q.dim() != dims_) throw std::invalid_argument("CubeSums::sum: dims mismatch");
    if (q.k == model_.leaf_scale()) {
        // Sum over a leaf-scale cube: the containing cell's value times the volume share.
        const DyadicCube cell = q.parent();
        return sum(cell) * pow_rat(Rational(1, 2), dims_);
    }
    if (!model_.scale_in_model(q.k)) throw std::invalid_argument("CubeSums::sum: scale outside model");
    const size_t level = static_cast<size_t>(q.k + model_.N);
    const size_t per_axis = static_cast<size_t>(model_.positions_per_axis(q.k));
    const long half = static_cast<long>(per_axis) / 2;
    size_t flat = 0;
    size_t stride = 1;
    for (int a = 0; a < dims_; ++a) {
        const long p = q.pos[static_cast<size_t>(a)];
        if (p < -half || p >= half) throw std::out_of_range("CubeSums::sum: cube outside domain");
        flat += static_cast<size_t>(p + half) * stride;
        stride *= per_axis;
    }
    return levels_[level][flat];
}

Rational CubeSums::average(const DyadicCube& q) const {
    return sum(q) / pow_rat(Rational(2), q.k * dims_);
}

Rational cube_sum(const StepFunction& f, const DyadicCube& q) {
    if (q.dim() != f.dims()) throw std::invalid_argument("cube_sum: dims mismatch");
    if (q.k == f.model().leaf_scale()) {
        const DyadicCube cell = q.parent();
        std::vector<long> coords(cell.pos.begin(), cell.pos.end());
        // cell positions at finest scale coincide with signed cell coordinates
        return f.at(coords) * pow_rat(Rational(2), q.k * q.dim());
    }
    Rational total(0);
    for_each_cell_in(f.model(), q, [&](std::span<const long> coords) { total += f.at(coords); });
    return total * f.cell_volume();
}

Rational average(const StepFunction& f, const DyadicCube& q) {
    return cube_sum(f, q) / pow_rat(Rational(2), q.k * q.dim());
}

Root power_average(const StepFunction& f, const DyadicCube& q, unsigned long d) {
    if (d == 0) throw std::invalid_argument("power_average: d must be positive");
    Rational total(0);
    const auto accumulate = [&](std::span<const long> coords) {
        const Rational& v = f.at(coords);
        if (v < 0) throw std::domain_error("power_average: negative value under root");
        total += pow_rat(v, static_cast<long>(d));
    };
    if (q.k == f.model().leaf_scale()) {
        const DyadicCube cell = q.parent();
        std::vector<long> coords(cell.pos.begin(), cell.pos.end());
        accumulate(coords);
        return Root(pow_rat(f.at(coords), static_cast<long>(d)), d);
    }
    for_each_cell_in(f.model(), q, accumulate);
    const Rational avg = total * f.cell_volume() / pow_rat(Rational(2), q.k * q.dim());
    return Root(avg, d);
}

Root bmo_l2(const StepFunction& f) {
    // |Q|^-1 int_Q |f - [f]_Q|^2 = [f^2]_Q - [f]_Q^2, so two moment tables suffice.
    std::vector<Rational> sq(f.cell_count());
    for (size_t i = 0; i < f.cell_count(); ++i) sq[i] = f.at_flat(i) * f.at_flat(i);
    CubeSums m1(f.model(), f.dims(), f.cells());
    CubeSums m2(f.model(), f.dims(), sq);
    Rational best(0);
    for_each_model_cube(f.model(), [&](const DyadicCube& q) {
        const Rational osc = m2.average(q) - m1.average(q) * m1.average(q);
        if (osc > best) best = osc;
    });
    return Root(best, 2);
}

Rational bmo_l1(const StepFunction& f) {
    CubeSums m1(f.model(), f.dims(), f.cells());
    Rational best(0);
    const Rational cell_vol = f.cell_volume();
    for_each_model_cube(f.model(), [&](const DyadicCube& q) {
        const Rational mean = m1.average(q);
        Rational total(0);
        for_each_cell_in(f.model(), q, [&](std::span<const long> coords) {
            total += abs_rat(f.at(coords) - mean);
        });
        const Rational osc = total * cell_vol / pow_rat(Rational(2), q.k * q.dim());
        if (osc > best) best = osc;
    });
    return best;
}

Weight::Weight(StepFunction f) : fn_(std::move(f)) {
    if (!fn_.strictly_positive()) throw std::invalid_argument("Weight: values must be strictly positive");
}

NormResult lp_norm(const StepFunction& f, const PExp& p, const Weight* w, const Rational& width) {
    NormResult out;
    if (w && !(w->fn().model() == f.model() && w->fn().dims() == f.dims())) {
        throw std::invalid_argument("lp_norm: weight grid mismatch");
    }
    if (p.infinite) {
        Rational m(0);
        for (size_t i = 0; i < f.cell_count(); ++i) {
            if (w && w->fn().at_flat(i) <= 0) continue;
            m = std::max(m, abs_rat(f.at_flat(i)));
        }
        out.exact = Root(m);
        out.box = Enclosure(m);
        return out;
    }
    if (p.value < 1) throw std::invalid_argument("lp_norm: p must be >= 1");
    const Rational vol = f.cell_volume();
    if (is_integer(p.value)) {
        const long pi = static_cast<long>(p.value.get_num().get_si());
        Rational total(0);
        for (size_t i = 0; i < f.cell_count(); ++i) {
            Rational term = pow_rat(abs_rat(f.at_flat(i)), pi);
            if (w) term *= w->fn().at_flat(i);
            total += term;
        }
        Root norm = Root(total * vol, static_cast<unsigned long>(pi));
        out.box = enclose_root(norm, width);
        out.exact = std::move(norm);
        return out;
    }
    // Fractional p: per-cell |f|^p are exact roots; the sum needs an enclosure.
    std::vector<Root> terms;
    terms.reserve(f.cell_count());
    for (size_t i = 0; i < f.cell_count(); ++i) {
        if (f.at_flat(i) == 0) continue;
        Root t = Root::pow(abs_rat(f.at_flat(i)), p.value);
        Rational scale = vol;
        if (w) scale *= w->fn().at_flat(i);
        terms.push_back(scale * t);
    }
    const Enclosure inner = sum_enclosure(terms, width / 2);
    out.box = pow_nonneg(inner, Rational(1) / p.value, width / 2);
    return out;
}

MaximalField weighted_maximal(const StepFunction& f, unsigned long d, const Weight& w) {
    if (d == 0) throw std::invalid_argument("weighted_maximal: d must be positive");
    if (!(w.fn().model() == f.model() && w.fn().dims() == f.dims())) {
        throw std::invalid_argument("weighted_maximal: weight grid mismatch");
    }
    const GridModel& m = f.model();
    const int dims = f.dims();
    std::vector<Rational> fdw(f.cell_count());
    for (size_t i = 0; i < f.cell_count(); ++i) {
        fdw[i] = pow_rat(abs_rat(f.at_flat(i)), static_cast<long>(d)) * w.fn().at_flat(i);
    }
    CubeSums num(m, dims, fdw);
    CubeSums den(m, dims, w.fn().cells());

    MaximalField out{m, dims, {}};
    out.cells.reserve(f.cell_count());
    for (size_t i = 0; i < f.cell_count(); ++i) {
        const auto coords = f.coords_of(i);
        Rational best(-1);
        DyadicCube q{m.finest_scale(), coords};
        for (int k = m.finest_scale(); k <= m.L; ++k) {
            // volumes cancel in the ratio of averages
            const Rational ratio = num.sum(q) / den.sum(q);
            if (best < 0 || ratio > best) best = ratio;
            q = q.parent();
        }
        out.cells.push_back(Root(best, d));
    }
    return out;
}

}  // namespace entform
