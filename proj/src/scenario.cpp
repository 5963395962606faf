#include "entform/scenario.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

namespace entform {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("scenario: " + path + ": " + what);
}

const json& need(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(path + "." + key, "missing field");
    return j.at(key);
}

long need_int(const json& j, const std::string& key, const std::string& path) {
    const auto& v = need(j, key, path);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long>();
}

Rational need_rational(const json& v, const std::string& path) {
    if (v.is_number_integer()) return Rational(v.get<long>());
    if (v.is_string()) {
        const auto q = parse_rational(v.get<std::string>());
        if (!q) fail(path, "not a rational: " + v.get<std::string>());
        return *q;
    }
    fail(path, "expected a rational as string or integer");
}

std::vector<long> need_cell(const json& v, int dims, const std::string& path) {
    if (!v.is_array() || static_cast<int>(v.size()) != dims) {
        fail(path, "expected an array of " + std::to_string(dims) + " cell coordinates");
    }
    std::vector<long> out;
    for (const auto& c : v) {
        if (!c.is_number_integer()) fail(path, "cell coordinates must be integers");
        out.push_back(c.get<long>());
    }
    return out;
}

StepFunction parse_function(const json& j, const GridModel& m, int dims, const std::string& path) {
    const auto& kind = need(j, "kind", path);
    if (kind == "constant") {
        return StepFunction::constant(m, need_rational(need(j, "value", path), path + ".value"), dims);
    }
    if (kind == "dense") {
        const auto& values = need(j, "values", path);
        StepFunction f(m, dims);
        if (!values.is_array() || values.size() != f.cell_count()) {
            fail(path + ".values", "expected " + std::to_string(f.cell_count()) + " cell values");
        }
        for (size_t i = 0; i < f.cell_count(); ++i) {
            f.set_flat(i, need_rational(values.at(i), path + ".values[" + std::to_string(i) + "]"));
        }
        return f;
    }
    if (kind == "cells") {
        const auto& entries = need(j, "entries", path);
        StepFunction f(m, dims);
        for (size_t i = 0; i < entries.size(); ++i) {
            const std::string epath = path + ".entries[" + std::to_string(i) + "]";
            const auto cell = need_cell(need(entries.at(i), "cell", epath), dims, epath + ".cell");
            f.set(cell, need_rational(need(entries.at(i), "value", epath), epath + ".value"));
        }
        return f;
    }
    fail(path + ".kind", "unknown function kind");
}

}  // namespace

std::string cube_to_string(const DyadicCube& q) {
    std::string s = std::to_string(q.k) + ":(";
    for (size_t a = 0; a < q.pos.size(); ++a) {
        if (a) s += ",";
        s += std::to_string(q.pos[a]);
    }
    return s + ")";
}

std::optional<DyadicCube> cube_from_string(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) return std::nullopt;
    DyadicCube q;
    try {
        q.k = std::stoi(s.substr(0, colon));
        std::string rest = s.substr(colon + 1);
        if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') return std::nullopt;
        rest = rest.substr(1, rest.size() - 2);
        size_t start = 0;
        while (start <= rest.size()) {
            const auto comma = rest.find(',', start);
            const std::string tok = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (tok.empty()) return std::nullopt;
            q.pos.push_back(std::stol(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return q;
}

Scenario parse_scenario(const nlohmann::json& j) {
    Scenario sc;
    if (need(j, "schema_version", "$") != 1) fail("$.schema_version", "unsupported version");

    const auto& jm = need(j, "model", "$");
    sc.model = GridModel{static_cast<int>(need_int(jm, "r", "$.model")),
                         static_cast<int>(need_int(jm, "L", "$.model")),
                         static_cast<int>(need_int(jm, "N", "$.model"))};
    if (!sc.model.valid()) fail("$.model", "invalid grid model");

    // hypergraph
    const auto& jh = need(j, "hypergraph", "$");
    Hypergraph h;
    const auto& classes = need(jh, "classes", "$.hypergraph");
    if (!classes.is_array() || classes.empty()) fail("$.hypergraph.classes", "expected nonempty array");
    h.r = static_cast<int>(classes.size());
    if (h.r != sc.model.r) fail("$.hypergraph", "class count differs from model r");
    for (const auto& cls : classes) {
        std::vector<std::string> ids;
        for (const auto& id : cls) ids.push_back(id.get<std::string>());
        h.classes.push_back(ids);
        h.label_groups.push_back(std::move(ids));
    }
    if (jh.contains("label_groups")) {
        const auto& groups = jh.at("label_groups");
        if (!groups.is_array() || groups.size() != classes.size()) {
            fail("$.hypergraph.label_groups", "shape mismatch with classes");
        }
        for (size_t i = 0; i < groups.size(); ++i) {
            if (groups.at(i).size() != h.classes[i].size()) {
                fail("$.hypergraph.label_groups", "shape mismatch with classes");
            }
            for (size_t v = 0; v < groups.at(i).size(); ++v) {
                h.label_groups[i][v] = groups.at(i).at(v).get<std::string>();
            }
        }
    }
    const auto& edges = need(jh, "edges", "$.hypergraph");
    for (size_t e = 0; e < edges.size(); ++e) {
        const std::string epath = "$.hypergraph.edges[" + std::to_string(e) + "]";
        const auto& je = edges.at(e);
        const auto& verts = need(je, "vertices", epath);
        if (static_cast<int>(verts.size()) != h.r) fail(epath, "expected one vertex per class");
        std::vector<int> edge(static_cast<size_t>(h.r));
        for (int i = 0; i < h.r; ++i) {
            const auto v = h.find_vertex(verts.at(static_cast<size_t>(i)).get<std::string>());
            if (!v || v->cls != i) fail(epath, "unknown vertex in class " + std::to_string(i));
            edge[static_cast<size_t>(i)] = v->idx;
        }
        h.edges.push_back(edge);
        if (je.contains("label")) {
            h.edge_labels.push_back(je.at("label").get<std::string>());
        } else {
            h.edge_labels.push_back(Hypergraph::default_edge_label(h, edge));
        }
    }
    sc.hypergraph = std::move(h);
    {
        const auto rep = validate(sc.hypergraph);
        if (!rep.structurally_valid) {
            fail("$.hypergraph", "structurally invalid: " + rep.issues.front().detail);
        }
    }

    // kernel
    const auto& jk = need(j, "kernel", "$");
    sc.kernel_kind = need(jk, "type", "$.kernel").get<std::string>();
    const KernelArrangement arr = KernelArrangement::of(sc.hypergraph);
    if (sc.kernel_kind == "zero") {
        sc.kernel = PerfectDyadicKernel(sc.model, arr);
    } else if (sc.kernel_kind == "twisted") {
        sc.kernel = twisted_kernel(sc.model, sc.hypergraph);
    } else if (sc.kernel_kind == "cells") {
        PerfectDyadicKernel k(sc.model, arr);
        const auto& cells = need(jk, "cells", "$.kernel");
        for (size_t i = 0; i < cells.size(); ++i) {
            const std::string cpath = "$.kernel.cells[" + std::to_string(i) + "]";
            const auto cell = need_cell(need(cells.at(i), "cell", cpath), arr.n(), cpath + ".cell");
            k.add_cell(cell, need_rational(need(cells.at(i), "value", cpath), cpath + ".value"));
        }
        sc.kernel = std::move(k);
    } else if (sc.kernel_kind == "coefficients") {
        DiagonalHaarCoefficients c{sc.model, arr, {}, {}};
        if (jk.contains("entries")) {
            const auto& entries = jk.at("entries");
            for (size_t i = 0; i < entries.size(); ++i) {
                const std::string cpath = "$.kernel.entries[" + std::to_string(i) + "]";
                const auto& je = entries.at(i);
                std::vector<std::vector<std::string>> ids;
                for (const auto& cls : need(je, "selection", cpath)) {
                    std::vector<std::string> lst;
                    for (const auto& id : cls) lst.push_back(id.get<std::string>());
                    ids.push_back(std::move(lst));
                }
                Selection s;
                try {
                    s = selection_from_ids(sc.hypergraph, ids);
                } catch (const std::invalid_argument& err) {
                    fail(cpath + ".selection", err.what());
                }
                if (s.is_empty()) fail(cpath + ".selection", "selection must be nonempty");
                const auto q = cube_from_string(need(je, "cube", cpath).get<std::string>());
                if (!q || q->dim() != sc.model.r || !cube_in_model(sc.model, *q)) {
                    fail(cpath + ".cube", "not a model cube");
                }
                if (q->k <= sc.model.finest_scale()) {
                    fail(cpath + ".cube", "cancellative coefficients need scales above the finest");
                }
                c.add(c.selection_mask(sc.hypergraph, s), *q,
                      need_rational(need(je, "value", cpath), cpath + ".value"));
            }
        }
        if (jk.contains("coarse")) {
            const auto& coarse = jk.at("coarse");
            for (size_t i = 0; i < coarse.size(); ++i) {
                const std::string cpath = "$.kernel.coarse[" + std::to_string(i) + "]";
                const auto block = need_cell(need(coarse.at(i), "block", cpath), arr.n(), cpath + ".block");
                uint64_t mask = 0;
                for (int a = 0; a < arr.n(); ++a) {
                    if (block[static_cast<size_t>(a)] == 0) {
                        mask |= 1ULL << a;
                    } else if (block[static_cast<size_t>(a)] != -1) {
                        fail(cpath + ".block", "top-block positions are -1 or 0");
                    }
                }
                c.coarse[mask] = need_rational(need(coarse.at(i), "value", cpath), cpath + ".value");
            }
        }
        sc.kernel = synthesize(c);
    } else {
        fail("$.kernel.type", "unknown kernel type");
    }

    // functions
    const auto& jf = need(j, "functions", "$");
    for (const auto& label : sc.hypergraph.edge_labels) {
        if (sc.functions.by_label.contains(label)) continue;
        if (!jf.contains(label)) fail("$.functions", "missing function for edge label " + label);
        sc.functions.by_label.emplace(
            label, parse_function(jf.at(label), sc.model, sc.model.r, "$.functions." + label));
    }

    // optional weights and exponents
    if (j.contains("weights") && !j.at("weights").is_null()) {
        WeightTuple w;
        for (const auto& label : sc.hypergraph.edge_labels) {
            if (w.by_label.contains(label)) continue;
            if (!j.at("weights").contains(label)) fail("$.weights", "missing weight for label " + label);
            StepFunction fn =
                parse_function(j.at("weights").at(label), sc.model, sc.model.r, "$.weights." + label);
            if (!fn.strictly_positive()) fail("$.weights." + label, "weights must be strictly positive");
            w.by_label.emplace(label, Weight(std::move(fn)));
        }
        sc.weights = std::move(w);
    }
    if (j.contains("exponents") && !j.at("exponents").is_null()) {
        const auto& jp = need(j.at("exponents"), "per_edge", "$.exponents");
        if (jp.size() != sc.hypergraph.edges.size()) fail("$.exponents.per_edge", "one exponent per edge");
        std::vector<PExp> p;
        for (size_t e = 0; e < jp.size(); ++e) {
            const auto& v = jp.at(e);
            if (v.is_string() && v.get<std::string>() == "inf") {
                p.push_back(PExp::inf());
            } else {
                p.push_back(PExp::of(need_rational(v, "$.exponents.per_edge[" + std::to_string(e) + "]")));
            }
        }
        sc.exponents = std::move(p);
    }

    if (j.contains("suites")) {
        for (const auto& s : j.at("suites")) sc.suites.push_back(s.get<std::string>());
    }
    if (j.contains("seed")) sc.seed = j.at("seed").get<uint64_t>();
    if (j.contains("width")) {
        sc.width = need_rational(j.at("width"), "$.width");
        if (!(sc.width > 0)) fail("$.width", "width must be positive");
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("scenario: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("scenario: JSON parse error in " + path + ": " + e.what());
    }
    return parse_scenario(j);
}

namespace {

// Deterministic generation RNG: raw mt19937_64 draws only.
class GenRng {
  public:
    explicit GenRng(uint64_t seed) : eng_(seed) {}
    uint64_t next() { return eng_(); }
    long uniform(long lo, long hi) { return lo + static_cast<long>(next() % static_cast<uint64_t>(hi - lo + 1)); }
    std::string rational(long num_mag, long den_max, bool nonneg) {
        Rational q(uniform(nonneg ? 0 : -num_mag, num_mag), uniform(1, den_max));
        q.canonicalize();
        return fraction_string(q);
    }

  private:
    std::mt19937_64 eng_;
};

json dense_function(GenRng& rng, size_t cells, bool nonneg, long num_mag = 4, long den_max = 3) {
    json values = json::array();
    for (size_t i = 0; i < cells; ++i) values.push_back(rng.rational(num_mag, den_max, nonneg));
    return {{"kind", "dense"}, {"values", values}};
}

}  // namespace

nlohmann::json generate_scenario(const GenerateOptions& opt) {
    GenRng rng(opt.seed);
    GridModel model{opt.r, opt.L, opt.N};
    if (!model.valid()) throw std::invalid_argument("generate: invalid model");
    std::vector<int> sizes = opt.class_sizes;
    if (sizes.empty()) sizes.assign(static_cast<size_t>(opt.r), 2);
    const Hypergraph h = make_complete(sizes);
    const auto t = thresholds(h);

    json j;
    j["schema_version"] = 1;
    j["model"] = {{"r", model.r}, {"L", model.L}, {"N", model.N}};
    json classes = json::array();
    for (const auto& cls : h.classes) classes.push_back(cls);
    json edges = json::array();
    for (size_t e = 0; e < h.edges.size(); ++e) {
        json verts = json::array();
        for (int i = 0; i < h.r; ++i) {
            verts.push_back(h.classes[static_cast<size_t>(i)][static_cast<size_t>(h.edges[e][static_cast<size_t>(i)])]);
        }
        edges.push_back({{"vertices", verts}, {"label", h.edge_labels[e]}});
    }
    j["hypergraph"] = {{"classes", classes}, {"edges", edges}};
    j["seed"] = opt.seed;
    j["suites"] = opt.suites.empty() ? std::vector<std::string>{"validate", "identities"} : opt.suites;

    // kernel
    const bool all_two =
        model.r >= 2 && std::all_of(sizes.begin(), sizes.end(), [](int s) { return s == 2; });
    if (opt.profile == "random-kernel-via-coefficients" ||
        (!all_two && model.L + model.N >= 1)) {
        if (model.L + model.N < 1) throw std::invalid_argument("generate: window too small for coefficients");
        json entries = json::array();
        const int count = 4;
        for (int c = 0; c < count; ++c) {
            // nonempty selection: subsets per class
            json sel = json::array();
            bool empty = true;
            std::vector<json> per_class;
            for (int i = 0; i < h.r; ++i) {
                json cls = json::array();
                for (int v = 0; v < h.class_size(i); ++v) {
                    if (rng.uniform(0, 1)) {
                        cls.push_back(h.classes[static_cast<size_t>(i)][static_cast<size_t>(v)]);
                        empty = false;
                    }
                }
                per_class.push_back(cls);
            }
            if (empty) per_class[0].push_back(h.classes[0][0]);
            for (auto& cls : per_class) sel.push_back(cls);
            const int k = static_cast<int>(rng.uniform(model.finest_scale() + 1, model.top_scale()));
            const long half = 1L << (model.L - k);
            DyadicCube q{k, std::vector<long>(static_cast<size_t>(model.r))};
            for (int a = 0; a < model.r; ++a) q.pos[static_cast<size_t>(a)] = rng.uniform(-half, half - 1);
            std::string value = rng.rational(3, 2, false);
            if (opt.coeff_cap) {
                Rational v = *parse_rational(value);
                if (abs_rat(v) > *opt.coeff_cap) v = v < 0 ? Rational(-*opt.coeff_cap) : *opt.coeff_cap;
                value = fraction_string(v);
            }
            entries.push_back({{"selection", sel}, {"cube", cube_to_string(q)}, {"value", value}});
        }
        j["kernel"] = {{"type", "coefficients"}, {"entries", entries}};
    } else if (all_two && model.L + model.N >= 1) {
        j["kernel"] = {{"type", "twisted"}};
    } else {
        j["kernel"] = {{"type", "zero"}};
    }

    // functions
    json functions;
    size_t cell_count = 1;
    for (int a = 0; a < model.r; ++a) cell_count *= static_cast<size_t>(model.cells_per_axis());
    for (const auto& label : h.edge_labels) {
        if (functions.contains(label)) continue;
        if (opt.profile == "constant") {
            functions[label] = {{"kind", "constant"}, {"value", rng.rational(4, 3, true)}};
        } else if (opt.profile == "spike") {
            json cell = json::array();
            for (int a = 0; a < model.r; ++a) {
                cell.push_back(rng.uniform(-model.half_cells_per_axis(), model.half_cells_per_axis() - 1));
            }
            functions[label] = {{"kind", "cells"},
                                {"entries", json::array({{{"cell", cell}, {"value", rng.rational(3, 2, true) }}})}};
        } else {
            // signed values: every exact identity must survive cancellation;
            // suites needing nonnegativity take absolute values themselves
            functions[label] = dense_function(rng, cell_count, false);
        }
    }
    j["functions"] = functions;

    // exponents from the uniform feasibility witness, weights from powers
    const auto witness = feasible_exponents(t);
    if (witness) {
        json per_edge = json::array();
        std::vector<PExp> p;
        for (const auto& pe : witness->p) {
            per_edge.push_back(fraction_string(pe));
            p.push_back(PExp::of(pe));
        }
        j["exponents"] = {{"per_edge", per_edge}};
        const auto pt = ExponentTuple::of(h, t, p);
        const auto coeffs = condmuck_kick_coeffs(pt);
        std::vector<long> factors(h.edges.size(), 0);
        for (int kick = 0; kick < 2 * static_cast<int>(h.edges.size()); ++kick) {
            const size_t a = static_cast<size_t>(rng.uniform(0, static_cast<long>(h.edges.size()) - 1));
            const size_t b = static_cast<size_t>(rng.uniform(0, static_cast<long>(h.edges.size()) - 1));
            if (a == b) continue;
            const long delta = rng.uniform(-1, 1);
            factors[a] += static_cast<long>(coeffs[b].get_si()) * delta;
            factors[b] -= static_cast<long>(coeffs[a].get_si()) * delta;
        }
        StepFunction base(model, model.r);
        for (size_t i = 0; i < base.cell_count(); ++i) {
            base.set_flat(i, *parse_rational(rng.rational(2, 2, true)) + 1);
        }
        const auto w = weights_from_powers(h, pt, base, factors);
        json weights;
        for (const auto& [label, weight] : w.by_label) {
            json values = json::array();
            for (size_t i = 0; i < weight.fn().cell_count(); ++i) {
                values.push_back(fraction_string(weight.fn().at_flat(i)));
            }
            weights[label] = {{"kind", "dense"}, {"values", values}};
        }
        j["weights"] = weights;
    }
    return j;
}

}  // namespace entform
