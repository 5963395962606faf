#include "entform/hypergraph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace entform {

int Hypergraph::n() const {
    int total = 0;
    for (const auto& c : classes) total += static_cast<int>(c.size());
    return total;
}

std::vector<int> Hypergraph::class_offsets() const {
    std::vector<int> off(static_cast<size_t>(r) + 1, 0);
    for (int i = 0; i < r; ++i) off[static_cast<size_t>(i) + 1] = off[static_cast<size_t>(i)] + class_size(i);
    return off;
}

int Hypergraph::axis_of(VertexRef v) const {
    int off = 0;
    for (int i = 0; i < v.cls; ++i) off += class_size(i);
    return off + v.idx;
}

std::optional<VertexRef> Hypergraph::find_vertex(const std::string& id) const {
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < class_size(i); ++j) {
            if (classes[static_cast<size_t>(i)][static_cast<size_t>(j)] == id) return VertexRef{i, j};
        }
    }
    return std::nullopt;
}

std::string Hypergraph::default_edge_label(const Hypergraph& h, const std::vector<int>& edge) {
    std::string label = "F";
    for (int i = 0; i < h.r; ++i) {
        label += "_" + h.classes[static_cast<size_t>(i)][static_cast<size_t>(edge[static_cast<size_t>(i)])];
    }
    return label;
}

Hypergraph make_complete(const std::vector<int>& class_sizes) {
    Hypergraph h;
    h.r = static_cast<int>(class_sizes.size());
    for (int i = 0; i < h.r; ++i) {
        std::vector<std::string> ids;
        std::vector<std::string> groups;
        const std::string prefix(1, static_cast<char>('a' + (i % 26)));
        for (int j = 0; j < class_sizes[static_cast<size_t>(i)]; ++j) {
            ids.push_back(prefix + std::to_string(j + 1));
            groups.push_back(ids.back());
        }
        h.classes.push_back(std::move(ids));
        h.label_groups.push_back(std::move(groups));
    }
    std::vector<int> edge(static_cast<size_t>(h.r), 0);
    while (true) {
        h.edges.push_back(edge);
        h.edge_labels.push_back(Hypergraph::default_edge_label(h, edge));
        int i = h.r - 1;
        while (i >= 0) {
            if (++edge[static_cast<size_t>(i)] < class_sizes[static_cast<size_t>(i)]) break;
            edge[static_cast<size_t>(i)] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return h;
}

bool Selection::is_empty() const {
    for (const auto& c : per_class) {
        if (!c.empty()) return false;
    }
    return true;
}

int Selection::max_class_count() const {
    size_t m = 0;
    for (const auto& c : per_class) m = std::max(m, c.size());
    return static_cast<int>(m);
}

bool Selection::all_even() const {
    for (const auto& c : per_class) {
        if (c.size() % 2 != 0) return false;
    }
    return true;
}

std::vector<VertexRef> Selection::vertices() const {
    std::vector<VertexRef> out;
    for (int i = 0; i < static_cast<int>(per_class.size()); ++i) {
        for (int j : per_class[static_cast<size_t>(i)]) out.push_back(VertexRef{i, j});
    }
    return out;
}

Selection selection_from_ids(const Hypergraph& h, const std::vector<std::vector<std::string>>& ids) {
    if (static_cast<int>(ids.size()) != h.r) throw std::invalid_argument("selection: class count mismatch");
    Selection s = Selection::empty(h.r);
    for (int i = 0; i < h.r; ++i) {
        for (const auto& id : ids[static_cast<size_t>(i)]) {
            auto v = h.find_vertex(id);
            if (!v || v->cls != i) throw std::invalid_argument("selection: unknown vertex " + id + " in class " + std::to_string(i));
            s.per_class[static_cast<size_t>(i)].push_back(v->idx);
        }
        auto& c = s.per_class[static_cast<size_t>(i)];
        std::sort(c.begin(), c.end());
        if (std::adjacent_find(c.begin(), c.end()) != c.end()) throw std::invalid_argument("selection: repeated vertex");
    }
    return s;
}

ValidationReport validate(const Hypergraph& h) {
    ValidationReport rep;
    auto issue = [&rep](const std::string& code, const std::string& detail) {
        rep.issues.push_back({code, detail});
    };

    bool structural = true;
    if (h.r <= 0 || static_cast<int>(h.classes.size()) != h.r ||
        static_cast<int>(h.label_groups.size()) != h.r) {
        issue("class-structure", "class list shape inconsistent with r");
        structural = false;
    }
    if (structural) {
        std::set<std::string> seen;
        for (int i = 0; i < h.r; ++i) {
            if (h.label_groups[static_cast<size_t>(i)].size() != h.classes[static_cast<size_t>(i)].size()) {
                issue("label-groups", "label group list shape mismatch in class " + std::to_string(i));
                structural = false;
            }
            for (const auto& id : h.classes[static_cast<size_t>(i)]) {
                if (!seen.insert(id).second) {
                    issue("duplicate-vertex", "vertex id repeated: " + id);
                    structural = false;
                }
            }
        }
        if (h.edge_labels.size() != h.edges.size()) {
            issue("edge-labels", "edge label list shape mismatch");
            structural = false;
        }
        std::set<std::vector<int>> edge_set;
        for (const auto& e : h.edges) {
            if (static_cast<int>(e.size()) != h.r) {
                issue("edge-arity", "edge does not pick one vertex per class");
                structural = false;
                continue;
            }
            for (int i = 0; i < h.r; ++i) {
                if (e[static_cast<size_t>(i)] < 0 || e[static_cast<size_t>(i)] >= h.class_size(i)) {
                    issue("edge-vertex", "edge references a vertex outside class " + std::to_string(i));
                    structural = false;
                }
            }
            if (!edge_set.insert(e).second) {
                issue("duplicate-edge", "edge repeated");
                structural = false;
            }
        }
    }
    rep.structurally_valid = structural;
    if (!structural) {
        rep.admissible = false;
        return rep;
    }

    bool admissible = true;
    for (int i = 0; i < h.r; ++i) {
        if (h.class_size(i) < 2) {
            issue("min-class-size", "class " + std::to_string(i) + " has fewer than 2 vertices");
            admissible = false;
        }
    }
    const auto dec = decompose(h);
    for (size_t l = 0; l < dec.components.size(); ++l) {
        if (!dec.components[l].complete) {
            issue("incomplete-component", "component " + std::to_string(l) + " is not complete");
            admissible = false;
        }
        for (int i = 0; i < h.r; ++i) {
            if (dec.components[l].class_sizes[static_cast<size_t>(i)] < 2) {
                issue("component-min-class-size", "component " + std::to_string(l) + " has class " +
                                                      std::to_string(i) + " of size < 2");
                admissible = false;
            }
        }
    }
    rep.admissible = admissible;
    return rep;
}

void require_complete_components(const Hypergraph& h) {
    const auto rep = validate(h);
    if (!rep.structurally_valid) throw std::invalid_argument("hypergraph is structurally invalid");
    for (const auto& issue : rep.issues) {
        if (issue.code == "incomplete-component") {
            throw std::invalid_argument("hypergraph has an incomplete component");
        }
    }
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<size_t>(n)) {
        for (int i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
    }
    int find(int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); }
};

}  // namespace

ComponentDecomposition decompose(const Hypergraph& h) {
    const auto off = h.class_offsets();
    const int n = h.n();
    UnionFind uf(n);
    std::vector<bool> touched(static_cast<size_t>(n), false);
    for (const auto& e : h.edges) {
        const int first = off[0] + e[0];
        for (int i = 0; i < h.r; ++i) {
            const int v = off[static_cast<size_t>(i)] + e[static_cast<size_t>(i)];
            touched[static_cast<size_t>(v)] = true;
            uf.unite(first, v);
        }
    }

    ComponentDecomposition dec;
    dec.component_index.resize(static_cast<size_t>(h.r));
    for (int i = 0; i < h.r; ++i) {
        dec.component_index[static_cast<size_t>(i)].assign(static_cast<size_t>(h.class_size(i)), -1);
    }

    // Group touched vertices by root, keyed by the smallest vertex id in the group.
    std::map<int, std::vector<VertexRef>> groups;
    for (int i = 0; i < h.r; ++i) {
        for (int j = 0; j < h.class_size(i); ++j) {
            const int v = off[static_cast<size_t>(i)] + j;
            if (!touched[static_cast<size_t>(v)]) {
                dec.isolated.push_back(VertexRef{i, j});
                continue;
            }
            groups[uf.find(v)].push_back(VertexRef{i, j});
        }
    }
    std::vector<std::pair<std::string, int>> order;
    for (const auto& [root, verts] : groups) {
        std::string min_id = h.vertex_id(verts.front());
        for (const auto& v : verts) min_id = std::min(min_id, h.vertex_id(v));
        order.emplace_back(min_id, root);
    }
    std::sort(order.begin(), order.end());

    for (const auto& [min_id, root] : order) {
        Component comp;
        comp.class_vertices.resize(static_cast<size_t>(h.r));
        for (const auto& v : groups[root]) {
            comp.class_vertices[static_cast<size_t>(v.cls)].push_back(v.idx);
            dec.component_index[static_cast<size_t>(v.cls)][static_cast<size_t>(v.idx)] =
                static_cast<int>(dec.components.size());
        }
        for (auto& lst : comp.class_vertices) std::sort(lst.begin(), lst.end());
        comp.class_sizes.resize(static_cast<size_t>(h.r));
        Integer full(1);
        for (int i = 0; i < h.r; ++i) {
            comp.class_sizes[static_cast<size_t>(i)] =
                static_cast<int>(comp.class_vertices[static_cast<size_t>(i)].size());
            full *= comp.class_sizes[static_cast<size_t>(i)];
        }
        for (int e = 0; e < static_cast<int>(h.edges.size()); ++e) {
            const int v = off[0] + h.edges[static_cast<size_t>(e)][0];
            if (uf.find(v) == uf.find(root)) comp.edge_ids.push_back(e);
        }
        comp.complete = Integer(static_cast<long>(comp.edge_ids.size())) == full;
        dec.components.push_back(std::move(comp));
    }
    return dec;
}

int ComponentDecomposition::component_of(VertexRef v) const {
    return component_index[static_cast<size_t>(v.cls)][static_cast<size_t>(v.idx)];
}

Integer Thresholds::min_d() const {
    if (per_edge.empty()) throw std::logic_error("Thresholds: no edges");
    Integer m = per_edge.front();
    for (const auto& d : per_edge) m = std::min(m, d);
    return m;
}

Rational Thresholds::reciprocal_sum() const {
    Rational s(0);
    for (const auto& d : per_edge) s += Rational(1) / Rational(d);
    return s;
}

Thresholds thresholds(const Hypergraph& h) {
    const auto dec = decompose(h);
    std::vector<Integer> comp_d;
    comp_d.reserve(dec.components.size());
    for (const auto& comp : dec.components) {
        Integer best(0);
        for (int skip = 0; skip < h.r; ++skip) {
            Integer prod(1);
            for (int i = 0; i < h.r; ++i) {
                if (i != skip) prod *= comp.class_sizes[static_cast<size_t>(i)];
            }
            best = std::max(best, prod);
        }
        comp_d.push_back(best);
    }
    Thresholds t;
    t.per_edge.reserve(h.edges.size());
    for (const auto& e : h.edges) {
        const int comp = dec.component_of(VertexRef{0, e[0]});
        t.per_edge.push_back(comp_d[static_cast<size_t>(comp)]);
    }
    if (dec.components.size() == 1 && dec.isolated.empty() && dec.components[0].complete) {
        t.complete_m = comp_d[0];
    }
    return t;
}

std::optional<ExponentWitness> feasible_exponents(const Thresholds& t) {
    const Rational sum = t.reciprocal_sum();
    if (!(sum > 1)) return std::nullopt;
    ExponentWitness w;
    w.p.reserve(t.per_edge.size());
    for (const auto& d : t.per_edge) w.p.push_back(Rational(d) * sum);
    return w;
}

std::pair<Hypergraph, Selection> duplicate_component(const Hypergraph& h, const Selection& s) {
    const auto dec = decompose(h);
    if (dec.components.size() != 1 || !dec.isolated.empty()) {
        throw std::invalid_argument("duplicate_component: input must be a single connected component");
    }
    if (s.is_empty()) throw std::invalid_argument("duplicate_component: empty selection");

    Hypergraph out;
    out.r = h.r;
    out.classes.resize(static_cast<size_t>(h.r));
    out.label_groups.resize(static_cast<size_t>(h.r));
    for (int i = 0; i < h.r; ++i) {
        for (int j = 0; j < h.class_size(i); ++j) {
            out.classes[static_cast<size_t>(i)].push_back(h.classes[static_cast<size_t>(i)][static_cast<size_t>(j)]);
            out.label_groups[static_cast<size_t>(i)].push_back(
                h.label_groups[static_cast<size_t>(i)][static_cast<size_t>(j)]);
        }
        for (int j = 0; j < h.class_size(i); ++j) {
            out.classes[static_cast<size_t>(i)].push_back(
                h.classes[static_cast<size_t>(i)][static_cast<size_t>(j)] + "'");
            out.label_groups[static_cast<size_t>(i)].push_back(
                h.label_groups[static_cast<size_t>(i)][static_cast<size_t>(j)] + "'");
        }
    }
    for (size_t e = 0; e < h.edges.size(); ++e) {
        out.edges.push_back(h.edges[e]);
        out.edge_labels.push_back(h.edge_labels[e]);
    }
    for (size_t e = 0; e < h.edges.size(); ++e) {
        std::vector<int> copy = h.edges[e];
        for (int i = 0; i < h.r; ++i) copy[static_cast<size_t>(i)] += h.class_size(i);
        out.edges.push_back(std::move(copy));
        out.edge_labels.push_back(h.edge_labels[e]);
    }

    Selection doubled = Selection::empty(h.r);
    for (int i = 0; i < h.r; ++i) {
        for (int j : s.per_class[static_cast<size_t>(i)]) {
            doubled.per_class[static_cast<size_t>(i)].push_back(j);
            doubled.per_class[static_cast<size_t>(i)].push_back(j + h.class_size(i));
        }
        std::sort(doubled.per_class[static_cast<size_t>(i)].begin(),
                  doubled.per_class[static_cast<size_t>(i)].end());
    }
    return {std::move(out), std::move(doubled)};
}

namespace {

Hypergraph rewire_as_copy(const Hypergraph& h, VertexRef keep, VertexRef drop) {
    Hypergraph out = h;
    out.label_groups[static_cast<size_t>(drop.cls)][static_cast<size_t>(drop.idx)] =
        h.label_groups[static_cast<size_t>(keep.cls)][static_cast<size_t>(keep.idx)];
    std::vector<std::vector<int>> edges;
    std::vector<std::string> labels;
    for (size_t e = 0; e < h.edges.size(); ++e) {
        if (h.edges[e][static_cast<size_t>(drop.cls)] == drop.idx) continue;
        edges.push_back(h.edges[e]);
        labels.push_back(h.edge_labels[e]);
    }
    for (size_t e = 0; e < h.edges.size(); ++e) {
        if (h.edges[e][static_cast<size_t>(keep.cls)] != keep.idx) continue;
        std::vector<int> mirrored = h.edges[e];
        mirrored[static_cast<size_t>(keep.cls)] = drop.idx;
        edges.push_back(std::move(mirrored));
        labels.push_back(h.edge_labels[e]);
    }
    out.edges = std::move(edges);
    out.edge_labels = std::move(labels);
    return out;
}

}  // namespace

SplitResult copy_vertex_split(const Hypergraph& h, const Selection& s, const std::string& v1,
                              const std::string& v2) {
    const auto a = h.find_vertex(v1);
    const auto b = h.find_vertex(v2);
    if (!a || !b) throw std::invalid_argument("copy_vertex_split: unknown vertex");
    if (a->cls != b->cls) throw std::invalid_argument("copy_vertex_split: vertices in different classes");
    if (a->idx == b->idx) throw std::invalid_argument("copy_vertex_split: vertices must be distinct");
    const auto& sel = s.per_class[static_cast<size_t>(a->cls)];
    const bool a_sel = std::find(sel.begin(), sel.end(), a->idx) != sel.end();
    const bool b_sel = std::find(sel.begin(), sel.end(), b->idx) != sel.end();
    if (!a_sel || !b_sel) throw std::invalid_argument("copy_vertex_split: vertices must be selected");
    if (h.label_groups[static_cast<size_t>(a->cls)][static_cast<size_t>(a->idx)] ==
        h.label_groups[static_cast<size_t>(b->cls)][static_cast<size_t>(b->idx)]) {
        throw std::invalid_argument("copy_vertex_split: vertices already share a label");
    }

    SplitResult out;
    out.first = rewire_as_copy(h, *a, *b);
    out.second = rewire_as_copy(h, *b, *a);
    out.selection = Selection::empty(h.r);
    out.selection.per_class[static_cast<size_t>(a->cls)] = {std::min(a->idx, b->idx), std::max(a->idx, b->idx)};
    return out;
}

std::vector<ValidationIssue> check_label_coherence(const Hypergraph& h) {
    std::vector<ValidationIssue> issues;
    auto group_tuple = [&h](const std::vector<int>& e) {
        std::vector<std::string> g;
        for (int i = 0; i < h.r; ++i) {
            g.push_back(h.label_groups[static_cast<size_t>(i)][static_cast<size_t>(e[static_cast<size_t>(i)])]);
        }
        return g;
    };
    for (size_t e1 = 0; e1 < h.edges.size(); ++e1) {
        for (size_t e2 = e1 + 1; e2 < h.edges.size(); ++e2) {
            if (group_tuple(h.edges[e1]) == group_tuple(h.edges[e2]) &&
                h.edge_labels[e1] != h.edge_labels[e2]) {
                issues.push_back({"label-coherence",
                                  "edges with identical group tuples carry labels " + h.edge_labels[e1] +
                                      " and " + h.edge_labels[e2]});
            }
        }
    }
    return issues;
}

std::vector<ValidationIssue> check_proper(const Hypergraph& h) {
    std::vector<ValidationIssue> issues;
    const auto dec = decompose(h);
    std::map<std::string, VertexRef> first_seen;
    for (int i = 0; i < h.r; ++i) {
        for (int j = 0; j < h.class_size(i); ++j) {
            const auto& group = h.label_groups[static_cast<size_t>(i)][static_cast<size_t>(j)];
            const VertexRef v{i, j};
            auto [it, inserted] = first_seen.emplace(group, v);
            if (inserted) continue;
            if (it->second.cls != i) {
                issues.push_back({"proper-class", "label group " + group + " spans classes"});
            } else if (dec.component_of(it->second) != dec.component_of(v)) {
                issues.push_back({"proper-component", "label group " + group + " spans components"});
            }
        }
    }
    return issues;
}

std::vector<Selection> even_selections(const Hypergraph& h) {
    // Per class: all subsets of even cardinality, as index lists.
    std::vector<std::vector<std::vector<int>>> per_class;
    for (int i = 0; i < h.r; ++i) {
        std::vector<std::vector<int>> subsets;
        const int m = h.class_size(i);
        for (unsigned long mask = 0; mask < (1UL << m); ++mask) {
            if (__builtin_popcountl(mask) % 2 != 0) continue;
            std::vector<int> subset;
            for (int j = 0; j < m; ++j) {
                if (mask & (1UL << j)) subset.push_back(j);
            }
            subsets.push_back(std::move(subset));
        }
        per_class.push_back(std::move(subsets));
    }
    std::vector<Selection> out;
    std::vector<size_t> pick(static_cast<size_t>(h.r), 0);
    while (true) {
        Selection s = Selection::empty(h.r);
        for (int i = 0; i < h.r; ++i) s.per_class[static_cast<size_t>(i)] = per_class[static_cast<size_t>(i)][pick[static_cast<size_t>(i)]];
        if (!s.is_empty()) out.push_back(std::move(s));
        int i = h.r - 1;
        while (i >= 0) {
            if (++pick[static_cast<size_t>(i)] < per_class[static_cast<size_t>(i)].size()) break;
            pick[static_cast<size_t>(i)] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return out;
}

std::vector<std::vector<int>> label_signature(const Hypergraph& h) {
    std::vector<std::vector<int>> sig;
    for (int i = 0; i < h.r; ++i) {
        std::map<std::string, int> counts;
        for (const auto& g : h.label_groups[static_cast<size_t>(i)]) ++counts[g];
        std::vector<int> row;
        for (const auto& [g, c] : counts) row.push_back(c);
        std::sort(row.rbegin(), row.rend());
        sig.push_back(std::move(row));
    }
    return sig;
}

bool precedes(const Hypergraph& a, const Hypergraph& b) {
    return label_signature(a) >= label_signature(b);
}

}  // namespace entform
