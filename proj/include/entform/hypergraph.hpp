#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entform/rational.hpp"

namespace entform {

struct VertexRef {
    int cls = 0;
    int idx = 0;
    bool operator==(const VertexRef&) const = default;
};

// r-partite r-uniform hypergraph. Vertices are opaque string identifiers, one
// list per class; an edge picks one vertex index per class. Every vertex carries
// a label group so that "copy of the same label" survives the surgery operations,
// and every edge carries a function label (shared labels mean shared functions).
struct Hypergraph {
    int r = 0;
    std::vector<std::vector<std::string>> classes;       // [cls][idx] -> vertex id
    std::vector<std::vector<std::string>> label_groups;  // parallel to classes
    std::vector<std::vector<int>> edges;                 // [edge][cls] -> vertex idx
    std::vector<std::string> edge_labels;                // function label per edge

    int n() const;
    int class_size(int cls) const { return static_cast<int>(classes.at(cls).size()); }
    // Axis layout used by kernels: class 0 contributes axes [0, n_0), etc.
    std::vector<int> class_offsets() const;
    int axis_of(VertexRef v) const;
    std::optional<VertexRef> find_vertex(const std::string& id) const;
    const std::string& vertex_id(VertexRef v) const { return classes[v.cls][v.idx]; }

    static std::string default_edge_label(const Hypergraph& h, const std::vector<int>& edge);
};

// Complete hypergraph with the given class sizes; ids "a1..", "b1..", ...
Hypergraph make_complete(const std::vector<int>& class_sizes);

// One vertex subset per class.
struct Selection {
    std::vector<std::vector<int>> per_class;  // sorted vertex indices

    static Selection empty(int r) { return Selection{std::vector<std::vector<int>>(static_cast<size_t>(r))}; }
    bool is_empty() const;
    int max_class_count() const;
    bool all_even() const;
    std::vector<VertexRef> vertices() const;
};

Selection selection_from_ids(const Hypergraph& h, const std::vector<std::vector<std::string>>& ids);

struct ValidationIssue {
    std::string code;
    std::string detail;
};

struct ValidationReport {
    bool structurally_valid = false;  // r-partite/r-uniform, distinct ids, no duplicate edges
    bool admissible = false;          // + min class size >= 2 and all components complete
    std::vector<ValidationIssue> issues;
};

struct Component {
    std::vector<std::vector<int>> class_vertices;  // [cls] -> sorted vertex indices
    std::vector<int> edge_ids;
    std::vector<int> class_sizes;
    bool complete = false;
};

struct ComponentDecomposition {
    std::vector<Component> components;  // ordered by smallest vertex id
    std::vector<VertexRef> isolated;    // edgeless vertices, reported separately
    int component_of(VertexRef v) const;

    // -1 for isolated vertices.
    std::vector<std::vector<int>> component_index;  // [cls][idx]
};

struct Thresholds {
    std::vector<Integer> per_edge;         // d_e, aligned with h.edges
    std::optional<Integer> complete_m;     // repeated-Holder exponent when the graph is one complete component
    Integer min_d() const;
    Rational reciprocal_sum() const;       // sum of 1/d_e
};

struct ExponentWitness {
    std::vector<Rational> p;  // aligned with edges; p_e > d_e, sum 1/p_e = 1
};

ValidationReport validate(const Hypergraph& h);
// Throws unless h is structurally valid with every component complete (what the
// evaluation machinery needs; full admissibility additionally bounds class sizes).
void require_complete_components(const Hypergraph& h);
ComponentDecomposition decompose(const Hypergraph& h);
Thresholds thresholds(const Hypergraph& h);
std::optional<ExponentWitness> feasible_exponents(const Thresholds& t);

// Two disjoint copies of a one-component hypergraph, copies keeping the original
// edge labels; the returned selection is the input plus all copied vertices.
std::pair<Hypergraph, Selection> duplicate_component(const Hypergraph& h, const Selection& s);

// The two rewired hypergraphs of the split construction: in the first, v2 becomes
// a label copy of v1 and v2's edges are replaced by mirrors of v1's; the second is
// symmetric. Both come with the selection ({v1, v2}, {}, ..., {}).
struct SplitResult {
    Hypergraph first;
    Hypergraph second;
    Selection selection;
};
SplitResult copy_vertex_split(const Hypergraph& h, const Selection& s, const std::string& v1,
                              const std::string& v2);

// Edges whose vertices agree groupwise in every class must share a function label.
// Only surgery-produced graphs are expected to satisfy this.
std::vector<ValidationIssue> check_label_coherence(const Hypergraph& h);
// Vertices sharing a label group must sit in one class and one component.
std::vector<ValidationIssue> check_proper(const Hypergraph& h);

// All selections with every per-class count even and at least one vertex chosen.
std::vector<Selection> even_selections(const Hypergraph& h);

// Per class, label-group multiplicities sorted decreasing; diagnostic only.
std::vector<std::vector<int>> label_signature(const Hypergraph& h);
// H precedes H' iff signature(H) >= signature(H') lexicographically.
bool precedes(const Hypergraph& a, const Hypergraph& b);

}  // namespace entform
