#ifndef SPN_GRAPH_HPP
#define SPN_GRAPH_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spn {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { Sum, Product, Indicator };

// Builder-side node description. Indicator leaves carry (var, polarity);
// polarity true selects the positive literal, false the negated one.
struct Node {
    NodeKind kind = NodeKind::Indicator;
    std::vector<NodeId> children;
    std::uint32_t var = 0;
    bool polarity = true;

    static Node indicator(std::uint32_t var, bool polarity) {
        Node n;
        n.kind = NodeKind::Indicator;
        n.var = var;
        n.polarity = polarity;
        return n;
    }
    static Node sum(std::vector<NodeId> children) {
        Node n;
        n.kind = NodeKind::Sum;
        n.children = std::move(children);
        return n;
    }
    static Node product(std::vector<NodeId> children) {
        Node n;
        n.kind = NodeKind::Product;
        n.children = std::move(children);
        return n;
    }
};

// Variable set of a node, as a fixed-width bitset over [0, num_vars).
class ScopeSet {
public:
    ScopeSet() = default;
    explicit ScopeSet(std::uint32_t num_vars)
        : num_vars_(num_vars), words_((num_vars + 63) / 64, 0) {}

    void set(std::uint32_t var) { words_[var >> 6] |= std::uint64_t(1) << (var & 63); }
    bool test(std::uint32_t var) const {
        return (words_[var >> 6] >> (var & 63)) & 1;
    }
    void merge(const ScopeSet& other) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    }
    bool intersects(const ScopeSet& other) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & other.words_[i]) return true;
        return false;
    }
    bool operator==(const ScopeSet& other) const = default;
    std::uint32_t count() const;
    bool full() const { return count() == num_vars_; }
    std::uint32_t num_vars() const { return num_vars_; }
    std::vector<std::uint32_t> vars() const;

private:
    std::uint32_t num_vars_ = 0;
    std::vector<std::uint64_t> words_;
};

struct Violation {
    enum class Kind {
        Cycle,            // node participates in a directed cycle
        Unreachable,      // node not reachable from the root
        EmptyChildren,    // internal node with no children
        Incomplete,       // sum node whose children have differing scopes
        NonDecomposable,  // product node whose children share variables
        RootScope,        // scope(root) != {0..N-1}
    };
    Kind kind;
    NodeId node;

    std::string to_string() const;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

// Edge weights of one SPN, indexed by the dense sum-edge index d in [0, D).
// The learning algorithms keep entries strictly positive; unsmoothed CCCP can
// place weights exactly on the boundary (zero), which evaluation treats as
// log 0.
struct WeightVector {
    std::vector<double> values;

    WeightVector() = default;
    explicit WeightVector(std::size_t d, double init = 1.0) : values(d, init) {}

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t d) const { return values[d]; }
    double& operator[](std::size_t d) { return values[d]; }
};

// Immutable rooted DAG of sum/product/indicator nodes.
//
// Construction analyzes the graph once: topological order (children before
// parents), per-node scopes, the dense sum-edge index d, and the validation
// report. Out-of-bounds child/root/var references are construction faults;
// everything else (cycles, incompleteness, ...) is data in the report.
class Graph {
public:
    Graph(const std::vector<Node>& nodes, NodeId root, std::uint32_t num_vars);

    std::size_t num_nodes() const { return kind_.size(); }
    std::uint32_t num_vars() const { return num_vars_; }
    NodeId root() const { return root_; }

    NodeKind kind(NodeId v) const { return kind_[v]; }
    std::span<const NodeId> children(NodeId v) const {
        return {children_.data() + child_off_[v], children_.data() + child_off_[v + 1]};
    }
    std::uint32_t var(NodeId v) const { return var_[v]; }
    bool polarity(NodeId v) const { return polarity_[v] != 0; }

    // Valid (and nonempty) only when the report is clean.
    std::span<const NodeId> topo_order() const { return topo_; }

    const ValidationReport& report() const { return report_; }
    bool is_valid() const { return report_.violations.empty(); }
    // Throws std::invalid_argument when the graph failed validation.
    void require_valid() const;

    // Sum-edge index space, populated only for valid graphs. Edge d runs
    // from sum_edges()[d].parent to sum_edges()[d].child; d is assigned in
    // topological order of sum nodes, then child order.
    struct SumEdge {
        NodeId parent;
        NodeId child;
    };
    std::size_t num_sum_edges() const { return sum_edges_.size(); }
    std::span<const SumEdge> sum_edges() const { return sum_edges_; }
    // First edge index of sum node v; edges of v are contiguous in child order.
    std::size_t edge_index(NodeId v, std::size_t child_pos) const {
        return sum_edge_off_[v] + child_pos;
    }

    const ScopeSet& scope(NodeId v) const;

private:
    std::uint32_t num_vars_ = 0;
    NodeId root_ = 0;
    std::vector<NodeKind> kind_;
    std::vector<std::uint32_t> var_;
    std::vector<std::uint8_t> polarity_;
    std::vector<std::uint32_t> child_off_;
    std::vector<NodeId> children_;
    std::vector<NodeId> topo_;
    std::vector<std::uint32_t> sum_edge_off_;
    std::vector<SumEdge> sum_edges_;
    std::vector<ScopeSet> scopes_;
    ValidationReport report_;

    void analyze();
};

// The validation report computed at construction.
inline const ValidationReport& validate(const Graph& g) { return g.report(); }

// Memoized scope of v. Throws std::invalid_argument for an unknown id or an
// invalid graph.
const ScopeSet& scope_of(const Graph& g, NodeId v);

}  // namespace spn

#endif
