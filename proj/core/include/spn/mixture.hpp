#ifndef SPN_MIXTURE_HPP
#define SPN_MIXTURE_HPP

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "spn/graph.hpp"
#include "spn/inference.hpp"

namespace spn {

// One choice of child per visited sum node. The edge set and leaves of the
// tree follow from the choices by walking down from the root.
struct InducedTree {
    struct Choice {
        NodeId sum;
        NodeId child;
        std::uint32_t child_pos;  // position within children(sum), so parallel
                                  // edges to one child stay distinguishable
    };
    // Ordered root-side first (descending topological index of the sum node).
    std::vector<Choice> choices;

    NodeId chosen(NodeId sum_node) const;
    std::uint32_t chosen_pos(NodeId sum_node) const;

    // Every edge of the induced subgraph, sum and product edges alike.
    std::vector<std::pair<NodeId, NodeId>> edge_set(const Graph& g) const;
    // Indicator leaves of the tree.
    std::vector<NodeId> leaves(const Graph& g) const;
};

// Number of unique induced trees, exact and in log form.
struct Cardinality {
    mpz_class exact;
    double log_approx;  // natural log; 0 for exact == 1

    std::string to_decimal() const { return exact.get_str(); }
};

// tau = f(1|1): one bottom-up pass with unit leaves and unit weights,
// in arbitrary precision.
Cardinality cardinality(const Graph& g);

// Streams every unique induced tree exactly once, ordered lexicographically
// by (sum nodes root-side first, child index). Returns false if the visitor
// stopped early. Throws std::length_error when tau exceeds limit; the limit
// keeps enumeration at verification scale.
bool for_each_induced_tree(const Graph& g, std::uint64_t limit,
                           const std::function<bool(const InducedTree&)>& visit);

// Materialized variant of the stream.
std::vector<InducedTree> enumerate_trees(const Graph& g, std::uint64_t limit);

// Monomial value of one tree: product of its sum-edge weights times its leaf
// indicators at x (Marginalized marks count as 1). Computed in linear space;
// this is the desk-scale oracle, not the inference path.
double tree_value(const Graph& g, const InducedTree& tree, const WeightVector& w,
                  const Assignment& x);

// The induced subgraph as a standalone graph (ids remapped, weights
// restricted to the tree's sum edges), e.g. to revalidate it.
std::pair<Graph, WeightVector> tree_as_graph(const Graph& g, const InducedTree& tree,
                                             const WeightVector& w);

}  // namespace spn

#endif
