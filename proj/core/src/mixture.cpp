#include "spn/mixture.hpp"

#include <cmath>
#include <stdexcept>

namespace spn {

NodeId InducedTree::chosen(NodeId sum_node) const {
    for (const auto& c : choices)
        if (c.sum == sum_node) return c.child;
    throw std::invalid_argument("sum node is not part of this tree");
}

std::uint32_t InducedTree::chosen_pos(NodeId sum_node) const {
    for (const auto& c : choices)
        if (c.sum == sum_node) return c.child_pos;
    throw std::invalid_argument("sum node is not part of this tree");
}

namespace {

// Walk the tree top-down, calling edge(parent, child) for every tree edge.
template <typename EdgeFn>
void walk_tree(const Graph& g, const InducedTree& tree, EdgeFn&& edge) {
    std::vector<NodeId> stack{g.root()};
    while (!stack.empty()) {
        NodeId v = stack.back();
        stack.pop_back();
        if (g.kind(v) == NodeKind::Sum) {
            NodeId c = g.children(v)[tree.chosen_pos(v)];
            edge(v, c);
            stack.push_back(c);
        } else if (g.kind(v) == NodeKind::Product) {
            auto ch = g.children(v);
            for (std::size_t i = ch.size(); i-- > 0;) {
                edge(v, ch[i]);
                stack.push_back(ch[i]);
            }
        }
    }
}

}  // namespace

std::vector<std::pair<NodeId, NodeId>> InducedTree::edge_set(const Graph& g) const {
    std::vector<std::pair<NodeId, NodeId>> edges;
    walk_tree(g, *this, [&](NodeId p, NodeId c) { edges.emplace_back(p, c); });
    return edges;
}

std::vector<NodeId> InducedTree::leaves(const Graph& g) const {
    std::vector<NodeId> out;
    if (g.kind(g.root()) == NodeKind::Indicator) out.push_back(g.root());
    walk_tree(g, *this, [&](NodeId, NodeId c) {
        if (g.kind(c) == NodeKind::Indicator) out.push_back(c);
    });
    return out;
}

Cardinality cardinality(const Graph& g) {
    g.require_valid();
    std::vector<mpz_class> count(g.num_nodes());
    for (NodeId v : g.topo_order()) {
        mpz_class& acc = count[v];
        switch (g.kind(v)) {
            case NodeKind::Indicator:
                acc = 1;
                break;
            case NodeKind::Sum:
                acc = 0;
                for (NodeId c : g.children(v)) acc += count[c];
                break;
            case NodeKind::Product:
                acc = 1;
                for (NodeId c : g.children(v)) acc *= count[c];
                break;
        }
    }
    Cardinality out;
    out.exact = count[g.root()];
    signed long int exp2;
    double mant = mpz_get_d_2exp(&exp2, out.exact.get_mpz_t());
    out.log_approx = std::log(mant) + static_cast<double>(exp2) * M_LN2;
    return out;
}

namespace {

// Backtracking over the descending topological order (root first, so every
// potential parent of a node is handled before the node itself). in_count
// tracks how many tree edges currently point at a node; active sum nodes
// branch over their child positions in order, which yields the lexicographic
// stream ordering.
class TreeEnumerator {
public:
    TreeEnumerator(const Graph& g, const std::function<bool(const InducedTree&)>& visit)
        : g_(g), visit_(visit), order_(g.topo_order().rbegin(), g.topo_order().rend()),
          in_count_(g.num_nodes(), 0) {}

    bool run() {
        in_count_[g_.root()] = 1;
        descend(0);
        return keep_going_;
    }

private:
    const Graph& g_;
    const std::function<bool(const InducedTree&)>& visit_;
    std::vector<NodeId> order_;
    std::vector<std::uint32_t> in_count_;
    InducedTree current_;
    bool keep_going_ = true;

    void descend(std::size_t i) {
        if (!keep_going_) return;
        if (i == order_.size()) {
            keep_going_ = visit_(current_);
            return;
        }
        NodeId v = order_[i];
        if (in_count_[v] == 0 || g_.kind(v) == NodeKind::Indicator) {
            descend(i + 1);
            return;
        }
        auto ch = g_.children(v);
        if (g_.kind(v) == NodeKind::Product) {
            for (NodeId c : ch) ++in_count_[c];
            descend(i + 1);
            for (NodeId c : ch) --in_count_[c];
            return;
        }
        for (std::size_t k = 0; k < ch.size() && keep_going_; ++k) {
            ++in_count_[ch[k]];
            current_.choices.push_back({v, ch[k], static_cast<std::uint32_t>(k)});
            descend(i + 1);
            current_.choices.pop_back();
            --in_count_[ch[k]];
        }
    }
};

}  // namespace

bool for_each_induced_tree(const Graph& g, std::uint64_t limit,
                           const std::function<bool(const InducedTree&)>& visit) {
    g.require_valid();
    Cardinality tau = cardinality(g);
    if (tau.exact > limit)
        throw std::length_error("induced tree count " + tau.to_decimal() +
                                " exceeds enumeration cap " + std::to_string(limit));
    TreeEnumerator en(g, visit);
    return en.run();
}

std::vector<InducedTree> enumerate_trees(const Graph& g, std::uint64_t limit) {
    std::vector<InducedTree> trees;
    for_each_induced_tree(g, limit, [&](const InducedTree& t) {
        trees.push_back(t);
        return true;
    });
    return trees;
}

double tree_value(const Graph& g, const InducedTree& tree, const WeightVector& w,
                  const Assignment& x) {
    g.require_valid();
    if (x.size() != g.num_vars())
        throw std::invalid_argument("assignment length does not match num_vars");
    if (w.size() != g.num_sum_edges())
        throw std::invalid_argument("weight vector size does not match sum-edge count");

    double value = 1.0;
    auto leaf_factor = [&](NodeId leaf) {
        Mark m = x.values[g.var(leaf)];
        bool on = m == Mark::Marginalized || (m == Mark::True) == g.polarity(leaf);
        if (!on) value = 0.0;
    };
    if (g.kind(g.root()) == NodeKind::Indicator) leaf_factor(g.root());
    walk_tree(g, tree, [&](NodeId p, NodeId c) {
        if (g.kind(p) == NodeKind::Sum)
            value *= w[g.edge_index(p, tree.chosen_pos(p))];
        if (g.kind(c) == NodeKind::Indicator) leaf_factor(c);
    });
    return value;
}

std::pair<Graph, WeightVector> tree_as_graph(const Graph& g, const InducedTree& tree,
                                             const WeightVector& w) {
    g.require_valid();
    // Rebuild the tree bottom-up so children get smaller ids than parents.
    // Each tree sum node keeps exactly one edge; its weight is remembered per
    // new node id and mapped into the new graph's edge index space afterwards.
    std::vector<std::int64_t> new_id(g.num_nodes(), -1);
    std::vector<Node> nodes;
    std::vector<double> weight_of_sum;  // parallel to nodes

    auto build = [&](auto&& self, NodeId v) -> NodeId {
        if (new_id[v] >= 0) return static_cast<NodeId>(new_id[v]);
        Node out;
        double sum_weight = 0.0;
        switch (g.kind(v)) {
            case NodeKind::Indicator:
                out = Node::indicator(g.var(v), g.polarity(v));
                break;
            case NodeKind::Sum: {
                std::uint32_t pos = tree.chosen_pos(v);
                NodeId nc = self(self, g.children(v)[pos]);
                out = Node::sum({nc});
                sum_weight = w[g.edge_index(v, pos)];
                break;
            }
            case NodeKind::Product: {
                std::vector<NodeId> ncs;
                for (NodeId c : g.children(v)) ncs.push_back(self(self, c));
                out = Node::product(std::move(ncs));
                break;
            }
        }
        nodes.push_back(std::move(out));
        weight_of_sum.push_back(sum_weight);
        NodeId id = static_cast<NodeId>(nodes.size() - 1);
        new_id[v] = id;
        return id;
    };
    NodeId root = build(build, g.root());
    Graph tg(nodes, root, g.num_vars());

    WeightVector tw(tg.num_sum_edges());
    for (std::size_t d = 0; d < tg.num_sum_edges(); ++d)
        tw[d] = weight_of_sum[tg.sum_edges()[d].parent];
    return {std::move(tg), std::move(tw)};
}

}  // namespace spn
