#include "spn/graph.hpp"

#include <bit>
#include <sstream>
#include <stdexcept>

namespace spn {

std::uint32_t ScopeSet::count() const {
    std::uint32_t c = 0;
    for (auto w : words_) c += static_cast<std::uint32_t>(std::popcount(w));
    return c;
}

std::vector<std::uint32_t> ScopeSet::vars() const {
    std::vector<std::uint32_t> out;
    out.reserve(count());
    for (std::uint32_t v = 0; v < num_vars_; ++v)
        if (test(v)) out.push_back(v);
    return out;
}

std::string Violation::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Cycle: os << "cycle through node " << node; break;
        case Kind::Unreachable: os << "node " << node << " unreachable from root"; break;
        case Kind::EmptyChildren: os << "internal node " << node << " has no children"; break;
        case Kind::Incomplete: os << "sum node " << node << " is incomplete (child scopes differ)"; break;
        case Kind::NonDecomposable:
            os << "product node " << node << " is not decomposable (child scopes intersect)";
            break;
        case Kind::RootScope: os << "root node " << node << " does not cover all variables"; break;
    }
    return os.str();
}

std::string ValidationReport::to_string() const {
    if (ok()) return "OK";
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << '\n';
        os << violations[i].to_string();
    }
    return os.str();
}

Graph::Graph(const std::vector<Node>& nodes, NodeId root, std::uint32_t num_vars)
    : num_vars_(num_vars), root_(root) {
    const std::size_t n = nodes.size();
    if (n == 0) throw std::invalid_argument("graph has no nodes");
    if (root >= n) throw std::invalid_argument("root id out of range");

    kind_.resize(n);
    var_.assign(n, 0);
    polarity_.assign(n, 1);
    child_off_.assign(n + 1, 0);

    std::size_t total_children = 0;
    for (const auto& node : nodes) total_children += node.children.size();
    children_.reserve(total_children);

    for (std::size_t v = 0; v < n; ++v) {
        const Node& node = nodes[v];
        kind_[v] = node.kind;
        child_off_[v] = static_cast<std::uint32_t>(children_.size());
        if (node.kind == NodeKind::Indicator) {
            if (!node.children.empty())
                throw std::invalid_argument("indicator node " + std::to_string(v) + " has children");
            if (node.var >= num_vars)
                throw std::invalid_argument("indicator node " + std::to_string(v) +
                                            " references variable out of range");
            var_[v] = node.var;
            polarity_[v] = node.polarity ? 1 : 0;
        } else {
            for (NodeId c : node.children) {
                if (c >= n)
                    throw std::invalid_argument("node " + std::to_string(v) +
                                                " references child out of range");
                children_.push_back(c);
            }
        }
    }
    child_off_[n] = static_cast<std::uint32_t>(children_.size());

    analyze();
}

void Graph::analyze() {
    const std::size_t n = kind_.size();
    auto add = [&](Violation::Kind k, NodeId v) { report_.violations.push_back({k, v}); };

    // Iterative DFS from the root: postorder gives children-before-parents,
    // a grey node reached again is a cycle.
    enum : std::uint8_t { White, Grey, Black };
    std::vector<std::uint8_t> color(n, White);
    bool cyclic = false;
    {
        struct Frame {
            NodeId v;
            std::uint32_t next_child;
        };
        std::vector<Frame> stack;
        stack.push_back({root_, 0});
        color[root_] = Grey;
        while (!stack.empty()) {
            Frame& f = stack.back();
            auto ch = children(f.v);
            if (f.next_child < ch.size()) {
                NodeId c = ch[f.next_child++];
                if (color[c] == White) {
                    color[c] = Grey;
                    stack.push_back({c, 0});
                } else if (color[c] == Grey && !cyclic) {
                    cyclic = true;
                    add(Violation::Kind::Cycle, c);
                }
            } else {
                color[f.v] = Black;
                topo_.push_back(f.v);
                stack.pop_back();
            }
        }
    }

    for (NodeId v = 0; v < n; ++v)
        if (color[v] == White) add(Violation::Kind::Unreachable, v);

    for (NodeId v = 0; v < n; ++v)
        if (kind_[v] != NodeKind::Indicator && children(v).empty())
            add(Violation::Kind::EmptyChildren, v);

    if (cyclic) {
        topo_.clear();  // no usable evaluation order
        return;
    }

    // Scopes bottom-up over the reachable part, then the per-node definition
    // checks. Unreachable nodes already carry a violation of their own.
    scopes_.assign(n, ScopeSet(num_vars_));
    for (NodeId v : topo_) {
        ScopeSet& s = scopes_[v];
        if (kind_[v] == NodeKind::Indicator) {
            s.set(var_[v]);
            continue;
        }
        auto ch = children(v);
        if (ch.empty()) continue;
        if (kind_[v] == NodeKind::Sum) {
            s = scopes_[ch[0]];
            bool complete = true;
            for (std::size_t i = 1; i < ch.size(); ++i) {
                if (!(scopes_[ch[i]] == scopes_[ch[0]])) complete = false;
                s.merge(scopes_[ch[i]]);
            }
            if (!complete) add(Violation::Kind::Incomplete, v);
        } else {
            bool decomposable = true;
            for (NodeId c : ch) {
                if (s.intersects(scopes_[c])) decomposable = false;
                s.merge(scopes_[c]);
            }
            if (!decomposable) add(Violation::Kind::NonDecomposable, v);
        }
    }
    if (!scopes_[root_].full()) add(Violation::Kind::RootScope, root_);

    if (!report_.ok()) return;

    // Dense sum-edge index: topological order of sum nodes, then child order.
    sum_edge_off_.assign(n, 0);
    for (NodeId v : topo_) {
        if (kind_[v] != NodeKind::Sum) continue;
        sum_edge_off_[v] = static_cast<std::uint32_t>(sum_edges_.size());
        for (NodeId c : children(v)) sum_edges_.push_back({v, c});
    }
}

void Graph::require_valid() const {
    if (!is_valid())
        throw std::invalid_argument("graph failed validation: " + report_.to_string());
}

const ScopeSet& Graph::scope(NodeId v) const {
    if (v >= num_nodes()) throw std::invalid_argument("unknown node id");
    if (scopes_.empty()) throw std::invalid_argument("scopes unavailable: graph is cyclic");
    return scopes_[v];
}

const ScopeSet& scope_of(const Graph& g, NodeId v) { return g.scope(v); }

}  // namespace spn
