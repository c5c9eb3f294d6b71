#include <doctest.h>

#include "common.hpp"
#include "oracles.hpp"
#include "spn/graph.hpp"
#include "spn/io.hpp"
#include "spn/rng.hpp"

using namespace spn;
using spn::testing::two_product_graph;

namespace {

bool has_violation(const ValidationReport& r, Violation::Kind kind, NodeId node) {
    for (const auto& v : r.violations)
        if (v.kind == kind && v.node == node) return true;
    return false;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("sum over both indicators of one variable is complete") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));
    nodes.push_back(Node::indicator(0, false));
    nodes.push_back(Node::sum({0, 1}));
    Graph g(nodes, 2, 1);
    CHECK(g.is_valid());
    CHECK(validate(g).ok());
}

TEST_CASE("product over intersecting scopes violates decomposability") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));
    nodes.push_back(Node::indicator(0, false));
    nodes.push_back(Node::product({0, 1}));
    Graph g(nodes, 2, 1);
    CHECK_FALSE(g.is_valid());
    CHECK(has_violation(g.report(), Violation::Kind::NonDecomposable, 2));
}

TEST_CASE("two-product example validates with expected scopes") {
    Graph g = two_product_graph();
    REQUIRE(g.is_valid());
    CHECK(scope_of(g, 0).vars() == std::vector<std::uint32_t>{0});
    CHECK(scope_of(g, 3).vars() == std::vector<std::uint32_t>{1});
    CHECK(scope_of(g, 4).vars() == std::vector<std::uint32_t>{0, 1});
    CHECK(scope_of(g, 6).vars() == std::vector<std::uint32_t>{0, 1});
    CHECK(scope_of(g, 6).full());
}

TEST_CASE("incomplete sum node is reported") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));   // scope {0}
    nodes.push_back(Node::indicator(1, true));   // scope {1}
    nodes.push_back(Node::sum({0, 1}));          // children scopes differ
    Graph g(nodes, 2, 2);
    CHECK(has_violation(g.report(), Violation::Kind::Incomplete, 2));
}

TEST_CASE("cycle is reported") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));
    nodes.push_back(Node::sum({2}));  // 1 -> 2
    nodes.push_back(Node::sum({1}));  // 2 -> 1
    Graph g(nodes, 1, 1);
    CHECK_FALSE(g.is_valid());
    bool saw_cycle = false;
    for (const auto& v : g.report().violations) saw_cycle |= v.kind == Violation::Kind::Cycle;
    CHECK(saw_cycle);
    CHECK(g.topo_order().empty());
}

TEST_CASE("unreachable node is an error, not silently pruned") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));
    nodes.push_back(Node::indicator(0, false));
    nodes.push_back(Node::sum({0, 1}));
    nodes.push_back(Node::indicator(0, true));  // detached
    Graph g(nodes, 2, 1);
    CHECK(has_violation(g.report(), Violation::Kind::Unreachable, 3));
}

TEST_CASE("internal node without children is reported") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));
    nodes.push_back(Node::sum({}));
    nodes.push_back(Node::sum({0, 1}));
    Graph g(nodes, 2, 1);
    CHECK(has_violation(g.report(), Violation::Kind::EmptyChildren, 1));
}

TEST_CASE("root not covering all variables is reported") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));
    nodes.push_back(Node::indicator(0, false));
    nodes.push_back(Node::sum({0, 1}));  // scope {0} but num_vars = 2
    Graph g(nodes, 2, 2);
    CHECK(has_violation(g.report(), Violation::Kind::RootScope, 2));
}

TEST_CASE("out-of-bounds references are construction faults") {
    std::vector<Node> bad_child{Node::indicator(0, true), Node::sum({5})};
    CHECK_THROWS_AS(Graph(bad_child, 1, 1), std::invalid_argument);
    std::vector<Node> bad_var{Node::indicator(3, true)};
    CHECK_THROWS_AS(Graph(bad_var, 0, 2), std::invalid_argument);
    std::vector<Node> ok{Node::indicator(0, true)};
    CHECK_THROWS_AS(Graph(ok, 7, 1), std::invalid_argument);
}

TEST_CASE("scope_of rejects unknown ids") {
    Graph g = two_product_graph();
    CHECK_THROWS_AS(scope_of(g, 99), std::invalid_argument);
}

TEST_CASE("scope equals union of child scopes everywhere") {
    Rng rng(41);
    for (int i = 0; i < 20; ++i) {
        Graph g = generate_random_spn(1 + rng.next_below(6), 1 + rng.next_below(3),
                                      1 + rng.next_below(3), 1 + rng.next_below(3),
                                      rng.next_u64());
        REQUIRE(g.is_valid());
        for (NodeId v = 0; v < g.num_nodes(); ++v) {
            if (g.kind(v) == NodeKind::Indicator) {
                CHECK(scope_of(g, v).vars() == std::vector<std::uint32_t>{g.var(v)});
            } else {
                ScopeSet expect(g.num_vars());
                for (NodeId c : g.children(v)) expect.merge(scope_of(g, c));
                CHECK(scope_of(g, v) == expect);
            }
        }
    }
}

TEST_CASE("validator agrees with the definition-based brute-force check") {
    Rng rng(42);
    int looked_at = 0;
    for (int i = 0; i < 30; ++i) {
        Graph g = generate_random_spn(1 + rng.next_below(5), 1 + rng.next_below(3),
                                      1 + rng.next_below(3), 1 + rng.next_below(3),
                                      rng.next_u64());
        CHECK(g.is_valid() == testing::brute_force_valid(g));
        ++looked_at;
    }
    // and on a mix of hand-built invalid graphs
    std::vector<Node> bad;
    bad.push_back(Node::indicator(0, true));
    bad.push_back(Node::indicator(1, true));
    bad.push_back(Node::product({0, 1}));
    bad.push_back(Node::indicator(0, false));
    bad.push_back(Node::product({2, 3}));  // shares var 0 with node 2's scope
    bad.push_back(Node::indicator(1, false));
    bad.push_back(Node::sum({4, 4}));
    Graph g(bad, 6, 2);
    CHECK_FALSE(testing::brute_force_valid(g));
    CHECK(g.is_valid() == testing::brute_force_valid(g));
    CHECK(looked_at == 30);
}

TEST_CASE("topological order places children before parents") {
    Rng rng(43);
    for (int i = 0; i < 10; ++i) {
        Graph g = generate_random_spn(2 + rng.next_below(5), 2, 2, 2, rng.next_u64());
        auto topo = g.topo_order();
        std::vector<std::size_t> pos(g.num_nodes());
        for (std::size_t p = 0; p < topo.size(); ++p) pos[topo[p]] = p;
        for (NodeId v = 0; v < g.num_nodes(); ++v)
            for (NodeId c : g.children(v)) CHECK(pos[c] < pos[v]);
    }
}

TEST_CASE("sum edges are dense, contiguous, and cover every sum child") {
    Graph g = two_product_graph();
    CHECK(g.num_sum_edges() == 2);
    CHECK(g.edge_index(6, 0) == 0);
    CHECK(g.edge_index(6, 1) == 1);
    CHECK(g.sum_edges()[0].parent == 6);
    CHECK(g.sum_edges()[0].child == 4);

    Rng rng(44);
    for (int i = 0; i < 10; ++i) {
        Graph r = generate_random_spn(2 + rng.next_below(5), 2, 3, 2, rng.next_u64());
        std::size_t expect = 0;
        for (NodeId v = 0; v < r.num_nodes(); ++v)
            if (r.kind(v) == NodeKind::Sum) expect += r.children(v).size();
        CHECK(r.num_sum_edges() == expect);
        std::vector<bool> seen(r.num_sum_edges(), false);
        for (NodeId v = 0; v < r.num_nodes(); ++v) {
            if (r.kind(v) != NodeKind::Sum) continue;
            auto ch = r.children(v);
            for (std::size_t k = 0; k < ch.size(); ++k) {
                std::size_t d = r.edge_index(v, k);
                CHECK_FALSE(seen[d]);
                seen[d] = true;
                CHECK(r.sum_edges()[d].parent == v);
                CHECK(r.sum_edges()[d].child == ch[k]);
            }
        }
    }
}

TEST_CASE("single-child sum nodes are legal and indexed") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));
    nodes.push_back(Node::indicator(0, false));
    nodes.push_back(Node::sum({0, 1}));
    nodes.push_back(Node::sum({2}));
    Graph g(nodes, 3, 1);
    CHECK(g.is_valid());
    CHECK(g.num_sum_edges() == 3);
}

TEST_CASE("shared indicator leaves are permitted") {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));   // shared by both products
    nodes.push_back(Node::indicator(1, true));
    nodes.push_back(Node::indicator(1, false));
    nodes.push_back(Node::product({0, 1}));
    nodes.push_back(Node::product({0, 2}));
    nodes.push_back(Node::sum({3, 4}));
    Graph g(nodes, 5, 2);
    CHECK(g.is_valid());
}

}  // TEST_SUITE
