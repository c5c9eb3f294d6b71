#ifndef SPN_TESTS_COMMON_HPP
#define SPN_TESTS_COMMON_HPP

#include <cmath>
#include <vector>

#include "spn/graph.hpp"
#include "spn/inference.hpp"

namespace spn::testing {

// The two-variable structure used throughout: sum root over two products,
// each product over one indicator of X1 and one of X2. Node 4 = (x0 & x1),
// node 5 = (!x0 & !x1), root 6.
inline Graph two_product_graph() {
    std::vector<Node> nodes;
    nodes.push_back(Node::indicator(0, true));   // 0
    nodes.push_back(Node::indicator(1, true));   // 1
    nodes.push_back(Node::indicator(0, false));  // 2
    nodes.push_back(Node::indicator(1, false));  // 3
    nodes.push_back(Node::product({0, 1}));      // 4
    nodes.push_back(Node::product({2, 3}));      // 5
    nodes.push_back(Node::sum({4, 5}));          // 6
    return Graph(nodes, 6, 2);
}

inline WeightVector two_product_weights() {
    WeightVector w(2);
    w[0] = 0.3;
    w[1] = 0.7;
    return w;
}

inline Assignment make_x(std::initializer_list<int> vals) {
    std::vector<Mark> m;
    for (int v : vals)
        m.push_back(v == 0 ? Mark::False : v == 1 ? Mark::True : Mark::Marginalized);
    return Assignment(std::move(m));
}

inline bool close(double a, double b, double rtol, double atol = 0.0) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

}  // namespace spn::testing

#endif
