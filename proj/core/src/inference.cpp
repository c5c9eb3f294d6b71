#include "spn/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "spn/dataset.hpp"

namespace spn {
namespace {

// Top-down differentiation pass shared by Evaluator and the one-shot wrapper.
// Parents before children: walk the topological order backwards and push each
// node's contribution down to its children.
void run_top_down(const Graph& g, std::span<const double> log_w, EvalTrace& trace,
                  std::vector<double>& scratch) {
    auto& val = trace.log_value;
    auto& der = trace.log_deriv;
    der.assign(g.num_nodes(), kNegInf);
    der[g.root()] = 0.0;

    auto topo = g.topo_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        NodeId v = *it;
        if (der[v] == kNegInf) continue;  // no nonzero path from the root
        auto ch = g.children(v);
        if (g.kind(v) == NodeKind::Sum) {
            const std::size_t d0 = g.edge_index(v, 0);
            for (std::size_t k = 0; k < ch.size(); ++k)
                der[ch[k]] = log_add(der[ch[k]], der[v] + log_w[d0 + k]);
        } else if (g.kind(v) == NodeKind::Product) {
            // d f_v / d f_c = product of the siblings' values, formed from
            // prefix/suffix log-sums so a zero-valued child never forces a
            // 0/0 division.
            const std::size_t k = ch.size();
            if (scratch.size() < 2 * k) scratch.resize(2 * k);
            double* prefix = scratch.data();
            double* suffix = scratch.data() + k;
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                prefix[i] = acc;
                acc += val[ch[i]];
            }
            acc = 0.0;
            for (std::size_t i = k; i-- > 0;) {
                suffix[i] = acc;
                acc += val[ch[i]];
            }
            for (std::size_t i = 0; i < k; ++i)
                der[ch[i]] = log_add(der[ch[i]], der[v] + prefix[i] + suffix[i]);
        }
    }
}

}  // namespace

Evaluator::Evaluator(const Graph& g) : graph_(&g) {
    g.require_valid();
    trace_.log_value.assign(g.num_nodes(), kNegInf);
    trace_.log_deriv.assign(g.num_nodes(), kNegInf);
    std::size_t max_fanout = 0;
    for (NodeId v = 0; v < g.num_nodes(); ++v)
        max_fanout = std::max(max_fanout, g.children(v).size());
    child_scratch_.assign(2 * max_fanout, 0.0);
    log_w_.assign(g.num_sum_edges(), 0.0);
}

void Evaluator::set_weights(const WeightVector& w) {
    if (w.size() != graph_->num_sum_edges())
        throw std::invalid_argument("weight vector size does not match sum-edge count");
    for (std::size_t d = 0; d < w.size(); ++d) {
        // The optimization domain is strictly positive, but CCCP's closed
        // form can land on the boundary; a zero weight evaluates as log 0.
        if (w[d] < 0.0 || !std::isfinite(w[d]))
            throw std::invalid_argument("weights must be nonnegative and finite");
        log_w_[d] = std::log(w[d]);
    }
}

void Evaluator::run_bottom_up(std::span<const Mark> x, bool marginal_all) {
    const Graph& g = *graph_;
    if (!marginal_all && x.size() != g.num_vars())
        throw std::invalid_argument("assignment length does not match num_vars");

    auto& val = trace_.log_value;
    for (NodeId v : g.topo_order()) {
        switch (g.kind(v)) {
            case NodeKind::Indicator: {
                if (marginal_all) {
                    val[v] = 0.0;
                } else {
                    Mark m = x[g.var(v)];
                    bool on = m == Mark::Marginalized ||
                              (m == Mark::True) == g.polarity(v);
                    val[v] = on ? 0.0 : kNegInf;
                }
                break;
            }
            case NodeKind::Product: {
                double acc = 0.0;
                for (NodeId c : g.children(v)) acc += val[c];
                val[v] = acc;
                break;
            }
            case NodeKind::Sum: {
                auto ch = g.children(v);
                const std::size_t d0 = g.edge_index(v, 0);
                if (ch.size() == 1) {
                    val[v] = log_w_[d0] + val[ch[0]];
                    break;
                }
                double hi = kNegInf;
                for (std::size_t k = 0; k < ch.size(); ++k)
                    hi = std::max(hi, log_w_[d0 + k] + val[ch[k]]);
                if (hi == kNegInf) {
                    val[v] = kNegInf;
                    break;
                }
                double acc = 0.0;
                for (std::size_t k = 0; k < ch.size(); ++k)
                    acc += std::exp(log_w_[d0 + k] + val[ch[k]] - hi);
                val[v] = hi + std::log(acc);
                break;
            }
        }
    }
}

const EvalTrace& Evaluator::evaluate(std::span<const Mark> x) {
    run_bottom_up(x, false);
    return trace_;
}

double Evaluator::log_partition() {
    run_bottom_up({}, true);
    return trace_.log_value[graph_->root()];
}

const EvalTrace& Evaluator::differentiate() {
    run_top_down(*graph_, log_w_, trace_, child_scratch_);
    return trace_;
}

EvalTrace evaluate(const Graph& g, const WeightVector& w, const Assignment& x) {
    Evaluator ev(g);
    ev.set_weights(w);
    return ev.evaluate(x);
}

double evaluate_partition(const Graph& g, const WeightVector& w) {
    Evaluator ev(g);
    ev.set_weights(w);
    return ev.log_partition();
}

EvalTrace& differentiate(const Graph& g, const WeightVector& w, EvalTrace& trace) {
    g.require_valid();
    if (trace.log_value.size() != g.num_nodes())
        throw std::invalid_argument("trace does not match graph");
    if (w.size() != g.num_sum_edges())
        throw std::invalid_argument("weight vector size does not match sum-edge count");
    std::vector<double> log_w(w.size());
    for (std::size_t d = 0; d < w.size(); ++d) {
        if (w[d] < 0.0 || !std::isfinite(w[d]))
            throw std::invalid_argument("weights must be nonnegative and finite");
        log_w[d] = std::log(w[d]);
    }
    std::vector<double> scratch;
    run_top_down(g, log_w, trace, scratch);
    return trace;
}

double log_likelihood(const Graph& g, const WeightVector& w, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("empty dataset");
    if (data.num_vars() != g.num_vars())
        throw std::invalid_argument("dataset width does not match num_vars");
    Evaluator ev(g);
    ev.set_weights(w);
    const double log_z = ev.log_partition();
    double total = 0.0;
    const std::size_t m = data.num_instances();
    for (std::size_t i = 0; i < m; ++i) {
        double lv = ev.evaluate(data.row(i)).log_value[g.root()];
        if (lv == kNegInf) return kNegInf;
        total += lv;
    }
    return total - static_cast<double>(m) * log_z;
}

}  // namespace spn
