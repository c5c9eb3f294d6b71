#ifndef SPN_INFERENCE_HPP
#define SPN_INFERENCE_HPP

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "spn/graph.hpp"

namespace spn {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-variable evidence. Marginalized makes both indicators of the variable
// evaluate to 1, which sums the variable out.
enum class Mark : std::uint8_t { False = 0, True = 1, Marginalized = 2 };

struct Assignment {
    std::vector<Mark> values;

    Assignment() = default;
    explicit Assignment(std::vector<Mark> v) : values(std::move(v)) {}
    static Assignment all_marginalized(std::uint32_t num_vars) {
        return Assignment(std::vector<Mark>(num_vars, Mark::Marginalized));
    }
    std::size_t size() const { return values.size(); }
};

// log f_v(x|w) and log df_S/df_v per node; -inf encodes value 0.
struct EvalTrace {
    std::vector<double> log_value;
    std::vector<double> log_deriv;

    double log_root_value(const Graph& g) const { return log_value[g.root()]; }
};

// log(exp(a) + exp(b)) with -inf as the additive identity.
inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = a > b ? a : b;
    double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

// Reusable evaluation workspace bound to one graph. Weights are cached in
// log form once per set_weights; evaluate/differentiate then run
// allocation-free. One Evaluator per worker; the graph may be shared.
class Evaluator {
public:
    explicit Evaluator(const Graph& g);

    const Graph& graph() const { return *graph_; }

    // Throws std::invalid_argument on a size mismatch or nonpositive entries.
    void set_weights(const WeightVector& w);
    std::span<const double> log_weights() const { return log_w_; }

    // Bottom-up pass; fills log_value. The trace stays valid until the next
    // evaluate/set_weights call.
    const EvalTrace& evaluate(std::span<const Mark> x);
    const EvalTrace& evaluate(const Assignment& x) { return evaluate(std::span(x.values)); }
    // Bottom-up pass with every variable marginalized: log f_S(1|w).
    double log_partition();

    // Top-down pass over the last evaluated input; fills log_deriv.
    const EvalTrace& differentiate();

    const EvalTrace& trace() const { return trace_; }

private:
    const Graph* graph_;
    std::vector<double> log_w_;
    EvalTrace trace_;
    std::vector<double> child_scratch_;  // prefix/suffix log-products

    void run_bottom_up(std::span<const Mark> x, bool marginal_all);
};

// One-shot convenience wrappers over Evaluator.

// Values-only trace of f(.|w) at x.
EvalTrace evaluate(const Graph& g, const WeightVector& w, const Assignment& x);

// log f_S(1|w): the normalization constant in log space.
double evaluate_partition(const Graph& g, const WeightVector& w);

// Fills trace.log_deriv for a trace produced by evaluate on the same
// (graph, w, x). Returns the same trace.
EvalTrace& differentiate(const Graph& g, const WeightVector& w, EvalTrace& trace);

class Dataset;

// Sum over instances of log Pr(x_m|w); -inf when any instance has zero
// probability. Throws std::invalid_argument on an empty dataset.
double log_likelihood(const Graph& g, const WeightVector& w, const Dataset& data);

}  // namespace spn

#endif
