#ifndef SPN_LEARN_HPP
#define SPN_LEARN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spn/dataset.hpp"
#include "spn/graph.hpp"
#include "spn/inference.hpp"

namespace spn {

enum class Algorithm { PGD, EG, SMA, CCCP };

Algorithm algorithm_from_name(std::string_view name);  // "pgd" | "eg" | "sma" | "cccp"
std::string_view algorithm_name(Algorithm a);

// Defaults follow the experimental protocol: 50 iterations, stop when the
// mean train log-likelihood moves less than 1e-3, backtracking from step 1.0
// with shrink 0.8, PGD projection margin 0.01, CCCP smoothing 1e-3.
struct LearnerConfig {
    Algorithm algorithm = Algorithm::CCCP;
    int max_iters = 50;
    double stop_tol = 1e-3;      // absolute change of mean LL per instance
    double init_step = 1.0;      // gamma_0
    double shrink = 0.8;         // backtracking factor
    double proj_margin = 0.01;   // PGD epsilon
    double smoothing = 1e-3;     // CCCP additive smoothing
    std::uint64_t seed = 0;      // weight initialization
    int threads = 1;             // per-instance data parallelism
    bool record_snapshots = false;             // keep per-iteration weights
    std::optional<WeightVector> init_weights;  // warm start, skips random init

    void check() const;  // throws std::invalid_argument on a bad combination
};

// Gradients of the two objective halves with respect to w: g1 for the data
// term sum_m log f(x_m|w), g2 for the partition term M log f(1|w).
struct GradientPair {
    std::vector<double> g1;
    std::vector<double> g2;

    double diff(std::size_t d) const { return g1[d] - g2[d]; }
};

enum class StopReason { Converged, MaxIters, LineSearchFailed };
std::string_view stop_reason_name(StopReason r);

struct TrainRun {
    std::vector<double> ll_curve;       // total train LL; size iters_used + 1
    int iters_used = 0;
    WeightVector final_w;
    double wall_time = 0.0;             // seconds
    StopReason stop_reason = StopReason::MaxIters;
    std::vector<double> gamma_accepted; // per accepted iteration; empty for CCCP
    std::vector<double> iter_wall_ms;   // cumulative, aligned with ll_curve
    std::vector<WeightVector> snapshots;  // aligned with ll_curve when recorded
    LearnerConfig config;               // run metadata
};

// Batch gradient via one evaluate+differentiate pass per instance plus one
// marginal pass. Throws ZeroProbabilityError when an instance has f(x)=0.
GradientPair gradient(const Graph& g, const WeightVector& w, const Dataset& data,
                      int threads = 1);

// One update of each rule. All are pure functions of (w, grad, step).
WeightVector pgd_step(const WeightVector& w, const GradientPair& grad, double step,
                      double proj_margin);
WeightVector eg_step(const WeightVector& w, const GradientPair& grad, double step);
WeightVector sma_step(const WeightVector& w, const GradientPair& grad, double step);

using StepFn = std::function<WeightVector(const WeightVector&, const GradientPair&, double)>;

struct LineSearchResult {
    WeightVector w;       // stepped weights, or the input w on failure
    double gamma = 0.0;   // accepted step size
    double ll = 0.0;      // train LL at the returned weights
    bool accepted = false;
};

// Backtracking from gamma0: accepts the first gamma0 * shrink^k (k <= 30)
// whose stepped weights strictly increase the training log-likelihood.
LineSearchResult line_search(const Graph& g, const Dataset& data, const WeightVector& w,
                             double current_ll, const GradientPair& grad,
                             const StepFn& step_fn, double gamma0, double shrink,
                             int threads = 1);

// Closed-form multiplicative update. For every sum node the unnormalized
// statistic per edge is sum_m w_ij (f_j(x_m)/f(x_m)) df/df_i(x_m); smoothing
// is added before renormalizing. A sum node whose statistics are all zero
// keeps its previous weights (renormalized). Weights come out locally
// normalized.
WeightVector cccp_step(const Graph& g, const WeightVector& w, const Dataset& data,
                       double smoothing, int threads = 1);

// Local normalization: scales every sum node's weights to sum to one without
// changing the induced distribution; afterwards f(1|w') = 1.
WeightVector normalize_locally(const Graph& g, const WeightVector& w);

// Runs the configured algorithm from a seeded random initialization (or the
// warm-start weights). Records total train LL after every accepted
// iteration; stops on stop_tol, max_iters, or line-search failure. Throws
// ZeroProbabilityError if any instance has zero probability at any iterate.
TrainRun train(const Graph& g, const Dataset& data, const LearnerConfig& config);

// The shared seeded initialization used by train: i.i.d. uniform(0,1) per
// sum edge, then locally normalized.
WeightVector init_weights(const Graph& g, std::uint64_t seed);

}  // namespace spn

#endif
