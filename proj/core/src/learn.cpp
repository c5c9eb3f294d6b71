#include "spn/learn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "spn/error.hpp"
#include "spn/rng.hpp"

namespace spn {

Algorithm algorithm_from_name(std::string_view name) {
    if (name == "pgd") return Algorithm::PGD;
    if (name == "eg") return Algorithm::EG;
    if (name == "sma") return Algorithm::SMA;
    if (name == "cccp") return Algorithm::CCCP;
    throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

std::string_view algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::PGD: return "pgd";
        case Algorithm::EG: return "eg";
        case Algorithm::SMA: return "sma";
        case Algorithm::CCCP: return "cccp";
    }
    return "?";
}

std::string_view stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::Converged: return "converged";
        case StopReason::MaxIters: return "max_iters";
        case StopReason::LineSearchFailed: return "line_search_failed";
    }
    return "?";
}

void LearnerConfig::check() const {
    if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
    if (!(stop_tol > 0)) throw std::invalid_argument("stop_tol must be positive");
    if (!(init_step > 0)) throw std::invalid_argument("init_step must be positive");
    if (!(shrink > 0 && shrink < 1)) throw std::invalid_argument("shrink must lie in (0,1)");
    if (!(proj_margin > 0)) throw std::invalid_argument("proj_margin must be positive");
    if (smoothing < 0) throw std::invalid_argument("smoothing must be nonnegative");
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

namespace {

constexpr std::size_t kNoZeroInstance = static_cast<std::size_t>(-1);
constexpr int kMaxBacktrack = 30;

enum class EdgeStat { None, Gradient, CccpRaw };

struct BatchPartial {
    double sum_log_f = 0.0;
    std::size_t zero_instance = kNoZeroInstance;
    std::vector<double> edge_stats;
};

// One pass over the data: per-instance trace, log-value accumulation and the
// requested per-edge statistic. Instances are split into one contiguous chunk
// per worker; chunk partials are combined by a fixed pairwise tree so results
// are bit-identical for a given worker count.
BatchPartial run_batch(const Graph& g, const WeightVector& w, const Dataset& data,
                       EdgeStat stat, int threads) {
    const std::size_t m = data.num_instances();
    const std::size_t d_count = g.num_sum_edges();
    const auto edges = g.sum_edges();
    const std::size_t workers =
        std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(m, 1));

    std::vector<BatchPartial> parts(workers);
    auto chunk = [&](std::size_t t, std::size_t begin, std::size_t end) {
        BatchPartial& p = parts[t];
        if (stat != EdgeStat::None) p.edge_stats.assign(d_count, 0.0);
        Evaluator ev(g);
        ev.set_weights(w);
        auto log_w = ev.log_weights();
        for (std::size_t i = begin; i < end; ++i) {
            const EvalTrace& tr = ev.evaluate(data.row(i));
            const double log_root = tr.log_value[g.root()];
            if (log_root == kNegInf) {
                p.zero_instance = i;
                return;
            }
            p.sum_log_f += log_root;
            if (stat == EdgeStat::None) continue;
            ev.differentiate();
            for (std::size_t d = 0; d < d_count; ++d) {
                double e = tr.log_deriv[edges[d].parent] + tr.log_value[edges[d].child] -
                           log_root;
                if (stat == EdgeStat::CccpRaw) e += log_w[d];
                if (e != kNegInf) p.edge_stats[d] += std::exp(e);
            }
        }
    };

    if (workers == 1) {
        chunk(0, 0, m);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) {
            std::size_t begin = m * t / workers;
            std::size_t end = m * (t + 1) / workers;
            pool.emplace_back(chunk, t, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t gap = 1; gap < workers; gap *= 2) {
        for (std::size_t i = 0; i + gap < workers; i += 2 * gap) {
            BatchPartial& a = parts[i];
            BatchPartial& b = parts[i + gap];
            a.sum_log_f += b.sum_log_f;
            a.zero_instance = std::min(a.zero_instance, b.zero_instance);
            for (std::size_t d = 0; d < a.edge_stats.size(); ++d)
                a.edge_stats[d] += b.edge_stats[d];
        }
    }
    return std::move(parts[0]);
}

double batch_ll(const Graph& g, const WeightVector& w, const Dataset& data, int threads,
                bool* zero_prob = nullptr) {
    BatchPartial p = run_batch(g, w, data, EdgeStat::None, threads);
    if (p.zero_instance != kNoZeroInstance) {
        if (zero_prob) {
            *zero_prob = true;
            return kNegInf;
        }
        throw ZeroProbabilityError(p.zero_instance);
    }
    if (zero_prob) *zero_prob = false;
    Evaluator ev(g);
    ev.set_weights(w);
    return p.sum_log_f - static_cast<double>(data.num_instances()) * ev.log_partition();
}

void check_data(const Graph& g, const Dataset& data) {
    g.require_valid();
    if (data.empty()) throw std::invalid_argument("empty dataset");
    if (data.num_vars() != g.num_vars())
        throw std::invalid_argument("dataset width does not match num_vars");
}

bool positive_finite(const WeightVector& w) {
    for (double v : w.values)
        if (!(v > 0.0) || !std::isfinite(v)) return false;
    return true;
}

// Renormalize raw per-edge statistics per sum node; a node with all-zero
// statistics (never reached with nonzero derivative by any instance) keeps
// its previous weights.
WeightVector renormalize_stats(const Graph& g, const WeightVector& prev,
                               const std::vector<double>& raw, double smoothing) {
    WeightVector out(g.num_sum_edges());
    for (NodeId v : g.topo_order()) {
        if (g.kind(v) != NodeKind::Sum) continue;
        const std::size_t d0 = g.edge_index(v, 0);
        const std::size_t k = g.children(v).size();
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) total += raw[d0 + j] + smoothing;
        if (total > 0.0) {
            for (std::size_t j = 0; j < k; ++j) out[d0 + j] = (raw[d0 + j] + smoothing) / total;
        } else {
            double prev_total = 0.0;
            for (std::size_t j = 0; j < k; ++j) prev_total += prev[d0 + j];
            for (std::size_t j = 0; j < k; ++j) out[d0 + j] = prev[d0 + j] / prev_total;
        }
    }
    return out;
}

}  // namespace

GradientPair gradient(const Graph& g, const WeightVector& w, const Dataset& data,
                      int threads) {
    check_data(g, data);
    BatchPartial p = run_batch(g, w, data, EdgeStat::Gradient, threads);
    if (p.zero_instance != kNoZeroInstance) throw ZeroProbabilityError(p.zero_instance);

    GradientPair out;
    out.g1 = std::move(p.edge_stats);
    out.g2.assign(g.num_sum_edges(), 0.0);

    Evaluator ev(g);
    ev.set_weights(w);
    const double log_z = ev.log_partition();
    const EvalTrace& tr = ev.differentiate();
    const double m = static_cast<double>(data.num_instances());
    const auto edges = g.sum_edges();
    for (std::size_t d = 0; d < out.g2.size(); ++d) {
        double e = tr.log_deriv[edges[d].parent] + tr.log_value[edges[d].child] - log_z;
        if (e != kNegInf) out.g2[d] = m * std::exp(e);
    }
    return out;
}

WeightVector pgd_step(const WeightVector& w, const GradientPair& grad, double step,
                      double proj_margin) {
    WeightVector out(w.size());
    for (std::size_t d = 0; d < w.size(); ++d)
        out[d] = std::max(w[d] + step * grad.diff(d), proj_margin);
    return out;
}

WeightVector eg_step(const WeightVector& w, const GradientPair& grad, double step) {
    WeightVector out(w.size());
    for (std::size_t d = 0; d < w.size(); ++d) out[d] = w[d] * std::exp(step * grad.diff(d));
    return out;
}

WeightVector sma_step(const WeightVector& w, const GradientPair& grad, double step) {
    WeightVector out(w.size());
    for (std::size_t d = 0; d < w.size(); ++d)
        out[d] = w[d] * std::exp(step * w[d] * grad.diff(d));
    return out;
}

LineSearchResult line_search(const Graph& g, const Dataset& data, const WeightVector& w,
                             double current_ll, const GradientPair& grad,
                             const StepFn& step_fn, double gamma0, double shrink,
                             int threads) {
    check_data(g, data);
    double gamma = gamma0;
    for (int k = 0; k <= kMaxBacktrack; ++k, gamma *= shrink) {
        WeightVector candidate = step_fn(w, grad, gamma);
        if (!positive_finite(candidate)) continue;  // exp overflow/underflow
        bool zero_prob = false;
        double ll = batch_ll(g, candidate, data, threads, &zero_prob);
        if (zero_prob) continue;
        if (ll > current_ll) return {std::move(candidate), gamma, ll, true};
    }
    return {w, 0.0, current_ll, false};
}

WeightVector cccp_step(const Graph& g, const WeightVector& w, const Dataset& data,
                       double smoothing, int threads) {
    check_data(g, data);
    BatchPartial p = run_batch(g, w, data, EdgeStat::CccpRaw, threads);
    if (p.zero_instance != kNoZeroInstance) throw ZeroProbabilityError(p.zero_instance);
    return renormalize_stats(g, w, p.edge_stats, smoothing);
}

WeightVector normalize_locally(const Graph& g, const WeightVector& w) {
    g.require_valid();
    Evaluator ev(g);
    ev.set_weights(w);
    ev.log_partition();
    const auto& val = ev.trace().log_value;

    WeightVector out(g.num_sum_edges());
    for (NodeId v : g.topo_order()) {
        if (g.kind(v) != NodeKind::Sum) continue;
        if (val[v] == kNegInf)
            throw std::invalid_argument("sum node " + std::to_string(v) +
                                        " has zero total weight, cannot normalize");
        auto ch = g.children(v);
        const std::size_t d0 = g.edge_index(v, 0);
        // w'_ij = w_ij f_j(1) / f_i(1), then one exact renormalization to
        // pin the sum to 1 in floating point.
        double total = 0.0;
        for (std::size_t j = 0; j < ch.size(); ++j) {
            out[d0 + j] = w[d0 + j] * std::exp(val[ch[j]] - val[v]);
            total += out[d0 + j];
        }
        for (std::size_t j = 0; j < ch.size(); ++j) out[d0 + j] /= total;
    }
    return out;
}

WeightVector init_weights(const Graph& g, std::uint64_t seed) {
    g.require_valid();
    Rng rng(seed);
    WeightVector w(g.num_sum_edges());
    for (std::size_t d = 0; d < w.size(); ++d) w[d] = rng.next_positive();
    return normalize_locally(g, w);
}

TrainRun train(const Graph& g, const Dataset& data, const LearnerConfig& config) {
    check_data(g, data);
    config.check();
    if (config.init_weights && config.init_weights->size() != g.num_sum_edges())
        throw std::invalid_argument("warm-start weight vector size does not match graph");

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    TrainRun run;
    run.config = config;
    const double m = static_cast<double>(data.num_instances());

    // The seeded init is already locally normalized; only warm starts need
    // the normalization CCCP assumes. Leaving the shared init untouched keeps
    // the iteration-0 likelihood bit-identical across all four algorithms.
    WeightVector w = config.init_weights ? *config.init_weights : init_weights(g, config.seed);
    if (config.algorithm == Algorithm::CCCP && config.init_weights)
        w = normalize_locally(g, w);

    StepFn step_fn;
    switch (config.algorithm) {
        case Algorithm::PGD:
            step_fn = [&config](const WeightVector& cur, const GradientPair& gr, double s) {
                return pgd_step(cur, gr, s, config.proj_margin);
            };
            break;
        case Algorithm::EG:
            step_fn = eg_step;
            break;
        case Algorithm::SMA:
            step_fn = sma_step;
            break;
        case Algorithm::CCCP:
            break;
    }

    double ll = batch_ll(g, w, data, config.threads);
    run.ll_curve.push_back(ll);
    run.iter_wall_ms.push_back(elapsed_ms());
    if (config.record_snapshots) run.snapshots.push_back(w);
    run.stop_reason = StopReason::MaxIters;

    for (int k = 1; k <= config.max_iters; ++k) {
        double new_ll;
        if (config.algorithm == Algorithm::CCCP) {
            w = cccp_step(g, w, data, config.smoothing, config.threads);
            new_ll = batch_ll(g, w, data, config.threads);
        } else {
            // First-order methods step on the mean objective: the protocol's
            // step-size ladder (1.0 shrunk by 0.8, at most 30 times) only
            // spans a useful range at per-instance gradient scale.
            GradientPair grad = gradient(g, w, data, config.threads);
            for (std::size_t d = 0; d < grad.g1.size(); ++d) {
                grad.g1[d] /= m;
                grad.g2[d] /= m;
            }
            LineSearchResult res = line_search(g, data, w, ll, grad, step_fn,
                                               config.init_step, config.shrink, config.threads);
            if (!res.accepted) {
                run.stop_reason = StopReason::LineSearchFailed;
                break;
            }
            w = std::move(res.w);
            new_ll = res.ll;
            run.gamma_accepted.push_back(res.gamma);
        }
        run.ll_curve.push_back(new_ll);
        run.iter_wall_ms.push_back(elapsed_ms());
        if (config.record_snapshots) run.snapshots.push_back(w);
        const double delta = std::abs(new_ll - ll) / m;
        ll = new_ll;
        if (delta < config.stop_tol) {
            run.stop_reason = StopReason::Converged;
            break;
        }
    }

    run.iters_used = static_cast<int>(run.ll_curve.size()) - 1;
    run.final_w = std::move(w);
    run.wall_time = elapsed_ms() / 1e3;
    return run;
}

}  // namespace spn
