#include <benchmark/benchmark.h>

#include "spn/io.hpp"
#include "spn/learn.hpp"
#include "spn/mixture.hpp"
#include "spn/rng.hpp"

using namespace spn;

namespace {

// depth/fan-out presets indexed by benchmark argument, roughly 60 / 800 /
// 9000 nodes
Graph sized_graph(int size_class) {
    switch (size_class) {
        case 0: return generate_random_spn(8, 2, 2, 2, 17);
        case 1: return generate_random_spn(26, 3, 3, 2, 17);
        default: return generate_random_spn(60, 4, 3, 2, 17);
    }
}

void BM_evaluate(benchmark::State& state) {
    Graph g = sized_graph(static_cast<int>(state.range(0)));
    WeightVector w = init_weights(g, 1);
    Dataset data = sample_dataset(g, w, 64, 2);
    Evaluator ev(g);
    ev.set_weights(w);
    std::size_t i = 0;
    for (auto _ : state) {
        const EvalTrace& tr = ev.evaluate(data.row(i % 64));
        benchmark::DoNotOptimize(tr.log_value.data());
        ++i;
    }
    state.SetItemsProcessed(state.iterations() * g.num_nodes());
}
BENCHMARK(BM_evaluate)->Arg(0)->Arg(1)->Arg(2);

void BM_evaluate_differentiate(benchmark::State& state) {
    Graph g = sized_graph(static_cast<int>(state.range(0)));
    WeightVector w = init_weights(g, 1);
    Dataset data = sample_dataset(g, w, 64, 2);
    Evaluator ev(g);
    ev.set_weights(w);
    std::size_t i = 0;
    for (auto _ : state) {
        ev.evaluate(data.row(i % 64));
        const EvalTrace& tr = ev.differentiate();
        benchmark::DoNotOptimize(tr.log_deriv.data());
        ++i;
    }
    state.SetItemsProcessed(state.iterations() * g.num_nodes());
}
BENCHMARK(BM_evaluate_differentiate)->Arg(0)->Arg(1)->Arg(2);

void BM_cccp_iteration(benchmark::State& state) {
    Graph g = sized_graph(static_cast<int>(state.range(0)));
    WeightVector w = init_weights(g, 1);
    Dataset data = sample_dataset(g, w, 256, 2);
    for (auto _ : state) {
        w = cccp_step(g, w, data, 1e-3);
        benchmark::DoNotOptimize(w.values.data());
    }
    state.SetItemsProcessed(state.iterations() * data.num_instances() * g.num_nodes());
}
BENCHMARK(BM_cccp_iteration)->Arg(0)->Arg(1);

void BM_cardinality(benchmark::State& state) {
    Graph g = sized_graph(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        Cardinality c = cardinality(g);
        benchmark::DoNotOptimize(c.log_approx);
    }
}
BENCHMARK(BM_cardinality)->Arg(0)->Arg(1)->Arg(2);

void BM_normalize_locally(benchmark::State& state) {
    Graph g = sized_graph(static_cast<int>(state.range(0)));
    Rng rng(3);
    WeightVector w(g.num_sum_edges());
    for (std::size_t d = 0; d < w.size(); ++d) w[d] = 0.1 + rng.next_double();
    for (auto _ : state) {
        WeightVector n = normalize_locally(g, w);
        benchmark::DoNotOptimize(n.values.data());
    }
}
BENCHMARK(BM_normalize_locally)->Arg(0)->Arg(1)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
