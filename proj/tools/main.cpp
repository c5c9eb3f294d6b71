// Command-line front end: validation, inference, cardinality, local
// normalization, random structure generation, training, and the four-way
// optimizer comparison.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "spn/error.hpp"
#include "spn/io.hpp"
#include "spn/learn.hpp"
#include "spn/mixture.hpp"

namespace fs = std::filesystem;
using namespace spn;

namespace {

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

// "-" reads the model from standard input, so structures can be piped
// between subcommands.
Model read_model(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return parse_spn(ss.str(), "<stdin>");
    }
    return load_model(path);
}

void write_model_or_stdout(const Model& m, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << serialize_spn(m.graph, m.weights);
    } else {
        save_model(m, out);
    }
}

struct TrainFlags {
    std::string algo = "cccp";
    LearnerConfig config;
    bool timing = false;

    void add_common(CLI::App* cmd) {
        cmd->add_option("--max-iters", config.max_iters, "Maximum iterations")
            ->capture_default_str();
        cmd->add_option("--tol", config.stop_tol, "Stop when |mean LL change| drops below this")
            ->capture_default_str();
        cmd->add_option("--step", config.init_step, "Initial step size for PGD/EG/SMA")
            ->capture_default_str();
        cmd->add_option("--shrink", config.shrink, "Backtracking shrink factor")
            ->capture_default_str();
        cmd->add_option("--margin", config.proj_margin, "PGD projection margin")
            ->capture_default_str();
        cmd->add_option("--smooth", config.smoothing, "CCCP smoothing constant")
            ->capture_default_str();
        cmd->add_option("--seed", config.seed, "Weight initialization seed")
            ->capture_default_str();
        cmd->add_option("--threads", config.threads, "Worker count for per-instance parallelism")
            ->envname("SPN_THREADS")
            ->capture_default_str();
        cmd->add_flag("--timing", timing,
                      "Emit measured wall times (off by default: outputs stay byte-reproducible)");
    }
};

void print_run(const std::string& name, const TrainRun& run, std::size_t m, bool timing) {
    double final_ll = run.ll_curve.back();
    if (!name.empty()) std::cout << name << ' ';
    std::cout << "final_ll " << fmt(final_ll) << " mean_ll "
              << fmt(final_ll / static_cast<double>(m)) << " iterations " << run.iters_used
              << " stop " << stop_reason_name(run.stop_reason);
    if (timing) std::cout << " wall_s " << fmt(run.wall_time);
    std::cout << '\n';
}

int cmd_validate(const std::string& model_path) {
    Model m = read_model(model_path);  // throws with the report when invalid
    std::cout << "OK: " << m.graph.num_nodes() << " nodes, " << m.graph.num_vars()
              << " vars, " << m.graph.num_sum_edges() << " sum edges\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& query) {
    Model m = read_model(model_path);
    Evaluator ev(m.graph);
    ev.set_weights(m.weights);
    const double log_z = ev.log_partition();
    auto print_one = [&](std::span<const Mark> x) {
        double lv = ev.evaluate(x).log_value[m.graph.root()];
        std::cout << fmt(lv - log_z) << '\n';
    };
    if (!query.empty()) {
        Assignment a = parse_query(query, m.graph.num_vars());
        print_one(a.values);
    } else {
        Dataset data = load_dataset(data_path);
        if (data.num_vars() != m.graph.num_vars())
            throw std::invalid_argument("dataset width does not match model");
        for (std::size_t i = 0; i < data.num_instances(); ++i) print_one(data.row(i));
    }
    return 0;
}

int cmd_cardinality(const std::string& model_path) {
    Model m = read_model(model_path);
    Cardinality c = cardinality(m.graph);
    std::string dec = c.to_decimal();
    if (dec.size() <= 64) {
        std::cout << dec << '\n';
    } else {
        std::cout << "log10 " << fmt(c.log_approx / std::log(10.0)) << '\n';
    }
    return 0;
}

int cmd_normalize(const std::string& model_path, const std::string& out) {
    Model m = read_model(model_path);
    m.weights = normalize_locally(m.graph, m.weights);
    write_model_or_stdout(m, out);
    return 0;
}

int cmd_gen(std::uint32_t vars, std::uint32_t depth, std::uint32_t sum_fanout,
            std::uint32_t prod_fanout, std::uint64_t seed, const std::string& out) {
    Graph g = generate_random_spn(vars, depth, sum_fanout, prod_fanout, seed);
    WeightVector w = init_weights(g, seed + 0x9e3779b97f4a7c15ull);
    write_model_or_stdout({std::move(g), std::move(w)}, out);
    return 0;
}

int cmd_train(const std::string& model_path, const std::string& data_path, TrainFlags& flags,
              const std::string& init_weights_path, const std::string& out_curve,
              const std::string& out_model) {
    Model m = read_model(model_path);
    Dataset data = load_dataset(data_path);
    flags.config.algorithm = algorithm_from_name(flags.algo);
    if (!init_weights_path.empty()) flags.config.init_weights = load_weights(init_weights_path);

    TrainRun run = train(m.graph, data, flags.config);
    if (!out_curve.empty()) export_curve(run, out_curve, flags.timing);
    if (!out_model.empty()) save_model({std::move(m.graph), run.final_w}, out_model);
    print_run("", run, data.num_instances(), flags.timing);
    return 0;
}

int cmd_compare(const std::string& model_path, const std::string& data_path, TrainFlags& flags,
                const std::string& out_dir) {
    Model m = read_model(model_path);
    Dataset data = load_dataset(data_path);
    if (!out_dir.empty()) fs::create_directories(out_dir);

    std::ostringstream summary;
    summary << "algorithm,final_ll,mean_ll,iterations,stop_reason,wall_s\n";
    for (Algorithm algo : {Algorithm::PGD, Algorithm::EG, Algorithm::SMA, Algorithm::CCCP}) {
        LearnerConfig config = flags.config;
        config.algorithm = algo;
        TrainRun run = train(m.graph, data, config);
        const std::string name(algorithm_name(algo));
        if (!out_dir.empty()) export_curve(run, fs::path(out_dir) / (name + ".csv"), flags.timing);
        print_run(name, run, data.num_instances(), flags.timing);
        double final_ll = run.ll_curve.back();
        summary << name << ',' << fmt(final_ll) << ','
                << fmt(final_ll / static_cast<double>(data.num_instances())) << ','
                << run.iters_used << ',' << stop_reason_name(run.stop_reason) << ','
                << (flags.timing ? fmt(run.wall_time) : "0") << '\n';
    }
    if (!out_dir.empty()) {
        std::ofstream out(fs::path(out_dir) / "summary.csv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write summary.csv");
        out << summary.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sum-product networks over binary variables: inference, "
                 "induced-tree analysis, and maximum-likelihood weight learning"};
    app.require_subcommand(1);

    std::string model_path, data_path, query, out, out_dir, out_curve, out_model, init_w;
    TrainFlags flags;
    std::uint32_t gen_vars = 4, gen_depth = 2, gen_sum_fanout = 2, gen_prod_fanout = 2;
    std::uint64_t gen_seed = 0;

    auto* validate = app.add_subcommand("validate", "Check structural validity");
    validate->add_option("model", model_path, "Model file ('-' for stdin)")->required();

    auto* eval = app.add_subcommand("eval", "Log-probability of instances or a query");
    eval->add_option("model", model_path, "Model file ('-' for stdin)")->required();
    eval->add_option("data", data_path, "Dataset file, one instance per line");
    eval->add_option("--query", query, "Single query, e.g. '1,0,*' (* marginalizes)");

    auto* card = app.add_subcommand("cardinality", "Number of induced trees");
    card->add_option("model", model_path, "Model file ('-' for stdin)")->required();

    auto* normalize = app.add_subcommand("normalize", "Locally normalize sum weights");
    normalize->add_option("model", model_path, "Model file ('-' for stdin)")->required();
    normalize->add_option("-o,--out", out, "Output model file (default stdout)");

    auto* gen = app.add_subcommand("gen", "Generate a random valid SPN");
    gen->add_option("--vars", gen_vars, "Number of variables")->capture_default_str();
    gen->add_option("--depth", gen_depth, "Branching sum-layer depth")->capture_default_str();
    gen->add_option("--sum-fanout", gen_sum_fanout, "Children per branching sum node")
        ->capture_default_str();
    gen->add_option("--prod-fanout", gen_prod_fanout, "Scope parts per product node")
        ->capture_default_str();
    gen->add_option("--seed", gen_seed, "Structure/weight seed")->capture_default_str();
    gen->add_option("-o,--out", out, "Output model file (default stdout)");

    auto* tr = app.add_subcommand("train", "Learn weights by maximum likelihood");
    tr->add_option("model", model_path, "Model file")->required();
    tr->add_option("data", data_path, "Training data")->required();
    tr->add_option("--algo", flags.algo, "pgd | eg | sma | cccp")
        ->check(CLI::IsMember({"pgd", "eg", "sma", "cccp"}))
        ->capture_default_str();
    flags.add_common(tr);
    tr->add_option("--init-weights", init_w, "Warm-start weights file");
    tr->add_option("--out-curve", out_curve, "Write the training curve CSV here");
    tr->add_option("--out-model", out_model, "Write the trained model here");

    auto* cmp = app.add_subcommand("compare", "Run all four optimizers from a shared init");
    cmp->add_option("model", model_path, "Model file")->required();
    cmp->add_option("data", data_path, "Training data")->required();
    flags.add_common(cmp);
    cmp->add_option("--out-dir", out_dir, "Directory for per-algorithm curves and summary.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (validate->parsed()) return cmd_validate(model_path);
        if (eval->parsed()) {
            if (query.empty() == data_path.empty())
                throw std::invalid_argument("eval needs a dataset or --query (not both)");
            return cmd_eval(model_path, data_path, query);
        }
        if (card->parsed()) return cmd_cardinality(model_path);
        if (normalize->parsed()) return cmd_normalize(model_path, out);
        if (gen->parsed())
            return cmd_gen(gen_vars, gen_depth, gen_sum_fanout, gen_prod_fanout, gen_seed, out);
        if (tr->parsed()) return cmd_train(model_path, data_path, flags, init_w, out_curve, out_model);
        if (cmp->parsed()) return cmd_compare(model_path, data_path, flags, out_dir);
    } catch (const ZeroProbabilityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
