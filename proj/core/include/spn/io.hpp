#ifndef SPN_IO_HPP
#define SPN_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "spn/dataset.hpp"
#include "spn/graph.hpp"
#include "spn/learn.hpp"

namespace spn {

struct Model {
    Graph graph;
    WeightVector weights;
};

// Model text format:
//
//   spn <num_vars> <num_nodes>
//   node <id> leaf <var> <0|1>        polarity 1 = positive literal
//   node <id> prod <child_id>+
//   node <id> sum (<child_id>:<weight>)+
//   root <id>
//
// ids are 0-based; a referenced node must be declared on an earlier line.
// Throws ParseError (with line/column) on malformed input and ParseError
// wrapping the validation report when the parsed graph is invalid.
Model parse_spn(std::string_view text, const std::string& source = "<string>");
Model load_model(const std::filesystem::path& path);

// Weights are printed with shortest round-trip precision, so
// parse(serialize(g, w)) reproduces (g, w) exactly whenever node ids are
// already in child-before-parent order (parser and generator output always
// is); other graphs are emitted with topologically remapped ids.
std::string serialize_spn(const Graph& g, const WeightVector& w);
void save_model(const Model& m, const std::filesystem::path& path);

// Weights-only file for warm starts: "weights <D>" then D positive decimals.
WeightVector parse_weights(std::string_view text, const std::string& source = "<string>");
WeightVector load_weights(const std::filesystem::path& path);
std::string serialize_weights(const WeightVector& w);

// Dataset text: one instance per line, comma-separated 0/1 tokens, no header.
Dataset parse_dataset(std::string_view text, const std::string& source = "<string>");
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

// Query string for marginal evaluation: comma-separated 0, 1 or * per
// variable, * marking a marginalized variable.
Assignment parse_query(std::string_view text, std::uint32_t num_vars);

// Random alternating sum/product structure over num_vars binary variables.
// Product nodes split their scope into disjoint parts; a scope of size one
// becomes a sum over the variable's two indicator leaves (shared per
// variable). depth bounds the number of branching sum layers; deeper sum
// nodes degrade to a single product child. The result always validates.
Graph generate_random_spn(std::uint32_t num_vars, std::uint32_t depth,
                          std::uint32_t sum_fanout, std::uint32_t prod_fanout,
                          std::uint64_t seed);

// Ancestral samples from the distribution Pr(x|w) of a validated SPN.
Dataset sample_dataset(const Graph& g, const WeightVector& w, std::size_t num_instances,
                       std::uint64_t seed);

// Training curve CSV: header iteration,train_ll,gamma_accepted,wall_ms.
// gamma_accepted is empty for CCCP rows and for iteration 0. Timing is
// emitted only when with_timing is set; the default keeps outputs
// byte-reproducible across runs.
void export_curve(const TrainRun& run, const std::filesystem::path& path,
                  bool with_timing = false);
void export_curve(const TrainRun& run, std::ostream& out, bool with_timing = false);

}  // namespace spn

#endif
