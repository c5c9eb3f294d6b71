#include "spn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "spn/error.hpp"
#include "spn/learn.hpp"
#include "spn/rng.hpp"

namespace spn {
namespace {

struct Token {
    std::string_view text;
    std::size_t col;  // 1-based
};

std::vector<Token> split_ws(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back({line.substr(start, i - start), start + 1});
    }
    return out;
}

// Splits text into lines; tolerates trailing newline and CR line endings.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line =
            nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::uint64_t parse_uint(const Token& t, const std::string& source, std::size_t line,
                         const char* what) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size())
        throw ParseError(source, line, t.col, std::string("invalid ") + what + " '" +
                                                  std::string(t.text) + "'");
    return value;
}

double parse_positive_double(const Token& t, const std::string& source, std::size_t line) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !(value > 0.0) ||
        !std::isfinite(value))
        throw ParseError(source, line, t.col,
                         "invalid weight '" + std::string(t.text) + "' (must be positive)");
    return value;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

}  // namespace

Dataset::Dataset(std::size_t num_vars, std::vector<Mark> cells, std::string source)
    : num_vars_(num_vars), cells_(std::move(cells)), source_(std::move(source)) {
    if (num_vars_ == 0 && !cells_.empty())
        throw std::invalid_argument("dataset with zero-width rows");
    if (num_vars_ != 0 && cells_.size() % num_vars_ != 0)
        throw std::invalid_argument("dataset cell count is not a multiple of num_vars");
    for (Mark m : cells_)
        if (m != Mark::False && m != Mark::True)
            throw std::invalid_argument("dataset cells must be 0 or 1");
}

Dataset Dataset::from_rows(const std::vector<std::vector<int>>& rows) {
    std::vector<Mark> cells;
    std::size_t width = rows.empty() ? 0 : rows.front().size();
    for (const auto& row : rows) {
        if (row.size() != width) throw std::invalid_argument("ragged rows");
        for (int v : row) {
            if (v != 0 && v != 1) throw std::invalid_argument("dataset cells must be 0 or 1");
            cells.push_back(v ? Mark::True : Mark::False);
        }
    }
    return Dataset(width, std::move(cells));
}

Model parse_spn(std::string_view text, const std::string& source) {
    auto lines = split_lines(text);
    std::size_t ln = 0;
    auto next_tokens = [&]() -> std::vector<Token> {
        while (ln < lines.size()) {
            auto toks = split_ws(lines[ln]);
            ++ln;
            if (!toks.empty()) return toks;
        }
        return {};
    };

    auto header = next_tokens();
    if (header.empty()) throw ParseError(source, 1, 1, "empty model file");
    if (header[0].text != "spn" || header.size() != 3)
        throw ParseError(source, ln, header[0].col, "expected header 'spn <num_vars> <num_nodes>'");
    const auto num_vars = parse_uint(header[1], source, ln, "variable count");
    const auto num_nodes = parse_uint(header[2], source, ln, "node count");
    if (num_vars == 0) throw ParseError(source, ln, header[1].col, "num_vars must be positive");
    if (num_nodes == 0) throw ParseError(source, ln, header[2].col, "num_nodes must be positive");

    std::vector<Node> nodes(num_nodes);
    std::vector<std::vector<double>> sum_weights(num_nodes);
    std::vector<std::size_t> decl_line(num_nodes, 0);
    std::vector<bool> declared(num_nodes, false);
    std::size_t declared_count = 0;

    auto parse_declared_id = [&](const Token& t, std::size_t line) -> NodeId {
        auto id = parse_uint(t, source, line, "node id");
        if (id >= num_nodes)
            throw ParseError(source, line, t.col, "node id " + std::to_string(id) + " out of range");
        if (!declared[id])
            throw ParseError(source, line, t.col,
                             "node " + std::to_string(id) + " referenced before declaration");
        return static_cast<NodeId>(id);
    };

    bool have_root = false;
    NodeId root = 0;
    while (true) {
        auto toks = next_tokens();
        if (toks.empty()) break;
        const std::size_t line = ln;
        if (toks[0].text == "node") {
            if (have_root)
                throw ParseError(source, line, toks[0].col, "node declared after root line");
            if (toks.size() < 3)
                throw ParseError(source, line, toks[0].col, "truncated node line");
            auto id = parse_uint(toks[1], source, line, "node id");
            if (id >= num_nodes)
                throw ParseError(source, line, toks[1].col,
                                 "node id " + std::to_string(id) + " out of range");
            if (declared[id])
                throw ParseError(source, line, toks[1].col,
                                 "node " + std::to_string(id) + " declared twice");
            const std::string_view kind = toks[2].text;
            Node node;
            if (kind == "leaf") {
                if (toks.size() != 5)
                    throw ParseError(source, line, toks[2].col,
                                     "leaf expects '<var> <0|1>'");
                auto var = parse_uint(toks[3], source, line, "variable index");
                if (var >= num_vars)
                    throw ParseError(source, line, toks[3].col,
                                     "variable index " + std::to_string(var) + " out of range");
                if (toks[4].text != "0" && toks[4].text != "1")
                    throw ParseError(source, line, toks[4].col, "polarity must be 0 or 1");
                node = Node::indicator(static_cast<std::uint32_t>(var), toks[4].text == "1");
            } else if (kind == "prod") {
                if (toks.size() < 4)
                    throw ParseError(source, line, toks[2].col, "prod expects at least one child");
                std::vector<NodeId> children;
                for (std::size_t i = 3; i < toks.size(); ++i)
                    children.push_back(parse_declared_id(toks[i], line));
                node = Node::product(std::move(children));
            } else if (kind == "sum") {
                if (toks.size() < 4)
                    throw ParseError(source, line, toks[2].col, "sum expects at least one child");
                std::vector<NodeId> children;
                for (std::size_t i = 3; i < toks.size(); ++i) {
                    auto sep = toks[i].text.find(':');
                    if (sep == std::string_view::npos)
                        throw ParseError(source, line, toks[i].col,
                                         "sum child must be '<id>:<weight>'");
                    Token id_tok{toks[i].text.substr(0, sep), toks[i].col};
                    Token w_tok{toks[i].text.substr(sep + 1), toks[i].col + sep + 1};
                    children.push_back(parse_declared_id(id_tok, line));
                    sum_weights[id].push_back(parse_positive_double(w_tok, source, line));
                }
                node = Node::sum(std::move(children));
            } else {
                throw ParseError(source, line, toks[2].col,
                                 "unknown node kind '" + std::string(kind) + "'");
            }
            nodes[id] = std::move(node);
            declared[id] = true;
            decl_line[id] = line;
            ++declared_count;
        } else if (toks[0].text == "root") {
            if (have_root) throw ParseError(source, line, toks[0].col, "duplicate root line");
            if (toks.size() != 2)
                throw ParseError(source, line, toks[0].col, "expected 'root <id>'");
            root = parse_declared_id(toks[1], line);
            have_root = true;
        } else {
            throw ParseError(source, line, toks[0].col,
                             "expected 'node' or 'root', got '" + std::string(toks[0].text) + "'");
        }
    }
    if (!have_root) throw ParseError(source, lines.size(), 1, "missing root line");
    if (declared_count != num_nodes)
        throw ParseError(source, lines.size(), 1,
                         "header declares " + std::to_string(num_nodes) + " nodes, found " +
                             std::to_string(declared_count));

    Graph graph(nodes, root, static_cast<std::uint32_t>(num_vars));
    if (!graph.is_valid()) {
        const auto& report = graph.report();
        NodeId bad = report.violations.front().node;
        throw ParseError(source, decl_line[bad], 1, "invalid SPN: " + report.to_string());
    }

    WeightVector w(graph.num_sum_edges());
    for (NodeId v = 0; v < graph.num_nodes(); ++v) {
        if (graph.kind(v) != NodeKind::Sum) continue;
        for (std::size_t k = 0; k < sum_weights[v].size(); ++k)
            w[graph.edge_index(v, k)] = sum_weights[v][k];
    }
    return {std::move(graph), std::move(w)};
}

Model load_model(const std::filesystem::path& path) {
    return parse_spn(read_file(path), path.string());
}

std::string serialize_spn(const Graph& g, const WeightVector& w) {
    g.require_valid();
    if (w.size() != g.num_sum_edges())
        throw std::invalid_argument("weight vector size does not match sum-edge count");

    // Emit in id order when ids already run children-before-parents,
    // otherwise relabel along the topological order.
    bool ids_ordered = true;
    for (NodeId v = 0; v < g.num_nodes() && ids_ordered; ++v)
        for (NodeId c : g.children(v))
            if (c >= v) ids_ordered = false;

    std::vector<NodeId> emit_order(g.num_nodes());
    std::vector<NodeId> new_id(g.num_nodes());
    if (ids_ordered) {
        for (NodeId v = 0; v < g.num_nodes(); ++v) emit_order[v] = new_id[v] = v;
    } else {
        auto topo = g.topo_order();
        for (std::size_t i = 0; i < topo.size(); ++i) {
            emit_order[i] = topo[i];
            new_id[topo[i]] = static_cast<NodeId>(i);
        }
    }

    std::ostringstream os;
    os << "spn " << g.num_vars() << ' ' << g.num_nodes() << '\n';
    for (NodeId v : emit_order) {
        os << "node " << new_id[v] << ' ';
        switch (g.kind(v)) {
            case NodeKind::Indicator:
                os << "leaf " << g.var(v) << ' ' << (g.polarity(v) ? 1 : 0);
                break;
            case NodeKind::Product: {
                os << "prod";
                for (NodeId c : g.children(v)) os << ' ' << new_id[c];
                break;
            }
            case NodeKind::Sum: {
                os << "sum";
                auto ch = g.children(v);
                for (std::size_t k = 0; k < ch.size(); ++k)
                    os << ' ' << new_id[ch[k]] << ':' << format_double(w[g.edge_index(v, k)]);
                break;
            }
        }
        os << '\n';
    }
    os << "root " << new_id[g.root()] << '\n';
    return std::move(os).str();
}

void save_model(const Model& m, const std::filesystem::path& path) {
    write_file(path, serialize_spn(m.graph, m.weights));
}

WeightVector parse_weights(std::string_view text, const std::string& source) {
    auto lines = split_lines(text);
    std::vector<Token> all;
    std::vector<std::size_t> tok_line;
    for (std::size_t i = 0; i < lines.size(); ++i)
        for (auto& t : split_ws(lines[i])) {
            all.push_back(t);
            tok_line.push_back(i + 1);
        }
    if (all.size() < 2 || all[0].text != "weights")
        throw ParseError(source, 1, 1, "expected header 'weights <count>'");
    auto count = parse_uint(all[1], source, tok_line[1], "weight count");
    if (all.size() - 2 != count)
        throw ParseError(source, lines.size(), 1,
                         "expected " + std::to_string(count) + " weights, found " +
                             std::to_string(all.size() - 2));
    WeightVector w(count);
    for (std::size_t i = 0; i < count; ++i)
        w[i] = parse_positive_double(all[i + 2], source, tok_line[i + 2]);
    return w;
}

WeightVector load_weights(const std::filesystem::path& path) {
    return parse_weights(read_file(path), path.string());
}

std::string serialize_weights(const WeightVector& w) {
    std::ostringstream os;
    os << "weights " << w.size() << '\n';
    for (double v : w.values) os << format_double(v) << '\n';
    return std::move(os).str();
}

Dataset parse_dataset(std::string_view text, const std::string& source) {
    auto lines = split_lines(text);
    std::vector<Mark> cells;
    std::size_t num_vars = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        std::size_t row_width = 0;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = line.find(',', pos);
            std::string_view tok =
                comma == std::string_view::npos ? line.substr(pos) : line.substr(pos, comma - pos);
            if (tok == "0") {
                cells.push_back(Mark::False);
            } else if (tok == "1") {
                cells.push_back(Mark::True);
            } else {
                throw ParseError(source, i + 1, pos + 1,
                                 "expected 0 or 1, got '" + std::string(tok) + "'");
            }
            ++row_width;
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (i == 0) {
            num_vars = row_width;
        } else if (row_width != num_vars) {
            throw ParseError(source, i + 1, 1,
                             "ragged row: expected " + std::to_string(num_vars) +
                                 " values, got " + std::to_string(row_width));
        }
    }
    return Dataset(num_vars, std::move(cells), source);
}

Dataset load_dataset(const std::filesystem::path& path) {
    return parse_dataset(read_file(path), path.string());
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    std::ostringstream os;
    for (std::size_t m = 0; m < data.num_instances(); ++m) {
        auto row = data.row(m);
        for (std::size_t n = 0; n < row.size(); ++n) {
            if (n) os << ',';
            os << (row[n] == Mark::True ? '1' : '0');
        }
        os << '\n';
    }
    write_file(path, os.str());
}

Assignment parse_query(std::string_view text, std::uint32_t num_vars) {
    std::vector<Mark> values;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = text.find(',', pos);
        std::string_view tok =
            comma == std::string_view::npos ? text.substr(pos) : text.substr(pos, comma - pos);
        if (tok == "0") {
            values.push_back(Mark::False);
        } else if (tok == "1") {
            values.push_back(Mark::True);
        } else if (tok == "*") {
            values.push_back(Mark::Marginalized);
        } else {
            throw std::invalid_argument("query token must be 0, 1 or *, got '" +
                                        std::string(tok) + "'");
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (values.size() != num_vars)
        throw std::invalid_argument("query has " + std::to_string(values.size()) +
                                    " values, model expects " + std::to_string(num_vars));
    return Assignment(std::move(values));
}

Graph generate_random_spn(std::uint32_t num_vars, std::uint32_t depth,
                          std::uint32_t sum_fanout, std::uint32_t prod_fanout,
                          std::uint64_t seed) {
    if (num_vars < 1) throw std::invalid_argument("num_vars must be at least 1");
    if (sum_fanout < 1 || prod_fanout < 1)
        throw std::invalid_argument("fan-outs must be at least 1");

    Rng rng(seed);
    std::vector<Node> nodes;
    std::vector<std::int64_t> indicator_of(2 * num_vars, -1);

    auto add = [&](Node n) {
        nodes.push_back(std::move(n));
        return static_cast<NodeId>(nodes.size() - 1);
    };
    // Indicators are shared per (variable, polarity), so generated structures
    // are proper DAGs. Leaf sums are fresh per use: sharing them would make
    // all product siblings proportional on complete evidence and collapse the
    // mixture to a single factorized distribution.
    auto indicator = [&](std::uint32_t var, bool pol) {
        auto& slot = indicator_of[2 * var + (pol ? 1 : 0)];
        if (slot < 0) slot = add(Node::indicator(var, pol));
        return static_cast<NodeId>(slot);
    };
    auto leaf_sum = [&](std::uint32_t var) {
        return add(Node::sum({indicator(var, true), indicator(var, false)}));
    };

    std::function<NodeId(std::vector<std::uint32_t>, std::uint32_t)> build_sum;
    auto build_product = [&](std::vector<std::uint32_t> scope, std::uint32_t level) -> NodeId {
        // Random split of the scope into disjoint nonempty parts. Always at
        // least two parts, so every recursion step shrinks the scope.
        for (std::size_t i = scope.size(); i > 1; --i)
            std::swap(scope[i - 1], scope[rng.next_below(i)]);
        const std::size_t parts =
            std::min<std::size_t>(std::max<std::size_t>(prod_fanout, 2), scope.size());
        std::vector<std::size_t> cuts{0, scope.size()};
        while (cuts.size() < parts + 1) {
            std::size_t c = 1 + rng.next_below(scope.size() - 1);
            if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        std::vector<NodeId> children;
        for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
            std::vector<std::uint32_t> part(scope.begin() + cuts[p], scope.begin() + cuts[p + 1]);
            std::sort(part.begin(), part.end());
            children.push_back(build_sum(std::move(part), level));
        }
        return add(Node::product(std::move(children)));
    };
    build_sum = [&](std::vector<std::uint32_t> scope, std::uint32_t level) -> NodeId {
        if (scope.size() == 1) return leaf_sum(scope[0]);
        const std::uint32_t k = level >= depth ? 1 : sum_fanout;
        std::vector<NodeId> children;
        children.reserve(k);
        for (std::uint32_t i = 0; i < k; ++i) children.push_back(build_product(scope, level + 1));
        return add(Node::sum(std::move(children)));
    };

    std::vector<std::uint32_t> full(num_vars);
    for (std::uint32_t v = 0; v < num_vars; ++v) full[v] = v;
    NodeId root = build_sum(std::move(full), 1);
    return Graph(nodes, root, num_vars);
}

Dataset sample_dataset(const Graph& g, const WeightVector& w, std::size_t num_instances,
                       std::uint64_t seed) {
    g.require_valid();
    WeightVector probs = normalize_locally(g, w);
    Rng rng(seed);

    std::vector<Mark> cells;
    cells.reserve(num_instances * g.num_vars());
    std::vector<NodeId> stack;
    for (std::size_t m = 0; m < num_instances; ++m) {
        const std::size_t base = cells.size();
        cells.resize(base + g.num_vars(), Mark::False);
        stack.push_back(g.root());
        while (!stack.empty()) {
            NodeId v = stack.back();
            stack.pop_back();
            switch (g.kind(v)) {
                case NodeKind::Indicator:
                    cells[base + g.var(v)] = g.polarity(v) ? Mark::True : Mark::False;
                    break;
                case NodeKind::Product:
                    for (NodeId c : g.children(v)) stack.push_back(c);
                    break;
                case NodeKind::Sum: {
                    auto ch = g.children(v);
                    const double r = rng.next_double();
                    double cdf = 0.0;
                    std::size_t pick = ch.size() - 1;
                    for (std::size_t k = 0; k < ch.size(); ++k) {
                        cdf += probs[g.edge_index(v, k)];
                        if (r < cdf) {
                            pick = k;
                            break;
                        }
                    }
                    stack.push_back(ch[pick]);
                    break;
                }
            }
        }
    }
    return Dataset(g.num_vars(), std::move(cells), "<sampled>");
}

void export_curve(const TrainRun& run, std::ostream& out, bool with_timing) {
    out << "iteration,train_ll,gamma_accepted,wall_ms\n";
    for (std::size_t i = 0; i < run.ll_curve.size(); ++i) {
        out << i << ',' << format_double(run.ll_curve[i]) << ',';
        if (i > 0 && i - 1 < run.gamma_accepted.size())
            out << format_double(run.gamma_accepted[i - 1]);
        out << ',';
        out << (with_timing ? format_double(run.iter_wall_ms[i]) : "0");
        out << '\n';
    }
}

void export_curve(const TrainRun& run, const std::filesystem::path& path, bool with_timing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    export_curve(run, out, with_timing);
}

}  // namespace spn
