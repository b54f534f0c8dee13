#include "blockgcl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace blockgcl {

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_string(const std::string& s, const std::string& context) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw std::runtime_error(context + ": unknown split tag '" + s + "'");
}

std::vector<std::uint32_t> GraphDataset::degrees() const {
    std::vector<std::uint32_t> deg(num_nodes, 0);
    for (const Edge& e : edges) {
        ++deg[e.u];
        ++deg[e.v];
    }
    return deg;
}

void GraphDataset::validate() const {
    if (features.rows() != num_nodes || features.cols() != num_features)
        throw std::runtime_error("dataset: feature matrix shape does not match counts");
    if (labels.size() != num_nodes || split.size() != num_nodes)
        throw std::runtime_error("dataset: labels/split length does not match node count");
    if (!features.all_finite())
        throw std::runtime_error("dataset: non-finite feature entry");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
            throw std::runtime_error("dataset: label out of range at node " + std::to_string(i));

    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        if (e.u >= num_nodes || e.v >= num_nodes)
            throw std::runtime_error("dataset: edge endpoint out of range");
        if (e.u == e.v)
            throw std::runtime_error("dataset: explicit self-loop stored");
        if (e.u > e.v)
            throw std::runtime_error("dataset: edge not in canonical order");
        if (i > 0 && !(edges[i - 1] < e))
            throw std::runtime_error("dataset: edges not sorted and unique");
    }

    std::vector<bool> class_in_train(num_classes, false);
    for (std::size_t i = 0; i < num_nodes; ++i)
        if (split[i] == Split::train) class_in_train[labels[i]] = true;
    for (std::size_t c = 0; c < num_classes; ++c)
        if (!class_in_train[c])
            throw std::runtime_error("dataset: class " + std::to_string(c) +
                                     " absent from train split");
}

namespace {

struct LineReader {
    std::ifstream in;
    std::string path;
    std::size_t line_no = 0;

    LineReader(const std::filesystem::path& p) : in(p), path(p.string()) {
        if (!in) throw std::runtime_error(path + ": cannot open file");
    }

    bool next(std::string& out) {
        while (std::getline(in, out)) {
            ++line_no;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (!out.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
    }
};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::uint64_t parse_index(const std::string& field, const LineReader& r) {
    std::uint64_t value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) r.fail("malformed integer field '" + field + "'");
    return value;
}

double parse_real(const char* begin, const char* end, const LineReader& r) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        r.fail("malformed numeric field '" + std::string(begin, end) + "'");
    return value;
}

void expect_header(LineReader& r, const std::string& expected) {
    std::string line;
    if (!r.next(line)) r.fail("empty file, expected header '" + expected + "'");
    if (line != expected) r.fail("expected header '" + expected + "', found '" + line + "'");
}

} // namespace

GraphDataset load_dataset(const std::filesystem::path& directory) {
    GraphDataset g;

    // labels.csv fixes the node count and class count.
    {
        LineReader r(directory / "labels.csv");
        expect_header(r, "node,label");
        std::string line;
        struct LabelRow {
            std::uint64_t node;
            int label;
            std::size_t line;
        };
        std::vector<LabelRow> rows;
        int max_label = -1;
        while (r.next(line)) {
            const auto f = split_csv(line);
            if (f.size() != 2) r.fail("expected 2 fields, found " + std::to_string(f.size()));
            const auto node = parse_index(f[0], r);
            const auto label = static_cast<int>(parse_index(f[1], r));
            rows.push_back({node, label, r.line_no});
            max_label = std::max(max_label, label);
        }
        if (rows.empty()) r.fail("no label rows");
        g.num_nodes = rows.size();
        g.num_classes = static_cast<std::size_t>(max_label) + 1;
        g.labels.assign(g.num_nodes, -1);
        for (const auto& row : rows) {
            const std::string where = r.path + ":" + std::to_string(row.line);
            if (row.node >= g.num_nodes)
                throw std::runtime_error(where + ": node id " + std::to_string(row.node) +
                                         " out of range for " + std::to_string(g.num_nodes) +
                                         " rows");
            if (g.labels[row.node] != -1)
                throw std::runtime_error(where + ": node " + std::to_string(row.node) +
                                         " labeled twice");
            g.labels[row.node] = row.label;
        }
    }

    {
        LineReader r(directory / "features.csv");
        std::string line;
        std::size_t node = 0;
        while (r.next(line)) {
            if (node >= g.num_nodes)
                r.fail("more feature rows than labeled nodes (" + std::to_string(g.num_nodes) + ")");
            const char* p = line.data();
            const char* end = p + line.size();
            if (node == 0) {
                g.num_features = static_cast<std::size_t>(std::count(p, end, ',')) + 1;
                g.features = DenseMatrix<double>(g.num_nodes, g.num_features);
            }
            std::size_t col = 0;
            while (true) {
                const char* comma = std::find(p, end, ',');
                if (col >= g.num_features) r.fail("row has more than F=" +
                                                  std::to_string(g.num_features) + " fields");
                const double v = parse_real(p, comma, r);
                if (!std::isfinite(v)) r.fail("non-finite feature value");
                g.features(node, col++) = v;
                if (comma == end) break;
                p = comma + 1;
            }
            if (col != g.num_features)
                r.fail("row has " + std::to_string(col) + " fields, expected " +
                       std::to_string(g.num_features));
            ++node;
        }
        if (node != g.num_nodes)
            throw std::runtime_error(r.path + ": " + std::to_string(node) +
                                     " feature rows for " + std::to_string(g.num_nodes) + " nodes");
    }

    {
        LineReader r(directory / "edges.csv");
        expect_header(r, "src,dst");
        std::string line;
        std::set<Edge> edges;
        while (r.next(line)) {
            const auto f = split_csv(line);
            if (f.size() != 2) r.fail("expected 2 fields, found " + std::to_string(f.size()));
            const auto src = parse_index(f[0], r);
            const auto dst = parse_index(f[1], r);
            if (src >= g.num_nodes || dst >= g.num_nodes)
                r.fail("edge endpoint out of range [0, " + std::to_string(g.num_nodes) + ")");
            if (src == dst) r.fail("self-loop edge row");
            edges.insert(make_edge(static_cast<std::uint32_t>(src),
                                   static_cast<std::uint32_t>(dst)));
        }
        g.edges.assign(edges.begin(), edges.end());
    }

    const auto splits_path = directory / "splits.csv";
    if (std::filesystem::exists(splits_path)) {
        LineReader r(splits_path);
        expect_header(r, "node,split");
        std::string line;
        g.split.assign(g.num_nodes, Split::test);
        std::vector<bool> assigned(g.num_nodes, false);
        while (r.next(line)) {
            const auto f = split_csv(line);
            if (f.size() != 2) r.fail("expected 2 fields, found " + std::to_string(f.size()));
            const auto node = parse_index(f[0], r);
            if (node >= g.num_nodes) r.fail("node id out of range");
            if (assigned[node]) r.fail("node " + std::to_string(node) + " assigned twice");
            assigned[node] = true;
            g.split[node] = split_from_string(f[1], r.path + ":" + std::to_string(r.line_no));
        }
        for (std::size_t i = 0; i < g.num_nodes; ++i)
            if (!assigned[i])
                throw std::runtime_error(r.path + ": node " + std::to_string(i) +
                                         " missing a split tag");
    } else {
        g.split.assign(g.num_nodes, Split::test);
        g = make_random_split(std::move(g), 0.1, 0.1, 0.8, 0);
    }

    g.validate();
    return g;
}

void save_dataset(const GraphDataset& g, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    char buf[64];

    {
        std::ofstream out(directory / "edges.csv");
        out << "src,dst\n";
        for (const Edge& e : g.edges) out << e.u << ',' << e.v << '\n';
    }
    {
        std::ofstream out(directory / "features.csv");
        for (std::size_t i = 0; i < g.num_nodes; ++i) {
            for (std::size_t j = 0; j < g.num_features; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", g.features(i, j));
                if (j) out << ',';
                out << buf;
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(directory / "labels.csv");
        out << "node,label\n";
        for (std::size_t i = 0; i < g.num_nodes; ++i) out << i << ',' << g.labels[i] << '\n';
    }
    {
        std::ofstream out(directory / "splits.csv");
        out << "node,split\n";
        for (std::size_t i = 0; i < g.num_nodes; ++i)
            out << i << ',' << to_string(g.split[i]) << '\n';
    }
}

NormalizedAdjacency normalized_adjacency(std::size_t num_nodes, std::span<const Edge> edges) {
    std::vector<std::uint32_t> deg(num_nodes, 0);
    for (const Edge& e : edges) {
        ++deg[e.u];
        ++deg[e.v];
    }

    NormalizedAdjacency adj;
    adj.rows = adj.cols = num_nodes;
    adj.row_offsets.assign(num_nodes + 1, 0);
    for (const Edge& e : edges) {
        ++adj.row_offsets[e.u + 1];
        ++adj.row_offsets[e.v + 1];
    }
    for (std::size_t u = 0; u < num_nodes; ++u)
        adj.row_offsets[u + 1] += adj.row_offsets[u] + 1; // +1 for the self-loop

    adj.column_indices.resize(adj.row_offsets[num_nodes]);
    adj.values.resize(adj.row_offsets[num_nodes]);

    std::vector<double> inv_sqrt(num_nodes);
    for (std::size_t u = 0; u < num_nodes; ++u)
        inv_sqrt[u] = 1.0 / std::sqrt(static_cast<double>(deg[u]) + 1.0);

    std::vector<std::size_t> cursor(adj.row_offsets.begin(), adj.row_offsets.end() - 1);
    auto put = [&](std::uint32_t row, std::uint32_t col) {
        const std::size_t k = cursor[row]++;
        adj.column_indices[k] = col;
        adj.values[k] = inv_sqrt[row] * inv_sqrt[col];
    };
    // Edges are sorted by (u, v); interleave the self-loop so each row's
    // columns come out sorted without a second pass.
    std::vector<bool> self_done(num_nodes, false);
    auto put_row_entry = [&](std::uint32_t row, std::uint32_t col) {
        if (!self_done[row] && row < col) {
            put(row, row);
            self_done[row] = true;
        }
        put(row, col);
    };
    // Emit per row in sorted column order: walk edges twice (as u->v and
    // v->u) sorted by row then column.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> directed;
    directed.reserve(edges.size() * 2);
    for (const Edge& e : edges) {
        directed.emplace_back(e.u, e.v);
        directed.emplace_back(e.v, e.u);
    }
    std::sort(directed.begin(), directed.end());
    for (const auto& [row, col] : directed) put_row_entry(row, col);
    for (std::uint32_t u = 0; u < num_nodes; ++u)
        if (!self_done[u]) put(u, u);

    return adj;
}

NormalizedAdjacency normalized_adjacency(const GraphDataset& g) {
    return normalized_adjacency(g.num_nodes, g.edges);
}

GraphDataset generate_sbm(std::size_t blocks, std::size_t nodes_per_block, double p_in,
                          double p_out, std::size_t feature_dim, std::uint64_t seed) {
    if (blocks == 0 || nodes_per_block == 0)
        throw std::invalid_argument("generate_sbm: blocks and nodes_per_block must be positive");
    if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
        throw std::invalid_argument("generate_sbm: probabilities must lie in [0, 1]");
    if (feature_dim == 0) throw std::invalid_argument("generate_sbm: feature_dim must be positive");

    GraphDataset g;
    g.num_nodes = blocks * nodes_per_block;
    g.num_features = feature_dim;
    g.num_classes = blocks;
    g.labels.resize(g.num_nodes);
    g.split.resize(g.num_nodes);
    g.features = DenseMatrix<double>(g.num_nodes, feature_dim);

    Rng rng(seed, 0);
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
        const std::size_t b = i / nodes_per_block;
        const std::size_t p = i % nodes_per_block;
        g.labels[i] = static_cast<int>(b);
        // 1:1:8 round-robin inside each block keeps every class in train.
        g.split[i] = (p % 10 == 0) ? Split::train : (p % 10 == 1) ? Split::val : Split::test;
        for (std::size_t j = 0; j < feature_dim; ++j) g.features(i, j) = 0.1 * rng.normal();
        g.features(i, b % feature_dim) += 1.0;
    }

    for (std::uint32_t u = 0; u < g.num_nodes; ++u)
        for (std::uint32_t v = u + 1; v < g.num_nodes; ++v) {
            const bool same = g.labels[u] == g.labels[v];
            if (rng.bernoulli(same ? p_in : p_out)) g.edges.push_back({u, v});
        }

    g.validate();
    return g;
}

GraphDataset make_random_split(GraphDataset g, double train_ratio, double val_ratio,
                               double test_ratio, std::uint64_t seed) {
    if (train_ratio < 0 || val_ratio < 0 || test_ratio < 0)
        throw std::invalid_argument("make_random_split: ratios must be non-negative");
    const double sum = train_ratio + val_ratio + test_ratio;
    if (sum <= 0) throw std::invalid_argument("make_random_split: ratios sum to zero");

    const std::size_t n = g.num_nodes;
    const auto n_train = static_cast<std::size_t>(std::llround(train_ratio / sum * n));
    const auto n_val = static_cast<std::size_t>(std::llround(val_ratio / sum * n));
    if (n_train + n_val > n)
        throw std::invalid_argument("make_random_split: rounded train+val exceed node count");

    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;

    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        Rng rng(seed + attempt, 1);
        rng.shuffle(order.begin(), order.end());
        for (std::size_t k = 0; k < n; ++k)
            g.split[order[k]] = k < n_train          ? Split::train
                                : k < n_train + n_val ? Split::val
                                                      : Split::test;
        std::vector<bool> covered(g.num_classes, false);
        for (std::size_t i = 0; i < n; ++i)
            if (g.split[i] == Split::train) covered[g.labels[i]] = true;
        if (std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) return g;
    }
    throw std::runtime_error(
        "make_random_split: could not cover every class in train within 100 attempts");
}

void row_normalize_features(GraphDataset& g) {
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < g.num_features; ++j) sum += std::abs(g.features(i, j));
        if (sum > 0)
            for (std::size_t j = 0; j < g.num_features; ++j) g.features(i, j) /= sum;
    }
}

} // namespace blockgcl
