#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "blockgcl/linalg.hpp"

namespace blockgcl {

enum class Split : std::uint8_t { train, val, test };

const char* to_string(Split s);
Split split_from_string(const std::string& s, const std::string& context);

/// Undirected edge, stored once with u < v. Self-loops are never stored;
/// normalization adds them.
struct Edge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(std::uint32_t a, std::uint32_t b) {
    return a < b ? Edge{a, b} : Edge{b, a};
}

/// One benchmark graph: features, labels, undirected edges, split masks.
struct GraphDataset {
    std::size_t num_nodes = 0;
    std::size_t num_features = 0;
    std::size_t num_classes = 0;
    DenseMatrix<double> features;   // num_nodes x num_features
    std::vector<int> labels;        // class id per node, in [0, num_classes)
    std::vector<Edge> edges;        // canonical u < v, sorted, unique
    std::vector<Split> split;       // tag per node

    /// Degree per node counting stored undirected neighbors (no self-loop).
    std::vector<std::uint32_t> degrees() const;

    /// Throws std::runtime_error on any violated invariant.
    void validate() const;
};

/// Symmetric propagation operator D^{-1/2}(A+I)D^{-1/2} in CSR form.
using NormalizedAdjacency = CsrMatrix<double>;

/// Reads the four-file CSV layout (edges.csv, features.csv, labels.csv,
/// optional splits.csv). Reversed or repeated edge rows collapse into one
/// undirected edge. Errors name the offending file and line.
GraphDataset load_dataset(const std::filesystem::path& directory);

/// Writes the same layout load_dataset reads; load(save(d)) == d.
void save_dataset(const GraphDataset& g, const std::filesystem::path& directory);

NormalizedAdjacency normalized_adjacency(std::size_t num_nodes, std::span<const Edge> edges);
NormalizedAdjacency normalized_adjacency(const GraphDataset& g);

/// Planted-partition graph for deterministic desk-scale tests. Label is the
/// block id; features are a one-hot block signal plus 0.1-sigma Gaussian
/// noise. Splits are assigned per block (1:1:8 round-robin) so every class
/// reaches the training split.
GraphDataset generate_sbm(std::size_t blocks, std::size_t nodes_per_block, double p_in,
                          double p_out, std::size_t feature_dim, std::uint64_t seed);

/// Replaces the split by a seeded shuffle honoring the given proportions.
/// Retries with an incremented sub-seed (up to 100 attempts) until every
/// class lands in the training split.
GraphDataset make_random_split(GraphDataset g, double train_ratio, double val_ratio,
                               double test_ratio, std::uint64_t seed);

/// In-place row L1 normalization of the feature matrix (all-zero rows kept).
void row_normalize_features(GraphDataset& g);

} // namespace blockgcl
