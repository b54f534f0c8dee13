#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blockgcl/encoder.hpp"
#include "blockgcl/graph.hpp"

namespace blockgcl {

/// Mean average distance per layer; nullopt marks a layer where the metric is
/// undefined (no eligible node).
struct MadProfile {
    std::vector<std::optional<double>> per_layer; // index l-1 holds layer l
    std::size_t depth = 0;
    std::string mode;
    std::uint64_t seed = 0;
};

struct ProbeResult {
    std::vector<double> accuracies; // test accuracy per repeat
    double mean = 0.0;
    double stddev = 0.0; // population
    std::size_t epochs = 0;
    double learning_rate = 0.0;
    double weight_decay = 0.0;
};

/// Mean over eligible nodes of the average cosine distance to their
/// neighbors. A node is eligible when it has a neighbor and a representation
/// norm above 1e-12; pairs whose far endpoint has near-zero norm are skipped,
/// and a node left with no surviving pair is excluded. Returns nullopt when
/// no node remains.
std::optional<double> mad(const DenseMatrix<double>& z, const GraphDataset& g);

/// Per-layer MAD of every layer's output on the clean (un-augmented) graph.
MadProfile mad_profile(const BlockEncoder<double>& enc, const GraphDataset& g);

/// Multinomial logistic regression on frozen embeddings: full-batch softmax
/// cross-entropy, Adam (lr 1e-2, weight decay 1e-4), 300 epochs, the model
/// with the best validation accuracy is scored on the test split. Repeats
/// differ only in weight initialization.
ProbeResult linear_probe(const DenseMatrix<double>& z, const GraphDataset& g,
                         std::size_t repeats, std::uint64_t seed);

} // namespace blockgcl
