#pragma once

#include <utility>
#include <vector>

#include "blockgcl/graph.hpp"

namespace blockgcl {

/// View-generation knobs. Feature masking is column-shared by default
/// (one Bernoulli draw per dimension, applied to every node); the
/// per-entry alternative is available behind the flag.
struct AugmentationSpec {
    double p_edge_drop = 0.0;
    double p_feat_mask = 0.0;
    bool per_entry_mask = false;
};

/// One stochastic view of the graph: masked features plus the adjacency
/// renormalized over the surviving edge set.
struct GraphView {
    NormalizedAdjacency adjacency;
    DenseMatrix<double> features;
};

/// Removes each stored undirected edge (both directions together) with
/// probability p.
std::vector<Edge> drop_edges(const GraphDataset& g, double p, Rng& rng);

/// Zeroes feature dimensions with probability p. Column-shared: a masked
/// dimension is zero for every node.
DenseMatrix<double> mask_features(const DenseMatrix<double>& x, double p, Rng& rng,
                                  bool per_entry = false);

GraphView make_view(const GraphDataset& g, const AugmentationSpec& spec, Rng& rng);

/// Two independently sampled views from the same rng stream.
std::pair<GraphView, GraphView> make_views(const GraphDataset& g, const AugmentationSpec& spec,
                                           Rng& rng);

} // namespace blockgcl
