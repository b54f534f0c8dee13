#include "blockgcl/augment.hpp"

#include <stdexcept>

namespace blockgcl {

std::vector<Edge> drop_edges(const GraphDataset& g, double p, Rng& rng) {
    if (p < 0 || p > 1) throw std::invalid_argument("drop_edges: p must lie in [0, 1]");
    std::vector<Edge> kept;
    kept.reserve(g.edges.size());
    for (const Edge& e : g.edges)
        if (!rng.bernoulli(p)) kept.push_back(e);
    return kept;
}

DenseMatrix<double> mask_features(const DenseMatrix<double>& x, double p, Rng& rng,
                                  bool per_entry) {
    if (p < 0 || p > 1) throw std::invalid_argument("mask_features: p must lie in [0, 1]");
    DenseMatrix<double> out = x;
    if (per_entry) {
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j)
                if (rng.bernoulli(p)) out(i, j) = 0.0;
        return out;
    }
    std::vector<bool> masked(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) masked[j] = rng.bernoulli(p);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            if (masked[j]) out(i, j) = 0.0;
    return out;
}

GraphView make_view(const GraphDataset& g, const AugmentationSpec& spec, Rng& rng) {
    GraphView view;
    const auto kept = drop_edges(g, spec.p_edge_drop, rng);
    view.adjacency = normalized_adjacency(g.num_nodes, kept);
    view.features = mask_features(g.features, spec.p_feat_mask, rng, spec.per_entry_mask);
    return view;
}

std::pair<GraphView, GraphView> make_views(const GraphDataset& g, const AugmentationSpec& spec,
                                           Rng& rng) {
    GraphView a = make_view(g, spec, rng);
    GraphView b = make_view(g, spec, rng);
    return {std::move(a), std::move(b)};
}

} // namespace blockgcl
