#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockgcl/augment.hpp"
#include "blockgcl/encoder.hpp"
#include "blockgcl/graph.hpp"
#include "blockgcl/objective.hpp"

namespace blockgcl {

enum class TrainMode { blockwise, end2end };
enum class Precision { f32, f64 };

std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);
std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);

struct TrainConfig {
    std::size_t depth = 2;
    std::size_t block_size = 1;
    double lambda = 1e-3;
    AugmentationSpec aug;
    std::size_t hidden_dim = 512;
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::blockwise;
    Precision precision = Precision::f32;
    bool identity_block_output = false;

    void validate() const {
        if (depth == 0) throw std::invalid_argument("depth must be positive");
        if (hidden_dim == 0) throw std::invalid_argument("hidden_dim must be positive");
        if (mode == TrainMode::blockwise && (block_size == 0 || block_size > depth))
            throw std::invalid_argument("block_size must be in [1, depth]");
        if (lambda < 0) throw std::invalid_argument("lambda must be non-negative");
        if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be positive");
        if (weight_decay < 0) throw std::invalid_argument("weight_decay must be non-negative");
        if (aug.p_edge_drop < 0 || aug.p_edge_drop > 1 || aug.p_feat_mask < 0 || aug.p_feat_mask > 1)
            throw std::invalid_argument("augmentation probabilities must be in [0, 1]");
    }

    /// Effective partition: end2end trains all layers as one block.
    BlockPartition partition() const {
        return partition_blocks(depth, mode == TrainMode::end2end ? depth : block_size);
    }
};

template <typename T>
struct AdamState {
    std::vector<DenseMatrix<T>> m;
    std::vector<DenseMatrix<T>> v;
    std::uint64_t t = 0;

    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    static AdamState init(const BlockEncoder<T>& enc) {
        AdamState s;
        for (const auto& layer : enc.layers) {
            s.m.emplace_back(layer.weight.rows(), layer.weight.cols());
            s.v.emplace_back(layer.weight.rows(), layer.weight.cols());
        }
        return s;
    }
};

/// Decoupled-weight-decay Adam with bias correction; one shared step for all
/// layers. Throws on non-finite gradients.
template <typename T>
void adam_step(std::vector<GcnLayer<T>>& layers, const std::vector<DenseMatrix<T>>& grads,
               AdamState<T>& state, double lr, double weight_decay) {
    if (grads.size() != layers.size() || state.m.size() != layers.size())
        throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(AdamState<T>::beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(AdamState<T>::beta2, static_cast<double>(state.t));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        DenseMatrix<T>& w = layers[l].weight;
        const DenseMatrix<T>& g = grads[l];
        if (g.rows() != w.rows() || g.cols() != w.cols())
            throw std::invalid_argument("adam_step: gradient shape mismatch at layer " +
                                        std::to_string(l));
        if (!g.all_finite())
            throw std::runtime_error("adam_step: non-finite gradient at layer " + std::to_string(l));
        for (std::size_t k = 0; k < w.rows() * w.cols(); ++k) {
            const double gk = static_cast<double>(g.data()[k]);
            const double mk = AdamState<T>::beta1 * static_cast<double>(state.m[l].data()[k]) +
                              (1.0 - AdamState<T>::beta1) * gk;
            const double vk = AdamState<T>::beta2 * static_cast<double>(state.v[l].data()[k]) +
                              (1.0 - AdamState<T>::beta2) * gk * gk;
            state.m[l].data()[k] = static_cast<T>(mk);
            state.v[l].data()[k] = static_cast<T>(vk);
            const double update = (mk / bc1) / (std::sqrt(vk / bc2) + AdamState<T>::eps) +
                                  weight_decay * static_cast<double>(w.data()[k]);
            w.data()[k] = static_cast<T>(static_cast<double>(w.data()[k]) - lr * update);
        }
    }
}

/// Typed copy of one augmented view for the training precision.
template <typename T>
struct TypedView {
    CsrMatrix<T> adjacency;
    DenseMatrix<T> features;
};

template <typename T>
TypedView<T> cast_view(const GraphView& view) {
    return {view.adjacency.template cast<T>(), view.features.template cast<T>()};
}

/// Forward-only per-block losses on fixed views.
template <typename T>
std::vector<double> block_losses(const BlockEncoder<T>& enc, const TypedView<T>& va,
                                 const TypedView<T>& vb, const ContrastLoss& objective) {
    std::vector<double> losses;
    losses.reserve(enc.num_blocks());
    DenseMatrix<T> ha = va.features, hb = vb.features;
    LayerTape<T> tape;
    for (std::size_t i = 0; i < enc.num_blocks(); ++i) {
        ha = block_forward(enc, i, va.adjacency, ha, tape);
        tape.clear();
        hb = block_forward(enc, i, vb.adjacency, hb, tape);
        tape.clear();
        StandardizeTape<T> ta, tb;
        const auto za = standardize(ha, objective.epsilon_std, ta);
        const auto zb = standardize(hb, objective.epsilon_std, tb);
        losses.push_back(cca_loss(za, zb, objective.lambda).loss);
    }
    return losses;
}

/// One gradient pass over fixed views: every block is forwarded on the
/// previous block's detached outputs, its contrastive loss is computed, and
/// the backward stays inside the block. Returns per-block losses and per-layer
/// weight gradients; no optimizer step.
template <typename T>
struct EpochGradients {
    std::vector<double> block_losses;
    std::vector<DenseMatrix<T>> grad_weights;
};

template <typename T>
EpochGradients<T> block_gradients(const BlockEncoder<T>& enc, const TypedView<T>& va,
                                  const TypedView<T>& vb, const ContrastLoss& objective) {
    EpochGradients<T> out;
    out.grad_weights.assign(enc.num_layers(), DenseMatrix<T>());
    DenseMatrix<T> ha = va.features, hb = vb.features;
    for (std::size_t i = 0; i < enc.num_blocks(); ++i) {
        LayerTape<T> tape_a, tape_b;
        DenseMatrix<T> za_raw = block_forward(enc, i, va.adjacency, ha, tape_a);
        DenseMatrix<T> zb_raw = block_forward(enc, i, vb.adjacency, hb, tape_b);
        ContrastGrads<T> grads = objective(za_raw, zb_raw);
        if (!std::isfinite(grads.loss))
            throw std::runtime_error("non-finite loss at block " + std::to_string(i));
        out.block_losses.push_back(grads.loss);
        block_backward(enc, i, va.adjacency, std::move(grads.grad_a), tape_a, out.grad_weights);
        block_backward(enc, i, vb.adjacency, std::move(grads.grad_b), tape_b, out.grad_weights);
        ha = std::move(za_raw);
        hb = std::move(zb_raw);
    }
    return out;
}

/// One epoch of Algorithm-style training: sample a view pair, accumulate
/// gradient-isolated block gradients, take one shared Adam step.
template <typename T>
std::vector<double> train_blockwise_epoch(BlockEncoder<T>& enc, const GraphDataset& g,
                                          const TrainConfig& cfg, AdamState<T>& state, Rng& rng,
                                          const ContrastLoss& objective) {
    if (enc.blocks != cfg.partition())
        throw std::invalid_argument("train_blockwise_epoch: encoder partition does not match config");
    const auto [view_a, view_b] = make_views(g, cfg.aug, rng);
    const TypedView<T> va = cast_view<T>(view_a), vb = cast_view<T>(view_b);
    EpochGradients<T> eg = block_gradients(enc, va, vb, objective);
    adam_step(enc.layers, eg.grad_weights, state, cfg.learning_rate, cfg.weight_decay);
    return eg.block_losses;
}

/// The end-to-end baseline: one loss on the final layer, gradients through
/// all layers. Requires the single-block partition.
template <typename T>
double train_end2end_epoch(BlockEncoder<T>& enc, const GraphDataset& g, const TrainConfig& cfg,
                           AdamState<T>& state, Rng& rng, const ContrastLoss& objective) {
    if (enc.num_blocks() != 1)
        throw std::invalid_argument("train_end2end_epoch: encoder must form a single block");
    return train_blockwise_epoch(enc, g, cfg, state, rng, objective).at(0);
}

struct RunRecord {
    TrainConfig config;
    std::vector<std::vector<double>> block_losses; // [epoch][block]
    std::vector<double> epoch_loss;                // sum over blocks
    std::vector<double> epoch_wall_ms;
    std::vector<double> final_mad;                 // per layer; NaN marks undefined
    double probe_mean = std::numeric_limits<double>::quiet_NaN();
    double probe_std = std::numeric_limits<double>::quiet_NaN();
};

struct FitResult {
    BlockEncoder<double> encoder;
    RunRecord record;
};

namespace detail {

template <typename T>
FitResult run_fit(const GraphDataset& g, const TrainConfig& cfg) {
    Rng init_rng(cfg.seed, 0);
    BlockEncoder<T> enc;
    enc.blocks = cfg.partition();
    enc.layers.reserve(cfg.depth);
    for (std::size_t l = 0; l < cfg.depth; ++l) {
        const std::size_t d_in = l == 0 ? g.num_features : cfg.hidden_dim;
        enc.layers.push_back({glorot_init<T>(d_in, cfg.hidden_dim, init_rng), Activation::relu});
    }
    if (cfg.identity_block_output)
        for (const auto& [first, last] : enc.blocks)
            enc.layers[last - 1].activation = Activation::identity;
    enc.validate();

    ContrastLoss objective{cfg.lambda, 1e-8};
    AdamState<T> state = AdamState<T>::init(enc);
    Rng aug_rng(cfg.seed, 1);

    FitResult result;
    result.record.config = cfg;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<double> losses;
        try {
            losses = train_blockwise_epoch(enc, g, cfg, state, aug_rng, objective);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        const auto stop = std::chrono::steady_clock::now();
        double total = 0.0;
        for (double x : losses) total += x;
        result.record.block_losses.push_back(std::move(losses));
        result.record.epoch_loss.push_back(total);
        result.record.epoch_wall_ms.push_back(
            std::chrono::duration<double, std::milli>(stop - start).count());
    }
    result.encoder = enc.template cast<double>();
    return result;
}

} // namespace detail

/// Initializes a seeded Glorot encoder and trains it for cfg.epochs epochs in
/// the selected mode and precision. MAD and probe fields of the record are
/// left for the evaluation stage.
inline FitResult fit(const GraphDataset& g, const TrainConfig& cfg) {
    cfg.validate();
    if (g.num_nodes < 2) throw std::invalid_argument("fit: need at least 2 nodes");
    return cfg.precision == Precision::f32 ? detail::run_fit<float>(g, cfg)
                                           : detail::run_fit<double>(g, cfg);
}

} // namespace blockgcl
