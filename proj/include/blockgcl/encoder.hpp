#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blockgcl/linalg.hpp"

namespace blockgcl {

enum class Activation { relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

template <typename T>
struct GcnLayer {
    DenseMatrix<T> weight; // D_in x D_out
    Activation activation = Activation::relu;
};

/// Half-open [first, last) ranges of layer indices.
using BlockPartition = std::vector<std::pair<std::size_t, std::size_t>>;

/// Contiguous blocks covering all layers. When block_size does not divide
/// num_layers the earlier blocks absorb the remainder, one extra layer each,
/// e.g. (5, 2) -> sizes {3, 2}.
inline BlockPartition partition_blocks(std::size_t num_layers, std::size_t block_size) {
    if (num_layers == 0) throw std::invalid_argument("partition_blocks: num_layers must be positive");
    if (block_size == 0 || block_size > num_layers)
        throw std::invalid_argument("partition_blocks: block_size must be in [1, num_layers]");
    const std::size_t k = num_layers / block_size;
    const std::size_t extra = num_layers % block_size;
    BlockPartition blocks;
    blocks.reserve(k);
    std::size_t first = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t size = block_size + (i < extra ? 1 : 0);
        blocks.emplace_back(first, first + size);
        first += size;
    }
    return blocks;
}

template <typename T>
struct BlockEncoder {
    std::vector<GcnLayer<T>> layers;
    BlockPartition blocks;

    std::size_t num_layers() const { return layers.size(); }
    std::size_t num_blocks() const { return blocks.size(); }

    /// D_0 .. D_L.
    std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims;
        dims.reserve(layers.size() + 1);
        if (!layers.empty()) dims.push_back(layers.front().weight.rows());
        for (const auto& layer : layers) dims.push_back(layer.weight.cols());
        return dims;
    }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("encoder: no layers");
        if (blocks.empty()) throw std::invalid_argument("encoder: no blocks");
        std::size_t expect = 0;
        for (const auto& [first, last] : blocks) {
            if (first != expect || last <= first)
                throw std::invalid_argument("encoder: blocks must be contiguous and non-empty");
            expect = last;
        }
        if (expect != layers.size())
            throw std::invalid_argument("encoder: blocks must cover all layers");
        for (std::size_t l = 1; l < layers.size(); ++l)
            if (layers[l].weight.rows() != layers[l - 1].weight.cols())
                throw std::invalid_argument("encoder: layer dimensions do not chain");
        for (const auto& layer : layers)
            if (!layer.weight.all_finite())
                throw std::invalid_argument("encoder: non-finite weight");
    }

    template <typename U>
    BlockEncoder<U> cast() const {
        BlockEncoder<U> out;
        out.blocks = blocks;
        out.layers.reserve(layers.size());
        for (const auto& layer : layers)
            out.layers.push_back({layer.weight.template cast<U>(), layer.activation});
        return out;
    }
};

/// Glorot-initialized encoder with uniform hidden width. All layers use ReLU;
/// identity_block_output switches the last layer of every block to identity.
template <typename T>
BlockEncoder<T> make_encoder(std::size_t input_dim, std::size_t hidden_dim, std::size_t depth,
                             std::size_t block_size, bool identity_block_output, Rng& rng) {
    if (input_dim == 0 || hidden_dim == 0) throw std::invalid_argument("make_encoder: zero dimension");
    BlockEncoder<T> enc;
    enc.blocks = partition_blocks(depth, block_size);
    enc.layers.reserve(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t d_in = l == 0 ? input_dim : hidden_dim;
        enc.layers.push_back({glorot_init<T>(d_in, hidden_dim, rng), Activation::relu});
    }
    if (identity_block_output)
        for (const auto& [first, last] : enc.blocks)
            enc.layers[last - 1].activation = Activation::identity;
    enc.validate();
    return enc;
}

/// Per-layer quantities cached by layer_forward for the matching backward.
template <typename T>
struct LayerTapeEntry {
    DenseMatrix<T> aggregated; // adj * h_in
    DenseMatrix<T> preact;     // aggregated * W
};

/// Stack of entries for the layers of one block's forward, consumed
/// back-to-front by the backward pass.
template <typename T>
using LayerTape = std::vector<LayerTapeEntry<T>>;

template <typename T>
struct LayerGrads {
    DenseMatrix<T> grad_weight;
    DenseMatrix<T> grad_in; // empty when not requested
};

/// act(adj * h_in * W); appends the cached intermediates to the tape.
template <typename T>
DenseMatrix<T> layer_forward(const GcnLayer<T>& layer, const CsrMatrix<T>& adj,
                             const DenseMatrix<T>& h_in, LayerTape<T>& tape) {
    if (h_in.rows() != adj.rows || h_in.cols() != layer.weight.rows())
        throw std::invalid_argument("layer_forward: input shape mismatch");
    LayerTapeEntry<T> entry;
    entry.aggregated = spmm(adj, h_in);
    entry.preact = matmul(entry.aggregated, layer.weight);
    DenseMatrix<T> out = entry.preact;
    if (layer.activation == Activation::relu)
        for (std::size_t k = 0; k < out.rows() * out.cols(); ++k)
            if (out.data()[k] < T{0}) out.data()[k] = T{0};
    tape.push_back(std::move(entry));
    return out;
}

/// Consumes the tape's top entry. With G = grad_out masked by the activation
/// derivative: grad_weight = (adj*H_in)' * G, grad_in = adj * (G * W')
/// (the adjacency is symmetric). grad_in is skipped when not needed.
template <typename T>
LayerGrads<T> layer_backward(const GcnLayer<T>& layer, const CsrMatrix<T>& adj,
                             const DenseMatrix<T>& grad_out, LayerTape<T>& tape,
                             bool need_grad_in = true) {
    if (tape.empty()) throw std::logic_error("layer_backward: no tape entry recorded");
    LayerTapeEntry<T> entry = std::move(tape.back());
    tape.pop_back();
    if (grad_out.rows() != entry.preact.rows() || grad_out.cols() != entry.preact.cols())
        throw std::invalid_argument("layer_backward: gradient shape mismatch");

    DenseMatrix<T> masked = grad_out;
    if (layer.activation == Activation::relu)
        for (std::size_t k = 0; k < masked.rows() * masked.cols(); ++k)
            if (entry.preact.data()[k] <= T{0}) masked.data()[k] = T{0};

    LayerGrads<T> grads;
    grads.grad_weight = matmul(entry.aggregated, masked, true, false);
    if (need_grad_in) grads.grad_in = spmm(adj, matmul(masked, layer.weight, false, true));
    return grads;
}

/// Sequential layer_forward through block i; h_in is a constant with respect
/// to earlier blocks.
template <typename T>
DenseMatrix<T> block_forward(const BlockEncoder<T>& enc, std::size_t block,
                             const CsrMatrix<T>& adj, const DenseMatrix<T>& h_in,
                             LayerTape<T>& tape) {
    if (block >= enc.num_blocks()) throw std::invalid_argument("block_forward: block index out of range");
    const auto [first, last] = enc.blocks[block];
    DenseMatrix<T> h = h_in;
    for (std::size_t l = first; l < last; ++l) h = layer_forward(enc.layers[l], adj, h, tape);
    return h;
}

/// Walks block i's layers in reverse, consuming the tape written by
/// block_forward, and stores grad_weight per layer into grad_weights (indexed
/// by global layer id). The gradient into the block's input is not computed.
template <typename T>
void block_backward(const BlockEncoder<T>& enc, std::size_t block, const CsrMatrix<T>& adj,
                    DenseMatrix<T> grad_out, LayerTape<T>& tape,
                    std::vector<DenseMatrix<T>>& grad_weights) {
    if (block >= enc.num_blocks()) throw std::invalid_argument("block_backward: block index out of range");
    if (grad_weights.size() != enc.num_layers())
        throw std::invalid_argument("block_backward: gradient buffer size mismatch");
    const auto [first, last] = enc.blocks[block];
    for (std::size_t l = last; l-- > first;) {
        LayerGrads<T> grads = layer_backward(enc.layers[l], adj, grad_out, tape, l > first);
        if (grad_weights[l].rows() == 0) {
            grad_weights[l] = std::move(grads.grad_weight);
        } else {
            for (std::size_t k = 0; k < grad_weights[l].rows() * grad_weights[l].cols(); ++k)
                grad_weights[l].data()[k] += grads.grad_weight.data()[k];
        }
        if (l > first) grad_out = std::move(grads.grad_in);
    }
}

/// Inference pass through all layers; no tape retained.
template <typename T>
DenseMatrix<T> full_forward(const BlockEncoder<T>& enc, const CsrMatrix<T>& adj,
                            const DenseMatrix<T>& x) {
    DenseMatrix<T> h = x;
    LayerTape<T> tape;
    for (const auto& layer : enc.layers) {
        h = layer_forward(layer, adj, h, tape);
        tape.clear();
    }
    return h;
}

/// Like full_forward but returns every layer's output, H(1)..H(L).
template <typename T>
std::vector<DenseMatrix<T>> full_forward_layers(const BlockEncoder<T>& enc,
                                                const CsrMatrix<T>& adj,
                                                const DenseMatrix<T>& x) {
    std::vector<DenseMatrix<T>> outputs;
    outputs.reserve(enc.num_layers());
    DenseMatrix<T> h = x;
    LayerTape<T> tape;
    for (const auto& layer : enc.layers) {
        h = layer_forward(layer, adj, h, tape);
        tape.clear();
        outputs.push_back(h);
    }
    return outputs;
}

/// Binary checkpoint: magic "BGCK", little-endian u64 header length, JSON
/// header (format/version/layer_dims/activations/blocks/seed), then row-major
/// f32 weight payloads in layer order. Schema documented in the README.
void save_checkpoint(const std::filesystem::path& path, const BlockEncoder<double>& enc,
                     std::uint64_t seed);

struct Checkpoint {
    BlockEncoder<double> encoder;
    std::uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace blockgcl
