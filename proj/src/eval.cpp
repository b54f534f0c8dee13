#include "blockgcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace blockgcl {

namespace {

constexpr double kNormFloor = 1e-12;

std::vector<std::vector<std::uint32_t>> neighbor_lists(const GraphDataset& g) {
    std::vector<std::vector<std::uint32_t>> nbrs(g.num_nodes);
    for (const Edge& e : g.edges) {
        nbrs[e.u].push_back(e.v);
        nbrs[e.v].push_back(e.u);
    }
    return nbrs;
}

} // namespace

std::optional<double> mad(const DenseMatrix<double>& z, const GraphDataset& g) {
    if (z.rows() != g.num_nodes) throw std::invalid_argument("mad: row count != node count");
    const std::size_t d = z.cols();

    std::vector<double> norms(g.num_nodes);
    for (std::size_t u = 0; u < g.num_nodes; ++u) {
        double s = 0.0;
        const auto row = z.row(u);
        for (std::size_t j = 0; j < d; ++j) s += row[j] * row[j];
        norms[u] = std::sqrt(s);
    }

    const auto nbrs = neighbor_lists(g);
    double total = 0.0;
    std::size_t included = 0;
    for (std::size_t u = 0; u < g.num_nodes; ++u) {
        if (nbrs[u].empty() || norms[u] <= kNormFloor) continue;
        double dist_sum = 0.0;
        std::size_t pairs = 0;
        const auto row_u = z.row(u);
        for (std::uint32_t v : nbrs[u]) {
            if (norms[v] <= kNormFloor) continue;
            double dot = 0.0;
            const auto row_v = z.row(v);
            for (std::size_t j = 0; j < d; ++j) dot += row_u[j] * row_v[j];
            dist_sum += 1.0 - dot / (norms[u] * norms[v]);
            ++pairs;
        }
        if (pairs == 0) continue;
        total += dist_sum / static_cast<double>(pairs);
        ++included;
    }
    if (included == 0) return std::nullopt;
    return total / static_cast<double>(included);
}

MadProfile mad_profile(const BlockEncoder<double>& enc, const GraphDataset& g) {
    enc.validate();
    const auto adj = normalized_adjacency(g);
    const auto outputs = full_forward_layers(enc, adj, g.features);
    MadProfile profile;
    profile.depth = enc.num_layers();
    profile.per_layer.reserve(outputs.size());
    for (const auto& h : outputs) profile.per_layer.push_back(mad(h, g));
    return profile;
}

namespace {

struct ProbeModel {
    DenseMatrix<double> weight; // D x C
    std::vector<double> bias;   // C
};

/// Row-wise softmax probabilities for the given node rows.
DenseMatrix<double> probe_probs(const ProbeModel& model, const DenseMatrix<double>& z,
                                const std::vector<std::size_t>& rows) {
    const std::size_t n = rows.size();
    const std::size_t d = z.cols();
    const std::size_t c = model.bias.size();
    DenseMatrix<double> probs(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        const auto zi = z.row(rows[i]);
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < c; ++k) {
            double logit = model.bias[k];
            for (std::size_t j = 0; j < d; ++j) logit += zi[j] * model.weight(j, k);
            probs(i, k) = logit;
            max_logit = std::max(max_logit, logit);
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            probs(i, k) = std::exp(probs(i, k) - max_logit);
            sum += probs(i, k);
        }
        for (std::size_t k = 0; k < c; ++k) probs(i, k) /= sum;
    }
    return probs;
}

double accuracy(const ProbeModel& model, const DenseMatrix<double>& z,
                const std::vector<std::size_t>& rows, const std::vector<int>& labels) {
    if (rows.empty()) return 0.0;
    const DenseMatrix<double> probs = probe_probs(model, z, rows);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < probs.cols(); ++k)
            if (probs(i, k) > probs(i, best)) best = k;
        if (static_cast<int>(best) == labels[rows[i]]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

} // namespace

ProbeResult linear_probe(const DenseMatrix<double>& z, const GraphDataset& g,
                         std::size_t repeats, std::uint64_t seed) {
    if (z.rows() != g.num_nodes) throw std::invalid_argument("linear_probe: row count != node count");
    if (repeats == 0) throw std::invalid_argument("linear_probe: repeats must be positive");

    std::vector<std::size_t> train_rows, val_rows, test_rows;
    for (std::size_t u = 0; u < g.num_nodes; ++u) {
        switch (g.split[u]) {
            case Split::train: train_rows.push_back(u); break;
            case Split::val: val_rows.push_back(u); break;
            case Split::test: test_rows.push_back(u); break;
        }
    }
    if (train_rows.empty() || val_rows.empty() || test_rows.empty())
        throw std::invalid_argument("linear_probe: every split partition must be non-empty");

    ProbeResult result;
    result.epochs = 300;
    result.learning_rate = 1e-2;
    result.weight_decay = 1e-4;

    const std::size_t d = z.cols();
    const std::size_t c = g.num_classes;
    const std::size_t n_train = train_rows.size();
    const double inv_n = 1.0 / static_cast<double>(n_train);

    for (std::size_t rep = 0; rep < repeats; ++rep) {
        Rng rng(seed, 1000 + rep); // clear of the trainer's init/augmentation streams
        ProbeModel model{glorot_init<double>(d, c, rng), std::vector<double>(c, 0.0)};

        DenseMatrix<double> mw(d, c), vw(d, c);
        std::vector<double> mb(c, 0.0), vb(c, 0.0);
        constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

        ProbeModel best = model;
        double best_val = -1.0;
        for (std::size_t epoch = 1; epoch <= result.epochs; ++epoch) {
            DenseMatrix<double> grad_logits = probe_probs(model, z, train_rows);
            for (std::size_t i = 0; i < n_train; ++i) {
                grad_logits(i, static_cast<std::size_t>(g.labels[train_rows[i]])) -= 1.0;
                for (std::size_t k = 0; k < c; ++k) grad_logits(i, k) *= inv_n;
            }

            DenseMatrix<double> grad_w(d, c);
            std::vector<double> grad_b(c, 0.0);
            for (std::size_t i = 0; i < n_train; ++i) {
                const auto zi = z.row(train_rows[i]);
                for (std::size_t k = 0; k < c; ++k) {
                    const double gk = grad_logits(i, k);
                    grad_b[k] += gk;
                    for (std::size_t j = 0; j < d; ++j) grad_w(j, k) += zi[j] * gk;
                }
            }

            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
            for (std::size_t k = 0; k < d * c; ++k) {
                const double gk = grad_w.data()[k];
                mw.data()[k] = beta1 * mw.data()[k] + (1.0 - beta1) * gk;
                vw.data()[k] = beta2 * vw.data()[k] + (1.0 - beta2) * gk * gk;
                model.weight.data()[k] -=
                    result.learning_rate * ((mw.data()[k] / bc1) / (std::sqrt(vw.data()[k] / bc2) + adam_eps) +
                                            result.weight_decay * model.weight.data()[k]);
            }
            for (std::size_t k = 0; k < c; ++k) {
                mb[k] = beta1 * mb[k] + (1.0 - beta1) * grad_b[k];
                vb[k] = beta2 * vb[k] + (1.0 - beta2) * grad_b[k] * grad_b[k];
                model.bias[k] -= result.learning_rate *
                                 ((mb[k] / bc1) / (std::sqrt(vb[k] / bc2) + adam_eps) +
                                  result.weight_decay * model.bias[k]);
            }

            const double val_acc = accuracy(model, z, val_rows, g.labels);
            if (val_acc > best_val) {
                best_val = val_acc;
                best = model;
            }
        }
        result.accuracies.push_back(accuracy(best, z, test_rows, g.labels));
    }

    double mean = 0.0;
    for (double a : result.accuracies) mean += a;
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    for (double a : result.accuracies) var += (a - mean) * (a - mean);
    result.mean = mean;
    result.stddev = std::sqrt(var / static_cast<double>(repeats));
    return result;
}

} // namespace blockgcl
