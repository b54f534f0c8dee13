// Acceptance harness: one line per criterion, PASS/FAIL/SKIP, exit 1 on any
// FAIL. Criteria needing the citation datasets skip honestly when the data is
// not present (gen instructions in the README).
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blockgcl/augment.hpp"
#include "blockgcl/config.hpp"
#include "blockgcl/eval.hpp"
#include "blockgcl/runner.hpp"
#include "blockgcl/trainer.hpp"
#include "support.hpp"

using namespace blockgcl;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status = Status::fail;
    std::string detail;
};

Outcome pass(std::string detail) { return {Status::pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Status::fail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Status::skip, std::move(detail)}; }

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

// ---------------------------------------------------------------------------
// shared instance generation

struct Instance {
    GraphDataset graph;
    TypedView<double> view_a;
    TypedView<double> view_b;
    BlockEncoder<double> encoder;
    ContrastLoss objective;
};

/// Random training instance: one graph, two independently perturbed views,
/// a glorot encoder with a random partition.
Instance random_instance(Rng& rng, std::size_t depth, std::size_t block_size, double lambda) {
    Instance inst;
    const std::size_t n = 4 + rng.bounded(5);        // 4..8 nodes
    const std::size_t f = 2 + rng.bounded(4);        // 2..5 input dims
    const std::size_t d = 2 + rng.bounded(4);        // 2..5 hidden dims

    inst.graph.num_nodes = n;
    inst.graph.num_features = f;
    inst.graph.num_classes = 2;
    inst.graph.features = testsupport::random_matrix(n, f, rng, 1.0);
    inst.graph.labels.assign(n, 0);
    inst.graph.split.assign(n, Split::train);
    inst.graph.edges = testsupport::random_edges(n, 0.5, rng);

    const auto edges_a = testsupport::random_edges(n, 0.5, rng);
    const auto edges_b = testsupport::random_edges(n, 0.5, rng);
    inst.view_a = {normalized_adjacency(n, edges_a), testsupport::random_matrix(n, f, rng, 1.0)};
    inst.view_b = {normalized_adjacency(n, edges_b), testsupport::random_matrix(n, f, rng, 1.0)};

    inst.encoder = make_encoder<double>(f, d, depth, block_size, false, rng);
    inst.objective = ContrastLoss{lambda, 1e-8};
    return inst;
}

std::size_t block_of(const BlockPartition& blocks, std::size_t layer) {
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (layer >= blocks[b].first && layer < blocks[b].second) return b;
    throw std::logic_error("layer outside partition");
}

// ---------------------------------------------------------------------------
// criterion 1: every training gradient matches central finite differences

double max_abs(const DenseMatrix<double>& m) {
    double out = 0.0;
    for (std::size_t k = 0; k < m.rows() * m.cols(); ++k) out = std::max(out, std::abs(m.data()[k]));
    return out;
}

Outcome criterion_gradients() {
    Rng rng(12345);
    const double lambdas[] = {0.0, 1e-3, 0.1};
    double worst = 0.0;
    std::size_t checked = 0, live = 0; // dead-relu layers pass trivially; count the rest
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t depth = 1 + rng.bounded(3); // 1..3 layers
        const bool end2end = trial % 2 == 1;
        const std::size_t bs = end2end ? depth : 1 + rng.bounded(depth);
        Instance inst = random_instance(rng, depth, bs, lambdas[trial % 3]);

        const EpochGradients<double> eg =
            block_gradients(inst.encoder, inst.view_a, inst.view_b, inst.objective);
        for (std::size_t l = 0; l < depth; ++l) {
            const std::size_t owner = block_of(inst.encoder.blocks, l);
            const auto fd = testsupport::fd_gradient(
                inst.encoder.layers[l].weight,
                [&] {
                    return block_losses(inst.encoder, inst.view_a, inst.view_b,
                                        inst.objective)[owner];
                },
                1e-5);
            ++checked;
            if (max_abs(eg.grad_weights[l]) > 1e-6 || max_abs(fd) > 1e-6) ++live;
            const double err = testsupport::max_rel_err(eg.grad_weights[l], fd);
            worst = std::max(worst, err);
            if (err >= 1e-4)
                return fail("trial " + std::to_string(trial) + " layer " + std::to_string(l) +
                            " rel err " + fmt(err));
        }
    }
    if (live * 2 < checked)
        return fail("only " + std::to_string(live) + "/" + std::to_string(checked) +
                    " layer gradients were non-trivial");
    return pass("50/50 instances (" + std::to_string(live) + "/" + std::to_string(checked) +
                " non-trivial layer checks), worst rel err " + fmt(worst));
}

// ---------------------------------------------------------------------------
// criterion 2: gradient isolation between blocks

Outcome criterion_isolation() {
    // scan seeds for an instance whose gradients are alive in every layer,
    // otherwise the finite-difference comparison would be 0 == 0
    std::optional<Instance> found;
    EpochGradients<double> eg;
    for (std::uint64_t seed = 777; seed < 807; ++seed) {
        Rng rng(seed);
        Instance candidate = random_instance(rng, 3, 1, 1e-3);
        eg = block_gradients(candidate.encoder, candidate.view_a, candidate.view_b,
                             candidate.objective);
        bool alive = true;
        for (const auto& gw : eg.grad_weights) alive = alive && max_abs(gw) > 1e-6;
        if (alive) {
            found = std::move(candidate);
            break;
        }
    }
    if (!found) return fail("no seed produced live gradients in every layer");
    Instance& inst = *found;

    const auto base = block_losses(inst.encoder, inst.view_a, inst.view_b, inst.objective);
    auto perturbed = inst.encoder;
    auto& w2 = perturbed.layers[2].weight;
    for (std::size_t k = 0; k < w2.rows() * w2.cols(); ++k) w2.data()[k] += 0.25;
    const auto after = block_losses(perturbed, inst.view_a, inst.view_b, inst.objective);
    if (after[0] != base[0] || after[1] != base[1])
        return fail("earlier block losses reacted to a later weight");
    if (after[2] == base[2]) return fail("perturbation did not reach its own block");

    double worst = 0.0;
    for (std::size_t l = 0; l < 3; ++l) {
        const auto fd = testsupport::fd_gradient(
            inst.encoder.layers[l].weight,
            [&] { return block_losses(inst.encoder, inst.view_a, inst.view_b, inst.objective)[l]; },
            1e-5);
        const double err = testsupport::max_rel_err(eg.grad_weights[l], fd);
        worst = std::max(worst, err);
        if (err >= 1e-4)
            return fail("block " + std::to_string(l) + " gradient vs own loss rel err " + fmt(err));
    }
    return pass("bitwise isolation + per-block FD match, worst rel err " + fmt(worst));
}

// ---------------------------------------------------------------------------
// criterion 3: standardization invariants

Outcome criterion_standardize() {
    Rng rng(31);
    double worst_mean = 0.0, worst_norm = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.bounded(39);
        const std::size_t d = 1 + rng.bounded(8);
        const auto z = testsupport::random_matrix(n, d, rng, 1.0 + rng.uniform() * 4.0);
        StandardizeTape<double> tape;
        const auto out = standardize(z, 1e-8, tape);
        for (std::size_t j = 0; j < d; ++j) {
            double mean = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mean += out(i, j);
                sq += out(i, j) * out(i, j);
            }
            mean /= static_cast<double>(n);
            worst_mean = std::max(worst_mean, std::abs(mean));
            worst_norm = std::max(worst_norm, std::abs(std::sqrt(sq) - 1.0));
        }
    }
    if (worst_mean > 1e-8) return fail("column mean " + fmt(worst_mean) + " above 1e-8");
    if (worst_norm > 1e-6) return fail("column norm off by " + fmt(worst_norm));
    return pass("30 instances, worst |mean| " + fmt(worst_mean) + ", worst |norm-1| " +
                fmt(worst_norm));
}

// ---------------------------------------------------------------------------
// criterion 4: normalized adjacency vs dense brute force

Outcome criterion_adjacency() {
    Rng rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.bounded(32);
        const auto edges = testsupport::random_edges(n, rng.uniform() * 0.6, rng);
        const auto csr = normalized_adjacency(n, edges);

        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        std::vector<double> deg(n, 1.0); // self loop
        for (const Edge& e : edges) {
            a[e.u][e.v] = 1.0;
            a[e.v][e.u] = 1.0;
            deg[e.u] += 1.0;
            deg[e.v] += 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i] * deg[j]);

        std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = csr.row_offsets[i]; k < csr.row_offsets[i + 1]; ++k)
                dense[i][csr.column_indices[k]] = csr.values[k];

        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                worst = std::max(worst, std::abs(dense[i][j] - a[i][j]));
        if (worst > 1e-12) return fail("trial " + std::to_string(trial) + " max diff " + fmt(worst));
    }
    return pass("200 graphs, max abs diff " + fmt(worst));
}

// ---------------------------------------------------------------------------
// citation-dataset plumbing for criteria 5-8

std::optional<LoadedDataset> try_load_citation(const std::string& name) {
    const std::vector<std::string> candidates = {name, "data/" + name, "../data/" + name,
                                                 "../../data/" + name};
    for (const std::string& candidate : candidates) {
        try {
            return load_run_dataset(candidate, true);
        } catch (const ConfigError&) {
            continue;
        }
    }
    return std::nullopt;
}

constexpr const char* kDatasetHint = "dataset not found; set BLOCKGCL_DATA_DIR or place it under ./data";

TrainConfig citation_config(std::size_t depth, std::size_t block_size, TrainMode mode,
                            double p_edge_drop, double p_feat_mask, std::size_t hidden_dim,
                            std::uint64_t seed) {
    TrainConfig cfg;
    cfg.depth = depth;
    cfg.block_size = block_size;
    cfg.mode = mode;
    cfg.aug = {p_edge_drop, p_feat_mask, false};
    cfg.hidden_dim = hidden_dim;
    cfg.lambda = 1e-3;
    cfg.learning_rate = 1e-3;
    cfg.weight_decay = 0.0;
    cfg.epochs = 50;
    cfg.seed = seed;
    cfg.precision = Precision::f32;
    return cfg;
}

struct SeededRuns {
    std::vector<double> accuracies;       // per seed
    std::vector<MadProfile> mad_profiles; // per seed
    double mean = 0.0;
};

SeededRuns run_seeds(const LoadedDataset& data, TrainConfig cfg, std::size_t seeds) {
    SeededRuns out;
    for (std::uint64_t s = 0; s < seeds; ++s) {
        cfg.seed = s;
        const RunOutput run = execute_run(data, cfg, 1);
        out.accuracies.push_back(run.probe.mean);
        out.mad_profiles.push_back(run.mad);
        out.mean += run.probe.mean;
    }
    out.mean /= static_cast<double>(seeds);
    return out;
}

std::string join_accs(const std::vector<double>& accs) {
    std::string s;
    for (double a : accs) s += (s.empty() ? "" : " ") + fmt(a);
    return s;
}

// criterion 5: shallow-depth accuracy on cora

Outcome criterion_cora_shallow() {
    const auto data = try_load_citation("cora");
    if (!data) return skip(kDatasetHint);
    const TrainConfig cfg = citation_config(2, 1, TrainMode::blockwise, 0.9, 0.4, 512, 0);
    const SeededRuns runs = run_seeds(*data, cfg, 5);
    const std::string detail = "mean acc " + fmt(runs.mean) + " [" + join_accs(runs.accuracies) +
                               "] vs bound 0.84";
    return runs.mean >= 0.84 ? pass(detail) : fail(detail);
}

// criteria 6+8 share the deep cora runs; computed once

struct DeepCora {
    bool attempted = false;
    bool available = false;
    SeededRuns block16, block32, e2e16;
};

DeepCora& deep_cora() {
    static DeepCora cache;
    if (cache.attempted) return cache;
    cache.attempted = true;
    const auto data = try_load_citation("cora");
    if (!data) return cache;
    cache.available = true;
    // hidden 256 keeps the five-seed deep column inside the runtime budget
    cache.block16 = run_seeds(*data, citation_config(16, 1, TrainMode::blockwise, 0.9, 0.4, 256, 0), 5);
    cache.block32 = run_seeds(*data, citation_config(32, 1, TrainMode::blockwise, 0.9, 0.4, 256, 0), 5);
    cache.e2e16 = run_seeds(*data, citation_config(16, 16, TrainMode::end2end, 0.9, 0.4, 256, 0), 5);
    return cache;
}

Outcome criterion_cora_depth() {
    DeepCora& cache = deep_cora();
    if (!cache.available) return skip(kDatasetHint);
    std::string detail = "blockwise L16 " + fmt(cache.block16.mean) + " (need >= 0.78), L32 " +
                         fmt(cache.block32.mean) + " (need >= 0.75), end2end L16 " +
                         fmt(cache.e2e16.mean) + " (need <= 0.45)";
    const bool ok =
        cache.block16.mean >= 0.78 && cache.block32.mean >= 0.75 && cache.e2e16.mean <= 0.45;
    return ok ? pass(detail) : fail(detail);
}

// criterion 7: citeseer at depth 8, blockwise vs end-to-end

Outcome criterion_citeseer_depth() {
    const auto data = try_load_citation("citeseer");
    if (!data) return skip(kDatasetHint);
    const SeededRuns block =
        run_seeds(*data, citation_config(8, 1, TrainMode::blockwise, 0.6, 0.5, 256, 0), 5);
    const SeededRuns e2e =
        run_seeds(*data, citation_config(8, 8, TrainMode::end2end, 0.6, 0.5, 256, 0), 5);
    const std::string detail = "blockwise " + fmt(block.mean) + " (need >= 0.70), end2end " +
                               fmt(e2e.mean) + " (need <= 0.45)";
    return block.mean >= 0.70 && e2e.mean <= 0.45 ? pass(detail) : fail(detail);
}

// criterion 8: interior-layer MAD, blockwise above end-to-end per seed

std::optional<double> interior_mad_mean(const MadProfile& profile) {
    // layers 2..depth-2, 1-indexed
    if (profile.depth < 4) return std::nullopt;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t layer = 2; layer + 2 <= profile.depth; ++layer) {
        const auto& v = profile.per_layer[layer - 1];
        if (!v) continue;
        total += *v;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return total / static_cast<double>(count);
}

Outcome criterion_interior_mad() {
    DeepCora& cache = deep_cora();
    if (!cache.available) return skip(kDatasetHint);
    std::size_t wins = 0, comparable = 0;
    std::string per_seed;
    for (std::size_t s = 0; s < 5; ++s) {
        const auto b = interior_mad_mean(cache.block16.mad_profiles[s]);
        const auto e = interior_mad_mean(cache.e2e16.mad_profiles[s]);
        if (!b || !e) continue;
        ++comparable;
        if (*b > *e) ++wins;
        per_seed += (per_seed.empty() ? "" : ", ") + fmt(*b) + ">" + fmt(*e);
    }
    const std::string detail = std::to_string(wins) + "/5 seeds favored blockwise (" + per_seed + ")";
    return comparable == 5 && wins >= 4 ? pass(detail) : fail(detail);
}

// ---------------------------------------------------------------------------
// criterion 9: byte-identical result CSVs through the command-line tool

int run_shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion_determinism() {
    const std::string cli = BLOCKGCL_CLI_PATH;
    const std::string root = testsupport::make_temp_dir("acceptance_det");
    const std::string data_dir = root + "/toy";
    const std::string quiet = " >/dev/null 2>&1";

    if (run_shell(cli + " gen-synthetic --blocks 2 --nodes-per-block 20 --p-in 0.4 --p-out 0.05"
                  " --feature-dim 6 --seed 3 --out " + data_dir + quiet) != 0)
        return fail("gen-synthetic failed");

    const std::string train_cfg = root + "/run.cfg";
    {
        std::ofstream cfg(train_cfg);
        cfg << "dataset = " << data_dir << "\ndepth = 2\nblock_size = 1\nhidden_dim = 8\n"
            << "epochs = 3\nprobe_repeats = 2\np_edge_drop = 0.3\np_feat_mask = 0.2\nseed = 5\n";
    }
    for (const char* out : {"/t1", "/t2"})
        if (run_shell(cli + " train --config " + train_cfg + " --out " + root + out + quiet) != 0)
            return fail("train invocation failed");
    for (const char* name : {"/mad.csv", "/probe.csv", "/summary.csv", "/checkpoint.bgck"})
        if (slurp(root + "/t1" + name) != slurp(root + "/t2" + name))
            return fail(std::string("train outputs differ: ") + name);

    const std::string sweep_cfg = root + "/sweep.cfg";
    {
        std::ofstream cfg(sweep_cfg);
        cfg << "datasets = " << data_dir << "\nmodes = blockwise, end2end\ndepths = 2\n"
            << "block_sizes = 1\nruns = 2\nhidden_dim = 8\nepochs = 2\n"
            << "p_edge_drop = 0.3\np_feat_mask = 0.2\n";
    }
    for (const char* out : {"/s1", "/s2"})
        if (run_shell(cli + " sweep --config " + sweep_cfg + " --workers 2 --out " + root + out +
                      quiet) != 0)
            return fail("sweep invocation failed");
    if (slurp(root + "/s1/results.csv") != slurp(root + "/s2/results.csv"))
        return fail("sweep results differ between identical invocations");
    if (slurp(root + "/s1/results.csv").empty()) return fail("sweep produced no results.csv");

    return pass("train and sweep artifacts byte-identical across reruns");
}

// ---------------------------------------------------------------------------
// criterion 10: augmentation rates within 3 binomial sigmas over 1000 trials

Outcome criterion_augmentation_stats() {
    const auto g = generate_sbm(3, 40, 0.35, 0.03, 6, 2);
    const std::size_t trials = 1000;

    const double p_drop = 0.3;
    Rng drop_rng(17);
    std::size_t dropped = 0;
    for (std::size_t t = 0; t < trials; ++t)
        dropped += g.edges.size() - drop_edges(g, p_drop, drop_rng).size();
    const double n_drop = static_cast<double>(g.edges.size() * trials);
    const double drop_hat = static_cast<double>(dropped) / n_drop;
    const double drop_sigma = std::sqrt(p_drop * (1.0 - p_drop) / n_drop);

    const double p_mask = 0.25;
    DenseMatrix<double> x(5, 50, 1.0);
    Rng mask_rng(19);
    std::size_t masked = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto m = mask_features(x, p_mask, mask_rng);
        for (std::size_t j = 0; j < x.cols(); ++j)
            if (m(0, j) == 0.0) ++masked;
    }
    const double n_mask = static_cast<double>(x.cols() * trials);
    const double mask_hat = static_cast<double>(masked) / n_mask;
    const double mask_sigma = std::sqrt(p_mask * (1.0 - p_mask) / n_mask);

    const std::string detail = "edge drop " + fmt(drop_hat) + " vs " + fmt(p_drop) +
                               " (3s=" + fmt(3 * drop_sigma) + "), feature mask " + fmt(mask_hat) +
                               " vs " + fmt(p_mask) + " (3s=" + fmt(3 * mask_sigma) + ")";
    const bool ok = std::abs(drop_hat - p_drop) <= 3.0 * drop_sigma &&
                    std::abs(mask_hat - p_mask) <= 3.0 * mask_sigma;
    return ok ? pass(detail) : fail(detail);
}

} // namespace

int main() {
    detail::pin_blas_single_thread();

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "training gradients match finite differences", criterion_gradients},
        {2, "gradient isolation between blocks", criterion_isolation},
        {3, "standardization mean/norm invariants", criterion_standardize},
        {4, "normalized adjacency equals dense oracle", criterion_adjacency},
        {5, "cora depth-2 probe accuracy", criterion_cora_shallow},
        {6, "cora deep-depth robustness and baseline collapse", criterion_cora_depth},
        {7, "citeseer depth-8 blockwise vs end-to-end", criterion_citeseer_depth},
        {8, "interior-layer MAD favors blockwise training", criterion_interior_mad},
        {9, "byte-identical result CSVs on rerun", criterion_determinism},
        {10, "augmentation rates within 3 sigmas", criterion_augmentation_stats},
    };

    bool any_failed = false;
    for (const Criterion& c : criteria) {
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = fail(std::string("exception: ") + e.what());
        }
        const char* tag = outcome.status == Status::pass ? "PASS"
                          : outcome.status == Status::fail ? "FAIL"
                                                           : "SKIP";
        std::cout << "[" << tag << "] criterion " << c.id << ": " << c.name;
        if (!outcome.detail.empty()) std::cout << " -- " << outcome.detail;
        std::cout << std::endl;
        if (outcome.status == Status::fail) any_failed = true;
    }
    return any_failed ? 1 : 0;
}
