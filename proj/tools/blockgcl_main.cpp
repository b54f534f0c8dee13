#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "blockgcl/config.hpp"
#include "blockgcl/report.hpp"
#include "blockgcl/runner.hpp"
#include "blockgcl/sweep.hpp"

namespace fs = std::filesystem;
using namespace blockgcl;

namespace {

std::string comment_block(const std::vector<std::string>& lines) {
    std::ostringstream out;
    for (const std::string& line : lines) out << "# " << line << "\n";
    return out.str();
}

void apply_overrides(TrainConfig& cfg, const std::optional<std::uint64_t>& seed,
                     const std::string& precision) {
    if (seed) cfg.seed = *seed;
    if (!precision.empty()) cfg.precision = precision_from_string(precision);
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::optional<std::uint64_t>& seed, const std::string& precision) {
    FlatConfig cfg = FlatConfig::parse_file(config_path);
    RunSpec spec = parse_run_spec(cfg);
    apply_overrides(spec.train, seed, precision);

    const LoadedDataset data = load_run_dataset(spec.dataset, spec.row_normalize);
    const RunOutput out = execute_run(data, spec.train, spec.probe_repeats);

    fs::create_directories(out_dir);
    const std::string header = comment_block(resolved_config_lines(spec));

    {
        std::ostringstream csv;
        csv << header << "epoch,block,loss,wall_ms\n";
        const auto& rec = out.fit.record;
        for (std::size_t e = 0; e < rec.block_losses.size(); ++e)
            for (std::size_t b = 0; b < rec.block_losses[e].size(); ++b)
                csv << e << "," << b << "," << fmt_real(rec.block_losses[e][b]) << ","
                    << fmt_real(rec.epoch_wall_ms[e]) << "\n";
        write_text_file(fs::path(out_dir) / "losses.csv", csv.str());
    }
    {
        std::ostringstream csv;
        csv << header << "layer,mad\n";
        for (std::size_t l = 0; l < out.mad.per_layer.size(); ++l)
            csv << (l + 1) << ","
                << (out.mad.per_layer[l] ? fmt_real(*out.mad.per_layer[l]) : "nan") << "\n";
        write_text_file(fs::path(out_dir) / "mad.csv", csv.str());
    }
    {
        std::ostringstream csv;
        csv << header << "repeat,accuracy\n";
        for (std::size_t r = 0; r < out.probe.accuracies.size(); ++r)
            csv << r << "," << fmt_real(out.probe.accuracies[r]) << "\n";
        write_text_file(fs::path(out_dir) / "probe.csv", csv.str());
    }
    {
        std::ostringstream csv;
        csv << header << "dataset,mode,depth,block_size,acc_mean,acc_std,final_mad_last_layer,status\n";
        const double mad_last = out.fit.record.final_mad.back();
        csv << data.name << "," << to_string(spec.train.mode) << "," << spec.train.depth << ","
            << (spec.train.mode == TrainMode::end2end ? spec.train.depth : spec.train.block_size)
            << "," << fmt_real(out.probe.mean) << "," << fmt_real(out.probe.stddev) << ","
            << fmt_real(mad_last) << ",ok\n";
        write_text_file(fs::path(out_dir) / "summary.csv", csv.str());
    }
    save_checkpoint(fs::path(out_dir) / "checkpoint.bgck", out.fit.encoder, spec.train.seed);

    std::cout << "train dataset=" << data.name << " mode=" << to_string(spec.train.mode)
              << " depth=" << spec.train.depth << " block_size="
              << (spec.train.mode == TrainMode::end2end ? spec.train.depth : spec.train.block_size)
              << " acc_mean=" << fmt_real(out.probe.mean) << " acc_std=" << fmt_real(out.probe.stddev)
              << " mad_last=" << fmt_real(out.fit.record.final_mad.back()) << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, std::size_t workers,
              const std::optional<std::uint64_t>& seed, const std::string& precision) {
    FlatConfig cfg = FlatConfig::parse_file(config_path);
    SweepSpec spec = parse_sweep_spec(cfg);
    apply_overrides(spec.base.train, seed, precision);

    const std::vector<CellResult> cells = run_sweep(spec, workers);
    fs::create_directories(out_dir);
    write_text_file(fs::path(out_dir) / "results.csv", render_results_csv(spec, cells));

    std::size_t failed = 0;
    for (const CellResult& c : cells) {
        if (c.ok) continue;
        ++failed;
        std::cerr << "cell " << c.dataset << "/" << to_string(c.mode) << "/L=" << c.depth
                  << "/bs=" << c.block_size << " failed: " << c.error << "\n";
    }
    std::cout << "sweep cells=" << cells.size() << " failed=" << failed << " -> "
              << (fs::path(out_dir) / "results.csv").string() << "\n";
    return 0;
}

int cmd_mad(const std::string& checkpoint_path, const std::string& dataset,
            const std::string& out_dir, bool row_normalize) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const LoadedDataset data = load_run_dataset(dataset, row_normalize);
    const MadProfile profile = mad_profile(ck.encoder, data.graph);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "# checkpoint = " << checkpoint_path << "\n";
    csv << "# dataset = " << data.name << "\n";
    csv << "# row_normalize = " << (row_normalize ? "true" : "false") << "\n";
    csv << "# depth = " << profile.depth << "\n";
    csv << "# seed = " << ck.seed << "\n";
    csv << "layer,mad\n";
    for (std::size_t l = 0; l < profile.per_layer.size(); ++l)
        csv << (l + 1) << "," << (profile.per_layer[l] ? fmt_real(*profile.per_layer[l]) : "nan")
            << "\n";
    write_text_file(fs::path(out_dir) / "mad.csv", csv.str());

    std::cout << "mad depth=" << profile.depth << " last="
              << (profile.per_layer.back() ? fmt_real(*profile.per_layer.back()) : "nan") << "\n";
    return 0;
}

int cmd_probe(const std::string& checkpoint_path, const std::string& dataset,
              const std::string& out_dir, bool row_normalize, std::size_t repeats,
              std::uint64_t seed) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const LoadedDataset data = load_run_dataset(dataset, row_normalize);
    const DenseMatrix<double> z = full_forward(ck.encoder, data.adjacency, data.graph.features);
    const ProbeResult probe = linear_probe(z, data.graph, repeats, seed);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "# checkpoint = " << checkpoint_path << "\n";
    csv << "# dataset = " << data.name << "\n";
    csv << "# row_normalize = " << (row_normalize ? "true" : "false") << "\n";
    csv << "# repeats = " << repeats << "\n";
    csv << "# seed = " << seed << "\n";
    csv << "repeat,accuracy\n";
    for (std::size_t r = 0; r < probe.accuracies.size(); ++r)
        csv << r << "," << fmt_real(probe.accuracies[r]) << "\n";
    write_text_file(fs::path(out_dir) / "probe.csv", csv.str());

    std::cout << "probe acc_mean=" << fmt_real(probe.mean) << " acc_std=" << fmt_real(probe.stddev)
              << "\n";
    return 0;
}

int cmd_gen_synthetic(std::size_t blocks, std::size_t nodes_per_block, double p_in, double p_out,
                      std::size_t feature_dim, std::uint64_t seed, const std::string& out_dir) {
    const GraphDataset g = generate_sbm(blocks, nodes_per_block, p_in, p_out, feature_dim, seed);
    fs::create_directories(out_dir);
    save_dataset(g, out_dir);
    std::cout << "gen-synthetic nodes=" << g.num_nodes << " edges=" << g.edges.size()
              << " classes=" << g.num_classes << " -> " << out_dir << "\n";
    return 0;
}

double parse_field_real(const std::string& s) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw ConfigError("non-numeric CSV field '" + s + "'");
    }
}

int cmd_plot(const std::string& input_csv, const std::string& kind, const std::string& out_svg) {
    const CsvTable table = CsvTable::read_file(input_csv);
    std::vector<Series> series;
    std::string title, x_label, y_label;

    if (kind == "depth-accuracy") {
        const auto mode_col = table.column("mode");
        const auto depth_col = table.column("depth");
        const auto acc_col = table.column("acc_mean");
        if (!mode_col || !depth_col || !acc_col)
            throw ConfigError(input_csv + ": depth-accuracy needs columns mode, depth, acc_mean");
        const auto dataset_col = table.column("dataset");
        const auto status_col = table.column("status");

        std::map<std::string, Series> grouped;
        for (const auto& row : table.rows) {
            if (status_col && row[*status_col] != "ok") continue;
            std::string label = row[*mode_col];
            if (dataset_col) label = row[*dataset_col] + " " + label;
            grouped[label].label = label;
            grouped[label].points.emplace_back(parse_field_real(row[*depth_col]),
                                               parse_field_real(row[*acc_col]));
        }
        for (auto& [label, s] : grouped) {
            std::sort(s.points.begin(), s.points.end());
            series.push_back(std::move(s));
        }
        title = "accuracy vs depth";
        x_label = "depth";
        y_label = "test accuracy";
    } else if (kind == "mad-layers") {
        const auto layer_col = table.column("layer");
        const auto mad_col = table.column("mad");
        if (!layer_col || !mad_col)
            throw ConfigError(input_csv + ": mad-layers needs columns layer, mad");
        const auto depth_col = table.column("depth");

        std::map<std::string, Series> grouped;
        for (const auto& row : table.rows) {
            const std::string label = depth_col ? "L=" + row[*depth_col] : "mad";
            grouped[label].label = label;
            grouped[label].points.emplace_back(parse_field_real(row[*layer_col]),
                                               parse_field_real(row[*mad_col]));
        }
        for (auto& [label, s] : grouped) {
            std::sort(s.points.begin(), s.points.end());
            series.push_back(std::move(s));
        }
        title = "MAD per layer";
        x_label = "layer";
        y_label = "MAD";
    } else {
        throw ConfigError("unknown plot kind '" + kind + "' (expected depth-accuracy or mad-layers)");
    }

    write_text_file(out_svg, render_line_chart(title, x_label, y_label, series));
    std::cout << "plot kind=" << kind << " series=" << series.size() << " -> " << out_svg << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"blockwise-contrastive GCN laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", precision, checkpoint_path, dataset, kind, input_csv;
    std::string out_svg = "chart.svg";
    std::optional<std::uint64_t> seed_override;
    std::uint64_t probe_seed = 0, sbm_seed = 0;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::size_t repeats = 5, blocks = 3, nodes_per_block = 50, feature_dim = 8;
    double p_in = 0.3, p_out = 0.02;
    bool row_normalize = true;

    std::function<int()> action;

    auto* train = app.add_subcommand("train", "train one run from a config file");
    train->add_option("--config", config_path, "run config path")->required();
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--seed", seed_override, "override the config seed");
    train->add_option("--precision", precision, "override precision (f32 or f64)");
    train->callback([&] { action = [&] { return cmd_train(config_path, out_dir, seed_override, precision); }; });

    auto* sweep = app.add_subcommand("sweep", "run a grid of configurations");
    sweep->add_option("--config", config_path, "sweep config path")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--workers", workers, "worker pool size");
    sweep->add_option("--seed", seed_override, "override the base seed");
    sweep->add_option("--precision", precision, "override precision (f32 or f64)");
    sweep->callback([&] {
        action = [&] { return cmd_sweep(config_path, out_dir, workers, seed_override, precision); };
    });

    auto* madc = app.add_subcommand("mad", "per-layer MAD profile of a checkpoint");
    madc->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
    madc->add_option("--dataset", dataset, "dataset directory or name")->required();
    madc->add_option("--out", out_dir, "output directory");
    madc->add_option("--row-normalize", row_normalize, "L1-normalize feature rows");
    madc->callback([&] { action = [&] { return cmd_mad(checkpoint_path, dataset, out_dir, row_normalize); }; });

    auto* probe = app.add_subcommand("probe", "linear-probe a checkpoint");
    probe->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
    probe->add_option("--dataset", dataset, "dataset directory or name")->required();
    probe->add_option("--out", out_dir, "output directory");
    probe->add_option("--row-normalize", row_normalize, "L1-normalize feature rows");
    probe->add_option("--repeats", repeats, "probe repeats");
    probe->add_option("--seed", probe_seed, "probe seed");
    probe->callback([&] {
        action = [&] { return cmd_probe(checkpoint_path, dataset, out_dir, row_normalize, repeats, probe_seed); };
    });

    auto* gen = app.add_subcommand("gen-synthetic", "generate an SBM dataset");
    gen->add_option("--blocks", blocks, "number of planted blocks");
    gen->add_option("--nodes-per-block", nodes_per_block, "nodes per block");
    gen->add_option("--p-in", p_in, "within-block edge probability");
    gen->add_option("--p-out", p_out, "cross-block edge probability");
    gen->add_option("--feature-dim", feature_dim, "feature dimension");
    gen->add_option("--seed", sbm_seed, "generator seed");
    gen->add_option("--out", out_dir, "output dataset directory")->required();
    gen->callback([&] {
        action = [&] {
            return cmd_gen_synthetic(blocks, nodes_per_block, p_in, p_out, feature_dim, sbm_seed, out_dir);
        };
    });

    auto* plot = app.add_subcommand("plot", "render an SVG chart from a result CSV");
    plot->add_option("--input", input_csv, "input CSV path")->required();
    plot->add_option("--kind", kind, "chart kind: depth-accuracy or mad-layers")->required();
    plot->add_option("--out", out_svg, "output SVG path");
    plot->callback([&] { action = [&] { return cmd_plot(input_csv, kind, out_svg); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return action();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
