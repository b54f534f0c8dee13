#include "blockgcl/sweep.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "blockgcl/report.hpp"
#include "blockgcl/runner.hpp"

namespace blockgcl {

namespace {

struct Cell {
    const LoadedDataset* data = nullptr;
    TrainMode mode = TrainMode::blockwise;
    std::size_t depth = 0;
    std::size_t block_size = 0;
};

CellResult run_cell(const Cell& cell, const SweepSpec& spec) {
    CellResult result;
    result.dataset = cell.data->name;
    result.mode = cell.mode;
    result.depth = cell.depth;
    result.block_size = cell.mode == TrainMode::end2end ? cell.depth : cell.block_size;

    try {
        std::vector<double> accs;
        std::vector<double> mads;
        for (std::size_t run = 0; run < spec.runs; ++run) {
            TrainConfig cfg = spec.base.train;
            cfg.mode = cell.mode;
            cfg.depth = cell.depth;
            cfg.block_size = result.block_size;
            cfg.seed = spec.base.train.seed + run;
            const RunOutput out = execute_run(*cell.data, cfg, 1);
            accs.push_back(out.probe.accuracies.at(0));
            if (out.mad.per_layer.back()) mads.push_back(*out.mad.per_layer.back());
        }
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        result.acc_mean = mean;
        result.acc_std = std::sqrt(var / static_cast<double>(accs.size()));
        if (mads.empty()) {
            result.mad_last = std::numeric_limits<double>::quiet_NaN();
        } else {
            double msum = 0.0;
            for (double m : mads) msum += m;
            result.mad_last = msum / static_cast<double>(mads.size());
        }
        result.ok = true;
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
        result.acc_mean = result.acc_std = result.mad_last = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

} // namespace

std::vector<CellResult> run_sweep(const SweepSpec& spec, std::size_t workers) {
    std::map<std::string, LoadedDataset> datasets;
    for (const std::string& name : spec.datasets)
        if (!datasets.count(name)) datasets[name] = load_run_dataset(name, spec.base.row_normalize);

    std::vector<Cell> cells;
    for (const std::string& name : spec.datasets)
        for (TrainMode mode : spec.modes)
            for (std::size_t depth : spec.depths) {
                if (mode == TrainMode::end2end) {
                    cells.push_back({&datasets.at(name), mode, depth, depth});
                    continue;
                }
                for (std::size_t bs : spec.block_sizes)
                    if (bs <= depth) cells.push_back({&datasets.at(name), mode, depth, bs});
            }

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            results[i] = run_cell(cells[i], spec);
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(workers, cells.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

std::string render_results_csv(const SweepSpec& spec, const std::vector<CellResult>& cells) {
    std::ostringstream out;
    RunSpec base = spec.base;
    base.dataset = spec.datasets.front();
    for (const std::string& line : resolved_config_lines(base)) out << "# " << line << "\n";
    {
        std::ostringstream ds, modes, depths, bss;
        for (std::size_t i = 0; i < spec.datasets.size(); ++i)
            ds << (i ? "," : "") << spec.datasets[i];
        for (std::size_t i = 0; i < spec.modes.size(); ++i)
            modes << (i ? "," : "") << to_string(spec.modes[i]);
        for (std::size_t i = 0; i < spec.depths.size(); ++i)
            depths << (i ? "," : "") << spec.depths[i];
        for (std::size_t i = 0; i < spec.block_sizes.size(); ++i)
            bss << (i ? "," : "") << spec.block_sizes[i];
        out << "# datasets = " << ds.str() << "\n";
        out << "# modes = " << modes.str() << "\n";
        out << "# depths = " << depths.str() << "\n";
        out << "# block_sizes = " << bss.str() << "\n";
        out << "# runs = " << spec.runs << "\n";
    }
    out << "dataset,mode,depth,block_size,acc_mean,acc_std,final_mad_last_layer,status\n";
    for (const CellResult& c : cells) {
        out << c.dataset << "," << to_string(c.mode) << "," << c.depth << "," << c.block_size << ","
            << fmt_real(c.acc_mean) << "," << fmt_real(c.acc_std) << "," << fmt_real(c.mad_last)
            << "," << (c.ok ? "ok" : "failed") << "\n";
    }
    return out.str();
}

} // namespace blockgcl
