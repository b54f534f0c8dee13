#pragma once

#include <string>
#include <vector>

#include "blockgcl/config.hpp"

namespace blockgcl {

struct CellResult {
    std::string dataset;
    TrainMode mode = TrainMode::blockwise;
    std::size_t depth = 0;
    std::size_t block_size = 0; // effective: depth for end2end
    double acc_mean = 0.0;
    double acc_std = 0.0;
    double mad_last = 0.0; // mean over runs with a defined value, NaN otherwise
    bool ok = false;
    std::string error;
};

/// Runs the grid dataset x mode x depth x block_size with `runs` seeds per
/// cell (seed = base seed + run index) on a bounded worker pool. Cells whose
/// block size exceeds the depth are not part of the grid; end2end expands to
/// one cell per depth. Failed cells carry their error and continue the sweep.
std::vector<CellResult> run_sweep(const SweepSpec& spec, std::size_t workers);

/// results.csv bytes: commented resolved-spec header, then one row per cell
/// in grid order.
std::string render_results_csv(const SweepSpec& spec, const std::vector<CellResult>& cells);

} // namespace blockgcl
