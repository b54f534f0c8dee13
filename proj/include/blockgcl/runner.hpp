#pragma once

#include <cstdint>
#include <string>

#include "blockgcl/config.hpp"
#include "blockgcl/eval.hpp"
#include "blockgcl/graph.hpp"
#include "blockgcl/trainer.hpp"

namespace blockgcl {

/// A dataset ready to train on: loaded, optionally row-normalized, with the
/// clean normalized adjacency prebuilt.
struct LoadedDataset {
    std::string name; // directory basename, used in result rows
    GraphDataset graph;
    NormalizedAdjacency adjacency;
};

LoadedDataset load_run_dataset(const std::string& dataset, bool row_normalize);

/// Everything one training run produces: the trained encoder with its loss
/// record, the per-layer MAD profile on the clean graph, and the linear-probe
/// result on the final layer. The record's MAD/probe fields are filled in.
struct RunOutput {
    FitResult fit;
    MadProfile mad;
    ProbeResult probe;
};

RunOutput execute_run(const LoadedDataset& data, const TrainConfig& cfg,
                      std::size_t probe_repeats);

} // namespace blockgcl
