#include "blockgcl/runner.hpp"

#include <cmath>
#include <limits>

namespace blockgcl {

LoadedDataset load_run_dataset(const std::string& dataset, bool row_normalize) {
    const auto dir = resolve_dataset_dir(dataset);
    LoadedDataset out;
    out.name = dir.filename().string();
    if (out.name.empty()) out.name = dir.parent_path().filename().string();
    out.graph = load_dataset(dir);
    if (row_normalize) row_normalize_features(out.graph);
    out.adjacency = normalized_adjacency(out.graph);
    return out;
}

RunOutput execute_run(const LoadedDataset& data, const TrainConfig& cfg,
                      std::size_t probe_repeats) {
    RunOutput out;
    out.fit = fit(data.graph, cfg);

    const auto layer_outputs = full_forward_layers(out.fit.encoder, data.adjacency, data.graph.features);
    out.mad.depth = cfg.depth;
    out.mad.mode = to_string(cfg.mode);
    out.mad.seed = cfg.seed;
    out.mad.per_layer.reserve(layer_outputs.size());
    for (const auto& h : layer_outputs) out.mad.per_layer.push_back(mad(h, data.graph));

    out.probe = linear_probe(layer_outputs.back(), data.graph, probe_repeats, cfg.seed);

    out.fit.record.final_mad.clear();
    for (const auto& m : out.mad.per_layer)
        out.fit.record.final_mad.push_back(m ? *m : std::numeric_limits<double>::quiet_NaN());
    out.fit.record.probe_mean = out.probe.mean;
    out.fit.record.probe_std = out.probe.stddev;
    return out;
}

} // namespace blockgcl
