#include "blockgcl/config.hpp"

#include "blockgcl/report.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace blockgcl {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

FlatConfig FlatConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

FlatConfig FlatConfig::parse_string(std::string_view text, std::string source_name) {
    FlatConfig cfg;
    cfg.source_ = std::move(source_name);
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (key.empty())
            throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": empty key");
        if (value.empty())
            throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": empty value for key '" + key + "'");
        if (cfg.entries_.count(key))
            throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        cfg.entries_[key] = Entry{value, line_no, false};
    }
    return cfg;
}

bool FlatConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

void FlatConfig::fail(const std::string& key, const std::string& message) const {
    const auto it = entries_.find(key);
    const std::string where =
        it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": " + message + " for key '" + key + "'");
}

const FlatConfig::Entry* FlatConfig::find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) {
    const Entry* e = find(key);
    return e ? e->value : fallback;
}

double FlatConfig::get_real(const std::string& key, double fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    double out = 0.0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) fail(key, "expected a real number, got '" + e->value + "'");
    return out;
}

std::size_t FlatConfig::get_count(const std::string& key, std::size_t fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::size_t out = 0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        fail(key, "expected a non-negative integer, got '" + e->value + "'");
    return out;
}

std::uint64_t FlatConfig::get_u64(const std::string& key, std::uint64_t fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::uint64_t out = 0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        fail(key, "expected a non-negative integer, got '" + e->value + "'");
    return out;
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    fail(key, "expected true/false, got '" + e->value + "'");
}

std::vector<std::string> FlatConfig::get_list(const std::string& key,
                                              const std::vector<std::string>& fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<std::string> items;
    std::string_view rest = e->value;
    while (true) {
        const std::size_t comma = rest.find(',');
        const std::string item{trim(rest.substr(0, comma))};
        if (item.empty()) fail(key, "empty list item");
        items.push_back(item);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return items;
}

void FlatConfig::reject_unknown_keys() const {
    for (const auto& [key, entry] : entries_)
        if (!entry.used)
            throw ConfigError(source_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
}

namespace {

TrainConfig parse_train_config(FlatConfig& cfg) {
    TrainConfig t;
    t.depth = cfg.get_count("depth", t.depth);
    t.block_size = cfg.get_count("block_size", t.block_size);
    t.lambda = cfg.get_real("lambda", t.lambda);
    t.aug.p_edge_drop = cfg.get_real("p_edge_drop", t.aug.p_edge_drop);
    t.aug.p_feat_mask = cfg.get_real("p_feat_mask", t.aug.p_feat_mask);
    t.aug.per_entry_mask = cfg.get_bool("per_entry_mask", t.aug.per_entry_mask);
    t.hidden_dim = cfg.get_count("hidden_dim", t.hidden_dim);
    t.learning_rate = cfg.get_real("learning_rate", t.learning_rate);
    t.weight_decay = cfg.get_real("weight_decay", t.weight_decay);
    t.epochs = cfg.get_count("epochs", t.epochs);
    t.seed = cfg.get_u64("seed", t.seed);
    try {
        t.mode = train_mode_from_string(cfg.get_string("mode", to_string(t.mode)));
        t.precision = precision_from_string(cfg.get_string("precision", to_string(t.precision)));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(cfg.source_name() + ": " + e.what());
    }
    t.identity_block_output = cfg.get_bool("identity_block_output", t.identity_block_output);
    return t;
}

} // namespace

RunSpec parse_run_spec(FlatConfig& cfg) {
    RunSpec spec;
    spec.dataset = cfg.get_string("dataset", "");
    if (spec.dataset.empty())
        throw ConfigError(cfg.source_name() + ": missing required key 'dataset'");
    spec.train = parse_train_config(cfg);
    spec.row_normalize = cfg.get_bool("row_normalize", spec.row_normalize);
    spec.probe_repeats = cfg.get_count("probe_repeats", spec.probe_repeats);
    if (spec.probe_repeats == 0)
        throw ConfigError(cfg.source_name() + ": probe_repeats must be positive");
    cfg.reject_unknown_keys();
    try {
        spec.train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(cfg.source_name() + ": " + e.what());
    }
    return spec;
}

SweepSpec parse_sweep_spec(FlatConfig& cfg) {
    SweepSpec spec;
    spec.datasets = cfg.get_list("datasets", {});
    if (spec.datasets.empty() && cfg.has("dataset")) spec.datasets = cfg.get_list("dataset", {});
    if (spec.datasets.empty())
        throw ConfigError(cfg.source_name() + ": missing required key 'datasets'");

    std::vector<std::string> mode_names;
    for (TrainMode m : spec.modes) mode_names.push_back(to_string(m));
    spec.modes.clear();
    for (const std::string& name : cfg.get_list("modes", mode_names)) {
        try {
            spec.modes.push_back(train_mode_from_string(name));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(cfg.source_name() + ": " + e.what());
        }
    }

    auto parse_counts = [&cfg](const std::string& key, const std::vector<std::size_t>& fallback) {
        std::vector<std::string> fallback_str;
        for (std::size_t v : fallback) fallback_str.push_back(std::to_string(v));
        std::vector<std::size_t> out;
        for (const std::string& item : cfg.get_list(key, fallback_str)) {
            std::size_t v = 0;
            const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (ec != std::errc{} || ptr != item.data() + item.size() || v == 0)
                throw ConfigError(cfg.source_name() + ": expected positive integers for key '" + key + "'");
            out.push_back(v);
        }
        return out;
    };
    spec.depths = parse_counts("depths", spec.depths);
    spec.block_sizes = parse_counts("block_sizes", spec.block_sizes);
    spec.runs = cfg.get_count("runs", spec.runs);
    if (spec.runs == 0) throw ConfigError(cfg.source_name() + ": runs must be positive");

    spec.base.train = parse_train_config(cfg);
    spec.base.row_normalize = cfg.get_bool("row_normalize", spec.base.row_normalize);
    spec.base.probe_repeats = 1;
    cfg.reject_unknown_keys();
    return spec;
}

std::filesystem::path resolve_dataset_dir(const std::string& dataset) {
    const std::filesystem::path direct{dataset};
    if (std::filesystem::is_directory(direct)) return direct;
    if (const char* root = std::getenv("BLOCKGCL_DATA_DIR")) {
        const std::filesystem::path fallback = std::filesystem::path(root) / dataset;
        if (std::filesystem::is_directory(fallback)) return fallback;
        throw ConfigError("dataset '" + dataset + "' not found (also tried " + fallback.string() + ")");
    }
    throw ConfigError("dataset '" + dataset + "' not found (set BLOCKGCL_DATA_DIR for bare names)");
}

std::vector<std::string> resolved_config_lines(const RunSpec& spec) {
    std::vector<std::string> lines;
    auto add = [&lines](const std::string& key, const std::string& value) {
        lines.push_back(key + " = " + value);
    };
    add("dataset", spec.dataset);
    add("mode", to_string(spec.train.mode));
    add("depth", std::to_string(spec.train.depth));
    add("block_size", std::to_string(spec.train.block_size));
    add("hidden_dim", std::to_string(spec.train.hidden_dim));
    add("lambda", fmt_real(spec.train.lambda));
    add("p_edge_drop", fmt_real(spec.train.aug.p_edge_drop));
    add("p_feat_mask", fmt_real(spec.train.aug.p_feat_mask));
    add("per_entry_mask", spec.train.aug.per_entry_mask ? "true" : "false");
    add("learning_rate", fmt_real(spec.train.learning_rate));
    add("weight_decay", fmt_real(spec.train.weight_decay));
    add("epochs", std::to_string(spec.train.epochs));
    add("seed", std::to_string(spec.train.seed));
    add("precision", to_string(spec.train.precision));
    add("identity_block_output", spec.train.identity_block_output ? "true" : "false");
    add("row_normalize", spec.row_normalize ? "true" : "false");
    add("probe_repeats", std::to_string(spec.probe_repeats));
    return lines;
}

} // namespace blockgcl
