#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blockgcl/trainer.hpp"

namespace blockgcl {

/// Any malformed, unknown, or invalid configuration input. The CLI maps this
/// to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` file: one pair per line, '#' comments, blank lines
/// ignored. Keys are tracked so unknown leftovers can be rejected with their
/// line numbers.
class FlatConfig {
public:
    static FlatConfig parse_file(const std::filesystem::path& path);
    static FlatConfig parse_string(std::string_view text, std::string source_name);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback);
    double get_real(const std::string& key, double fallback);
    std::size_t get_count(const std::string& key, std::size_t fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);
    /// Comma-separated list; empty items rejected.
    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& fallback);

    /// Throws ConfigError if any key was never consumed by a getter.
    void reject_unknown_keys() const;

    const std::string& source_name() const { return source_; }

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
        bool used = false;
    };

    [[noreturn]] void fail(const std::string& key, const std::string& message) const;
    const Entry* find(const std::string& key);

    std::string source_;
    std::map<std::string, Entry> entries_;
};

/// One training run as described by a config file.
struct RunSpec {
    std::string dataset; // path or bare name resolved against BLOCKGCL_DATA_DIR
    TrainConfig train;
    bool row_normalize = true;
    std::size_t probe_repeats = 5;
};

/// A grid of runs: dataset x mode x depth x block_size, `runs` seeds per cell.
struct SweepSpec {
    std::vector<std::string> datasets;
    std::vector<TrainMode> modes{TrainMode::blockwise, TrainMode::end2end};
    std::vector<std::size_t> depths{2, 4, 8, 16, 32};
    std::vector<std::size_t> block_sizes{1, 2, 4};
    std::size_t runs = 5;
    RunSpec base;
};

RunSpec parse_run_spec(FlatConfig& cfg);
SweepSpec parse_sweep_spec(FlatConfig& cfg);

/// Resolves a dataset path: an existing directory is used as-is, otherwise
/// the name is looked up under $BLOCKGCL_DATA_DIR. Throws ConfigError when
/// neither exists.
std::filesystem::path resolve_dataset_dir(const std::string& dataset);

/// The fully resolved `key = value` lines for a run, in documented order.
/// Embedded as a commented header in every output CSV.
std::vector<std::string> resolved_config_lines(const RunSpec& spec);

} // namespace blockgcl
