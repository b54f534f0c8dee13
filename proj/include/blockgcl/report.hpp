#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace blockgcl {

/// Shortest round-trip decimal form of a double ("nan" for NaN). Used for
/// every numeric field in output CSVs so repeated runs emit identical bytes.
std::string fmt_real(double v);

/// Atomic-enough plain write: truncate and write the whole content.
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// CSV with optional leading '#' comment lines and a header row.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    static CsvTable read_file(const std::filesystem::path& path);
    std::optional<std::size_t> column(const std::string& name) const;
};

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Deterministic static SVG line chart. Series are drawn in order with a
/// fixed palette; an empty data region produces axes plus a "no data" note.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series);

} // namespace blockgcl
