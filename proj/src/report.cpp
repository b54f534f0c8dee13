#include "blockgcl/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace blockgcl {

std::string fmt_real(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("fmt_real: conversion failed");
    return std::string(buf, ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

} // namespace

CsvTable CsvTable::read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            table.columns = split_fields(line);
            header_seen = true;
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() != table.columns.size())
            throw std::runtime_error(path.string() + ": row has " + std::to_string(fields.size()) +
                                     " fields, header has " + std::to_string(table.columns.size()));
        table.rows.push_back(std::move(fields));
    }
    if (!header_seen) throw std::runtime_error(path.string() + ": missing CSV header");
    return table;
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns.begin());
}

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 72, kRight = 24, kTop = 44, kBottom = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt_coord(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << v;
    return out.str();
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Round the step to 1/2/5 times a power of ten.
double nice_step(double span, int target_ticks) {
    const double raw = span / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    double step;
    if (norm <= 1.0) step = 1.0;
    else if (norm <= 2.0) step = 2.0;
    else if (norm <= 5.0) step = 5.0;
    else step = 10.0;
    return step * mag;
}

std::string fmt_tick(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series) {
    double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
    bool any = false;
    for (const Series& s : series)
        for (const auto& [x, y] : s.points) {
            if (std::isnan(x) || std::isnan(y)) continue;
            if (!any) {
                x_min = x_max = x;
                y_min = y_max = y;
                any = true;
            } else {
                x_min = std::min(x_min, x);
                x_max = std::max(x_max, x);
                y_min = std::min(y_min, y);
                y_max = std::max(y_max, y);
            }
        }
    if (any) {
        if (x_min == x_max) { x_min -= 1; x_max += 1; }
        if (y_min == y_max) { y_min -= 1; y_max += 1; }
        const double x_pad = 0.05 * (x_max - x_min), y_pad = 0.05 * (y_max - y_min);
        x_min -= x_pad; x_max += x_pad;
        y_min -= y_pad; y_max += y_pad;
    }

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto sy = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" << escape_xml(title) << "</text>\n";

    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape_xml(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
        << kTop + plot_h / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

    if (!any) {
        out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kTop + plot_h / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\" fill=\"#666\">"
               "no data</text>\n";
        out << "</svg>\n";
        return out.str();
    }

    const double x_step = nice_step(x_max - x_min, 6);
    for (double t = std::ceil(x_min / x_step) * x_step; t <= x_max + 1e-9 * x_step; t += x_step) {
        out << "<line x1=\"" << fmt_coord(sx(t)) << "\" y1=\"" << kTop + plot_h << "\" x2=\""
            << fmt_coord(sx(t)) << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt_coord(sx(t)) << "\" y=\"" << kTop + plot_h + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(t)
            << "</text>\n";
    }
    const double y_step = nice_step(y_max - y_min, 6);
    for (double t = std::ceil(y_min / y_step) * y_step; t <= y_max + 1e-9 * y_step; t += y_step) {
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt_coord(sy(t)) << "\" x2=\"" << kLeft
            << "\" y2=\"" << fmt_coord(sy(t)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kLeft - 9 << "\" y=\"" << fmt_coord(sy(t) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(t)
            << "</text>\n";
    }

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        std::ostringstream pts;
        std::size_t used = 0;
        for (const auto& [x, y] : series[i].points) {
            if (std::isnan(x) || std::isnan(y)) continue;
            if (used) pts << " ";
            pts << fmt_coord(sx(x)) << "," << fmt_coord(sy(y));
            ++used;
        }
        if (used >= 2)
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
                << pts.str() << "\"/>\n";
        for (const auto& [x, y] : series[i].points) {
            if (std::isnan(x) || std::isnan(y)) continue;
            out << "<circle cx=\"" << fmt_coord(sx(x)) << "\" cy=\"" << fmt_coord(sy(y))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
    }

    const double legend_x = kLeft + plot_w - 170;
    double legend_y = kTop + 10;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        out << "<line x1=\"" << legend_x << "\" y1=\"" << legend_y << "\" x2=\"" << legend_x + 24
            << "\" y2=\"" << legend_y << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << legend_x + 30 << "\" y=\"" << legend_y + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(series[i].label)
            << "</text>\n";
        legend_y += 18;
    }

    out << "</svg>\n";
    return out.str();
}

} // namespace blockgcl
