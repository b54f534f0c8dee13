#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "blockgcl/graph.hpp"
#include "blockgcl/linalg.hpp"

namespace testsupport {

/// Central finite differences of a scalar functional with respect to x.
template <typename F>
blockgcl::DenseMatrix<double> fd_gradient(blockgcl::DenseMatrix<double>& x, F&& f,
                                          double h = 1e-5) {
    blockgcl::DenseMatrix<double> g(x.rows(), x.cols());
    for (std::size_t k = 0; k < x.rows() * x.cols(); ++k) {
        const double orig = x.data()[k];
        x.data()[k] = orig + h;
        const double fp = f();
        x.data()[k] = orig - h;
        const double fm = f();
        x.data()[k] = orig;
        g.data()[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// True when a and b agree within relative tolerance (with an absolute floor
/// for genuinely zero gradients).
inline bool close_rel(double a, double b, double rel_tol, double abs_floor = 1e-8) {
    const double diff = std::abs(a - b);
    return diff <= abs_floor || diff <= rel_tol * std::max(std::abs(a), std::abs(b));
}

inline double max_rel_err(const blockgcl::DenseMatrix<double>& a,
                          const blockgcl::DenseMatrix<double>& b, double abs_floor = 1e-8) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.rows() * a.cols(); ++k) {
        const double diff = std::abs(a.data()[k] - b.data()[k]);
        if (diff <= abs_floor) continue;
        worst = std::max(worst, diff / std::max(std::abs(a.data()[k]), std::abs(b.data()[k])));
    }
    return worst;
}

/// Random simple undirected edge set on n nodes.
inline std::vector<blockgcl::Edge> random_edges(std::size_t n, double p, blockgcl::Rng& rng) {
    std::vector<blockgcl::Edge> edges;
    for (std::uint32_t u = 0; u < n; ++u)
        for (std::uint32_t v = u + 1; v < n; ++v)
            if (rng.bernoulli(p)) edges.push_back({u, v});
    return edges;
}

inline blockgcl::DenseMatrix<double> random_matrix(std::size_t rows, std::size_t cols,
                                                   blockgcl::Rng& rng, double scale = 1.0) {
    blockgcl::DenseMatrix<double> m(rows, cols);
    for (std::size_t k = 0; k < rows * cols; ++k) m.data()[k] = scale * rng.normal();
    return m;
}

/// Fresh unique directory under the system temp root.
inline std::string make_temp_dir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     (tag + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir.string();
}

} // namespace testsupport
