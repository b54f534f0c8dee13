#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "blockgcl/linalg.hpp"

namespace blockgcl {

/// Quantities recorded by standardize and consumed by its backward pass
/// within the same training step.
template <typename T>
struct StandardizeTape {
    std::vector<double> mean;   // per column
    std::vector<double> sigma;  // per column, population (divide by N)
    double eps = 0.0;
    DenseMatrix<T> zstd;
};

/// Column-wise transform to mean 0 and norm 1: (Z - mu) / ((sigma + eps) * sqrt(N)),
/// with population sigma. Constant columns map to zero via the eps guard.
template <typename T>
DenseMatrix<T> standardize(const DenseMatrix<T>& z, double eps, StandardizeTape<T>& tape) {
    const std::size_t n = z.rows();
    const std::size_t d = z.cols();
    if (n < 2) throw std::invalid_argument("standardize: need at least 2 rows");
    if (eps <= 0) throw std::invalid_argument("standardize: eps must be positive");

    tape.mean.assign(d, 0.0);
    tape.sigma.assign(d, 0.0);
    tape.eps = eps;

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) tape.mean[j] += static_cast<double>(z(i, j));
    for (std::size_t j = 0; j < d; ++j) tape.mean[j] /= static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = static_cast<double>(z(i, j)) - tape.mean[j];
            tape.sigma[j] += c * c;
        }
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    std::vector<double> inv_scale(d);
    for (std::size_t j = 0; j < d; ++j) {
        tape.sigma[j] = std::sqrt(tape.sigma[j] / static_cast<double>(n));
        inv_scale[j] = 1.0 / ((tape.sigma[j] + eps) * sqrt_n);
    }

    DenseMatrix<T> out(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out(i, j) = static_cast<T>((static_cast<double>(z(i, j)) - tape.mean[j]) *
                                       inv_scale[j]);
    tape.zstd = out;
    return out;
}

template <typename T>
struct ContrastGrads {
    double loss = 0.0;
    DenseMatrix<T> grad_a;
    DenseMatrix<T> grad_b;
};

/// Invariance + lambda * decorrelation on standardized inputs:
///   ||A - B||_F^2 + lambda (||A'A - I||_F^2 + ||B'B - I||_F^2)
/// with gradients 2(A-B) + 4 lambda A(A'A - I) and the B-symmetric form.
template <typename T>
ContrastGrads<T> cca_loss(const DenseMatrix<T>& za_std, const DenseMatrix<T>& zb_std,
                          double lambda) {
    if (za_std.rows() != zb_std.rows() || za_std.cols() != zb_std.cols())
        throw std::invalid_argument("cca_loss: view shapes differ");
    if (lambda < 0) throw std::invalid_argument("cca_loss: lambda must be non-negative");

    const std::size_t n = za_std.rows();
    const std::size_t d = za_std.cols();

    ContrastGrads<T> result;
    result.grad_a = DenseMatrix<T>(n, d);
    result.grad_b = DenseMatrix<T>(n, d);

    double invariance = 0.0;
    for (std::size_t k = 0; k < n * d; ++k) {
        const double diff =
            static_cast<double>(za_std.data()[k]) - static_cast<double>(zb_std.data()[k]);
        invariance += diff * diff;
        result.grad_a.data()[k] = static_cast<T>(2.0 * diff);
        result.grad_b.data()[k] = static_cast<T>(-2.0 * diff);
    }

    double decorrelation = 0.0;
    for (int side = 0; side < 2; ++side) {
        // indexed, not pointer-keyed: both arguments may alias the same matrix
        const DenseMatrix<T>& z = side == 0 ? za_std : zb_std;
        DenseMatrix<T> cov = matmul(z, z, true, false); // D x D
        for (std::size_t j = 0; j < d; ++j) cov(j, j) -= T{1};
        double norm2 = 0.0;
        for (std::size_t k = 0; k < d * d; ++k) {
            const double v = static_cast<double>(cov.data()[k]);
            norm2 += v * v;
        }
        decorrelation += norm2;
        DenseMatrix<T> zc = matmul(z, cov);
        DenseMatrix<T>& grad = side == 0 ? result.grad_a : result.grad_b;
        const T scale = static_cast<T>(4.0 * lambda);
        for (std::size_t k = 0; k < n * d; ++k) grad.data()[k] += scale * zc.data()[k];
    }

    result.loss = invariance + lambda * decorrelation;
    return result;
}

/// Exact gradient through standardize; both mu and sigma depend on Z.
/// With s = sqrt(N)(sigma + eps), y the standardized column and g the
/// incoming gradient:  dL/dx_i = (g_i - mean(g))/s - y_i <g, y> / (sqrt(N) sigma).
template <typename T>
DenseMatrix<T> standardize_backward(const DenseMatrix<T>& grad_zstd,
                                    const StandardizeTape<T>& tape) {
    const std::size_t n = grad_zstd.rows();
    const std::size_t d = grad_zstd.cols();
    if (tape.zstd.rows() != n || tape.zstd.cols() != d || tape.mean.size() != d)
        throw std::invalid_argument("standardize_backward: tape does not match gradient shape");

    const double sqrt_n = std::sqrt(static_cast<double>(n));
    std::vector<double> gmean(d, 0.0), gy(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double g = static_cast<double>(grad_zstd(i, j));
            gmean[j] += g;
            gy[j] += g * static_cast<double>(tape.zstd(i, j));
        }
    for (std::size_t j = 0; j < d; ++j) gmean[j] /= static_cast<double>(n);

    DenseMatrix<T> out(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        const double s = sqrt_n * (tape.sigma[j] + tape.eps);
        const double sigma_term = tape.sigma[j] > 0 ? gy[j] / (sqrt_n * tape.sigma[j]) : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = static_cast<double>(grad_zstd(i, j));
            const double y = static_cast<double>(tape.zstd(i, j));
            out(i, j) = static_cast<T>((g - gmean[j]) / s - y * sigma_term);
        }
    }
    return out;
}

/// The per-block contrastive objective: standardizes raw block outputs,
/// applies the CCA loss, and chains the gradient back to the raw inputs.
struct ContrastLoss {
    double lambda = 1e-3;
    double epsilon_std = 1e-8;

    template <typename T>
    ContrastGrads<T> operator()(const DenseMatrix<T>& za_raw, const DenseMatrix<T>& zb_raw) const {
        StandardizeTape<T> tape_a, tape_b;
        const DenseMatrix<T> za = standardize(za_raw, epsilon_std, tape_a);
        const DenseMatrix<T> zb = standardize(zb_raw, epsilon_std, tape_b);
        ContrastGrads<T> std_grads = cca_loss(za, zb, lambda);
        ContrastGrads<T> result;
        result.loss = std_grads.loss;
        result.grad_a = standardize_backward(std_grads.grad_a, tape_a);
        result.grad_b = standardize_backward(std_grads.grad_b, tape_b);
        return result;
    }
};

} // namespace blockgcl
