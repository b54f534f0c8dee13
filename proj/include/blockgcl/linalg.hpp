#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <cblas.h>

extern "C" void openblas_set_num_threads(int);

namespace blockgcl {

/// Row-major dense matrix. Plain value type; `T` is float for training
/// runs and double for tests and gradient checks.
template <typename T>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
        DenseMatrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& r : rows) {
            if (r.size() != m.cols_)
                throw std::invalid_argument("DenseMatrix::from_rows: ragged rows");
            std::size_t j = 0;
            for (T v : r) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    DenseMatrix<U> cast() const {
        DenseMatrix<U> out(rows_, cols_);
        for (std::size_t k = 0; k < data_.size(); ++k) out.data()[k] = static_cast<U>(data_[k]);
        return out;
    }

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Compressed sparse row matrix. Column indices are sorted within each row.
template <typename T>
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_offsets;     // rows + 1 entries
    std::vector<std::uint32_t> column_indices;
    std::vector<T> values;

    std::size_t nnz() const { return values.size(); }

    template <typename U>
    CsrMatrix<U> cast() const {
        CsrMatrix<U> out;
        out.rows = rows;
        out.cols = cols;
        out.row_offsets = row_offsets;
        out.column_indices = column_indices;
        out.values.resize(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) out.values[k] = static_cast<U>(values[k]);
        return out;
    }
};

/// xoshiro256++ with SplitMix64 seeding. Identical (seed, stream, call
/// sequence) yields identical output on every platform, which the std
/// distributions do not guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; the sin partner is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    /// Uniform integer in [0, n).
    std::uint64_t bounded(std::uint64_t n) { return next_u64() % n; }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = bounded(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

namespace detail {

inline void pin_blas_single_thread() {
    static std::once_flag flag;
    std::call_once(flag, [] { openblas_set_num_threads(1); });
}

inline void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k,
                 const float* a, std::size_t lda, const float* b, std::size_t ldb,
                 float* c, std::size_t ldc) {
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
                static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), 1.0f,
                a, static_cast<int>(lda), b, static_cast<int>(ldb), 0.0f, c, static_cast<int>(ldc));
}

inline void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb,
                 double* c, std::size_t ldc) {
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
                static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), 1.0,
                a, static_cast<int>(lda), b, static_cast<int>(ldb), 0.0, c, static_cast<int>(ldc));
}

} // namespace detail

/// Dense product op(A)·op(B) where op is optional transposition.
template <typename T>
DenseMatrix<T> matmul(const DenseMatrix<T>& a, const DenseMatrix<T>& b,
                      bool transpose_a = false, bool transpose_b = false) {
    const std::size_t m = transpose_a ? a.cols() : a.rows();
    const std::size_t ka = transpose_a ? a.rows() : a.cols();
    const std::size_t kb = transpose_b ? b.cols() : b.rows();
    const std::size_t n = transpose_b ? b.rows() : b.cols();
    if (ka != kb)
        throw std::invalid_argument("matmul: inner dimensions disagree (" + std::to_string(ka) +
                                    " vs " + std::to_string(kb) + ")");
    detail::pin_blas_single_thread();
    DenseMatrix<T> c(m, n);
    if (m == 0 || n == 0 || ka == 0) return c;
    detail::gemm(transpose_a, transpose_b, m, n, ka, a.data(), a.cols(), b.data(), b.cols(),
                 c.data(), n);
    return c;
}

/// Sparse-dense product A·X over CSR rows. Row-ordered accumulation keeps
/// the result byte-reproducible.
template <typename T>
DenseMatrix<T> spmm(const CsrMatrix<T>& a, const DenseMatrix<T>& x) {
    if (a.cols != x.rows())
        throw std::invalid_argument("spmm: adjacency has " + std::to_string(a.cols) +
                                    " columns but dense operand has " + std::to_string(x.rows()) +
                                    " rows");
    const std::size_t d = x.cols();
    DenseMatrix<T> y(a.rows, d);
    for (std::size_t u = 0; u < a.rows; ++u) {
        T* out = y.data() + u * d;
        for (std::size_t k = a.row_offsets[u]; k < a.row_offsets[u + 1]; ++k) {
            const T w = a.values[k];
            const T* in = x.data() + static_cast<std::size_t>(a.column_indices[k]) * d;
            for (std::size_t j = 0; j < d; ++j) out[j] += w * in[j];
        }
    }
    return y;
}

/// Glorot/Xavier uniform init: entries in ±sqrt(6/(rows+cols)).
template <typename T>
DenseMatrix<T> glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("glorot_init: dimensions must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    DenseMatrix<T> w(rows, cols);
    for (std::size_t k = 0; k < w.size(); ++k)
        w.data()[k] = static_cast<T>(rng.uniform(-limit, limit));
    return w;
}

} // namespace blockgcl
