#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mno/common.hpp"

// Dense kernels used by both training and inference.  Everything is written
// in axpy form (innermost loop updates independent elements of one output row)
// so the compiler can vectorize without reassociating floating-point sums;
// accumulation order is therefore fixed and results are bit-reproducible.
// None of these functions allocate.

namespace mno {

/// C (n x p) = or += A (n x m) * B (m x p), all row-major.
inline void matmul(const double* __restrict a, const double* __restrict b,
                   double* __restrict c, std::size_t n, std::size_t m, std::size_t p,
                   bool accumulate) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * p;
        if (!accumulate) std::fill(crow, crow + p, 0.0);
        const double* arow = a + i * m;
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = arow[k];
            const double* brow = b + k * p;
            for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
        }
    }
}

/// C (p x m) += A^T (n x p) * B (n x m): C[o,:] += sum_i A[i,o] * B[i,:].
inline void matmul_at_b(const double* __restrict a, const double* __restrict b,
                        double* __restrict c, std::size_t n, std::size_t p,
                        std::size_t m) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * p;
        const double* brow = b + i * m;
        for (std::size_t o = 0; o < p; ++o) {
            const double aio = arow[o];
            double* crow = c + o * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += aio * brow[j];
        }
    }
}

/// B (m x n) = A^T for row-major A (n x m).
inline void transpose(const double* __restrict a, double* __restrict b,
                      std::size_t n, std::size_t m) noexcept {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) b[j * n + i] = a[i * m + j];
}

/// X (n x p) += broadcast row b (p).
inline void add_bias_rows(double* __restrict x, const double* __restrict b,
                          std::size_t n, std::size_t p) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        double* row = x + i * p;
        for (std::size_t j = 0; j < p; ++j) row[j] += b[j];
    }
}

/// out (p) += column sums of G (n x p), rows added in ascending order.
inline void colsum_acc(const double* __restrict g, double* __restrict out,
                       std::size_t n, std::size_t p) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = g + i * p;
        for (std::size_t j = 0; j < p; ++j) out[j] += row[j];
    }
}

inline void relu(const double* __restrict x, double* __restrict y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

/// gx += gy where the forward output y was positive (subgradient 0 at 0).
inline void relu_backward(const double* __restrict y, const double* __restrict gy,
                          double* __restrict gx, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] > 0.0 ? gy[i] : 0.0;
}

inline void axpy(double a, const double* __restrict x, double* __restrict y,
                 std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

inline bool all_finite(const double* x, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
/// A is n x n row-major; both A and b are destroyed; x lands in b.
/// Intended for tiny systems (normal equations, scaling fits).
inline void solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    if (a.size() != n * n || b.size() != n) throw ShapeError("solve_dense: bad system size");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a[r * n + col]);
            if (v > best) { best = v; piv = r; }
        }
        if (!(best > 0.0) || !std::isfinite(best))
            throw SingularError("solve_dense: singular or non-finite pivot");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
            std::swap(b[col], b[piv]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t j = ri + 1; j < n; ++j) acc -= a[ri * n + j] * b[j];
        b[ri] = acc / a[ri * n + ri];
    }
}

} // namespace mno
