#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mno/common.hpp"
#include "mno/tensor.hpp"

// Truncated discrete Fourier transform over the first axis of a (K x C) block.
//
// Conventions (matching the usual rfft/irfft "backward" normalization):
//   forward   H[m,c] = sum_x v[x,c] * exp(-2*pi*i*m*x/K),  m < k_max
//   inverse   y[x,c] = (1/K) * Re( sum over the Hermitian completion of H )
// The inverse reads only the real part of modes m=0 and m=K/2 (even K); their
// imaginary parts are ignored and receive zero gradient.
//
// Two evaluation paths with identical semantics:
//   - direct truncated summation with a cached twiddle table, O(k_max*K*C);
//     cheapest when few modes are retained (the operator keeps k_max=3).
//   - radix-2 FFT per column, O(K log K * C); cheapest for full-spectrum use.
// The path is fixed per plan so repeated runs are bit-identical.

namespace mno {

namespace detail {

/// exp(-2*pi*i*num/den) with the four cardinal angles made exact so that
/// DC and Nyquist rows have exactly zero imaginary part.
inline cplx unit_root(long num, long den) {
    num %= den;
    if (num < 0) num += den;
    if (num == 0) return {1.0, 0.0};
    if (4 * num == den) return {0.0, -1.0};
    if (2 * num == den) return {-1.0, 0.0};
    if (4 * num == 3 * den) return {0.0, 1.0};
    const double th = -2.0 * std::numbers::pi * static_cast<double>(num) / static_cast<double>(den);
    return {std::cos(th), std::sin(th)};
}

} // namespace detail

struct DftPlan {
    int K = 0;
    int k_max = 0;
    bool use_fft = false;
    int log2_k = 0;
    std::vector<cplx> w;       // direct path: k_max rows x K, w[m*K+x] = e^{-2pi i m x / K}
    std::vector<int> bitrev;   // fft path: permutation table
    std::vector<cplx> stage_w; // fft path: per-stage twiddles, concatenated (len 2,4,...,K)

    DftPlan() = default;

    DftPlan(int K_, int k_max_) : K(K_), k_max(k_max_) {
        if (K < 1) throw ShapeError("DftPlan: K must be >= 1");
        if (k_max < 1 || k_max > K / 2 + 1)
            throw ModeError("DftPlan: k_max must be in [1, floor(K/2)+1], got k_max=" +
                            std::to_string(k_max) + " for K=" + std::to_string(K));
        int lg = 0;
        while ((1 << lg) < K) ++lg;
        const bool pow2 = (1 << lg) == K;
        log2_k = lg;
        // Direct summation costs k_max*K per column, the FFT (K/2)*log2(K);
        // prefer the cheaper one.
        use_fft = pow2 && K >= 2 && 2 * k_max > lg;
        if (use_fft) {
            bitrev.resize(K);
            for (int i = 0; i < K; ++i) {
                int r = 0;
                for (int bit = 0; bit < lg; ++bit) r |= ((i >> bit) & 1) << (lg - 1 - bit);
                bitrev[i] = r;
            }
            stage_w.reserve(K);
            for (int len = 2; len <= K; len <<= 1)
                for (int j = 0; j < len / 2; ++j) stage_w.push_back(detail::unit_root(j, len));
        } else {
            w.resize(static_cast<std::size_t>(k_max) * K);
            for (int m = 0; m < k_max; ++m)
                for (int x = 0; x < K; ++x)
                    w[static_cast<std::size_t>(m) * K + x] =
                        detail::unit_root(static_cast<long>(m) * x, K);
        }
    }

    /// Complex scratch entries a caller must provide for the FFT path.
    std::size_t scratch_len() const { return use_fft ? static_cast<std::size_t>(K) : 0; }

    /// In-place radix-2 transform; conj=true applies conjugated twiddles
    /// (used for the unnormalized inverse).
    void fft_inplace(cplx* buf, bool conj_twiddle) const {
        for (int i = 0; i < K; ++i) {
            const int r = bitrev[i];
            if (i < r) std::swap(buf[i], buf[r]);
        }
        std::size_t tw_off = 0;
        for (int len = 2; len <= K; len <<= 1) {
            const int half = len / 2;
            for (int start = 0; start < K; start += len) {
                for (int j = 0; j < half; ++j) {
                    const cplx tw = conj_twiddle ? std::conj(stage_w[tw_off + j]) : stage_w[tw_off + j];
                    cplx& u = buf[start + j];
                    cplx& v = buf[start + j + half];
                    const cplx t = tw * v;
                    v = u - t;
                    u += t;
                }
            }
            tw_off += half;
        }
    }
};

/// H (k_max x C) = truncated DFT of x (K x C) along the first axis.
/// scratch must hold plan.scratch_len() entries (may be null for the direct path).
inline void dft_forward(const DftPlan& p, const double* x, int C, cplx* out, cplx* scratch) {
    const std::size_t kc = static_cast<std::size_t>(p.k_max) * C;
    if (p.use_fft) {
        for (int c = 0; c < C; ++c) {
            for (int xx = 0; xx < p.K; ++xx) scratch[xx] = cplx(x[static_cast<std::size_t>(xx) * C + c], 0.0);
            p.fft_inplace(scratch, false);
            for (int m = 0; m < p.k_max; ++m) out[static_cast<std::size_t>(m) * C + c] = scratch[m];
        }
        return;
    }
    for (std::size_t i = 0; i < kc; ++i) out[i] = cplx(0.0, 0.0);
    for (int m = 0; m < p.k_max; ++m) {
        cplx* orow = out + static_cast<std::size_t>(m) * C;
        for (int xx = 0; xx < p.K; ++xx) {
            const cplx wv = p.w[static_cast<std::size_t>(m) * p.K + xx];
            const double wr = wv.real(), wi = wv.imag();
            const double* xrow = x + static_cast<std::size_t>(xx) * C;
            for (int c = 0; c < C; ++c)
                orow[c] += cplx(wr * xrow[c], wi * xrow[c]);
        }
    }
}

/// y (K x C) = normalized inverse of the truncated spectrum h (k_max x C),
/// zero-padding the missing modes and completing Hermitian symmetry.
inline void dft_inverse(const DftPlan& p, const cplx* h, int C, double* y, cplx* scratch) {
    if (p.use_fft) {
        const double inv_k = 1.0 / p.K;
        for (int c = 0; c < C; ++c) {
            for (int xx = 0; xx < p.K; ++xx) scratch[xx] = cplx(0.0, 0.0);
            scratch[0] = cplx(h[c].real(), 0.0);
            for (int m = 1; m < p.k_max; ++m) {
                const cplx hm = h[static_cast<std::size_t>(m) * C + c];
                if (2 * m == p.K) {
                    scratch[m] = cplx(hm.real(), 0.0); // self-conjugate Nyquist bin
                } else {
                    scratch[m] = hm;
                    scratch[p.K - m] = std::conj(hm);
                }
            }
            p.fft_inplace(scratch, true);
            for (int xx = 0; xx < p.K; ++xx) y[static_cast<std::size_t>(xx) * C + c] = scratch[xx].real() * inv_k;
        }
        return;
    }
    for (int xx = 0; xx < p.K; ++xx) {
        double* yrow = y + static_cast<std::size_t>(xx) * C;
        for (int c = 0; c < C; ++c) yrow[c] = 0.0;
        for (int m = 0; m < p.k_max; ++m) {
            const double alpha = (m == 0 || 2 * m == p.K) ? 1.0 : 2.0;
            const double s = alpha / p.K;
            const cplx wv = p.w[static_cast<std::size_t>(m) * p.K + xx];
            // Re(h * conj(w)) written out; at m=0 and Nyquist Im(w)=0 exactly,
            // so the imaginary part of h is structurally ignored there.
            const double wr = s * wv.real(), wi = s * wv.imag();
            const cplx* hrow = h + static_cast<std::size_t>(m) * C;
            for (int c = 0; c < C; ++c)
                yrow[c] += wr * hrow[c].real() + wi * hrow[c].imag();
        }
    }
}

/// gx (K x C) += adjoint of dft_forward applied to cotangent g (k_max x C).
/// Twiddles are recomputed on the fly; only used on training-sized grids.
inline void dft_forward_adjoint(const DftPlan& p, const cplx* g, int C, double* gx) {
    for (int xx = 0; xx < p.K; ++xx) {
        double* grow = gx + static_cast<std::size_t>(xx) * C;
        for (int m = 0; m < p.k_max; ++m) {
            const cplx wv = detail::unit_root(static_cast<long>(m) * xx, p.K);
            const double wr = wv.real(), wi = wv.imag();
            const cplx* gr = g + static_cast<std::size_t>(m) * C;
            for (int c = 0; c < C; ++c)
                grow[c] += gr[c].real() * wr + gr[c].imag() * wi;
        }
    }
}

/// gh (k_max x C) += adjoint of dft_inverse applied to cotangent gy (K x C).
/// Ignored imaginary parts (m=0, Nyquist) receive exactly zero gradient.
inline void dft_inverse_adjoint(const DftPlan& p, const double* gy, int C, cplx* gh) {
    for (int m = 0; m < p.k_max; ++m) {
        const double alpha = (m == 0 || 2 * m == p.K) ? 1.0 : 2.0;
        const double s = alpha / p.K;
        cplx* ghrow = gh + static_cast<std::size_t>(m) * C;
        for (int xx = 0; xx < p.K; ++xx) {
            const cplx wv = detail::unit_root(static_cast<long>(m) * xx, p.K);
            const double wr = s * wv.real(), wi = s * wv.imag();
            const double* gyrow = gy + static_cast<std::size_t>(xx) * C;
            for (int c = 0; c < C; ++c)
                ghrow[c] += cplx(gyrow[c] * wr, gyrow[c] * wi);
        }
    }
}

} // namespace mno
