#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mno/common.hpp"
#include "mno/kernels.hpp"

// Two-scale Lorenz96:
//   dX_k/dt = X_{k-1}(X_{k+1} - X_{k-2}) - X_k + F - (h_s c / b) * sum_j Y_{j,k}
//   dY_{j,k}/dt = -c b Y_{j+1,k}(Y_{j+2,k} - Y_{j-1,k}) - c Y_{j,k} + (h_s c / b) X_k
// with periodic wrap in both k and j.  The resolved-only system drops the
// coupling sum; both tendencies evaluate the shared resolved expression with
// the identical instruction sequence, so the subgrid target (their difference)
// cancels the advection terms to rounding error.

namespace mno {

struct ScaleParams {
    int K = 4;         // resolved grid points
    int J = 4;         // fast variables per resolved point
    double F = 20.0;   // forcing
    double h_s = 0.5;  // coupling strength
    double b = 10.0;   // fast-scale amplitude ratio
    double c = 8.0;    // fast-scale speed ratio
    double dt = 0.005; // RK4 step (MTU)

    double coupling() const { return h_s * c / b; }

    void validate() const {
        if (K < 4) throw ShapeError("ScaleParams: K must be >= 4");
        if (J < 1) throw ShapeError("ScaleParams: J must be >= 1");
        if (!(dt > 0.0)) throw ShapeError("ScaleParams: dt must be positive");
        if (b == 0.0) throw ShapeError("ScaleParams: b must be nonzero");
        if (!std::isfinite(F) || !std::isfinite(h_s) || !std::isfinite(b) || !std::isfinite(c) ||
            !std::isfinite(dt))
            throw ShapeError("ScaleParams: parameters must be finite");
    }
};

/// Full two-scale state in one contiguous buffer: X at [0, K), then Y
/// row-major (J x K) at [K, K + J*K).  Contiguity keeps the RK4 update a
/// single fused loop.
struct FullState {
    int K = 0, J = 0;
    std::vector<double> u;

    FullState() = default;
    FullState(int K_, int J_) : K(K_), J(J_), u(static_cast<std::size_t>(K_) * (J_ + 1), 0.0) {}

    double* X() { return u.data(); }
    const double* X() const { return u.data(); }
    double* Y() { return u.data() + K; }
    const double* Y() const { return u.data() + K; }
    double& Y(int j, int k) { return u[static_cast<std::size_t>(K) + static_cast<std::size_t>(j) * K + k]; }
    double Y(int j, int k) const { return u[static_cast<std::size_t>(K) + static_cast<std::size_t>(j) * K + k]; }

    void resize_like(const FullState& o) {
        K = o.K;
        J = o.J;
        u.resize(o.u.size());
    }
};

/// Resolved-only state.
struct CoarseState {
    int K = 0;
    std::vector<double> u;

    CoarseState() = default;
    explicit CoarseState(int K_) : K(K_), u(K_, 0.0) {}

    double* X() { return u.data(); }
    const double* X() const { return u.data(); }

    void resize_like(const CoarseState& o) {
        K = o.K;
        u.resize(o.u.size());
    }
};

namespace detail {

/// Shared resolved expression; both tendencies must round identically here.
inline double resolved_rhs(const double* X, int K, int k, double F) noexcept {
    const int km1 = k == 0 ? K - 1 : k - 1;
    const int km2 = k <= 1 ? k + K - 2 : k - 2;
    const int kp1 = k + 1 == K ? 0 : k + 1;
    return X[km1] * (X[kp1] - X[km2]) - X[k] + F;
}

} // namespace detail

/// out = dX/dt of the resolved-only system. No allocation if out is pre-sized.
inline void coarse_tendency(const ScaleParams& p, const CoarseState& s, CoarseState& out) {
    out.resize_like(s);
    const double* X = s.X();
    double* d = out.X();
    for (int k = 0; k < s.K; ++k) d[k] = detail::resolved_rhs(X, s.K, k, p.F);
}

inline CoarseState coarse_tendency(const ScaleParams& p, const CoarseState& s) {
    CoarseState out;
    coarse_tendency(p, s, out);
    return out;
}

/// out = d(X,Y)/dt of the coupled system. No allocation if out is pre-sized.
/// The coupling sum over j accumulates in ascending j, fixed for
/// bit-reproducibility; rows stream unit-stride in k for cache behavior.
inline void full_tendency(const ScaleParams& p, const FullState& s, FullState& out) {
    out.resize_like(s);
    const int K = s.K, J = s.J;
    const double* X = s.X();
    const double* Y = s.Y();
    double* dX = out.X();
    double* dY = out.Y();
    const double coup = p.coupling();
    const double cb = p.c * p.b;

    for (int k = 0; k < K; ++k) dX[k] = 0.0;
    for (int j = 0; j < J; ++j) {
        const double* yrow = Y + static_cast<std::size_t>(j) * K;
        for (int k = 0; k < K; ++k) dX[k] += yrow[k];
    }
    for (int k = 0; k < K; ++k)
        dX[k] = detail::resolved_rhs(X, K, k, p.F) - coup * dX[k];

    for (int j = 0; j < J; ++j) {
        const int jm1 = j == 0 ? J - 1 : j - 1;
        const int jp1 = j + 1 == J ? 0 : j + 1;
        const int jp2 = jp1 + 1 == J ? 0 : jp1 + 1;
        const double* yj = Y + static_cast<std::size_t>(j) * K;
        const double* ym1 = Y + static_cast<std::size_t>(jm1) * K;
        const double* yp1 = Y + static_cast<std::size_t>(jp1) * K;
        const double* yp2 = Y + static_cast<std::size_t>(jp2) * K;
        double* drow = dY + static_cast<std::size_t>(j) * K;
        for (int k = 0; k < K; ++k)
            drow[k] = -cb * yp1[k] * (yp2[k] - ym1[k]) - p.c * yj[k] + coup * X[k];
    }
}

inline FullState full_tendency(const ScaleParams& p, const FullState& s) {
    FullState out;
    full_tendency(p, s, out);
    return out;
}

/// Grid filter: select the resolved variables.
inline CoarseState filter(const FullState& s) {
    CoarseState out(s.K);
    for (int k = 0; k < s.K; ++k) out.u[k] = s.X()[k];
    return out;
}

/// Interleaved single-column layout (X_k followed by its J fast variables);
/// the resolved entries sit at positions k*(J+1).
inline std::vector<double> flatten_state(const FullState& s) {
    std::vector<double> v(static_cast<std::size_t>(s.K) * (s.J + 1));
    for (int k = 0; k < s.K; ++k) {
        v[static_cast<std::size_t>(k) * (s.J + 1)] = s.X()[k];
        for (int j = 0; j < s.J; ++j)
            v[static_cast<std::size_t>(k) * (s.J + 1) + 1 + j] = s.Y(j, k);
    }
    return v;
}

/// Grid-independent learning target: the filtered full tendency minus the
/// resolved tendency of the filtered state.  Analytically equals
/// -(h_s c / b) * sum_j Y_{j,k}; computed as the difference so the definition
/// stays closure-agnostic.
inline std::vector<double> subgrid_target(const ScaleParams& p, const FullState& s) {
    FullState ft;
    full_tendency(p, s, ft);
    CoarseState cs = filter(s);
    CoarseState ct;
    coarse_tendency(p, cs, ct);
    std::vector<double> h(s.K);
    for (int k = 0; k < s.K; ++k) h[k] = ft.X()[k] - ct.u[k];
    return h;
}

// ---- classical RK4 ---------------------------------------------------------

namespace detail {

template <class State>
void state_combine(const State& s, double a, const State& d, State& out) noexcept {
    const std::size_t n = s.u.size();
    for (std::size_t i = 0; i < n; ++i) out.u[i] = s.u[i] + a * d.u[i];
}

} // namespace detail

/// One classical RK4 step with caller-owned buffers (no allocation once they
/// are sized).  `out` may alias `u`.  f(state, out_tendency) must not allocate
/// either when its output is pre-sized.
template <class State, class F>
void rk4_step_into(const F& f, const State& s, double dt, State& k, State& u, State& acc,
                   State& out) {
    k.resize_like(s);
    u.resize_like(s);
    acc.resize_like(s);
    out.resize_like(s);
    const std::size_t n = s.u.size();

    f(s, k); // k1
    for (std::size_t i = 0; i < n; ++i) acc.u[i] = k.u[i];
    detail::state_combine(s, dt / 2.0, k, u);

    f(u, k); // k2
    for (std::size_t i = 0; i < n; ++i) acc.u[i] += 2.0 * k.u[i];
    detail::state_combine(s, dt / 2.0, k, u);

    f(u, k); // k3
    for (std::size_t i = 0; i < n; ++i) acc.u[i] += 2.0 * k.u[i];
    detail::state_combine(s, dt, k, u);

    f(u, k); // k4; u is dead after this, so out may alias it
    for (std::size_t i = 0; i < n; ++i) acc.u[i] += k.u[i];
    detail::state_combine(s, dt / 6.0, acc, out);
}

/// Allocating convenience wrapper.
template <class State, class F>
State rk4_step(const F& f, const State& s, double dt) {
    State k, u, acc, out;
    rk4_step_into(f, s, dt, k, u, acc, out);
    return out;
}

inline bool state_finite(const FullState& s) { return all_finite(s.u.data(), s.u.size()); }
inline bool state_finite(const CoarseState& s) { return all_finite(s.u.data(), s.u.size()); }

} // namespace mno
