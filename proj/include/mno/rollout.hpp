#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mno/baselines.hpp"
#include "mno/dataset.hpp"
#include "mno/dynamics.hpp"
#include "mno/fno.hpp"

// Autoregressive coupled integration dX/dt = resolved tendency + hhat, where
// hhat comes from any parametrization and is held constant across the four
// RK4 stages of a step (re-evaluation per stage available as an ablation).
// Evaluation metrics: RMSE over time, skill horizon vs climatology, and the
// bounded-trajectory fraction.

namespace mno {

/// Batched correction ĥ(X̄): in and out are (B, K) row-major.  Rows must be
/// independent so a blown-up ensemble member cannot contaminate the others.
class Parametrization {
public:
    virtual ~Parametrization() = default;
    virtual void predict(const double* X, int B, int K, double* out) = 0;
    /// Called once per coarse step after all samples advanced (lockstep hook).
    virtual void on_step_end() {}
};

class ZeroParam : public Parametrization {
public:
    void predict(const double*, int B, int K, double* out) override {
        for (std::size_t i = 0; i < static_cast<std::size_t>(B) * K; ++i) out[i] = 0.0;
    }
};

class ConstantParam : public Parametrization {
public:
    explicit ConstantParam(double c) : c_(c) {}
    void predict(const double*, int B, int K, double* out) override {
        for (std::size_t i = 0; i < static_cast<std::size_t>(B) * K; ++i) out[i] = c_;
    }

private:
    double c_;
};

/// Debug-only oracle: carries the reference two-scale solution for every
/// ensemble member and reports the exact subgrid term from its true Y.
/// predict() must be called exactly once per coarse step (the lockstep
/// contract above); on_step_end() advances the references.
class OracleParam : public Parametrization {
public:
    OracleParam(std::vector<FullState> refs, const ScaleParams& p)
        : refs_(std::move(refs)), p_(p) {}

    void predict(const double*, int B, int K, double* out) override {
        if (static_cast<std::size_t>(B) != refs_.size())
            throw ShapeError("OracleParam: batch does not match reference count");
        const double coup = p_.coupling();
        for (int b = 0; b < B; ++b) {
            const FullState& s = refs_[b];
            if (s.K != K) throw ShapeError("OracleParam: K mismatch");
            for (int k = 0; k < K; ++k) {
                double acc = 0.0;
                for (int j = 0; j < s.J; ++j) acc += s.Y(j, k);
                out[static_cast<std::size_t>(b) * K + k] = -coup * acc;
            }
        }
    }

    void on_step_end() override {
        for (FullState& s : refs_) {
            auto f = [this](const FullState& in, FullState& o) { full_tendency(p_, in, o); };
            rk4_step_into(f, s, p_.dt, k_, u_, acc_, s);
        }
    }

    const FullState& reference(int i) const { return refs_.at(i); }

private:
    std::vector<FullState> refs_;
    ScaleParams p_;
    FullState k_, u_, acc_;
};

class FnoParametrization : public Parametrization {
public:
    FnoParametrization(const FnoConfig& cfg, const FnoParams& par, int K, int B_max)
        : inf_(cfg, par, K, B_max) {}
    void predict(const double* X, int B, int, double* out) override { inf_.run(X, B, out); }

private:
    FnoInference inf_;
};

class LinearParametrization : public Parametrization {
public:
    explicit LinearParametrization(const LinearParam& p) : p_(p) {}
    void predict(const double* X, int B, int K, double* out) override {
        linear_predict(p_, X, B, K, out);
    }

private:
    LinearParam p_;
};

class ResNetParametrization : public Parametrization {
public:
    ResNetParametrization(const ResNetConfig& cfg, const ResNetParams& par, std::size_t n_max)
        : inf_(cfg, par, n_max) {}
    void predict(const double* X, int B, int K, double* out) override {
        inf_.run(X, static_cast<std::size_t>(B) * K, out);
    }

private:
    ResNetInference inf_;
};

// ---- coupled integration ----------------------------------------------------

struct RolloutOptions {
    bool per_stage = false; // ablation: re-evaluate ĥ at every RK4 stage
};

/// Advances all rows of `cur` (N, K) by T-1 steps, writing the trajectories
/// into traj (N, T, K) with row 0 the initial states.  A row that turns
/// non-finite is recorded in blowup_t and padded with NaN from that step on.
inline void rollout_batch(const RealTensor& x0, Parametrization& param, const ScaleParams& p,
                          int T, RealTensor& traj, std::vector<int>& blowup_t,
                          const RolloutOptions& opt = {}) {
    if (x0.shape.size() != 2) throw ShapeError("rollout_batch: x0 must be (N, K)");
    const int N = x0.shape[0], K = x0.shape[1];
    if (T < 1) throw ShapeError("rollout_batch: T must be >= 1");
    if (K != p.K) throw ShapeError("rollout_batch: K does not match params");
    const double nan = std::numeric_limits<double>::quiet_NaN();

    traj = RealTensor({N, T, K});
    blowup_t.assign(N, -1);
    std::vector<double> cur(x0.data);
    std::vector<double> hhat(static_cast<std::size_t>(N) * K, 0.0);
    std::vector<char> active(N, 1);

    auto pad_from = [&](int i, int t0) {
        for (int t = t0; t < T; ++t)
            for (int k = 0; k < K; ++k)
                traj.data[(static_cast<std::size_t>(i) * T + t) * K + k] = nan;
    };

    for (int i = 0; i < N; ++i) {
        const double* row = cur.data() + static_cast<std::size_t>(i) * K;
        if (!all_finite(row, K)) {
            blowup_t[i] = 0;
            active[i] = 0;
            pad_from(i, 0);
        } else {
            for (int k = 0; k < K; ++k) traj.data[static_cast<std::size_t>(i) * T * K + k] = row[k];
        }
    }

    CoarseState s(K), kb, ub, accb, outb;
    std::vector<double> hstage(K);
    for (int t = 1; t < T; ++t) {
        if (!opt.per_stage) param.predict(cur.data(), N, K, hhat.data());
        for (int i = 0; i < N; ++i) {
            if (!active[i]) continue;
            const double* hrow = hhat.data() + static_cast<std::size_t>(i) * K;
            double* crow = cur.data() + static_cast<std::size_t>(i) * K;
            for (int k = 0; k < K; ++k) s.u[k] = crow[k];
            auto f = [&](const CoarseState& in, CoarseState& o) {
                coarse_tendency(p, in, o);
                const double* h = hrow;
                if (opt.per_stage) {
                    param.predict(in.u.data(), 1, K, hstage.data());
                    h = hstage.data();
                }
                for (int k = 0; k < K; ++k) o.u[k] += h[k];
            };
            rk4_step_into(f, s, p.dt, kb, ub, accb, outb);
            if (!state_finite(outb)) {
                blowup_t[i] = t;
                active[i] = 0;
                pad_from(i, t);
                for (int k = 0; k < K; ++k) crow[k] = nan;
                continue;
            }
            for (int k = 0; k < K; ++k) {
                crow[k] = outb.u[k];
                traj.data[(static_cast<std::size_t>(i) * T + t) * K + k] = outb.u[k];
            }
        }
        param.on_step_end();
    }
}

struct RolloutResult {
    RealTensor traj; // (T, K)
    int blowup_t = -1;
};

/// Single-sample wrapper over the batched driver.
inline RolloutResult rollout(const CoarseState& x0, Parametrization& param, const ScaleParams& p,
                             int T, const RolloutOptions& opt = {}) {
    RealTensor x({1, x0.K});
    x.data = x0.u;
    RealTensor traj;
    std::vector<int> bt;
    rollout_batch(x, param, p, T, traj, bt, opt);
    RolloutResult r;
    r.traj = RealTensor({T, x0.K});
    r.traj.data = std::move(traj.data);
    r.blowup_t = bt[0];
    return r;
}

// ---- metrics ------------------------------------------------------------------

/// RMSE(t) = (1/K) * sum_k sqrt((1/N) * sum_i diff^2): root of the sample
/// mean per grid point first, then the mean across grid points.  `include`
/// selects the ensemble members entering the sample mean (empty = all).
inline std::vector<double> rmse_over_time_masked(const double* pred, const double* truth, int n,
                                                 int T, int K, const std::vector<char>& include) {
    std::vector<double> rmse(T, std::numeric_limits<double>::quiet_NaN());
    int n_inc = 0;
    for (int i = 0; i < n; ++i) n_inc += include.empty() || include[i] ? 1 : 0;
    if (n_inc == 0) return rmse;
    for (int t = 0; t < T; ++t) {
        double acc_k = 0.0;
        for (int k = 0; k < K; ++k) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                if (!(include.empty() || include[i])) continue;
                const std::size_t at = (static_cast<std::size_t>(i) * T + t) * K + k;
                const double d = pred[at] - truth[at];
                acc += d * d;
            }
            acc_k += std::sqrt(acc / n_inc);
        }
        rmse[t] = acc_k / K;
    }
    return rmse;
}

inline std::vector<double> rmse_over_time(const RealTensor& pred, const RealTensor& truth) {
    if (pred.shape != truth.shape || pred.shape.size() != 3)
        throw ShapeError("rmse_over_time: need matching (n, T, K) tensors");
    return rmse_over_time_masked(pred.data.data(), truth.data.data(), pred.shape[0],
                                 pred.shape[1], pred.shape[2], {});
}

// ---- ensemble evaluation ------------------------------------------------------

enum class MethodKind { rollout, climatology, truth };

struct MethodSpec {
    std::string name;
    MethodKind kind = MethodKind::rollout;
    Parametrization* param = nullptr; // owned by caller; required for rollout kind
};

struct RolloutReport {
    std::string name;
    double rmse = 0.0;       // time-mean of rmse_t over the accuracy window
    int horizon_steps = 0;   // first t with rmse_t >= climatology rmse_t (T if never)
    double horizon_mtu = 0.0;
    double bounded_fraction = 0.0; // share of samples with max |X̂| < bound throughout
    int n_excluded = 0;            // blown-up samples left out of the RMSE ensemble
    std::vector<double> rmse_t;
    std::vector<double> mean_t, std_t; // ensemble mean/std over samples and k
    RealTensor sample_traj;            // (n_plot, T, K) leading samples, for plots
};

struct EvalConfig {
    int T_eval = 200;      // accuracy window (scalar RMSE)
    int T_stability = 400; // rollout length; bounded_fraction and rmse_t use it
    double bound = 50.0;
    int n_plot = 8;
    RolloutOptions rollout_opts;
};

namespace detail {

inline void ensemble_moments(const RealTensor& pred, const std::vector<char>& include,
                             std::vector<double>& mean_t, std::vector<double>& std_t) {
    const int n = pred.shape[0], T = pred.shape[1], K = pred.shape[2];
    mean_t.assign(T, std::numeric_limits<double>::quiet_NaN());
    std_t.assign(T, std::numeric_limits<double>::quiet_NaN());
    int n_inc = 0;
    for (int i = 0; i < n; ++i) n_inc += include[i] ? 1 : 0;
    if (n_inc == 0) return;
    const double denom = static_cast<double>(n_inc) * K;
    for (int t = 0; t < T; ++t) {
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!include[i]) continue;
            const double* row = pred.data.data() + (static_cast<std::size_t>(i) * T + t) * K;
            for (int k = 0; k < K; ++k) {
                s += row[k];
                s2 += row[k] * row[k];
            }
        }
        const double m = s / denom;
        mean_t[t] = m;
        std_t[t] = std::sqrt(std::max(0.0, s2 / denom - m * m));
    }
}

} // namespace detail

/// Runs every method from the test snippets' initial states and scores it
/// against the stored truth trajectories.  Horizons are measured against the
/// climatology forecast regardless of whether it appears in `methods`.
inline std::vector<RolloutReport> evaluate_all(const Dataset& ds, const Climatology& clim,
                                               const std::vector<MethodSpec>& methods,
                                               const EvalConfig& cfg = {}) {
    const int N = static_cast<int>(ds.snippets.size());
    const int K = static_cast<int>(ds.hdr.K);
    const int T_ds = static_cast<int>(ds.hdr.T);
    if (N == 0) throw ShapeError("evaluate_all: empty dataset");
    const int T = std::min(cfg.T_stability, T_ds);
    const int T_rmse = std::min(cfg.T_eval, T);
    const ScaleParams p = ds.hdr.params();

    RealTensor truth({N, T, K});
    RealTensor x0({N, K});
    for (int i = 0; i < N; ++i) {
        const Snippet& sn = ds.snippets[i];
        for (int t = 0; t < T; ++t)
            for (int k = 0; k < K; ++k)
                truth.data[(static_cast<std::size_t>(i) * T + t) * K + k] =
                    sn.X.data[static_cast<std::size_t>(t) * K + k];
        for (int k = 0; k < K; ++k) x0.data[static_cast<std::size_t>(i) * K + k] = sn.X.data[k];
    }

    RealTensor clim_pred({N, T, K});
    clim_pred.fill(clim.mean);
    const std::vector<char> all_inc(N, 1);
    const std::vector<double> clim_rmse_t =
        rmse_over_time_masked(clim_pred.data.data(), truth.data.data(), N, T, K, all_inc);

    std::vector<RolloutReport> reports;
    RealTensor pred;
    std::vector<int> blowup_t;
    for (const MethodSpec& m : methods) {
        switch (m.kind) {
        case MethodKind::rollout:
            if (!m.param) throw ConfigError("evaluate_all: method '" + m.name + "' has no model");
            rollout_batch(x0, *m.param, p, T, pred, blowup_t, cfg.rollout_opts);
            break;
        case MethodKind::climatology:
            pred = clim_pred;
            blowup_t.assign(N, -1);
            break;
        case MethodKind::truth:
            pred = truth;
            blowup_t.assign(N, -1);
            break;
        }

        RolloutReport rep;
        rep.name = m.name;
        std::vector<char> include(N, 1);
        int n_bounded = 0;
        for (int i = 0; i < N; ++i) {
            if (blowup_t[i] >= 0) {
                include[i] = 0;
                continue;
            }
            double mx = 0.0;
            const double* base = pred.data.data() + static_cast<std::size_t>(i) * T * K;
            for (std::size_t j = 0; j < static_cast<std::size_t>(T) * K; ++j)
                mx = std::max(mx, std::abs(base[j]));
            if (mx < cfg.bound) ++n_bounded;
        }
        rep.n_excluded = N - static_cast<int>(std::count(include.begin(), include.end(), 1));
        rep.bounded_fraction = static_cast<double>(n_bounded) / N;
        rep.rmse_t = rmse_over_time_masked(pred.data.data(), truth.data.data(), N, T, K, include);

        double acc = 0.0;
        for (int t = 0; t < T_rmse; ++t) acc += rep.rmse_t[t];
        rep.rmse = acc / T_rmse;

        rep.horizon_steps = T;
        for (int t = 0; t < T; ++t)
            if (!(rep.rmse_t[t] < clim_rmse_t[t])) { // NaN counts as crossed
                rep.horizon_steps = t;
                break;
            }
        rep.horizon_mtu = rep.horizon_steps * p.dt;

        detail::ensemble_moments(pred, include, rep.mean_t, rep.std_t);

        const int n_plot = std::min(cfg.n_plot, N);
        rep.sample_traj = RealTensor({n_plot, T, K});
        std::copy(pred.data.begin(), pred.data.begin() + rep.sample_traj.numel(),
                  rep.sample_traj.data.begin());
        reports.push_back(std::move(rep));
    }
    return reports;
}

} // namespace mno
