#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mno/csv.hpp"
#include "mno/dynamics.hpp"
#include "mno/fno.hpp"
#include "mno/prng.hpp"

// One-step runtime measurement, full two-scale system vs coarse-plus-operator,
// across grid sizes.  Protocol: best-of-R wall time per K with R shrinking
// geometrically as K grows; the same step is re-timed from an unchanging
// input state so cost is value-independent and nothing blows up; all buffers
// live outside the timed region.

namespace mno {

/// Bumped by the replacement operator new/delete that the test harness links
/// in; lets tests assert the timed regions perform no heap traffic.
inline std::atomic<std::uint64_t> g_alloc_count{0};

struct BenchRecord {
    std::string method; // "dns" | "mno"
    int log2_k = 0;
    std::int64_t K = 0;
    std::int64_t J = 0; // dns only; 0 for mno
    double best_ns = 0.0;
    std::int64_t reps = 0;
};

struct SkipRecord {
    std::string method;
    int log2_k = 0;
    std::string reason;
};

struct BenchConfig {
    int k_log2_min = 4;
    int k_log2_max_dns = 21;
    int k_log2_max_mno = 21;
    int knee_log2 = 12;          // scaling fits use records with K >= 2^knee
    double point_budget_s = 45.0; // wall budget per (method, K) point
    double mem_fraction = 0.75;   // of MemAvailable
    std::uint64_t mem_cap_bytes = 0; // 0 = read /proc/meminfo
    std::int64_t reps_max = 100000;
    FnoConfig fno;
    std::uint64_t seed = 42;
};

/// Geometric schedule: 100k reps up to 2^8, halving grid size cost-matched
/// down to a single rep at 2^22 and beyond.
inline std::int64_t reps_for(int log2_k, std::int64_t reps_max = 100000) {
    if (log2_k <= 8) return reps_max;
    if (log2_k >= 22) return 1;
    const double ratio = std::pow(static_cast<double>(reps_max), 1.0 / 14.0);
    const double r = static_cast<double>(reps_max) / std::pow(ratio, log2_k - 8);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(r)));
}

inline std::uint64_t available_memory_bytes() {
    std::ifstream in("/proc/meminfo");
    std::string key;
    std::uint64_t kb = 0;
    while (in >> key >> kb) {
        if (key == "MemAvailable:") return kb * 1024;
        in.ignore(256, '\n');
    }
    return 0;
}

inline std::uint64_t dns_bytes_needed(std::int64_t K) {
    // four state buffers of K + J*K doubles each (J = K), plus 10% slack
    const std::uint64_t state = static_cast<std::uint64_t>(K) * (K + 1) * 8;
    return state * 4 + state / 2;
}

inline std::uint64_t mno_bytes_needed(std::int64_t K, const FnoConfig& cfg) {
    // operator activations dominate: input, two (K, n_v) buffers, spectral
    // scratch, plus four coarse RK4 buffers
    const std::uint64_t k = static_cast<std::uint64_t>(K);
    std::uint64_t b = k * cfg.in_channels() * 8;
    b += 2 * k * cfg.n_v * 8;
    b += k * 16;    // fft scratch (complex)
    b += 6 * k * 8; // coarse state, tendency buffers, correction
    return b + b / 4;
}

namespace detail {

class StepTimer {
public:
    explicit StepTimer(double budget_s) : budget_ns_(budget_s * 1e9) {}

    /// Runs op up to `reps` times (at least once), returns min per-rep ns.
    template <class Op>
    std::pair<double, std::int64_t> best_of(std::int64_t reps, Op&& op) {
        using clock = std::chrono::steady_clock;
        double best = 0.0, total = 0.0;
        std::int64_t done = 0;
        for (std::int64_t r = 0; r < reps; ++r) {
            const auto t0 = clock::now();
            op();
            const auto t1 = clock::now();
            const double ns =
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
            best = done == 0 ? ns : std::min(best, ns);
            total += ns;
            ++done;
            if (total > budget_ns_) break;
        }
        return {best, done};
    }

private:
    double budget_ns_;
};

} // namespace detail

/// Times one full-system tendency + RK4 update at resolution K with J = K.
inline BenchRecord bench_dns_step(int log2_k, const ScaleParams& base, const BenchConfig& bc) {
    const std::int64_t K = std::int64_t{1} << log2_k;
    ScaleParams p = base;
    p.K = static_cast<int>(K);
    p.J = static_cast<int>(K);

    FullState s(p.K, p.J), kb, ub, accb;
    Rng rng(split_mix(bc.seed, 0xD25ull + log2_k));
    for (int k = 0; k < p.K; ++k) s.X()[k] = rng.uniform_sym(5.0);
    for (std::size_t i = p.K; i < s.u.size(); ++i) s.u[i] = rng.uniform_sym(1.0);

    auto f = [&p](const FullState& in, FullState& out) { full_tendency(p, in, out); };
    // out aliases ub; s itself is never advanced, every rep re-times the same step
    auto op = [&] { rk4_step_into(f, s, p.dt, kb, ub, accb, ub); };
    op(); // size the buffers and warm caches outside the timed region
    volatile double sink = ub.u[0];
    (void)sink;

    detail::StepTimer timer(bc.point_budget_s);
    const std::int64_t want = reps_for(log2_k, bc.reps_max);
    auto [best, done] = timer.best_of(want, [&] {
        op();
        volatile double guard = ub.u[0];
        (void)guard;
    });
    return {"dns", log2_k, K, K, best, done};
}

/// Times one coarse RK4 step plus one operator evaluation at resolution K.
inline BenchRecord bench_mno_step(int log2_k, const ScaleParams& base, const BenchConfig& bc) {
    const std::int64_t K = std::int64_t{1} << log2_k;
    ScaleParams p = base;
    p.K = static_cast<int>(K);

    FnoConfig cfg = bc.fno;
    cfg.validate_grid(p.K);
    const FnoParams params = init_fno(cfg, split_mix(bc.seed, 0xB0ull));
    FnoInference inf(cfg, params, p.K, 1);

    CoarseState s(p.K), kb, ub, accb;
    std::vector<double> hhat(p.K, 0.0);
    Rng rng(split_mix(bc.seed, 0xE37ull + log2_k));
    for (int k = 0; k < p.K; ++k) s.u[k] = rng.uniform_sym(5.0);

    auto f = [&](const CoarseState& in, CoarseState& out) {
        coarse_tendency(p, in, out);
        for (int k = 0; k < p.K; ++k) out.u[k] += hhat[k];
    };
    auto op = [&] {
        inf.run(s.u.data(), 1, hhat.data());
        rk4_step_into(f, s, p.dt, kb, ub, accb, ub);
    };
    op();
    volatile double sink = ub.u[0];
    (void)sink;

    detail::StepTimer timer(bc.point_budget_s);
    const std::int64_t want = reps_for(log2_k, bc.reps_max);
    auto [best, done] = timer.best_of(want, [&] {
        op();
        volatile double guard = ub.u[0];
        (void)guard;
    });
    return {"mno", log2_k, K, 0, best, done};
}

struct SweepResult {
    std::vector<BenchRecord> records;
    std::vector<SkipRecord> skipped;
};

/// Full sweep over both methods; points whose working set exceeds the memory
/// budget are skipped with a reason instead of thrashing.
inline SweepResult bench_sweep(const ScaleParams& base, const BenchConfig& bc,
                               bool log_stderr = false) {
    std::uint64_t budget = bc.mem_cap_bytes;
    if (budget == 0) {
        const std::uint64_t avail = available_memory_bytes();
        budget = avail > 0 ? static_cast<std::uint64_t>(avail * bc.mem_fraction)
                           : std::uint64_t{2} << 30;
    }

    SweepResult r;
    for (int lg = bc.k_log2_min; lg <= bc.k_log2_max_dns; ++lg) {
        const std::uint64_t need = dns_bytes_needed(std::int64_t{1} << lg);
        if (need > budget) {
            std::ostringstream why;
            // no comma: the reason lands in a CSV cell
            why << "needs " << need / (1 << 20) << " MiB exceeds budget " << budget / (1 << 20)
                << " MiB";
            r.skipped.push_back({"dns", lg, why.str()});
            continue;
        }
        r.records.push_back(bench_dns_step(lg, base, bc));
        if (log_stderr)
            std::fprintf(stderr, "  dns  K=2^%-2d best %.0f ns  (%lld reps)\n", lg,
                         r.records.back().best_ns,
                         static_cast<long long>(r.records.back().reps));
    }
    for (int lg = bc.k_log2_min; lg <= bc.k_log2_max_mno; ++lg) {
        const std::uint64_t need = mno_bytes_needed(std::int64_t{1} << lg, bc.fno);
        if (need > budget) {
            std::ostringstream why;
            why << "needs " << need / (1 << 20) << " MiB exceeds budget " << budget / (1 << 20)
                << " MiB";
            r.skipped.push_back({"mno", lg, why.str()});
            continue;
        }
        r.records.push_back(bench_mno_step(lg, base, bc));
        if (log_stderr)
            std::fprintf(stderr, "  mno  K=2^%-2d best %.0f ns  (%lld reps)\n", lg,
                         r.records.back().best_ns,
                         static_cast<long long>(r.records.back().reps));
    }
    return r;
}

// ---- scaling fit ----------------------------------------------------------------

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int n = 0;
};

/// OLS of log2(best_ns) against log2(K) over records of one method with
/// K >= 2^knee_log2.
inline ScalingFit fit_scaling(const std::vector<BenchRecord>& records, const std::string& method,
                              int knee_log2 = 12) {
    std::vector<double> xs, ys;
    for (const BenchRecord& r : records) {
        if (r.method != method || r.log2_k < knee_log2) continue;
        if (!(r.best_ns > 0.0)) continue;
        xs.push_back(static_cast<double>(r.log2_k));
        ys.push_back(std::log2(r.best_ns));
    }
    const int n = static_cast<int>(xs.size());
    if (n < 4)
        throw ShapeError("fit_scaling: need at least 4 records at K >= 2^" +
                         std::to_string(knee_log2) + " for '" + method + "', have " +
                         std::to_string(n));
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double det = n * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) throw SingularError("fit_scaling: degenerate abscissae");
    ScalingFit f;
    f.n = n;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0.0;
    const double mean_y = sy / n;
    double ss_tot = 0.0;
    for (int i = 0; i < n; ++i) {
        const double pred = f.intercept + f.slope * xs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

inline void write_bench_csv(const std::string& path, const SweepResult& sweep) {
    CsvWriter w(path);
    w.row({"method", "log2_K", "K", "J", "reps", "best_ns"});
    for (const BenchRecord& r : sweep.records)
        w.row({r.method, std::to_string(r.log2_k), std::to_string(r.K), std::to_string(r.J),
               std::to_string(r.reps), fmt_g17(r.best_ns)});
}

inline void write_skip_log(const std::string& path, const SweepResult& sweep) {
    CsvWriter w(path);
    w.row({"method", "log2_K", "reason"});
    for (const SkipRecord& s : sweep.skipped)
        w.row({s.method, std::to_string(s.log2_k), s.reason});
}

/// CPU model and governor capture for the results sidecar.
inline std::string environment_summary() {
    std::ostringstream out;
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line))
        if (line.rfind("model name", 0) == 0) {
            out << "cpu=" << line.substr(line.find(':') + 2) << "\n";
            break;
        }
    std::ifstream gov("/sys/devices/system/cpu/cpu0/cpufreq/scaling_governor");
    std::string g;
    if (gov >> g) out << "governor=" << g << "\n";
    out << "hardware_concurrency=" << std::thread::hardware_concurrency() << "\n";
    return out.str();
}

} // namespace mno
