#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mno/container.hpp"
#include "mno/dynamics.hpp"
#include "mno/prng.hpp"
#include "mno/tensor.hpp"

// Snippet dataset: short coarse trajectories of the resolved variables paired
// with their subgrid targets, extracted from fully resolved simulations after
// an attractor warmup.  Only the resolved states and targets are stored; a
// debug flag optionally retains the fast variables so targets can be
// re-derived on load.

namespace mno {

constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kSplitTrain = 0;
constexpr std::uint32_t kSplitTest = 1;
constexpr std::uint32_t kFlagDebugY = 1u << 0;

struct DatasetHeader {
    std::uint32_t version = kDatasetVersion;
    std::uint32_t split_tag = kSplitTrain;
    std::uint32_t K = 0, J = 0, T = 0, n_snippets = 0;
    double F = 0, h_s = 0, b = 0, c = 0, dt = 0;
    std::uint64_t master_seed = 0;
    std::uint32_t flags = 0;

    ScaleParams params() const {
        ScaleParams p;
        p.K = static_cast<int>(K);
        p.J = static_cast<int>(J);
        p.F = F;
        p.h_s = h_s;
        p.b = b;
        p.c = c;
        p.dt = dt;
        return p;
    }
};

struct Snippet {
    std::uint32_t id = 0;
    std::uint32_t t0_offset = 0; // warmup steps taken before row 0
    RealTensor X;                // (T, K) resolved states
    RealTensor H;                // (T, K) subgrid targets, same underlying state per row
    RealTensor Yfull;            // (T, J*K) fast variables; empty unless debug flag set
};

struct Dataset {
    DatasetHeader hdr;
    std::vector<Snippet> snippets;
};

struct GenStats {
    int blowup_retries = 0;
};

/// Climatology of the resolved variables over a training split.
struct Climatology {
    double mean = 0.0;
    std::vector<double> per_k;
    double std_dev = 0.0;
    std::uint64_t count = 0;
};

/// Initial condition: X_k from the integer draw -5..6, Y standard normal.
/// Draw order (X ascending k, then Y row-major) is part of the format.
inline FullState sample_initial(const ScaleParams& p, std::uint64_t seed) {
    FullState s(p.K, p.J);
    Rng rng(seed);
    for (int k = 0; k < p.K; ++k) s.X()[k] = static_cast<double>(rng.uniform_int(-5, 6));
    for (int j = 0; j < p.J; ++j)
        for (int k = 0; k < p.K; ++k) s.Y(j, k) = rng.normal();
    return s;
}

/// Integrate one snippet: warmup_steps unrecorded steps, then T recorded rows
/// with one step between consecutive rows.  Throws BlowUpError if the state
/// leaves the finite range at any point.
inline Snippet generate_snippet(const ScaleParams& p, std::uint64_t seed, int T, int warmup_steps,
                                bool debug_y = false) {
    FullState s = sample_initial(p, seed);
    FullState k, u, acc, next;
    FullState ft;
    CoarseState cs(p.K), ct(p.K);
    const auto f = [&p](const FullState& st, FullState& out) { full_tendency(p, st, out); };

    for (int t = 0; t < warmup_steps; ++t) {
        rk4_step_into(f, s, p.dt, k, u, acc, next);
        std::swap(s, next);
        if (!state_finite(s))
            throw BlowUpError("snippet warmup diverged at step " + std::to_string(t));
    }

    Snippet sn;
    sn.t0_offset = static_cast<std::uint32_t>(warmup_steps);
    sn.X = RealTensor({T, p.K});
    sn.H = RealTensor({T, p.K});
    if (debug_y) sn.Yfull = RealTensor({T, p.J * p.K});

    for (int t = 0; t < T; ++t) {
        full_tendency(p, s, ft);
        for (int kk = 0; kk < p.K; ++kk) cs.u[kk] = s.X()[kk];
        coarse_tendency(p, cs, ct);
        double* xrow = sn.X.data.data() + static_cast<std::size_t>(t) * p.K;
        double* hrow = sn.H.data.data() + static_cast<std::size_t>(t) * p.K;
        for (int kk = 0; kk < p.K; ++kk) {
            xrow[kk] = s.X()[kk];
            hrow[kk] = ft.X()[kk] - ct.u[kk];
        }
        if (debug_y) {
            double* yrow = sn.Yfull.data.data() + static_cast<std::size_t>(t) * (p.J * p.K);
            for (int i = 0; i < p.J * p.K; ++i) yrow[i] = s.Y()[i];
        }
        if (t + 1 < T) {
            rk4_step_into(f, s, p.dt, k, u, acc, next);
            std::swap(s, next);
            if (!state_finite(s))
                throw BlowUpError("snippet diverged at recorded step " + std::to_string(t));
        }
    }
    return sn;
}

/// Generate n snippets; snippet i draws from seed split_mix(master_seed, i),
/// so results are independent of generation order and thread count.  A
/// blow-up retries with split_mix(snippet_seed, attempt), attempt = 1..8.
inline Dataset generate_dataset(const ScaleParams& p, std::uint64_t master_seed, int n_snippets,
                                int T_steps, int warmup_steps, std::uint32_t split_tag,
                                bool debug_y = false, int threads = 1, GenStats* stats = nullptr) {
    p.validate();
    if (n_snippets < 1 || T_steps < 1) throw ShapeError("generate_dataset: counts must be positive");

    Dataset ds;
    ds.hdr.split_tag = split_tag;
    ds.hdr.K = static_cast<std::uint32_t>(p.K);
    ds.hdr.J = static_cast<std::uint32_t>(p.J);
    ds.hdr.T = static_cast<std::uint32_t>(T_steps);
    ds.hdr.n_snippets = static_cast<std::uint32_t>(n_snippets);
    ds.hdr.F = p.F;
    ds.hdr.h_s = p.h_s;
    ds.hdr.b = p.b;
    ds.hdr.c = p.c;
    ds.hdr.dt = p.dt;
    ds.hdr.master_seed = master_seed;
    ds.hdr.flags = debug_y ? kFlagDebugY : 0;
    ds.snippets.resize(n_snippets);

    std::atomic<int> next_index{0};
    std::atomic<int> retries{0};
    std::atomic<bool> failed{false};
    std::string fail_msg;
    std::mutex fail_mutex;

    const auto worker = [&]() {
        for (;;) {
            const int i = next_index.fetch_add(1);
            if (i >= n_snippets || failed.load()) return;
            const std::uint64_t snippet_seed = split_mix(master_seed, static_cast<std::uint64_t>(i));
            std::uint64_t seed = snippet_seed;
            for (int attempt = 0;; ++attempt) {
                try {
                    Snippet sn = generate_snippet(p, seed, T_steps, warmup_steps, debug_y);
                    sn.id = static_cast<std::uint32_t>(i);
                    ds.snippets[i] = std::move(sn);
                    break;
                } catch (const BlowUpError&) {
                    retries.fetch_add(1);
                    if (attempt >= 8) {
                        std::lock_guard<std::mutex> lock(fail_mutex);
                        failed.store(true);
                        fail_msg = "snippet " + std::to_string(i) + " blew up 8 times";
                        return;
                    }
                    seed = split_mix(snippet_seed, static_cast<std::uint64_t>(attempt) + 1);
                }
            }
        }
    };

    const int nt = std::max(1, std::min(threads, n_snippets));
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw BlowUpError("generate_dataset: " + fail_msg);
    if (stats) stats->blowup_retries = retries.load();
    return ds;
}

// ---- serialization ----------------------------------------------------------

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    io::write_magic(os, "L96D");
    io::write_u32(os, ds.hdr.version);
    io::write_u32(os, ds.hdr.split_tag);
    io::write_u32(os, ds.hdr.K);
    io::write_u32(os, ds.hdr.J);
    io::write_u32(os, ds.hdr.T);
    io::write_u32(os, ds.hdr.n_snippets);
    io::write_f64(os, ds.hdr.F);
    io::write_f64(os, ds.hdr.h_s);
    io::write_f64(os, ds.hdr.b);
    io::write_f64(os, ds.hdr.c);
    io::write_f64(os, ds.hdr.dt);
    io::write_u64(os, ds.hdr.master_seed);
    io::write_u32(os, ds.hdr.flags);
    for (const Snippet& sn : ds.snippets) {
        io::write_u32(os, sn.id);
        io::write_u32(os, sn.t0_offset);
        io::write_f64_array(os, sn.X.data.data(), sn.X.numel());
        io::write_f64_array(os, sn.H.data.data(), sn.H.numel());
        if (ds.hdr.flags & kFlagDebugY) io::write_f64_array(os, sn.Yfull.data.data(), sn.Yfull.numel());
    }
    if (!os) throw IoError("write failed: " + path);
}

inline DatasetHeader read_dataset_header(std::istream& is) {
    io::expect_magic(is, "L96D", "dataset");
    DatasetHeader h;
    h.version = io::read_u32(is);
    if (h.version != kDatasetVersion)
        throw IoError("unsupported dataset version " + std::to_string(h.version));
    h.split_tag = io::read_u32(is);
    h.K = io::read_u32(is);
    h.J = io::read_u32(is);
    h.T = io::read_u32(is);
    h.n_snippets = io::read_u32(is);
    h.F = io::read_f64(is);
    h.h_s = io::read_f64(is);
    h.b = io::read_f64(is);
    h.c = io::read_f64(is);
    h.dt = io::read_f64(is);
    h.master_seed = io::read_u64(is);
    h.flags = io::read_u32(is);
    if (h.K == 0 || h.J == 0 || h.T == 0 || h.n_snippets == 0)
        throw IoError("dataset header has zero counts");
    return h;
}

/// Loads a dataset.  For debug files (fast variables retained), a seeded
/// sample of rows is re-derived from the stored Y and checked against the
/// stored targets; disagreement beyond 1e-9 fails the load.
inline Dataset load_dataset(const std::string& path, bool verify_debug_targets = true) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    Dataset ds;
    ds.hdr = read_dataset_header(is);
    const int K = static_cast<int>(ds.hdr.K), J = static_cast<int>(ds.hdr.J),
              T = static_cast<int>(ds.hdr.T);
    const bool debug = (ds.hdr.flags & kFlagDebugY) != 0;
    ds.snippets.resize(ds.hdr.n_snippets);
    for (Snippet& sn : ds.snippets) {
        sn.id = io::read_u32(is);
        sn.t0_offset = io::read_u32(is);
        sn.X = RealTensor({T, K});
        sn.H = RealTensor({T, K});
        io::read_f64_array(is, sn.X.data.data(), sn.X.numel());
        io::read_f64_array(is, sn.H.data.data(), sn.H.numel());
        if (debug) {
            sn.Yfull = RealTensor({T, J * K});
            io::read_f64_array(is, sn.Yfull.data.data(), sn.Yfull.numel());
        }
    }

    if (debug && verify_debug_targets) {
        const ScaleParams p = ds.hdr.params();
        Rng pick(split_mix(ds.hdr.master_seed, 0xC0DEull));
        const int checks = std::min<int>(16, static_cast<int>(ds.hdr.n_snippets) * T);
        for (int i = 0; i < checks; ++i) {
            const int si = pick.uniform_int(0, static_cast<int>(ds.hdr.n_snippets) - 1);
            const int t = pick.uniform_int(0, T - 1);
            const Snippet& sn = ds.snippets[si];
            FullState s(K, J);
            for (int kk = 0; kk < K; ++kk) s.X()[kk] = sn.X.data[static_cast<std::size_t>(t) * K + kk];
            for (int idx = 0; idx < J * K; ++idx)
                s.Y()[idx] = sn.Yfull.data[static_cast<std::size_t>(t) * (J * K) + idx];
            const std::vector<double> h = subgrid_target(p, s);
            for (int kk = 0; kk < K; ++kk) {
                const double stored = sn.H.data[static_cast<std::size_t>(t) * K + kk];
                if (std::abs(stored - h[kk]) > 1e-9)
                    throw IoError("debug dataset failed target spot-check at snippet " +
                                  std::to_string(si) + ", t=" + std::to_string(t));
            }
        }
    }
    return ds;
}

/// Global, per-k, and spread statistics of the resolved variables.
/// Two-pass with fixed accumulation order: bit-reproducible.
inline Climatology compute_climatology(const Dataset& ds) {
    const int K = static_cast<int>(ds.hdr.K);
    Climatology c;
    c.per_k.assign(K, 0.0);
    double total = 0.0;
    std::uint64_t n_rows = 0;
    for (const Snippet& sn : ds.snippets) {
        const std::size_t rows = sn.X.lead();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = sn.X.data.data() + r * K;
            for (int k = 0; k < K; ++k) c.per_k[k] += row[k];
        }
        n_rows += rows;
    }
    if (n_rows == 0) throw ShapeError("compute_climatology: empty dataset");
    for (int k = 0; k < K; ++k) {
        total += c.per_k[k];
        c.per_k[k] /= static_cast<double>(n_rows);
    }
    c.count = n_rows * static_cast<std::uint64_t>(K);
    c.mean = total / static_cast<double>(c.count);
    double ss = 0.0;
    for (const Snippet& sn : ds.snippets)
        for (std::size_t i = 0; i < sn.X.numel(); ++i) {
            const double d = sn.X.data[i] - c.mean;
            ss += d * d;
        }
    c.std_dev = std::sqrt(ss / static_cast<double>(c.count));
    return c;
}

/// CSV schema: snippet_id,t,X_0..X_{K-1},h_0..h_{K-1}, one row per (snippet, t).
inline void export_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    const int K = static_cast<int>(ds.hdr.K);
    os << "snippet_id,t";
    for (int k = 0; k < K; ++k) os << ",X_" << k;
    for (int k = 0; k < K; ++k) os << ",h_" << k;
    os << "\n";
    char buf[32];
    for (const Snippet& sn : ds.snippets) {
        const std::size_t rows = sn.X.lead();
        for (std::size_t t = 0; t < rows; ++t) {
            os << sn.id << ',' << t;
            for (int k = 0; k < K; ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", sn.X.data[t * K + k]);
                os << ',' << buf;
            }
            for (int k = 0; k < K; ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", sn.H.data[t * K + k]);
                os << ',' << buf;
            }
            os << '\n';
        }
    }
    if (!os) throw IoError("write failed: " + path);
}

} // namespace mno
