#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mno/container.hpp"
#include "mno/dataset.hpp"
#include "mno/dft.hpp"
#include "mno/kernels.hpp"
#include "mno/optim.hpp"
#include "mno/tape.hpp"
#include "mno/tensor.hpp"

// Fourier-style neural operator mapping the resolved state to its subgrid
// correction.  Layer structure:
//   v_0 = lift(x);  v_{i+1} = ReLU(v_i W_i^T + b_i + IDFT(R_i . DFT(v_i)))
//   out = project(v_{n_d})
// All spatial mixing happens in the truncated spectral branch, so the model
// evaluates on any grid size K with k_max <= floor(K/2)+1 and commutes with
// cyclic shifts of the input.

namespace mno {

struct FnoConfig {
    int n_v = 64;  // channel width
    int k_max = 3; // retained Fourier modes
    int n_d = 3;   // Fourier layers
    int d_in = 1;  // input fields per grid point
    int d_out = 1; // output fields per grid point
    bool coord_channel = false; // append normalized grid coordinate (breaks shift symmetry)

    int in_channels() const { return d_in + (coord_channel ? 1 : 0); }

    void validate() const {
        if (n_v < 1 || k_max < 1 || n_d < 1 || d_in < 1 || d_out < 1)
            throw ShapeError("FnoConfig: all dimensions must be positive");
    }
    /// Grid compatibility: the truncation must fit the spectrum of K points.
    void validate_grid(int K) const {
        validate();
        if (k_max > K / 2 + 1)
            throw ModeError("FnoConfig: k_max=" + std::to_string(k_max) +
                            " exceeds floor(K/2)+1 for K=" + std::to_string(K));
    }
};

struct FnoParams {
    RealTensor P, bP;              // lift: (n_v, c_in), (n_v)
    std::vector<ComplexTensor> R;  // per layer (k_max, n_v, n_v)
    std::vector<RealTensor> W, bW; // per layer (n_v, n_v), (n_v)
    RealTensor Q, bQ;              // projection: (d_out, n_v), (d_out)
};

/// Seeded init: every real weight and bias uniform in (-a, a) with a = 1/n_v;
/// spectral weights get independent uniform(-a, a) real and imaginary parts.
/// Draw order (P, bP, per layer R re/im interleaved then W then bW, Q, bQ)
/// is fixed and documented in docs/FORMATS.md.
inline FnoParams init_fno(const FnoConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const double a = 1.0 / cfg.n_v;
    Rng rng(seed);
    FnoParams p;
    const int ci = cfg.in_channels();
    p.P = RealTensor({cfg.n_v, ci});
    p.bP = RealTensor({cfg.n_v});
    for (auto& v : p.P.data) v = rng.uniform_sym(a);
    for (auto& v : p.bP.data) v = rng.uniform_sym(a);
    p.R.resize(cfg.n_d);
    p.W.resize(cfg.n_d);
    p.bW.resize(cfg.n_d);
    for (int l = 0; l < cfg.n_d; ++l) {
        p.R[l] = ComplexTensor({cfg.k_max, cfg.n_v, cfg.n_v});
        for (auto& z : p.R[l].data) {
            const double re = rng.uniform_sym(a);
            const double im = rng.uniform_sym(a);
            z = cplx(re, im);
        }
        p.W[l] = RealTensor({cfg.n_v, cfg.n_v});
        p.bW[l] = RealTensor({cfg.n_v});
        for (auto& v : p.W[l].data) v = rng.uniform_sym(a);
        for (auto& v : p.bW[l].data) v = rng.uniform_sym(a);
    }
    p.Q = RealTensor({cfg.d_out, cfg.n_v});
    p.bQ = RealTensor({cfg.d_out});
    for (auto& v : p.Q.data) v = rng.uniform_sym(a);
    for (auto& v : p.bQ.data) v = rng.uniform_sym(a);
    return p;
}

/// Fills (B, K, c_in) input channels from raw (B, K) states: channel 0 is the
/// state value, the optional coordinate channel is k/K.
inline void fill_input_channels(const FnoConfig& cfg, const double* X, int B, int K,
                                RealTensor& xin) {
    const int ci = cfg.in_channels();
    xin.shape = {B, K, ci};
    xin.data.resize(static_cast<std::size_t>(B) * K * ci);
    for (int b = 0; b < B; ++b)
        for (int k = 0; k < K; ++k) {
            double* cell = xin.data.data() + (static_cast<std::size_t>(b) * K + k) * ci;
            cell[0] = X[static_cast<std::size_t>(b) * K + k];
            if (cfg.coord_channel) cell[1] = static_cast<double>(k) / K;
        }
}

/// Slot ids of the parameter leaves, for gradient extraction after backward.
struct FnoGraph {
    int out = -1, loss = -1;
    int P = -1, bP = -1, Q = -1, bQ = -1;
    std::vector<int> R, W, bW;
};

/// Builds the forward graph on `tape`; if target is non-null also the MSE loss.
/// xin must be (B, K, c_in); plan must match (K, k_max).
inline FnoGraph build_fno_graph(Tape& tape, const FnoConfig& cfg, const FnoParams& par,
                                const DftPlan* plan, const RealTensor& xin,
                                const RealTensor* target = nullptr) {
    FnoGraph g;
    g.P = tape.param(&par.P);
    g.bP = tape.param(&par.bP);
    g.Q = tape.param(&par.Q);
    g.bQ = tape.param(&par.bQ);
    for (int l = 0; l < cfg.n_d; ++l) {
        g.R.push_back(tape.cparam(&par.R[l]));
        g.W.push_back(tape.param(&par.W[l]));
        g.bW.push_back(tape.param(&par.bW[l]));
    }
    const int x = tape.input(&xin);
    int v = tape.bias_add(tape.linear(x, g.P), g.bP);
    for (int l = 0; l < cfg.n_d; ++l) {
        const int affine = tape.bias_add(tape.linear(v, g.W[l]), g.bW[l]);
        const int spectral = tape.dft_inv(tape.mode_mul(g.R[l], tape.dft_fwd(v, plan)), plan);
        v = tape.relu(tape.add(affine, spectral));
    }
    g.out = tape.bias_add(tape.linear(v, g.Q), g.bQ);
    if (target) g.loss = tape.mse(g.out, target);
    return g;
}

// ---- allocation-free batched inference --------------------------------------

/// Precomputed evaluator: owns transposed weight copies, the DFT plan, and all
/// work buffers, so run() performs no allocation (benchmark requirement) and
/// is reusable across rollout steps.
class FnoInference {
public:
    FnoInference(const FnoConfig& cfg, const FnoParams& par, int K, int B_max)
        : cfg_(cfg), K_(K), B_max_(B_max), plan_(K, cfg.k_max) {
        cfg_.validate_grid(K);
        const int nv = cfg_.n_v, ci = cfg_.in_channels();
        pt_ = RealTensor({ci, nv});
        transpose(par.P.data.data(), pt_.data.data(), nv, ci);
        qt_ = RealTensor({nv, cfg_.d_out});
        transpose(par.Q.data.data(), qt_.data.data(), cfg_.d_out, nv);
        bp_ = par.bP;
        bq_ = par.bQ;
        wt_.resize(cfg_.n_d);
        bw_.resize(cfg_.n_d);
        r_ = par.R;
        for (int l = 0; l < cfg_.n_d; ++l) {
            wt_[l] = RealTensor({nv, nv});
            transpose(par.W[l].data.data(), wt_[l].data.data(), nv, nv);
            bw_[l] = par.bW[l];
        }
        const std::size_t rows = static_cast<std::size_t>(B_max) * K;
        xin_.assign(rows * ci, 0.0);
        v_.assign(rows * nv, 0.0);
        tmp_.assign(rows * nv, 0.0);
        spec_a_.assign(static_cast<std::size_t>(cfg_.k_max) * nv, cplx(0, 0));
        spec_b_.assign(static_cast<std::size_t>(cfg_.k_max) * nv, cplx(0, 0));
        fft_scratch_.assign(plan_.scratch_len(), cplx(0, 0));
        inv_add_.assign(static_cast<std::size_t>(K) * nv, 0.0);
    }

    const DftPlan& plan() const { return plan_; }
    int grid() const { return K_; }

    /// X and out are (B, K) row-major, B <= B_max.
    void run(const double* X, int B, double* out) {
        if (B < 1 || B > B_max_) throw ShapeError("FnoInference: batch exceeds B_max");
        const int nv = cfg_.n_v, ci = cfg_.in_channels(), K = K_;
        const std::size_t rows = static_cast<std::size_t>(B) * K;

        for (int b = 0; b < B; ++b)
            for (int k = 0; k < K; ++k) {
                double* cell = xin_.data() + (static_cast<std::size_t>(b) * K + k) * ci;
                cell[0] = X[static_cast<std::size_t>(b) * K + k];
                if (cfg_.coord_channel) cell[1] = static_cast<double>(k) / K;
            }

        matmul(xin_.data(), pt_.data.data(), v_.data(), rows, ci, nv, false);
        add_bias_rows(v_.data(), bp_.data.data(), rows, nv);

        for (int l = 0; l < cfg_.n_d; ++l) {
            matmul(v_.data(), wt_[l].data.data(), tmp_.data(), rows, nv, nv, false);
            add_bias_rows(tmp_.data(), bw_[l].data.data(), rows, nv);
            for (int b = 0; b < B; ++b) {
                double* vblk = v_.data() + static_cast<std::size_t>(b) * K * nv;
                double* tblk = tmp_.data() + static_cast<std::size_t>(b) * K * nv;
                dft_forward(plan_, vblk, nv, spec_a_.data(), fft_scratch_.data());
                mode_mul_block(l, spec_a_.data(), spec_b_.data());
                dft_inverse(plan_, spec_b_.data(), nv, inv_add_.data(), fft_scratch_.data());
                axpy(1.0, inv_add_.data(), tblk, static_cast<std::size_t>(K) * nv);
            }
            relu(tmp_.data(), v_.data(), rows * nv);
        }

        if (cfg_.d_out == 1) {
            matmul(v_.data(), qt_.data.data(), out, rows, nv, 1, false);
            add_bias_rows(out, bq_.data.data(), rows, 1);
        } else {
            throw ShapeError("FnoInference: only d_out == 1 is wired to (B, K) outputs");
        }
    }

private:
    /// out[m,o] = sum_c R_l[m,o,c] * h[m,c], same accumulation order as the
    /// tape op so training and inference agree to rounding.
    void mode_mul_block(int layer, const cplx* h, cplx* out) {
        const ComplexTensor& R = r_[layer];
        const int M = cfg_.k_max, nv = cfg_.n_v;
        for (int m = 0; m < M; ++m) {
            const cplx* hrow = h + static_cast<std::size_t>(m) * nv;
            cplx* orow = out + static_cast<std::size_t>(m) * nv;
            const cplx* rm = R.data.data() + static_cast<std::size_t>(m) * nv * nv;
            for (int o = 0; o < nv; ++o) {
                cplx acc(0.0, 0.0);
                const cplx* rrow = rm + static_cast<std::size_t>(o) * nv;
                for (int c = 0; c < nv; ++c) acc += rrow[c] * hrow[c];
                orow[o] = acc;
            }
        }
    }

    FnoConfig cfg_;
    int K_, B_max_;
    DftPlan plan_;
    RealTensor pt_, qt_, bp_, bq_;
    std::vector<RealTensor> wt_, bw_;
    std::vector<ComplexTensor> r_;
    std::vector<double> xin_, v_, tmp_, inv_add_;
    std::vector<cplx> spec_a_, spec_b_, fft_scratch_;
};

/// One-shot forward pass: ĥ (B, K) from resolved states (B, K).
inline RealTensor fno_forward(const FnoConfig& cfg, const FnoParams& par, const RealTensor& X) {
    if (X.shape.size() != 2) throw ShapeError("fno_forward: expected (B, K) input");
    const int B = X.shape[0], K = X.shape[1];
    FnoInference inf(cfg, par, K, B);
    RealTensor out({B, K});
    inf.run(X.data.data(), B, out.data.data());
    return out;
}

// ---- training ----------------------------------------------------------------

struct FnoTrainResult {
    FnoParams params;
    std::vector<LossPoint> curve;
};

namespace detail {

inline std::vector<std::pair<double*, std::size_t>> fno_param_spans(FnoParams& p) {
    std::vector<std::pair<double*, std::size_t>> s;
    s.emplace_back(p.P.data.data(), p.P.numel());
    s.emplace_back(p.bP.data.data(), p.bP.numel());
    for (std::size_t l = 0; l < p.R.size(); ++l) {
        s.emplace_back(p.R[l].reals(), 2 * p.R[l].numel());
        s.emplace_back(p.W[l].data.data(), p.W[l].numel());
        s.emplace_back(p.bW[l].data.data(), p.bW[l].numel());
    }
    s.emplace_back(p.Q.data.data(), p.Q.numel());
    s.emplace_back(p.bQ.data.data(), p.bQ.numel());
    return s;
}

inline std::vector<std::pair<const double*, std::size_t>> fno_grad_spans(const Tape& t,
                                                                         const FnoGraph& g) {
    std::vector<std::pair<const double*, std::size_t>> s;
    s.emplace_back(t.rgrad(g.P).data.data(), t.rgrad(g.P).numel());
    s.emplace_back(t.rgrad(g.bP).data.data(), t.rgrad(g.bP).numel());
    for (std::size_t l = 0; l < g.R.size(); ++l) {
        s.emplace_back(t.cgrad(g.R[l]).reals(), 2 * t.cgrad(g.R[l]).numel());
        s.emplace_back(t.rgrad(g.W[l]).data.data(), t.rgrad(g.W[l]).numel());
        s.emplace_back(t.rgrad(g.bW[l]).data.data(), t.rgrad(g.bW[l]).numel());
    }
    s.emplace_back(t.rgrad(g.Q).data.data(), t.rgrad(g.Q).numel());
    s.emplace_back(t.rgrad(g.bQ).data.data(), t.rgrad(g.bQ).numel());
    return s;
}

} // namespace detail

/// MSE training over all (snippet, t) rows of the dataset.  Sampling order,
/// initialization, and the decay schedule are fully determined by tc.seed, so
/// identical inputs give bit-identical parameters.  Throws BlowUpError if the
/// loss leaves the finite range.
inline FnoTrainResult train_fno(const Dataset& ds, const FnoConfig& cfg, const TrainConfig& tc,
                                bool log_stderr = false) {
    const int K = static_cast<int>(ds.hdr.K);
    const int T = static_cast<int>(ds.hdr.T);
    cfg.validate_grid(K);
    tc.validate();
    const std::size_t n_pairs = ds.snippets.size() * static_cast<std::size_t>(T);
    if (n_pairs == 0) throw ShapeError("train_fno: empty dataset");
    const int steps_per_epoch =
        static_cast<int>((n_pairs + static_cast<std::size_t>(tc.batch) - 1) / tc.batch);

    FnoTrainResult res;
    res.params = init_fno(cfg, split_mix(tc.seed, 0x1417ull));
    Adam opt(detail::fno_param_spans(res.params), tc.beta1, tc.beta2, tc.eps);
    DftPlan plan(K, cfg.k_max);

    RealTensor xraw({tc.batch, K});
    RealTensor xin;
    RealTensor target({tc.batch, K, cfg.d_out});
    int step = 0;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const std::vector<std::uint32_t> order =
            shuffled_indices(n_pairs, split_mix(tc.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        for (std::size_t start = 0; start < n_pairs; start += tc.batch) {
            const int B = static_cast<int>(std::min<std::size_t>(tc.batch, n_pairs - start));
            if (static_cast<std::size_t>(xraw.shape[0]) != static_cast<std::size_t>(B)) {
                xraw = RealTensor({B, K});
                target = RealTensor({B, K, cfg.d_out});
            }
            for (int b = 0; b < B; ++b) {
                const std::uint32_t pair = order[start + b];
                const Snippet& sn = ds.snippets[pair / T];
                const std::size_t row = static_cast<std::size_t>(pair % T) * K;
                for (int k = 0; k < K; ++k) {
                    xraw.data[static_cast<std::size_t>(b) * K + k] = sn.X.data[row + k];
                    target.data[static_cast<std::size_t>(b) * K + k] = sn.H.data[row + k];
                }
            }
            fill_input_channels(cfg, xraw.data.data(), B, K, xin);

            Tape tape;
            FnoGraph g = build_fno_graph(tape, cfg, res.params, &plan, xin, &target);
            const double loss = tape.rval(g.loss).data[0];
            if (!std::isfinite(loss))
                throw BlowUpError("train_fno: loss diverged at step " + std::to_string(step));
            tape.backward(g.loss);
            const double lr = scheduled_lr(tc, steps_per_epoch, step);
            opt.step(detail::fno_grad_spans(tape, g), lr);
            res.curve.push_back({step, lr, loss});
            ++step;
            if (log_stderr && step % 2000 == 0)
                std::fprintf(stderr, "  fno step %d/%d  mse %.6g  lr %.3g\n", step,
                             steps_per_epoch * tc.epochs, loss, lr);
        }
    }
    return res;
}

/// Mean squared one-step error of the operator over every row of a dataset.
inline double fno_offline_mse(const FnoConfig& cfg, const FnoParams& par, const Dataset& ds) {
    const int K = static_cast<int>(ds.hdr.K);
    const int T = static_cast<int>(ds.hdr.T);
    FnoInference inf(cfg, par, K, T);
    std::vector<double> out(static_cast<std::size_t>(T) * K);
    double acc = 0.0;
    std::size_t n = 0;
    for (const Snippet& sn : ds.snippets) {
        inf.run(sn.X.data.data(), T, out.data());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - sn.H.data[i];
            acc += d * d;
        }
        n += out.size();
    }
    return acc / static_cast<double>(n);
}

// ---- serialization -----------------------------------------------------------

inline void save_fno(const FnoConfig& cfg, const FnoParams& par, const std::string& path) {
    io::BlockFile bf;
    bf.type = io::ModelType::fno;
    bf.add("config", std::vector<std::int64_t>{cfg.n_v, cfg.k_max, cfg.n_d, cfg.d_in, cfg.d_out,
                                               cfg.coord_channel ? 1 : 0});
    bf.add("P", par.P);
    bf.add("b_P", par.bP);
    for (int l = 0; l < cfg.n_d; ++l) {
        const std::string suffix = "_" + std::to_string(l);
        bf.add("R" + suffix, par.R[l]);
        bf.add("W" + suffix, par.W[l]);
        bf.add("b_W" + suffix, par.bW[l]);
    }
    bf.add("Q", par.Q);
    bf.add("b_Q", par.bQ);
    bf.save(path);
}

inline std::pair<FnoConfig, FnoParams> load_fno(const io::BlockFile& bf) {
    const auto& c = bf.ints("config");
    if (c.size() != 6) throw IoError("fno weight file: bad config block");
    FnoConfig cfg;
    cfg.n_v = static_cast<int>(c[0]);
    cfg.k_max = static_cast<int>(c[1]);
    cfg.n_d = static_cast<int>(c[2]);
    cfg.d_in = static_cast<int>(c[3]);
    cfg.d_out = static_cast<int>(c[4]);
    cfg.coord_channel = c[5] != 0;
    cfg.validate();
    FnoParams par;
    par.P = bf.real("P");
    par.bP = bf.real("b_P");
    for (int l = 0; l < cfg.n_d; ++l) {
        const std::string suffix = "_" + std::to_string(l);
        par.R.push_back(bf.cplx("R" + suffix));
        par.W.push_back(bf.real("W" + suffix));
        par.bW.push_back(bf.real("b_W" + suffix));
    }
    par.Q = bf.real("Q");
    par.bQ = bf.real("b_Q");
    return {cfg, par};
}

} // namespace mno
