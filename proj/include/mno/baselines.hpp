#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mno/container.hpp"
#include "mno/dataset.hpp"
#include "mno/kernels.hpp"
#include "mno/optim.hpp"
#include "mno/tape.hpp"

// Reference parametrizations: the local least-squares line, a small local
// residual network, and the climatology constant forecast.  All operate per
// grid point (grid-independent by construction) except the optional global
// linear mode, which maps the whole resolved vector at a fixed K.

namespace mno {

// ---- linear -------------------------------------------------------------------

struct LinearParam {
    double a = 0.0;  // slope of ĥ_k = a X_k + b0
    double b0 = 0.0; // intercept
    bool global = false;
    RealTensor A; // (K, K+1) concatenated-feature variant, last column intercept
};

/// Local least squares over every (snippet, t, k) scalar pair via the 2x2
/// normal equations.  Throws SingularError when the inputs carry no variance;
/// callers wanting an intercept-only fallback can catch it and fit the mean
/// (that degenerate forecast is exactly the climatology model).
inline LinearParam fit_linear(const Dataset& ds) {
    double sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
    std::uint64_t n = 0;
    for (const Snippet& sn : ds.snippets)
        for (std::size_t i = 0; i < sn.X.numel(); ++i) {
            const double x = sn.X.data[i];
            const double y = sn.H.data[i];
            sx += x;
            sxx += x * x;
            sy += y;
            sxy += x * y;
            ++n;
        }
    if (n < 2) throw SingularError("fit_linear: need at least two pairs");
    const double nn = static_cast<double>(n);
    const double det = nn * sxx - sx * sx;
    if (!(std::abs(det) > 1e-12 * std::max(1.0, nn * sxx)))
        throw SingularError("fit_linear: inputs have (numerically) zero variance");
    LinearParam p;
    p.a = (nn * sxy - sx * sy) / det;
    p.b0 = (sy - p.a * sx) / nn;
    return p;
}

/// Concatenated-feature variant: ĥ = A [X̄; 1] with A (K, K+1), fit by normal
/// equations shared across output rows.
inline LinearParam fit_linear_global(const Dataset& ds) {
    const int K = static_cast<int>(ds.hdr.K);
    const int d = K + 1;
    std::vector<double> g(static_cast<std::size_t>(d) * d, 0.0); // sum f f^T
    std::vector<double> rhs(static_cast<std::size_t>(d) * K, 0.0); // sum f h^T
    std::vector<double> f(d);
    for (const Snippet& sn : ds.snippets) {
        const std::size_t rows = sn.X.lead();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* xrow = sn.X.data.data() + r * K;
            const double* hrow = sn.H.data.data() + r * K;
            for (int i = 0; i < K; ++i) f[i] = xrow[i];
            f[K] = 1.0;
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) g[static_cast<std::size_t>(i) * d + j] += f[i] * f[j];
                for (int k = 0; k < K; ++k) rhs[static_cast<std::size_t>(i) * K + k] += f[i] * hrow[k];
            }
        }
    }
    LinearParam p;
    p.global = true;
    p.A = RealTensor({K, d});
    for (int k = 0; k < K; ++k) {
        std::vector<double> gc = g;
        std::vector<double> b(d);
        for (int i = 0; i < d; ++i) b[i] = rhs[static_cast<std::size_t>(i) * K + k];
        try {
            solve_dense(gc, b, d);
        } catch (const SingularError&) {
            throw SingularError("fit_linear_global: normal equations singular");
        }
        for (int i = 0; i < d; ++i) p.A.data[static_cast<std::size_t>(k) * d + i] = b[i];
    }
    return p;
}

/// Applies the linear closure to (B, K) states.
inline void linear_predict(const LinearParam& p, const double* X, int B, int K, double* out) {
    if (!p.global) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(B) * K; ++i) out[i] = p.a * X[i] + p.b0;
        return;
    }
    if (p.A.shape != std::vector<int>{K, K + 1})
        throw ShapeError("linear_predict: global matrix fit for a different K");
    for (int b = 0; b < B; ++b) {
        const double* xrow = X + static_cast<std::size_t>(b) * K;
        double* orow = out + static_cast<std::size_t>(b) * K;
        for (int k = 0; k < K; ++k) {
            const double* arow = p.A.data.data() + static_cast<std::size_t>(k) * (K + 1);
            double acc = arow[K];
            for (int i = 0; i < K; ++i) acc += arow[i] * xrow[i];
            orow[k] = acc;
        }
    }
}

// ---- resnet -------------------------------------------------------------------

struct ResNetConfig {
    int units = 32;
    int blocks = 2;

    void validate() const {
        if (units < 1 || blocks < 0) throw ShapeError("ResNetConfig: bad dimensions");
    }
};

/// Local scalar map: lift 1 -> units, `blocks` residual blocks
/// v <- v + ReLU(v W^T + b), project units -> 1.
struct ResNetParams {
    RealTensor Win, bin; // (units, 1), (units)
    std::vector<RealTensor> Wb, bb; // per block (units, units), (units)
    RealTensor Wout, bout; // (1, units), (1)
};

/// Torch-style uniform(-1/sqrt(fan_in), +) init, seeded and documented.
inline ResNetParams init_resnet(const ResNetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ResNetParams p;
    const double a_in = 1.0;
    p.Win = RealTensor({cfg.units, 1});
    p.bin = RealTensor({cfg.units});
    for (auto& v : p.Win.data) v = rng.uniform_sym(a_in);
    for (auto& v : p.bin.data) v = rng.uniform_sym(a_in);
    const double a_h = 1.0 / std::sqrt(static_cast<double>(cfg.units));
    p.Wb.resize(cfg.blocks);
    p.bb.resize(cfg.blocks);
    for (int l = 0; l < cfg.blocks; ++l) {
        p.Wb[l] = RealTensor({cfg.units, cfg.units});
        p.bb[l] = RealTensor({cfg.units});
        for (auto& v : p.Wb[l].data) v = rng.uniform_sym(a_h);
        for (auto& v : p.bb[l].data) v = rng.uniform_sym(a_h);
    }
    p.Wout = RealTensor({1, cfg.units});
    p.bout = RealTensor({1});
    for (auto& v : p.Wout.data) v = rng.uniform_sym(a_h);
    for (auto& v : p.bout.data) v = rng.uniform_sym(a_h);
    return p;
}

struct ResNetGraph {
    int out = -1, loss = -1;
    int Win = -1, bin = -1, Wout = -1, bout = -1;
    std::vector<int> Wb, bb;
};

inline ResNetGraph build_resnet_graph(Tape& tape, const ResNetParams& par, const RealTensor& x,
                                      const RealTensor* target = nullptr) {
    ResNetGraph g;
    g.Win = tape.param(&par.Win);
    g.bin = tape.param(&par.bin);
    g.Wout = tape.param(&par.Wout);
    g.bout = tape.param(&par.bout);
    int v = tape.bias_add(tape.linear(tape.input(&x), g.Win), g.bin);
    for (std::size_t l = 0; l < par.Wb.size(); ++l) {
        g.Wb.push_back(tape.param(&par.Wb[l]));
        g.bb.push_back(tape.param(&par.bb[l]));
        v = tape.add(v, tape.relu(tape.bias_add(tape.linear(v, g.Wb[l]), g.bb[l])));
    }
    g.out = tape.bias_add(tape.linear(v, g.Wout), g.bout);
    if (target) g.loss = tape.mse(g.out, target);
    return g;
}

/// Applies the local network to every scalar of a (B, K) state block.
/// No allocation after construction; same kernels as the tape forward.
class ResNetInference {
public:
    ResNetInference(const ResNetConfig& cfg, const ResNetParams& par, std::size_t n_max)
        : cfg_(cfg), par_(&par), n_max_(n_max) {
        cfg.validate();
        wbt_.resize(cfg.blocks);
        for (int l = 0; l < cfg.blocks; ++l) {
            wbt_[l] = RealTensor({cfg.units, cfg.units});
            transpose(par.Wb[l].data.data(), wbt_[l].data.data(), cfg.units, cfg.units);
        }
        v_.assign(n_max * cfg.units, 0.0);
        h_.assign(n_max * cfg.units, 0.0);
    }

    void run(const double* x, std::size_t n, double* out) {
        if (n > n_max_) throw ShapeError("ResNetInference: batch exceeds n_max");
        const int u = cfg_.units;
        // lift: Win is (u,1) so its transpose is the same buffer viewed (1,u)
        matmul(x, par_->Win.data.data(), v_.data(), n, 1, u, false);
        add_bias_rows(v_.data(), par_->bin.data.data(), n, u);
        for (int l = 0; l < cfg_.blocks; ++l) {
            matmul(v_.data(), wbt_[l].data.data(), h_.data(), n, u, u, false);
            add_bias_rows(h_.data(), par_->bb[l].data.data(), n, u);
            for (std::size_t i = 0; i < n * static_cast<std::size_t>(u); ++i)
                v_[i] += h_[i] > 0.0 ? h_[i] : 0.0;
        }
        // project: Wout is (1,u); its transpose is the same buffer viewed (u,1)
        matmul(v_.data(), par_->Wout.data.data(), out, n, u, 1, false);
        add_bias_rows(out, par_->bout.data.data(), n, 1);
    }

private:
    ResNetConfig cfg_;
    const ResNetParams* par_;
    std::size_t n_max_;
    std::vector<RealTensor> wbt_;
    std::vector<double> v_, h_;
};

struct ResNetTrainResult {
    ResNetParams params;
    std::vector<LossPoint> curve;
};

namespace detail {

inline std::vector<std::pair<double*, std::size_t>> resnet_param_spans(ResNetParams& p) {
    std::vector<std::pair<double*, std::size_t>> s;
    s.emplace_back(p.Win.data.data(), p.Win.numel());
    s.emplace_back(p.bin.data.data(), p.bin.numel());
    for (std::size_t l = 0; l < p.Wb.size(); ++l) {
        s.emplace_back(p.Wb[l].data.data(), p.Wb[l].numel());
        s.emplace_back(p.bb[l].data.data(), p.bb[l].numel());
    }
    s.emplace_back(p.Wout.data.data(), p.Wout.numel());
    s.emplace_back(p.bout.data.data(), p.bout.numel());
    return s;
}

inline std::vector<std::pair<const double*, std::size_t>> resnet_grad_spans(const Tape& t,
                                                                            const ResNetGraph& g) {
    std::vector<std::pair<const double*, std::size_t>> s;
    auto push = [&](int id) { s.emplace_back(t.rgrad(id).data.data(), t.rgrad(id).numel()); };
    push(g.Win);
    push(g.bin);
    for (std::size_t l = 0; l < g.Wb.size(); ++l) {
        push(g.Wb[l]);
        push(g.bb[l]);
    }
    push(g.Wout);
    push(g.bout);
    return s;
}

} // namespace detail

/// Trains the local network on every (snippet, t, k) scalar pair.
inline ResNetTrainResult fit_resnet(const Dataset& ds, const ResNetConfig& cfg,
                                    const TrainConfig& tc, bool log_stderr = false) {
    const int K = static_cast<int>(ds.hdr.K);
    const int T = static_cast<int>(ds.hdr.T);
    tc.validate();
    const std::size_t n_pairs = ds.snippets.size() * static_cast<std::size_t>(T) * K;
    if (n_pairs == 0) throw ShapeError("fit_resnet: empty dataset");
    const int steps_per_epoch =
        static_cast<int>((n_pairs + static_cast<std::size_t>(tc.batch) - 1) / tc.batch);

    ResNetTrainResult res;
    res.params = init_resnet(cfg, split_mix(tc.seed, 0x2E5ull));
    Adam opt(detail::resnet_param_spans(res.params), tc.beta1, tc.beta2, tc.eps);

    RealTensor x({tc.batch, 1});
    RealTensor target({tc.batch, 1});
    int step = 0;
    const std::size_t per_snippet = static_cast<std::size_t>(T) * K;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        // stream tag 2000+epoch; the operator's trainer shuffles under 1000+epoch
        const std::vector<std::uint32_t> order =
            shuffled_indices(n_pairs, split_mix(tc.seed, 2000 + static_cast<std::uint64_t>(epoch)));
        for (std::size_t start = 0; start < n_pairs; start += tc.batch) {
            const int B = static_cast<int>(std::min<std::size_t>(tc.batch, n_pairs - start));
            if (x.shape[0] != B) {
                x = RealTensor({B, 1});
                target = RealTensor({B, 1});
            }
            for (int b = 0; b < B; ++b) {
                const std::uint32_t pair = order[start + b];
                const Snippet& sn = ds.snippets[pair / per_snippet];
                const std::size_t off = pair % per_snippet;
                x.data[b] = sn.X.data[off];
                target.data[b] = sn.H.data[off];
            }
            Tape tape;
            ResNetGraph g = build_resnet_graph(tape, res.params, x, &target);
            const double loss = tape.rval(g.loss).data[0];
            if (!std::isfinite(loss))
                throw BlowUpError("fit_resnet: loss diverged at step " + std::to_string(step));
            tape.backward(g.loss);
            opt.step(detail::resnet_grad_spans(tape, g), scheduled_lr(tc, steps_per_epoch, step));
            res.curve.push_back({step, scheduled_lr(tc, steps_per_epoch, step), loss});
            ++step;
            if (log_stderr && step % 20000 == 0)
                std::fprintf(stderr, "  resnet step %d/%d  mse %.6g\n", step,
                             steps_per_epoch * tc.epochs, loss);
        }
    }
    return res;
}

// ---- climatology forecast -------------------------------------------------------

/// Constant forecast at the training-split mean, (T, K).
inline RealTensor climatology_forecast(const Climatology& c, int T, int K) {
    RealTensor out({T, K});
    out.fill(c.mean);
    return out;
}

// ---- offline one-step MSE -------------------------------------------------------

inline double linear_offline_mse(const LinearParam& p, const Dataset& ds) {
    const int K = static_cast<int>(ds.hdr.K);
    const int T = static_cast<int>(ds.hdr.T);
    std::vector<double> out(static_cast<std::size_t>(T) * K);
    double acc = 0.0;
    std::size_t n = 0;
    for (const Snippet& sn : ds.snippets) {
        linear_predict(p, sn.X.data.data(), T, K, out.data());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - sn.H.data[i];
            acc += d * d;
        }
        n += out.size();
    }
    return acc / static_cast<double>(n);
}

inline double resnet_offline_mse(const ResNetConfig& cfg, const ResNetParams& par,
                                 const Dataset& ds) {
    const int K = static_cast<int>(ds.hdr.K);
    const int T = static_cast<int>(ds.hdr.T);
    ResNetInference inf(cfg, par, static_cast<std::size_t>(T) * K);
    std::vector<double> out(static_cast<std::size_t>(T) * K);
    double acc = 0.0;
    std::size_t n = 0;
    for (const Snippet& sn : ds.snippets) {
        inf.run(sn.X.data.data(), out.size(), out.data());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - sn.H.data[i];
            acc += d * d;
        }
        n += out.size();
    }
    return acc / static_cast<double>(n);
}

// ---- serialization ---------------------------------------------------------------

inline void save_linear(const LinearParam& p, const std::string& path) {
    io::BlockFile bf;
    bf.type = io::ModelType::linear;
    bf.add("mode", std::vector<std::int64_t>{p.global ? 1 : 0});
    if (p.global) {
        bf.add("A", p.A);
    } else {
        RealTensor a({1}), b0({1});
        a.data[0] = p.a;
        b0.data[0] = p.b0;
        bf.add("a", a);
        bf.add("b0", b0);
    }
    bf.save(path);
}

inline LinearParam load_linear(const io::BlockFile& bf) {
    LinearParam p;
    p.global = bf.ints("mode").at(0) != 0;
    if (p.global) {
        p.A = bf.real("A");
        if (p.A.shape.size() != 2 || p.A.shape[1] != p.A.shape[0] + 1)
            throw IoError("linear weight file: bad A shape");
    } else {
        p.a = bf.real("a").data.at(0);
        p.b0 = bf.real("b0").data.at(0);
    }
    return p;
}

inline void save_resnet(const ResNetConfig& cfg, const ResNetParams& p, const std::string& path) {
    io::BlockFile bf;
    bf.type = io::ModelType::resnet;
    bf.add("config", std::vector<std::int64_t>{cfg.units, cfg.blocks});
    bf.add("W_in", p.Win);
    bf.add("b_in", p.bin);
    for (int l = 0; l < cfg.blocks; ++l) {
        const std::string suffix = "_" + std::to_string(l);
        bf.add("W" + suffix, p.Wb[l]);
        bf.add("b" + suffix, p.bb[l]);
    }
    bf.add("W_out", p.Wout);
    bf.add("b_out", p.bout);
    bf.save(path);
}

inline std::pair<ResNetConfig, ResNetParams> load_resnet(const io::BlockFile& bf) {
    const auto& c = bf.ints("config");
    if (c.size() != 2) throw IoError("resnet weight file: bad config block");
    ResNetConfig cfg;
    cfg.units = static_cast<int>(c[0]);
    cfg.blocks = static_cast<int>(c[1]);
    cfg.validate();
    ResNetParams p;
    p.Win = bf.real("W_in");
    p.bin = bf.real("b_in");
    for (int l = 0; l < cfg.blocks; ++l) {
        const std::string suffix = "_" + std::to_string(l);
        p.Wb.push_back(bf.real("W" + suffix));
        p.bb.push_back(bf.real("b" + suffix));
    }
    p.Wout = bf.real("W_out");
    p.bout = bf.real("b_out");
    return {cfg, p};
}

inline void save_climatology(const Climatology& c, const std::string& path) {
    io::BlockFile bf;
    bf.type = io::ModelType::climatology;
    RealTensor mean({1}), sd({1}), per_k({static_cast<int>(c.per_k.size())});
    mean.data[0] = c.mean;
    sd.data[0] = c.std_dev;
    per_k.data = c.per_k;
    bf.add("mean", mean);
    bf.add("per_k", per_k);
    bf.add("std", sd);
    bf.add("count", std::vector<std::int64_t>{static_cast<std::int64_t>(c.count)});
    bf.save(path);
}

inline Climatology load_climatology(const io::BlockFile& bf) {
    Climatology c;
    c.mean = bf.real("mean").data.at(0);
    c.per_k = bf.real("per_k").data;
    c.std_dev = bf.real("std").data.at(0);
    c.count = static_cast<std::uint64_t>(bf.ints("count").at(0));
    return c;
}

} // namespace mno
