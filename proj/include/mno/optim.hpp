#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mno/common.hpp"
#include "mno/prng.hpp"

namespace mno {

/// Hyperparameters shared by the gradient-trained models.  Defaults are the
/// operator's; the local ResNet overrides lr/epochs/batch from its own config.
struct TrainConfig {
    double lr = 1e-3;
    double gamma = 0.9;           // multiplicative decay factor
    int lr_decays_per_epoch = 20; // decay every floor(steps_per_epoch / this) steps
    int epochs = 2;
    int batch = 64;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be positive");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("TrainConfig: gamma must be in (0, 1]");
        if (epochs < 1 || batch < 1 || lr_decays_per_epoch < 1)
            throw ConfigError("TrainConfig: counts must be positive");
    }
};

struct LossPoint {
    int step = 0;
    double lr = 0.0;
    double mse = 0.0;
};

/// Adam over a fixed list of flat parameter spans.  Complex tensors
/// participate through their interleaved double storage.
class Adam {
public:
    Adam(std::vector<std::pair<double*, std::size_t>> params, double beta1, double beta2, double eps)
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        std::size_t total = 0;
        for (const auto& [p, n] : params_) total += n;
        m_.assign(total, 0.0);
        v_.assign(total, 0.0);
    }

    /// grads must mirror the constructor's spans (same order and lengths).
    void step(const std::vector<std::pair<const double*, std::size_t>>& grads, double lr) {
        if (grads.size() != params_.size()) throw ShapeError("Adam: gradient span count mismatch");
        b1t_ *= beta1_;
        b2t_ *= beta2_;
        const double bc1 = 1.0 - b1t_;
        const double bc2 = 1.0 - b2t_;
        std::size_t off = 0;
        for (std::size_t gi = 0; gi < params_.size(); ++gi) {
            auto [p, n] = params_[gi];
            auto [g, gn] = grads[gi];
            if (gn != n) throw ShapeError("Adam: gradient span length mismatch");
            double* m = m_.data() + off;
            double* v = v_.data() + off;
            for (std::size_t i = 0; i < n; ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
            }
            off += n;
        }
    }

private:
    std::vector<std::pair<double*, std::size_t>> params_;
    double beta1_, beta2_, eps_;
    double b1t_ = 1.0, b2t_ = 1.0;
    std::vector<double> m_, v_;
};

/// Seeded Fisher-Yates shuffle of the identity permutation [0, n).
/// Epoch e of a training run uses stream split_mix(seed, 1000 + e).
inline std::vector<std::uint32_t> shuffled_indices(std::size_t n, std::uint64_t stream_seed) {
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
    Rng rng(stream_seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.u01() * static_cast<double>(i));
        std::swap(idx[i - 1], idx[j < i ? j : i - 1]);
    }
    return idx;
}

/// Piecewise-constant decayed learning rate for a given optimizer step.
inline double scheduled_lr(const TrainConfig& tc, int steps_per_epoch, int step) {
    const int every = std::max(1, steps_per_epoch / std::max(1, tc.lr_decays_per_epoch));
    double lr = tc.lr;
    for (int k = 0; k < step / every; ++k) lr *= tc.gamma;
    return lr;
}

} // namespace mno
