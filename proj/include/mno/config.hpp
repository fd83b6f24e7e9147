#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mno/bench.hpp"
#include "mno/baselines.hpp"
#include "mno/dynamics.hpp"
#include "mno/fno.hpp"
#include "mno/optim.hpp"
#include "mno/rollout.hpp"

// Flat key=value run configuration.  Every tunable of the pipeline appears
// here exactly once; unknown keys are rejected so typos cannot silently fall
// back to defaults; each run rewrites its fully-resolved configuration next
// to its outputs so any result can be regenerated from the sidecar alone.

namespace mno {

struct RunConfig {
    // dynamics
    int K = 4, J = 4;
    double F = 20.0, h_s = 0.5, b = 10.0, c = 8.0, dt = 0.005;
    // data
    int n_train = 4000, n_test = 1000, T_steps = 400;
    double warmup_mtu = 10.0;
    bool debug_y = false;
    int gen_threads = 0; // 0 = hardware concurrency
    // operator
    int fno_n_v = 64, fno_k_max = 3, fno_n_d = 3, fno_d_in = 1, fno_d_out = 1;
    bool fno_coord_channel = false;
    // operator training
    double fno_lr = 1e-3, fno_lr_gamma = 0.9;
    int fno_lr_decays_per_epoch = 20, fno_epochs = 2, fno_batch = 64;
    // residual-network baseline
    int resnet_units = 32, resnet_blocks = 2;
    double resnet_lr = 1e-2, resnet_lr_gamma = 0.8;
    int resnet_lr_decays_per_epoch = 1, resnet_epochs = 20, resnet_batch = 1024;
    // linear baseline
    bool linear_global = false;
    // shared optimizer constants
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    // evaluation
    int eval_steps = 200, stability_steps = 400;
    double stability_bound = 50.0;
    int plot_samples = 8;
    bool eval_per_stage = false;
    // bench sweep
    int bench_k_log2_min = 4, bench_k_log2_max_dns = 21, bench_k_log2_max_mno = 21;
    int bench_knee_log2 = 12;
    double bench_point_budget_s = 45.0, bench_mem_fraction = 0.75;
    std::uint64_t bench_mem_cap_mb = 0;
    std::int64_t bench_reps_max = 100000;
    // randomness root
    std::uint64_t seed = 42;

    ScaleParams params() const {
        ScaleParams p{K, J, F, h_s, b, c, dt};
        p.validate();
        return p;
    }

    FnoConfig fno() const {
        FnoConfig f;
        f.n_v = fno_n_v;
        f.k_max = fno_k_max;
        f.n_d = fno_n_d;
        f.d_in = fno_d_in;
        f.d_out = fno_d_out;
        f.coord_channel = fno_coord_channel;
        f.validate();
        return f;
    }

    TrainConfig fno_train() const {
        TrainConfig t;
        t.lr = fno_lr;
        t.gamma = fno_lr_gamma;
        t.lr_decays_per_epoch = fno_lr_decays_per_epoch;
        t.epochs = fno_epochs;
        t.batch = fno_batch;
        t.beta1 = adam_beta1;
        t.beta2 = adam_beta2;
        t.eps = adam_eps;
        t.seed = seed;
        return t;
    }

    ResNetConfig resnet() const {
        ResNetConfig r;
        r.units = resnet_units;
        r.blocks = resnet_blocks;
        r.validate();
        return r;
    }

    TrainConfig resnet_train() const {
        TrainConfig t;
        t.lr = resnet_lr;
        // Annealed to ~1e-4 by the last epoch: a constant 1e-2 leaves Adam
        // bouncing, and the terminal point's rollout skill is then seed noise.
        t.gamma = resnet_lr_gamma;
        t.lr_decays_per_epoch = resnet_lr_decays_per_epoch;
        t.epochs = resnet_epochs;
        t.batch = resnet_batch;
        t.beta1 = adam_beta1;
        t.beta2 = adam_beta2;
        t.eps = adam_eps;
        t.seed = seed;
        return t;
    }

    EvalConfig eval_cfg() const {
        EvalConfig e;
        e.T_eval = eval_steps;
        e.T_stability = stability_steps;
        e.bound = stability_bound;
        e.n_plot = plot_samples;
        e.rollout_opts.per_stage = eval_per_stage;
        return e;
    }

    BenchConfig bench_cfg() const {
        BenchConfig b2;
        b2.k_log2_min = bench_k_log2_min;
        b2.k_log2_max_dns = bench_k_log2_max_dns;
        b2.k_log2_max_mno = bench_k_log2_max_mno;
        b2.knee_log2 = bench_knee_log2;
        b2.point_budget_s = bench_point_budget_s;
        b2.mem_fraction = bench_mem_fraction;
        b2.mem_cap_bytes = bench_mem_cap_mb << 20;
        b2.reps_max = bench_reps_max;
        b2.fno = fno();
        b2.seed = seed;
        return b2;
    }

    int warmup_steps() const {
        if (warmup_mtu < 0.0) throw ConfigError("warmup_mtu must be >= 0");
        return static_cast<int>(std::llround(warmup_mtu / dt));
    }
};

namespace detail {

struct ConfigEntry {
    const char* key;
    enum Kind { kInt, kI64, kU64, kReal, kBool } kind;
    void* p;
};

inline std::vector<ConfigEntry> config_entries(RunConfig& c) {
    using E = ConfigEntry;
    return {
        {"K", E::kInt, &c.K},
        {"J", E::kInt, &c.J},
        {"F", E::kReal, &c.F},
        {"h_s", E::kReal, &c.h_s},
        {"b", E::kReal, &c.b},
        {"c", E::kReal, &c.c},
        {"dt", E::kReal, &c.dt},
        {"n_train", E::kInt, &c.n_train},
        {"n_test", E::kInt, &c.n_test},
        {"T_steps", E::kInt, &c.T_steps},
        {"warmup_mtu", E::kReal, &c.warmup_mtu},
        {"debug_y", E::kBool, &c.debug_y},
        {"gen_threads", E::kInt, &c.gen_threads},
        {"fno_n_v", E::kInt, &c.fno_n_v},
        {"fno_k_max", E::kInt, &c.fno_k_max},
        {"fno_n_d", E::kInt, &c.fno_n_d},
        {"fno_d_in", E::kInt, &c.fno_d_in},
        {"fno_d_out", E::kInt, &c.fno_d_out},
        {"fno_coord_channel", E::kBool, &c.fno_coord_channel},
        {"fno_lr", E::kReal, &c.fno_lr},
        {"fno_lr_gamma", E::kReal, &c.fno_lr_gamma},
        {"fno_lr_decays_per_epoch", E::kInt, &c.fno_lr_decays_per_epoch},
        {"fno_epochs", E::kInt, &c.fno_epochs},
        {"fno_batch", E::kInt, &c.fno_batch},
        {"resnet_units", E::kInt, &c.resnet_units},
        {"resnet_blocks", E::kInt, &c.resnet_blocks},
        {"resnet_lr", E::kReal, &c.resnet_lr},
        {"resnet_lr_gamma", E::kReal, &c.resnet_lr_gamma},
        {"resnet_lr_decays_per_epoch", E::kInt, &c.resnet_lr_decays_per_epoch},
        {"resnet_epochs", E::kInt, &c.resnet_epochs},
        {"resnet_batch", E::kInt, &c.resnet_batch},
        {"linear_global", E::kBool, &c.linear_global},
        {"adam_beta1", E::kReal, &c.adam_beta1},
        {"adam_beta2", E::kReal, &c.adam_beta2},
        {"adam_eps", E::kReal, &c.adam_eps},
        {"eval_steps", E::kInt, &c.eval_steps},
        {"stability_steps", E::kInt, &c.stability_steps},
        {"stability_bound", E::kReal, &c.stability_bound},
        {"plot_samples", E::kInt, &c.plot_samples},
        {"eval_per_stage", E::kBool, &c.eval_per_stage},
        {"bench_k_log2_min", E::kInt, &c.bench_k_log2_min},
        {"bench_k_log2_max_dns", E::kInt, &c.bench_k_log2_max_dns},
        {"bench_k_log2_max_mno", E::kInt, &c.bench_k_log2_max_mno},
        {"bench_knee_log2", E::kInt, &c.bench_knee_log2},
        {"bench_point_budget_s", E::kReal, &c.bench_point_budget_s},
        {"bench_mem_fraction", E::kReal, &c.bench_mem_fraction},
        {"bench_mem_cap_mb", E::kU64, &c.bench_mem_cap_mb},
        {"bench_reps_max", E::kI64, &c.bench_reps_max},
        {"seed", E::kU64, &c.seed},
    };
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b2 = s.size();
    while (a < b2 && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b2 > a && std::isspace(static_cast<unsigned char>(s[b2 - 1]))) --b2;
    return s.substr(a, b2 - a);
}

} // namespace detail

/// Applies one key=value assignment; unknown keys and malformed values are
/// configuration errors.
inline void config_set(RunConfig& cfg, const std::string& key, const std::string& value) {
    using E = detail::ConfigEntry;
    for (const E& e : detail::config_entries(cfg)) {
        if (key != e.key) continue;
        try {
            std::size_t used = 0;
            switch (e.kind) {
            case E::kInt: {
                const long v = std::stol(value, &used);
                if (used != value.size()) throw std::invalid_argument("trailing");
                *static_cast<int*>(e.p) = static_cast<int>(v);
                return;
            }
            case E::kI64: {
                const long long v = std::stoll(value, &used);
                if (used != value.size()) throw std::invalid_argument("trailing");
                *static_cast<std::int64_t*>(e.p) = v;
                return;
            }
            case E::kU64: {
                const unsigned long long v = std::stoull(value, &used);
                if (used != value.size()) throw std::invalid_argument("trailing");
                *static_cast<std::uint64_t*>(e.p) = v;
                return;
            }
            case E::kReal: {
                const double v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument("trailing");
                *static_cast<double*>(e.p) = v;
                return;
            }
            case E::kBool: {
                if (value == "true" || value == "1") {
                    *static_cast<bool*>(e.p) = true;
                } else if (value == "false" || value == "0") {
                    *static_cast<bool*>(e.p) = false;
                } else {
                    throw std::invalid_argument("bool");
                }
                return;
            }
            }
        } catch (const std::exception&) {
            throw ConfigError("bad value for key '" + key + "': '" + value + "'");
        }
    }
    throw ConfigError("unknown config key: '" + key + "'");
}

/// key=value lines; '#' starts a comment; blank lines ignored.
inline void load_config(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        config_set(cfg, key, value);
    }
}

/// Writes every key in registry order; the output parses back to an equal
/// configuration (the resolved-run sidecar).
inline void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write config: " + path);
    using E = detail::ConfigEntry;
    RunConfig& c = const_cast<RunConfig&>(cfg);
    for (const E& e : detail::config_entries(c)) {
        out << e.key << " = ";
        switch (e.kind) {
        case E::kInt: out << *static_cast<int*>(e.p); break;
        case E::kI64: out << *static_cast<std::int64_t*>(e.p); break;
        case E::kU64: out << *static_cast<std::uint64_t*>(e.p); break;
        case E::kReal: out << fmt_g17(*static_cast<double*>(e.p)); break;
        case E::kBool: out << (*static_cast<bool*>(e.p) ? "true" : "false"); break;
        }
        out << '\n';
    }
    if (!out) throw IoError("config write failed: " + path);
}

} // namespace mno
