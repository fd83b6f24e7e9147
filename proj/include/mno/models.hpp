#pragma once

#include <memory>
#include <string>

#include "mno/baselines.hpp"
#include "mno/fno.hpp"
#include "mno/rollout.hpp"

// Weight-file dispatch: one loader for the four persisted model kinds and a
// factory turning the dynamical ones into rollout parametrizations.

namespace mno {

struct LoadedModel {
    io::ModelType type = io::ModelType::fno;
    FnoConfig fno_cfg;
    FnoParams fno_par;
    LinearParam linear;
    ResNetConfig resnet_cfg;
    ResNetParams resnet_par;
    Climatology clim;
};

inline LoadedModel load_model(const std::string& path) {
    const io::BlockFile bf = io::BlockFile::load(path);
    LoadedModel m;
    m.type = bf.type;
    switch (bf.type) {
    case io::ModelType::fno: {
        auto [cfg, par] = load_fno(bf);
        m.fno_cfg = cfg;
        m.fno_par = std::move(par);
        break;
    }
    case io::ModelType::linear: m.linear = load_linear(bf); break;
    case io::ModelType::resnet: {
        auto [cfg, par] = load_resnet(bf);
        m.resnet_cfg = cfg;
        m.resnet_par = std::move(par);
        break;
    }
    case io::ModelType::climatology: m.clim = load_climatology(bf); break;
    }
    return m;
}

/// Climatology is a constant forecast, not a correction term; ask for it as a
/// MethodKind::climatology entry instead.
inline std::unique_ptr<Parametrization> make_parametrization(const LoadedModel& m, int K,
                                                             int B_max) {
    switch (m.type) {
    case io::ModelType::fno:
        return std::make_unique<FnoParametrization>(m.fno_cfg, m.fno_par, K, B_max);
    case io::ModelType::linear: return std::make_unique<LinearParametrization>(m.linear);
    case io::ModelType::resnet:
        return std::make_unique<ResNetParametrization>(
            m.resnet_cfg, m.resnet_par, static_cast<std::size_t>(B_max) * K);
    case io::ModelType::climatology:
        throw ConfigError("climatology cannot run as a coupled parametrization");
    }
    throw ConfigError("unrecognized model type");
}

} // namespace mno
