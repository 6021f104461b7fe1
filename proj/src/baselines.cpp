#include "eveopt/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace eveopt {

const char* to_string(BaselineKind kind) {
    switch (kind) {
    case BaselineKind::SGD: return "sgd";
    case BaselineKind::Momentum: return "momentum";
    case BaselineKind::Adam: return "adam";
    case BaselineKind::AMSGrad: return "amsgrad";
    }
    return "?";
}

BaselineKind baseline_kind_from_string(const std::string& name) {
    if (name == "sgd") return BaselineKind::SGD;
    if (name == "momentum") return BaselineKind::Momentum;
    if (name == "adam") return BaselineKind::Adam;
    if (name == "amsgrad") return BaselineKind::AMSGrad;
    throw ConfigError("unknown baseline optimizer '" + name + "'");
}

void BaselineConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (kind == BaselineKind::Momentum && !(mu > 0.0 && mu < 1.0))
        throw ConfigError("mu must lie in (0,1)");
    if (kind == BaselineKind::Adam || kind == BaselineKind::AMSGrad) {
        if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0,1)");
        if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0,1)");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    }
}

BaselineState BaselineState::zeros(BaselineKind kind, std::size_t dim) {
    BaselineState s;
    if (kind != BaselineKind::SGD) s.m.assign(dim, 0.0);
    if (kind == BaselineKind::Adam || kind == BaselineKind::AMSGrad)
        s.v.assign(dim, 0.0);
    if (kind == BaselineKind::AMSGrad) s.v_max.assign(dim, 0.0);
    s.t = 1;
    return s;
}

bool baseline_step(std::vector<double>& theta, std::span<const double> g,
                   BaselineState& state, const BaselineConfig& cfg) {
    if (theta.size() != g.size())
        throw ShapeError("baseline_step: dimension mismatch");
    for (double gi : g)
        if (!std::isfinite(gi))
            throw InvalidGradientError("baseline_step: non-finite gradient entry");

    const std::size_t n = theta.size();
    bool finite = true;
    switch (cfg.kind) {
    case BaselineKind::SGD:
        for (std::size_t i = 0; i < n; ++i) theta[i] -= cfg.lr * g[i];
        break;
    case BaselineKind::Momentum:
        if (state.m.size() != n) throw ShapeError("baseline_step: state size");
        for (std::size_t i = 0; i < n; ++i) {
            state.m[i] = cfg.mu * state.m[i] + g[i];
            theta[i] -= cfg.lr * state.m[i];
        }
        break;
    case BaselineKind::Adam:
    case BaselineKind::AMSGrad: {
        if (state.m.size() != n || state.v.size() != n)
            throw ShapeError("baseline_step: state size");
        const auto td = static_cast<double>(state.t);
        const double bc1 = 1.0 - std::pow(cfg.beta1, td);
        const double bc2 = 1.0 - std::pow(cfg.beta2, td);
        for (std::size_t i = 0; i < n; ++i) {
            state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
            state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            double second = state.v[i];
            if (cfg.kind == BaselineKind::AMSGrad) {
                state.v_max[i] = std::max(state.v_max[i], state.v[i]);
                second = state.v_max[i];
            }
            const double mhat = state.m[i] / bc1;
            const double vhat = second / bc2;
            theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
        break;
    }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(theta[i])) { finite = false; break; }
    state.t += 1;
    return finite;
}

} // namespace eveopt
