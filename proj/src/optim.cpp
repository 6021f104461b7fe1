#include "eveopt/optim.hpp"

#include <cmath>
#include <string>

namespace eveopt {

const char* to_string(GradientMode mode) {
    return mode == GradientMode::Sparse ? "sparse" : "dense";
}

namespace {

void require_open01(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0))
        throw ConfigError(std::string(name) + " must lie in (0,1), got " +
                          std::to_string(v));
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw ShapeError(std::string(what) + ": dimension mismatch (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
}

} // namespace

void EveConfig::validate() const {
    if (!(lr1 > 0.0)) throw ConfigError("lr1 must be positive");
    if (!(lr2 > 0.0)) throw ConfigError("lr2 must be positive");
    require_open01(beta1, "beta1");
    require_open01(beta2, "beta2");
    require_open01(beta3, "beta3");
    require_open01(alpha, "alpha");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(zero_tol >= 0.0)) throw ConfigError("zero_tol must be nonnegative");
    if (!(sparse_frac >= 0.0 && sparse_frac <= 1.0))
        throw ConfigError("sparse_frac must lie in [0,1]");
}

EveState EveState::zeros(std::size_t dim) {
    EveState s;
    s.m_s.assign(dim, 0.0);
    s.m_l.assign(dim, 0.0);
    s.v1.assign(dim, 0.0);
    s.v2.assign(dim, 0.0);
    s.t = 1;
    return s;
}

GradientMode classify_gradient(std::span<const double> g, const EveConfig& cfg) {
    if (g.empty()) throw ShapeError("classify_gradient: empty gradient");
    std::size_t zeros = 0;
    for (double gi : g) {
        if (!std::isfinite(gi))
            throw InvalidGradientError("classify_gradient: non-finite gradient entry");
        if (std::fabs(gi) <= cfg.zero_tol) ++zeros;
    }
    const double frac =
        static_cast<double>(zeros) / static_cast<double>(g.size());
    return frac > cfg.sparse_frac ? GradientMode::Sparse : GradientMode::Dense;
}

std::vector<double> update_momenta(EveState& state, std::span<const double> g,
                                   const EveConfig& cfg) {
    require_same_dim(state.dim(), g.size(), "update_momenta");
    const std::size_t n = g.size();
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
        state.m_s[i] = cfg.beta1 * state.m_s[i] + (1.0 - cfg.beta1) * g[i];
        state.m_l[i] = cfg.beta2 * state.m_l[i] + (1.0 - cfg.beta2) * g[i];
        m[i] = cfg.beta3 * state.m_s[i] + (1.0 - cfg.beta3) * state.m_l[i];
    }
    return m;
}

void update_velocities(EveState& state, std::span<const double> g,
                       GradientMode mode, const EveConfig& cfg) {
    require_same_dim(state.dim(), g.size(), "update_velocities");
    const std::size_t n = g.size();
    const double c1 =
        mode == GradientMode::Sparse ? 1.0 - cfg.alpha : 1.0 - cfg.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        if (state.v1[i] < 0.0 || state.v2[i] < 0.0)
            throw StateError("update_velocities: negative velocity");
        const double r1 = g[i] - std::sqrt(state.v2[i]);
        state.v1[i] = cfg.alpha * state.v1[i] + c1 * r1 * r1;
        const double r2 = g[i] - std::sqrt(state.v1[i]);
        state.v2[i] = cfg.alpha * state.v2[i] + (1.0 - cfg.alpha) * r2 * r2;
    }
}

std::pair<std::vector<double>, std::vector<double>>
effective_rates(std::int64_t t, std::span<const double> v1,
                std::span<const double> v2, GradientMode mode,
                const EveConfig& cfg) {
    if (t < 1)
        throw ConfigError("effective_rates: t must be >= 1 (correction factors "
                          "degenerate at t = 0)");
    require_same_dim(v1.size(), v2.size(), "effective_rates");
    const auto td = static_cast<double>(t);
    const double c1 = std::sqrt(1.0 - std::pow(cfg.alpha, td)) /
                      (1.0 - std::pow(cfg.beta1, td));
    const double c2 =
        mode == GradientMode::Sparse
            ? std::sqrt(1.0 - std::pow(cfg.beta2, td)) /
                  (1.0 - std::pow(cfg.beta1, td))
            : std::sqrt(1.0 - std::pow(cfg.alpha, td)) /
                  (1.0 - std::pow(cfg.beta2, td));
    const std::size_t n = v1.size();
    std::vector<double> a1(n), a2(n);
    for (std::size_t i = 0; i < n; ++i) {
        a1[i] = cfg.lr1 * c1 / (std::sqrt(v2[i]) + cfg.epsilon);
        a2[i] = cfg.lr2 * c2 / (std::sqrt(v1[i]) + cfg.epsilon);
    }
    return {std::move(a1), std::move(a2)};
}

StepInfo eve_step(std::vector<double>& theta, std::span<const double> g,
                  EveState& state, const EveConfig& cfg) {
    require_same_dim(theta.size(), g.size(), "eve_step");
    require_same_dim(state.dim(), g.size(), "eve_step (state)");

    StepInfo info;
    info.mode = classify_gradient(g, cfg);
    const std::vector<double> m = update_momenta(state, g, cfg);
    update_velocities(state, g, info.mode, cfg);
    const auto [a1, a2] = effective_rates(state.t, state.v1, state.v2,
                                          info.mode, cfg);
    const std::size_t n = theta.size();
    for (std::size_t i = 0; i < n; ++i) {
        theta[i] -= m[i] * (a1[i] + a2[i]) * 0.5;
        if (!std::isfinite(theta[i])) info.finite = false;
    }
    state.t += 1;
    return info;
}

} // namespace eveopt
