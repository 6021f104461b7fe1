#include "eveopt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eveopt/rng.hpp"

namespace eveopt::verify {

// ---- independent scalar oracle ------------------------------------------------

StepInfo oracle_step(std::vector<double>& theta, std::span<const double> g,
                     EveState& state, const EveConfig& cfg) {
    if (theta.size() != g.size() || state.dim() != g.size())
        throw ShapeError("oracle_step: dimension mismatch");

    // Step: classify the gradient (zero-entry fraction rule).
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i]))
            throw InvalidGradientError("oracle_step: non-finite gradient entry");
        if (std::fabs(g[i]) <= cfg.zero_tol) zeros += 1;
    }
    const bool sparse =
        static_cast<double>(zeros) / static_cast<double>(g.size()) >
        cfg.sparse_frac;

    StepInfo info;
    info.mode = sparse ? GradientMode::Sparse : GradientMode::Dense;

    // Everything below is written per element, formulas inline, exactly in
    // the listed order of the update rule. No helpers shared with the
    // library stepper.
    const double t = static_cast<double>(state.t);
    for (std::size_t i = 0; i < g.size(); ++i) {
        // momenta
        state.m_s[i] = cfg.beta1 * state.m_s[i] + (1.0 - cfg.beta1) * g[i];
        state.m_l[i] = cfg.beta2 * state.m_l[i] + (1.0 - cfg.beta2) * g[i];
        const double m = cfg.beta3 * state.m_s[i] + (1.0 - cfg.beta3) * state.m_l[i];

        // residual velocities: v1 from the old v2, then v2 from the new v1
        if (state.v1[i] < 0.0 || state.v2[i] < 0.0)
            throw StateError("oracle_step: negative velocity");
        if (sparse)
            state.v1[i] = cfg.alpha * state.v1[i] +
                          (1.0 - cfg.alpha) *
                              (g[i] - std::sqrt(state.v2[i])) *
                              (g[i] - std::sqrt(state.v2[i]));
        else
            state.v1[i] = cfg.alpha * state.v1[i] +
                          (1.0 - cfg.beta2) *
                              (g[i] - std::sqrt(state.v2[i])) *
                              (g[i] - std::sqrt(state.v2[i]));
        state.v2[i] = cfg.alpha * state.v2[i] +
                      (1.0 - cfg.alpha) * (g[i] - std::sqrt(state.v1[i])) *
                          (g[i] - std::sqrt(state.v1[i]));

        // bias-corrected step sizes
        const double lr1t = cfg.lr1 * std::sqrt(1.0 - std::pow(cfg.alpha, t)) /
                            (1.0 - std::pow(cfg.beta1, t));
        double lr2t;
        if (sparse)
            lr2t = cfg.lr2 * std::sqrt(1.0 - std::pow(cfg.beta2, t)) /
                   (1.0 - std::pow(cfg.beta1, t));
        else
            lr2t = cfg.lr2 * std::sqrt(1.0 - std::pow(cfg.alpha, t)) /
                   (1.0 - std::pow(cfg.beta2, t));

        // literal two-term parameter update
        theta[i] = theta[i] -
                   0.5 * (m * lr1t / (std::sqrt(state.v2[i]) + cfg.epsilon) +
                          m * lr2t / (std::sqrt(state.v1[i]) + cfg.epsilon));
        if (!std::isfinite(theta[i])) info.finite = false;
    }
    state.t += 1;
    return info;
}

// ---- fixed points ----------------------------------------------------------------

FixedPointReport velocity_fixed_point(double g, double alpha, GradientMode mode,
                                      double tol, std::int64_t cap,
                                      double beta2) {
    if (!(tol > 0.0)) throw ConfigError("velocity_fixed_point: tol must be positive");
    FixedPointReport rep;
    rep.g = g;
    rep.alpha = alpha;
    rep.mode = mode;
    rep.beta2 = beta2;

    const double c1 = mode == GradientMode::Sparse ? 1.0 - alpha : 1.0 - beta2;
    double v1 = 0.0, v2 = 0.0;
    for (std::int64_t it = 1; it <= cap; ++it) {
        const double r1 = g - std::sqrt(v2);
        const double r2 = g - std::sqrt(v1);
        const double n1 = alpha * v1 + c1 * r1 * r1;
        const double n2 = alpha * v2 + (1.0 - alpha) * r2 * r2;
        const double change = std::max(std::fabs(n1 - v1), std::fabs(n2 - v2));
        v1 = n1;
        v2 = n2;
        rep.iterations = it;
        if (change < tol) {
            rep.converged = true;
            break;
        }
    }
    rep.v1_star = v1;
    rep.v2_star = v2;
    // Stationarity defects of the defining equations at (v1*, v2*).
    const double r1 = g - std::sqrt(v2);
    const double r2 = g - std::sqrt(v1);
    const double d1 = std::fabs(r1 * r1 - (1.0 - alpha) * v1 / c1);
    const double d2 = std::fabs(r2 * r2 - v2);
    rep.residual = std::max(d1, d2);
    return rep;
}

SequentialStationarityReport sequential_stationarity(double g, double alpha,
                                                     double tol,
                                                     std::int64_t cap) {
    SequentialStationarityReport rep;
    rep.g = g;
    rep.alpha = alpha;
    double v1 = 0.0, v2 = 0.0;
    for (std::int64_t it = 1; it <= cap; ++it) {
        const double o1 = v1, o2 = v2;
        const double r1 = g - std::sqrt(v2);
        v1 = alpha * v1 + (1.0 - alpha) * r1 * r1; // Sparse coefficient
        const double r2 = g - std::sqrt(v1);
        v2 = alpha * v2 + (1.0 - alpha) * r2 * r2;
        rep.iterations = it;
        if (std::max(std::fabs(v1 - o1), std::fabs(v2 - o2)) < tol) break;
    }
    rep.v1 = v1;
    rep.v2 = v2;
    const double d1 = std::fabs((g - std::sqrt(v2)) * (g - std::sqrt(v2)) - v1);
    const double d2 = std::fabs((g - std::sqrt(v1)) * (g - std::sqrt(v1)) - v2);
    rep.residual = std::max(d1, d2);
    rep.curve_defect = std::fabs(std::sqrt(v1) + std::sqrt(v2) - g);
    const double sym = g * g / 4.0;
    rep.symmetric_gap = std::max(std::fabs(v1 - sym), std::fabs(v2 - sym));
    return rep;
}

// ---- contraction ------------------------------------------------------------------

ContractionReport contraction_report(std::int64_t samples, double v_lo,
                                     double v_hi, double g_lo, double g_hi,
                                     double alpha, std::uint64_t seed,
                                     double exclusion_radius) {
    if (samples < 1) throw ConfigError("contraction_report: samples must be >= 1");
    if (!(v_lo <= v_hi) || v_lo < 0.0)
        throw ConfigError("contraction_report: bad velocity region");
    ContractionReport rep;
    rep.alpha = alpha;
    rep.samples = samples;

    Rng rng(seed);
    const auto apply = [alpha](double v1, double v2, double g, double& o1,
                               double& o2) {
        const double r1 = g - std::sqrt(v2);
        const double r2 = g - std::sqrt(v1);
        o1 = alpha * v1 + (1.0 - alpha) * r1 * r1;
        o2 = alpha * v2 + (1.0 - alpha) * r2 * r2;
    };

    for (std::int64_t s = 0; s < samples; ++s) {
        const double x1 = rng.uniform(v_lo, v_hi);
        const double x2 = rng.uniform(v_lo, v_hi);
        const double y1 = rng.uniform(v_lo, v_hi);
        const double y2 = rng.uniform(v_lo, v_hi);
        const double g = rng.uniform(g_lo, g_hi);
        if (std::min(std::min(x1, x2), std::min(y1, y2)) < exclusion_radius) {
            rep.excluded_near_zero += 1;
            continue;
        }
        if (x1 == y1 && x2 == y2) {
            rep.skipped_identical += 1;
            continue;
        }
        double tx1, tx2, ty1, ty2;
        apply(x1, x2, g, tx1, tx2);
        apply(y1, y2, g, ty1, ty2);

        const double num_sqrt = std::hypot(std::sqrt(tx1) - std::sqrt(ty1),
                                           std::sqrt(tx2) - std::sqrt(ty2));
        const double den_sqrt =
            std::hypot(std::sqrt(x1) - std::sqrt(y1), std::sqrt(x2) - std::sqrt(y2));
        const double num_raw = std::hypot(tx1 - ty1, tx2 - ty2);
        const double den_raw = std::hypot(x1 - y1, x2 - y2);
        if (den_sqrt > 0.0)
            rep.max_ratio = std::max(rep.max_ratio, num_sqrt / den_sqrt);
        if (den_raw > 0.0)
            rep.max_ratio_raw = std::max(rep.max_ratio_raw, num_raw / den_raw);
        rep.pairs_used += 1;
    }
    return rep;
}

double contraction_ratio(std::int64_t samples, double v_lo, double v_hi,
                         double g_lo, double g_hi, double alpha,
                         std::uint64_t seed, double exclusion_radius) {
    return contraction_report(samples, v_lo, v_hi, g_lo, g_hi, alpha, seed,
                              exclusion_radius)
        .max_ratio;
}

// ---- trajectory equivalence ----------------------------------------------------------

TrajectoryDiff trajectory_equal(const Objective& obj, const EveConfig& cfg,
                                std::int64_t steps,
                                std::span<const std::uint64_t> seeds) {
    TrajectoryDiff diff;
    diff.steps = steps;
    for (std::uint64_t seed : seeds) {
        std::vector<double> theta_lib = obj.init(seed);
        std::vector<double> theta_orc = theta_lib;
        EveState st_lib = EveState::zeros(theta_lib.size());
        EveState st_orc = EveState::zeros(theta_orc.size());
        std::vector<double> grad_lib, grad_orc;
        for (std::int64_t s = 0; s < steps; ++s) {
            obj.eval(theta_lib, s, grad_lib);
            obj.eval(theta_orc, s, grad_orc);
            eve_step(theta_lib, grad_lib, st_lib, cfg);
            oracle_step(theta_orc, grad_orc, st_orc, cfg);
            for (std::size_t i = 0; i < theta_lib.size(); ++i) {
                diff.max_abs_param_diff = std::max(
                    diff.max_abs_param_diff, std::fabs(theta_lib[i] - theta_orc[i]));
                const double sd = std::max(
                    std::max(std::fabs(st_lib.m_s[i] - st_orc.m_s[i]),
                             std::fabs(st_lib.m_l[i] - st_orc.m_l[i])),
                    std::max(std::fabs(st_lib.v1[i] - st_orc.v1[i]),
                             std::fabs(st_lib.v2[i] - st_orc.v2[i])));
                diff.max_abs_state_diff = std::max(diff.max_abs_state_diff, sd);
            }
        }
    }
    return diff;
}

// ---- momentum envelope ------------------------------------------------------------------

MomentumEnvelopeReport momentum_envelope(double beta1, double beta2,
                                         double beta3, double g,
                                         std::int64_t steps) {
    MomentumEnvelopeReport rep;
    rep.beta1 = beta1;
    rep.beta2 = beta2;
    rep.beta3 = beta3;
    rep.g = g;
    rep.steps = steps;
    const double decay = std::max(beta1, beta2);
    double ms = 0.0, ml = 0.0, gap = 0.0;
    for (std::int64_t t = 1; t <= steps; ++t) {
        ms = beta1 * ms + (1.0 - beta1) * g;
        ml = beta2 * ml + (1.0 - beta2) * g;
        const double m = beta3 * ms + (1.0 - beta3) * ml;
        gap = std::fabs(m - g);
        const double env = std::pow(decay, static_cast<double>(t)) * std::fabs(g);
        const double ratio = gap == 0.0 ? 0.0 : gap / env;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
    rep.final_gap = gap;
    return rep;
}

// ---- aggregated check suite ------------------------------------------------------------

namespace {

char const* const kFmt = "%.6e";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, kFmt, v);
    return buf;
}

// Canonical desk-scale instances used by the equivalence checks.
Objective check_quadratic() {
    return make_random_spd_quadratic(10, 0.5, 2.0, 11, 1.0);
}

Objective check_sparse_linear() {
    DatasetSpec spec;
    spec.kind = DatasetSpec::Kind::Blobs;
    spec.n = 120;
    spec.dim = 100;
    spec.classes = 2;
    return make_sparse_linear(synth_dataset(spec, 21), 0.05);
}

Objective check_mlp() {
    DatasetSpec dspec;
    dspec.kind = DatasetSpec::Kind::Blobs;
    dspec.n = 60;
    dspec.dim = 4;
    dspec.classes = 3;
    dspec.noise = 0.4;
    MiniMLPSpec mspec;
    mspec.widths = {4, 16, 3};
    return make_mlp(mspec, synth_dataset(dspec, 31));
}

} // namespace

std::vector<CheckResult> run_all_checks() {
    std::vector<CheckResult> out;
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const EveConfig defaults{};

    // Single-step trace: library vs oracle from the zero state.
    {
        std::vector<double> th_l{0.0}, th_o{0.0}, g{1.0};
        EveState sl = EveState::zeros(1), so = EveState::zeros(1);
        eve_step(th_l, g, sl, defaults);
        oracle_step(th_o, g, so, defaults);
        const double d = std::fabs(th_l[0] - th_o[0]);
        out.push_back({"oracle-single-step-trace", d < 1e-12, d, 1e-12, true,
                       "theta'=" + fmt(th_l[0])});
    }

    // Trajectory equivalence on the three canonical objectives.
    {
        const struct {
            const char* name;
            Objective obj;
        } cases[] = {{"trajectory-quadratic", check_quadratic()},
                     {"trajectory-sparse-linear", check_sparse_linear()},
                     {"trajectory-mlp", check_mlp()}};
        for (const auto& c : cases) {
            const TrajectoryDiff d = trajectory_equal(c.obj, defaults, 1000, seeds);
            out.push_back({c.name, d.max_abs_param_diff < 1e-10,
                           d.max_abs_param_diff, 1e-10, true,
                           "state_diff=" + fmt(d.max_abs_state_diff)});
        }
    }

    // Velocity fixed points, Sparse branch: symmetric point g^2/4.
    for (double g : {0.5, 1.0, 2.0})
        for (double alpha : {0.9, 0.99}) {
            const FixedPointReport r =
                velocity_fixed_point(g, alpha, GradientMode::Sparse);
            const double target = g * g / 4.0;
            const double dist = std::max(std::fabs(r.v1_star - target),
                                         std::fabs(r.v2_star - target));
            const std::string tag =
                "g=" + fmt(g) + " alpha=" + fmt(alpha);
            out.push_back({"velocity-fixed-point-distance " + tag,
                           r.converged && dist < 1e-8, dist, 1e-8, true,
                           "iterations=" + std::to_string(r.iterations)});
            out.push_back({"velocity-fixed-point-residual " + tag,
                           r.residual < 1e-10, r.residual, 1e-10, true, ""});
        }

    // Velocity fixed points, Dense branch: no closed form asserted, only the
    // stationarity residuals of its own defining equations.
    for (double g : {0.5, 1.0, 2.0})
        for (double alpha : {0.9, 0.99}) {
            const FixedPointReport r = velocity_fixed_point(
                g, alpha, GradientMode::Dense, 1e-13, 200000);
            out.push_back({"velocity-fixed-point-dense-residual g=" + fmt(g) +
                               " alpha=" + fmt(alpha),
                           r.residual < 1e-10, r.residual, 1e-10, true,
                           "v1*=" + fmt(r.v1_star) + " v2*=" + fmt(r.v2_star)});
        }

    // The production sequential update stalls on the same stationary curve.
    for (double g : {0.5, 1.0, 2.0})
        for (double alpha : {0.9, 0.99}) {
            const SequentialStationarityReport r = sequential_stationarity(g, alpha);
            const double worst = std::max(r.residual, r.curve_defect);
            out.push_back({"sequential-velocity-stationarity g=" + fmt(g) +
                               " alpha=" + fmt(alpha),
                           worst < 1e-10, worst, 1e-10, true,
                           "symmetric_gap=" + fmt(r.symmetric_gap) +
                               " (informational)"});
        }

    // Momentum envelope for five decay triples under a constant gradient.
    {
        const struct {
            double b1, b2, b3, g;
        } triples[] = {{0.9, 0.997, 0.5, 1.0},
                       {0.95, 0.9975, 0.7, -0.3},
                       {0.8, 0.998, 0.2, 5.0},
                       {0.99, 0.9982, 0.9, 1.0},
                       {0.97, 0.9985, 0.4, 1.0}};
        int idx = 0;
        for (const auto& tr : triples) {
            const MomentumEnvelopeReport r =
                momentum_envelope(tr.b1, tr.b2, tr.b3, tr.g, 10000);
            const std::string tag = "triple-" + std::to_string(idx++);
            out.push_back({"momentum-envelope-factor " + tag,
                           r.max_ratio <= 1.01, r.max_ratio, 1.01, true,
                           "beta=(" + fmt(tr.b1) + "," + fmt(tr.b2) + "," +
                               fmt(tr.b3) + ") g=" + fmt(tr.g)});
            out.push_back({"momentum-envelope-final-gap " + tag,
                           r.final_gap < 1e-6, r.final_gap, 1e-6, true, ""});
        }
    }

    // Contraction of the velocity map, root-velocity metric.
    {
        const ContractionReport r =
            contraction_report(1000, 0.01, 4.0, -2.0, 2.0, 0.9, 42);
        out.push_back({"contraction-ratio alpha=0.9", r.max_ratio < 1.0,
                       r.max_ratio, 1.0, true,
                       "pairs=" + std::to_string(r.pairs_used) +
                           " excluded=" + std::to_string(r.excluded_near_zero)});
        out.push_back({"contraction-ratio-raw-metric alpha=0.9 (informational)",
                       true, r.max_ratio_raw, 1.0, false,
                       "euclidean ratio on (v1,v2); exceeds 1 near v=0"});
        const ContractionReport r999 =
            contraction_report(1000, 0.01, 4.0, -2.0, 2.0, 0.999, 42);
        out.push_back({"contraction-ratio alpha=0.999 (informational)", true,
                       r999.max_ratio, 1.0, false, "reported, not asserted"});
    }

    // Monotone loss of the oracle on the canonical SPD quadratic.
    {
        const Objective obj = check_quadratic();
        std::vector<double> theta = obj.init(1);
        EveState st = EveState::zeros(theta.size());
        std::vector<double> grad;
        double prev = obj.eval(theta, 0, grad);
        double worst_increase = 0.0;
        for (std::int64_t s = 0; s < 2000; ++s) {
            oracle_step(theta, grad, st, defaults);
            const double cur = obj.eval(theta, s + 1, grad);
            worst_increase = std::max(worst_increase, cur - prev);
            prev = cur;
        }
        out.push_back({"monotone-quadratic-oracle", worst_increase <= 0.0,
                       worst_increase, 0.0, true,
                       "final_loss=" + fmt(prev)});
    }

    return out;
}

bool all_gated_passed(const std::vector<CheckResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const CheckResult& r) { return r.passed || !r.gated; });
}

nlohmann::ordered_json checks_to_json(const std::vector<CheckResult>& results) {
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        checks.push_back({{"name", r.name},
                          {"passed", r.passed},
                          {"measured", r.measured},
                          {"tolerance", r.tolerance},
                          {"gated", r.gated},
                          {"detail", r.detail}});
    }
    return nlohmann::ordered_json{{"checks", checks},
                                  {"all_passed", all_gated_passed(results)}};
}

} // namespace eveopt::verify
