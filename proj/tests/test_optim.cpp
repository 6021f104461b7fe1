#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"

#include "eveopt/optim.hpp"
#include "eveopt/rng.hpp"

using namespace eveopt;

namespace {

// Frozen first-step values for a unit dense gradient from zero state with
// default hyper-parameters, computed by an independent scalar trace.
constexpr double kFirstStepTheta = -0.025510737426692378;
constexpr double kFirstStepV2 = 9.3775444679663328e-4;

} // namespace

TEST_CASE("EveConfig: defaults validate, out-of-range values throw") {
    EveConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    EveConfig bad = cfg;
    bad.lr1 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.lr2 = -1e-3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.beta2 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.beta3 = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.alpha = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.zero_tol = -1e-12;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.sparse_frac = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("classify_gradient: mostly-zero vector is Sparse") {
    EveConfig cfg;
    std::vector<double> g(10, 0.0);
    g[9] = 1.0; // zero fraction 0.9 > 0.5
    CHECK(classify_gradient(g, cfg) == GradientMode::Sparse);
}

TEST_CASE("classify_gradient: dense singleton") {
    EveConfig cfg;
    const std::vector<double> g{1.0};
    CHECK(classify_gradient(g, cfg) == GradientMode::Dense);
}

TEST_CASE("classify_gradient: boundary fraction is not strictly greater") {
    EveConfig cfg; // sparse_frac = 0.5
    const std::vector<double> g{0.0, 0.0, 1.0, 1.0};
    CHECK(classify_gradient(g, cfg) == GradientMode::Dense);
}

TEST_CASE("classify_gradient: zero_tol counts small magnitudes as zeros") {
    EveConfig cfg;
    cfg.zero_tol = 1e-3;
    const std::vector<double> g{1e-4, -5e-4, 9e-4, 2.0};
    CHECK(classify_gradient(g, cfg) == GradientMode::Sparse);
}

TEST_CASE("classify_gradient: rejects non-finite and empty input") {
    EveConfig cfg;
    const std::vector<double> nan_g{1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS((void)classify_gradient(nan_g, cfg), InvalidGradientError);
    const std::vector<double> inf_g{std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS((void)classify_gradient(inf_g, cfg), InvalidGradientError);
    const std::vector<double> empty;
    CHECK_THROWS_AS((void)classify_gradient(empty, cfg), ShapeError);
}

TEST_CASE("update_momenta: first step from zero state") {
    EveConfig cfg;
    EveState st = EveState::zeros(1);
    const std::vector<double> g{1.0};
    const std::vector<double> m = update_momenta(st, g, cfg);
    CHECK(st.m_s[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(st.m_l[0] == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(m[0] == doctest::Approx(0.0505).epsilon(1e-12));
}

TEST_CASE("update_momenta: zero gradient from zero state stays exactly zero") {
    EveConfig cfg;
    EveState st = EveState::zeros(3);
    const std::vector<double> g{0.0, 0.0, 0.0};
    const std::vector<double> m = update_momenta(st, g, cfg);
    for (int i = 0; i < 3; ++i) {
        CHECK(st.m_s[i] == 0.0);
        CHECK(st.m_l[i] == 0.0);
        CHECK(m[i] == 0.0);
    }
}

TEST_CASE("update_momenta: constant gradient drives both momenta to g") {
    // beta2 = 0.99 keeps the slow EMA's geometric tail below 1e-6 by step
    // 10000 (0.999^10000 ~ 4.5e-5 would not).
    EveConfig cfg;
    cfg.beta2 = 0.99;
    EveState st = EveState::zeros(1);
    const std::vector<double> g{0.7};
    std::vector<double> m;
    for (int t = 0; t < 10000; ++t) m = update_momenta(st, g, cfg);
    CHECK(std::abs(st.m_s[0] - 0.7) < 1e-6);
    CHECK(std::abs(st.m_l[0] - 0.7) < 1e-6);
    CHECK(std::abs(m[0] - 0.7) < 1e-6);
}

TEST_CASE("update_momenta: dimension mismatch throws") {
    EveConfig cfg;
    EveState st = EveState::zeros(3);
    const std::vector<double> g{1.0, 2.0};
    CHECK_THROWS_AS((void)update_momenta(st, g, cfg), ShapeError);
}

TEST_CASE("update_velocities: first sparse step from zero state") {
    EveConfig cfg; // alpha = 0.999
    EveState st = EveState::zeros(1);
    const std::vector<double> g{1.0};
    update_velocities(st, g, GradientMode::Sparse, cfg);
    CHECK(st.v1[0] == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(st.v2[0] == doctest::Approx(kFirstStepV2).epsilon(1e-12));
}

TEST_CASE("update_velocities: zero gradient and zero state is a fixed point") {
    EveConfig cfg;
    for (GradientMode mode : {GradientMode::Sparse, GradientMode::Dense}) {
        EveState st = EveState::zeros(2);
        const std::vector<double> g{0.0, 0.0};
        update_velocities(st, g, mode, cfg);
        CHECK(st.v1[0] == 0.0);
        CHECK(st.v1[1] == 0.0);
        CHECK(st.v2[0] == 0.0);
        CHECK(st.v2[1] == 0.0);
    }
}

TEST_CASE("update_velocities: v = g^2/4 is invariant under the sparse update") {
    for (double alpha : {0.9, 0.999}) {
        EveConfig cfg;
        cfg.alpha = alpha;
        EveState st = EveState::zeros(1);
        st.v1[0] = 0.25;
        st.v2[0] = 0.25;
        const std::vector<double> g{1.0};
        update_velocities(st, g, GradientMode::Sparse, cfg);
        CHECK(st.v1[0] == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(st.v2[0] == doctest::Approx(0.25).epsilon(1e-14));
    }
}

TEST_CASE("update_velocities: sequential order feeds the new v1 into v2") {
    EveConfig cfg;
    cfg.alpha = 0.5;
    cfg.beta2 = 0.9;
    EveState st = EveState::zeros(1);
    st.v1[0] = 0.04;
    st.v2[0] = 0.09;
    const std::vector<double> g{1.0};
    update_velocities(st, g, GradientMode::Dense, cfg);
    const double v1_new =
        0.5 * 0.04 + (1.0 - 0.9) * (1.0 - std::sqrt(0.09)) * (1.0 - std::sqrt(0.09));
    const double v2_new =
        0.5 * 0.09 +
        (1.0 - 0.5) * (1.0 - std::sqrt(v1_new)) * (1.0 - std::sqrt(v1_new));
    CHECK(st.v1[0] == doctest::Approx(v1_new).epsilon(1e-15));
    CHECK(st.v2[0] == doctest::Approx(v2_new).epsilon(1e-15));
    // using the OLD v1 instead would give a different v2
    const double v2_wrong =
        0.5 * 0.09 + 0.5 * (1.0 - std::sqrt(0.04)) * (1.0 - std::sqrt(0.04));
    CHECK(std::abs(st.v2[0] - v2_wrong) > 1e-3);
}

TEST_CASE("update_velocities: negative stored velocity is state corruption") {
    EveConfig cfg;
    EveState st = EveState::zeros(1);
    st.v1[0] = -1e-9;
    const std::vector<double> g{1.0};
    CHECK_THROWS_AS(update_velocities(st, g, GradientMode::Sparse, cfg),
                    StateError);
}

TEST_CASE("update_velocities: outputs stay nonnegative on random trajectories") {
    EveConfig cfg;
    Rng rng(314159);
    for (GradientMode mode : {GradientMode::Sparse, GradientMode::Dense}) {
        EveState st = EveState::zeros(4);
        std::vector<double> g(4);
        for (int step = 0; step < 200; ++step) {
            for (double& gi : g) gi = rng.uniform(-3.0, 3.0);
            update_velocities(st, g, mode, cfg);
            for (int i = 0; i < 4; ++i) {
                CHECK(st.v1[i] >= 0.0);
                CHECK(st.v2[i] >= 0.0);
            }
        }
    }
}

TEST_CASE("effective_rates: zero velocity at t=1 exposes the epsilon guard") {
    EveConfig cfg;
    const std::vector<double> v1{0.0};
    const std::vector<double> v2{0.0};
    const auto [a1, a2] = effective_rates(1, v1, v2, GradientMode::Dense, cfg);
    // lr1 * sqrt(1 - alpha) / (1 - beta1) / epsilon
    CHECK(a1[0] == doctest::Approx(3.1622776601683795e4).epsilon(1e-6));
}

TEST_CASE("effective_rates: correction factors approach 1 for large t") {
    EveConfig cfg;
    const std::vector<double> v1{0.09};
    const std::vector<double> v2{0.04};
    const auto [a1, a2] =
        effective_rates(10'000'000, v1, v2, GradientMode::Sparse, cfg);
    CHECK(a1[0] == doctest::Approx(cfg.lr1 / (0.2 + cfg.epsilon)).epsilon(1e-9));
    CHECK(a2[0] == doctest::Approx(cfg.lr2 / (0.3 + cfg.epsilon)).epsilon(1e-9));
}

TEST_CASE("effective_rates: dense a2 at the composed first-step trace value") {
    EveConfig cfg;
    const std::vector<double> v1{0.001};
    const std::vector<double> v2{kFirstStepV2};
    const auto [a1, a2] = effective_rates(1, v1, v2, GradientMode::Dense, cfg);
    CHECK(a2[0] == doctest::Approx(0.99999968377233306).epsilon(1e-12));
}

TEST_CASE("effective_rates: sparse a2 uses the beta2 bias-correction numerator") {
    EveConfig cfg;
    const std::int64_t t = 3;
    const std::vector<double> v1{0.25};
    const std::vector<double> v2{0.16};
    const auto [a1, a2] = effective_rates(t, v1, v2, GradientMode::Sparse, cfg);
    const double expect_a2 = cfg.lr2 *
                             std::sqrt(1.0 - std::pow(cfg.beta2, double(t))) /
                             (1.0 - std::pow(cfg.beta1, double(t))) /
                             (0.5 + cfg.epsilon);
    const double expect_a1 = cfg.lr1 *
                             std::sqrt(1.0 - std::pow(cfg.alpha, double(t))) /
                             (1.0 - std::pow(cfg.beta1, double(t))) /
                             (0.4 + cfg.epsilon);
    CHECK(a2[0] == doctest::Approx(expect_a2).epsilon(1e-15));
    CHECK(a1[0] == doctest::Approx(expect_a1).epsilon(1e-15));
}

TEST_CASE("effective_rates: t = 0 is a precondition error") {
    EveConfig cfg;
    const std::vector<double> v{0.1};
    CHECK_THROWS_AS((void)effective_rates(0, v, v, GradientMode::Dense, cfg),
                    ConfigError);
}

TEST_CASE("eve_step: frozen first-step trace for a unit dense gradient") {
    EveConfig cfg;
    std::vector<double> theta{0.0};
    EveState st = EveState::zeros(1);
    const std::vector<double> g{1.0};
    const StepInfo info = eve_step(theta, g, st, cfg);
    CHECK(info.mode == GradientMode::Dense);
    CHECK(info.finite);
    CHECK(theta[0] == doctest::Approx(kFirstStepTheta).epsilon(1e-12));
    CHECK(st.m_s[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(st.m_l[0] == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(st.v1[0] == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(st.v2[0] == doctest::Approx(kFirstStepV2).epsilon(1e-12));
    CHECK(st.t == 2);
}

TEST_CASE("eve_step: zero gradient with zero momenta leaves parameters intact") {
    EveConfig cfg;
    std::vector<double> theta{0.7, -1.3};
    const std::vector<double> before = theta;
    EveState st = EveState::zeros(2);
    const std::vector<double> g{0.0, 0.0};
    const StepInfo info = eve_step(theta, g, st, cfg);
    CHECK(info.mode == GradientMode::Sparse); // all-zero vector counts as sparse
    CHECK(theta[0] == before[0]);
    CHECK(theta[1] == before[1]);
    CHECK(st.t == 2);
}

TEST_CASE("eve_step: bit-identical across repeated runs") {
    EveConfig cfg;
    auto run_trajectory = [&cfg] {
        Rng rng(777);
        std::vector<double> theta{0.3, -0.8, 1.1};
        EveState st = EveState::zeros(3);
        std::vector<double> g(3);
        for (int step = 0; step < 50; ++step) {
            for (double& gi : g) gi = rng.normal();
            eve_step(theta, g, st, cfg);
        }
        return std::pair{theta, st};
    };
    const auto [theta_a, st_a] = run_trajectory();
    const auto [theta_b, st_b] = run_trajectory();
    CHECK(std::memcmp(theta_a.data(), theta_b.data(),
                      theta_a.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(st_a.v2.data(), st_b.v2.data(),
                      st_a.v2.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(st_a.m_l.data(), st_b.m_l.data(),
                      st_a.m_l.size() * sizeof(double)) == 0);
}

TEST_CASE("eve_step: update direction opposes the mixed momentum") {
    EveConfig cfg;
    Rng rng(2024);
    std::vector<double> theta(5, 0.0);
    EveState st = EveState::zeros(5);
    std::vector<double> g(5);
    for (int step = 0; step < 100; ++step) {
        for (double& gi : g) gi = rng.uniform(-2.0, 2.0);
        EveState probe = st; // recompute m without disturbing the real state
        const std::vector<double> m = update_momenta(probe, g, cfg);
        const std::vector<double> before = theta;
        eve_step(theta, g, st, cfg);
        for (int i = 0; i < 5; ++i) {
            const double delta = theta[i] - before[i];
            if (m[i] > 0.0) {
                CHECK(delta < 0.0);
            } else if (m[i] < 0.0) {
                CHECK(delta > 0.0);
            } else {
                CHECK(delta == 0.0);
            }
        }
    }
}

TEST_CASE("eve_step: beta3 = 1 reproduces Adam's first-moment sequence") {
    EveConfig cfg;
    cfg.beta3 = 1.0; // steppers accept it; only validate() enforces (0,1)
    EveState st = EveState::zeros(2);
    std::vector<double> adam_m(2, 0.0);
    Rng rng(99);
    std::vector<double> g(2);
    for (int step = 0; step < 100; ++step) {
        for (double& gi : g) gi = rng.normal();
        const std::vector<double> m = update_momenta(st, g, cfg);
        for (int i = 0; i < 2; ++i) {
            adam_m[i] = cfg.beta1 * adam_m[i] + (1.0 - cfg.beta1) * g[i];
            CHECK(m[i] == adam_m[i]); // identical arithmetic, bit-exact
        }
    }
}

TEST_CASE("eve_step: non-finite parameters set the divergence flag, no throw") {
    EveConfig cfg;
    std::vector<double> theta{0.0};
    EveState st = EveState::zeros(1);
    st.m_s[0] = 1e308;  // huge momentum
    st.v1[0] = 1e-300;  // tiny velocities keep the effective rates large
    st.v2[0] = 1e-300;
    const std::vector<double> g{0.0};
    const StepInfo info = eve_step(theta, g, st, cfg);
    CHECK_FALSE(info.finite);
    CHECK_FALSE(std::isfinite(theta[0]));
}

TEST_CASE("eve_step: dimension mismatches throw") {
    EveConfig cfg;
    std::vector<double> theta{0.0, 0.0};
    EveState st = EveState::zeros(2);
    const std::vector<double> g{1.0, 2.0, 3.0};
    CHECK_THROWS_AS((void)eve_step(theta, g, st, cfg), ShapeError);

    EveState st3 = EveState::zeros(3);
    const std::vector<double> g2{1.0, 2.0};
    CHECK_THROWS_AS((void)eve_step(theta, g2, st3, cfg), ShapeError);
}

TEST_CASE("EveState: zeros factory and step counter") {
    EveState st = EveState::zeros(4);
    CHECK(st.dim() == 4);
    CHECK(st.t == 1);
    for (int i = 0; i < 4; ++i) {
        CHECK(st.m_s[i] == 0.0);
        CHECK(st.m_l[i] == 0.0);
        CHECK(st.v1[i] == 0.0);
        CHECK(st.v2[i] == 0.0);
    }
    EveConfig cfg;
    std::vector<double> theta(4, 1.0);
    const std::vector<double> g{0.5, -0.5, 0.25, 1.0};
    eve_step(theta, g, st, cfg);
    CHECK(st.t == 2);
    eve_step(theta, g, st, cfg);
    CHECK(st.t == 3);
}
