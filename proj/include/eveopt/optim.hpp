#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "eveopt/errors.hpp"

namespace eveopt {

// Per-step gradient regime. Selected per parameter vector, not per element.
enum class GradientMode { Sparse, Dense };

const char* to_string(GradientMode mode);

// Hyper-parameters of the EVE update rule.
//
// The update keeps two momenta (a fast EMA with decay beta1, a slow EMA with
// decay beta2) mixed by beta3, and two coupled residual velocities decayed by
// alpha. lr1 scales the effective rate built from v2, lr2 the one built from
// v1. zero_tol/sparse_frac define the sparse-gradient test: a gradient vector
// is Sparse iff strictly more than sparse_frac of its entries have
// |g_i| <= zero_tol.
struct EveConfig {
    double lr1 = 1e-3;
    double lr2 = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double beta3 = 0.5;
    double alpha = 0.999;
    double epsilon = 1e-8;
    double zero_tol = 1e-12;
    double sparse_frac = 0.5;

    // Throws ConfigError if any value is out of range. Called at API
    // boundaries (config loading, experiment validation); the steppers
    // themselves assume a valid config.
    void validate() const;
};

// Optimizer state. All vectors share the parameter dimension; t is the
// 1-based number of the step that will be applied next.
struct EveState {
    std::vector<double> m_s; // short-term momentum (beta1 EMA)
    std::vector<double> m_l; // long-term momentum (beta2 EMA)
    std::vector<double> v1;  // first residual velocity
    std::vector<double> v2;  // second residual velocity
    std::int64_t t = 1;

    static EveState zeros(std::size_t dim);
    std::size_t dim() const { return m_s.size(); }
};

// Outcome flags of one step.
struct StepInfo {
    GradientMode mode = GradientMode::Dense;
    bool finite = true; // false: some updated parameter is NaN/Inf (divergence signal)
};

// Returns Sparse iff the fraction of entries with |g_i| <= cfg.zero_tol is
// strictly greater than cfg.sparse_frac. Throws InvalidGradientError on
// non-finite entries, ShapeError on empty input.
GradientMode classify_gradient(std::span<const double> g, const EveConfig& cfg);

// Replaces state.m_s/m_l by their updated EMAs and returns the mixed momentum
//   m_s' = beta1*m_s + (1-beta1)*g
//   m_l' = beta2*m_l + (1-beta2)*g
//   m    = beta3*m_s' + (1-beta3)*m_l'
// Throws ShapeError on dimension mismatch.
std::vector<double> update_momenta(EveState& state, std::span<const double> g,
                                   const EveConfig& cfg);

// Sequential velocity update, in the listed order of the update rule:
//   v1' = alpha*v1 + c1*(g - sqrt(v2))^2   with the pre-update v2,
//         c1 = (1-alpha) when Sparse, (1-beta2) when Dense
//   v2' = alpha*v2 + (1-alpha)*(g - sqrt(v1'))^2  with the post-update v1'.
// Throws ShapeError on dimension mismatch, StateError on negative input
// velocities.
void update_velocities(EveState& state, std::span<const double> g,
                       GradientMode mode, const EveConfig& cfg);

// Effective per-element learning rates at step t (t >= 1):
//   a1 = lr1 * sqrt(1-alpha^t)/(1-beta1^t) / (sqrt(v2)+epsilon)
//   a2 = lr2 * sqrt(1-beta2^t)/(1-beta1^t) / (sqrt(v1)+epsilon)   (Sparse)
//   a2 = lr2 * sqrt(1-alpha^t)/(1-beta2^t) / (sqrt(v1)+epsilon)   (Dense)
// The mixed alpha/beta numerators are intentional and part of the rule's
// definition, even where an Adam-style rule would use the matching decay.
// Throws ConfigError for t < 1 (the correction factors degenerate to 0/0),
// ShapeError on dimension mismatch.
std::pair<std::vector<double>, std::vector<double>>
effective_rates(std::int64_t t, std::span<const double> v1,
                std::span<const double> v2, GradientMode mode,
                const EveConfig& cfg);

// One full EVE step, composing
//   classify_gradient -> update_momenta -> update_velocities ->
//   effective_rates (with the incoming state.t) -> theta update
//   theta' = theta - m .* (a1 + a2) / 2
// then increments state.t. Pure: identical inputs give bit-identical outputs.
// Returns the gradient mode used and a finite flag (false when any updated
// parameter is non-finite; the step still completes so the caller can flag
// the run as diverged instead of aborting).
StepInfo eve_step(std::vector<double>& theta, std::span<const double> g,
                  EveState& state, const EveConfig& cfg);

} // namespace eveopt
