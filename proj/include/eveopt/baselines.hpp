#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eveopt/errors.hpp"

namespace eveopt {

enum class BaselineKind { SGD, Momentum, Adam, AMSGrad };

const char* to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name); // throws ConfigError

// Hyper-parameters shared by the baseline optimizers. Fields not used by a
// given kind are ignored (SGD uses only lr; Momentum adds mu; Adam/AMSGrad
// use beta1/beta2/epsilon).
struct BaselineConfig {
    BaselineKind kind = BaselineKind::SGD;
    double lr = 1e-3;
    double mu = 0.9;     // classical-momentum coefficient
    double beta1 = 0.9;  // first-moment decay (Adam/AMSGrad)
    double beta2 = 0.999; // second-moment decay (Adam/AMSGrad)
    double epsilon = 1e-8;

    void validate() const; // throws ConfigError
};

// EMA state for the baselines. m doubles as the momentum buffer; v is the
// second moment; v_max is AMSGrad's element-wise running maximum of v and is
// nondecreasing over steps. t is the 1-based next step number.
struct BaselineState {
    std::vector<double> m;
    std::vector<double> v;
    std::vector<double> v_max;
    std::int64_t t = 1;

    static BaselineState zeros(BaselineKind kind, std::size_t dim);
};

// One update step. Returns false when any updated parameter is non-finite
// (divergence signal); the step still completes. Throws ShapeError on
// dimension mismatch, InvalidGradientError on non-finite gradients.
//
//   SGD:      theta -= lr * g
//   Momentum: u = mu*u + g;  theta -= lr * u            (Polyak)
//   Adam:     m = b1*m+(1-b1)*g; v = b2*v+(1-b2)*g^2
//             theta -= lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
//   AMSGrad:  as Adam but with v_max = max(v_max, v) in place of v.
bool baseline_step(std::vector<double>& theta, std::span<const double> g,
                   BaselineState& state, const BaselineConfig& cfg);

} // namespace eveopt
