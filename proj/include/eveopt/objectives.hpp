#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eveopt/dataset.hpp"
#include "eveopt/errors.hpp"

namespace eveopt {

// A differentiable objective: eval returns the loss at theta and fills the
// analytic gradient. `step` selects the mini-batch for stochastic objectives
// (deterministically); full-batch objectives ignore it, so eval is a pure
// function of (theta, step).
struct Objective {
    int dim = 0;
    std::string name;
    std::function<double(std::span<const double> theta, std::int64_t step,
                         std::vector<double>& grad)>
        eval;

    // Known optimum, when the surface has one in closed form.
    std::optional<std::vector<double>> argmin;
    std::optional<double> min_value;

    // Held-out metrics; unset when the objective has no dataset split.
    std::function<double(std::span<const double>)> val_loss;
    std::function<double(std::span<const double>)> val_f1;

    // Seeded initial parameter vector.
    std::function<std::vector<double>(std::uint64_t seed)> init;

    double operator()(std::span<const double> theta,
                      std::vector<double>& grad) const {
        return eval(theta, 0, grad);
    }
};

// ---- analytic test surfaces -------------------------------------------------

// f(theta) = 1/2 theta'A theta - b'theta with A symmetric positive definite
// (checked via Cholesky; failure -> ConfigError). Records argmin = A^{-1}b.
// Initial points are N(0, init_scale^2) iid.
Objective make_quadratic(const std::vector<double>& A_row_major,
                         const std::vector<double>& b,
                         double init_scale = 1.0);

// Random SPD quadratic: eigenvalues log-spaced in [eig_lo, eig_hi], random
// orthogonal basis drawn from `seed`. b = 0, so the optimum is the origin.
Objective make_random_spd_quadratic(int dim, double eig_lo, double eig_hi,
                                    std::uint64_t seed,
                                    double init_scale = 1.0);

Objective make_rosenbrock(int dim, double init_scale = 1.0); // dim >= 2
Objective make_rastrigin(int dim, double init_scale = 1.0);
Objective make_beale(double init_scale = 1.0); // dim = 2

enum class TestFunction { Quadratic, Rosenbrock, Rastrigin, Beale };

// Dispatch by kind; Quadratic gets the identity matrix, Beale ignores dim.
Objective make_test_function(TestFunction kind, int dim,
                             double init_scale = 1.0);

// ---- dataset-backed objectives ----------------------------------------------

// Binary logistic regression, theta = [w; bias], mean negative log-likelihood
// over the training split, numerically stable softplus form. Requires binary
// 0/1 labels and both classes present in the training split (ConfigError
// otherwise). val_loss/val_f1 evaluate on the validation split.
Objective make_logistic(const Dataset& ds, double init_scale = 0.5);

// Miniature multi-layer perceptron. widths lists every layer size including
// input and output (>= 1 hidden layer); tanh hidden activations; softmax
// cross-entropy loss. batch = 0 means full-batch; otherwise mini-batches of
// the given size are drawn in a seed-ordered shuffle per epoch.
struct MiniMLPSpec {
    std::vector<int> widths;
    enum class Activation { Tanh } activation = Activation::Tanh;
    enum class Reduction { Mean, Sum } reduction = Reduction::Mean;
    std::uint64_t init_seed = 1234;
    int batch = 0;

    void validate() const; // throws ConfigError
    std::int64_t param_count() const;
};

Objective make_mlp(const MiniMLPSpec& spec, const Dataset& ds);

// Linear least squares over a one-hot-style design constructed from the
// dataset's (n, dim, seed): row i activates round(density*dim) coordinates
// (always including i mod dim, so every coordinate is active somewhere when
// n >= dim), and targets are realizable (y = X w* for a hidden w*). The
// default evaluation is per-example (example = step mod n), so gradients are
// zero off the active set; full_batch = true averages over all rows instead.
// density rounding to zero active features -> ConfigError.
Objective make_sparse_linear(const Dataset& ds, double density,
                             bool full_batch = false);

// Central finite differences: (f(theta + h e_i) - f(theta - h e_i)) / (2h),
// evaluated at the same `step` as the analytic gradient would be.
// h <= 0 -> ConfigError.
std::vector<double> finite_diff_gradient(const Objective& obj,
                                         std::span<const double> theta,
                                         double h, std::int64_t step = 0);

} // namespace eveopt
