#include "eveopt/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <set>

#include "eveopt/rng.hpp"

namespace eveopt {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Deterministic combiner for deriving sub-seeds.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(x);
}

std::vector<double> gaussian_init(int dim, double scale, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> th(dim);
    for (double& v : th) v = rng.normal(0.0, scale);
    return th;
}

// Cholesky factorization A = L L'. Returns false when A is not positive
// definite. A is row-major dim x dim; L is filled lower-triangular.
bool cholesky(const std::vector<double>& A, int dim, std::vector<double>& L) {
    L.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = A[static_cast<std::size_t>(i) * dim + j];
            for (int k = 0; k < j; ++k)
                s -= L[static_cast<std::size_t>(i) * dim + k] *
                     L[static_cast<std::size_t>(j) * dim + k];
            if (i == j) {
                if (!(s > 0.0)) return false;
                L[static_cast<std::size_t>(i) * dim + j] = std::sqrt(s);
            } else {
                L[static_cast<std::size_t>(i) * dim + j] =
                    s / L[static_cast<std::size_t>(j) * dim + j];
            }
        }
    }
    return true;
}

// Solves A x = b given the Cholesky factor L (forward then back substitution).
std::vector<double> cholesky_solve(const std::vector<double>& L, int dim,
                                   const std::vector<double>& b) {
    std::vector<double> y(dim), x(dim);
    for (int i = 0; i < dim; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k)
            s -= L[static_cast<std::size_t>(i) * dim + k] * y[k];
        y[i] = s / L[static_cast<std::size_t>(i) * dim + i];
    }
    for (int i = dim - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < dim; ++k)
            s -= L[static_cast<std::size_t>(k) * dim + i] * x[k];
        x[i] = s / L[static_cast<std::size_t>(i) * dim + i];
    }
    return x;
}

double stable_softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                    : std::exp(z) / (1.0 + std::exp(z));
}

} // namespace

// ---- quadratic ---------------------------------------------------------------

Objective make_quadratic(const std::vector<double>& A, const std::vector<double>& b,
                         double init_scale) {
    const int dim = static_cast<int>(b.size());
    if (dim < 1) throw ConfigError("quadratic: empty b");
    if (A.size() != static_cast<std::size_t>(dim) * dim)
        throw ShapeError("quadratic: A must be dim x dim");
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < i; ++j) {
            const double aij = A[static_cast<std::size_t>(i) * dim + j];
            const double aji = A[static_cast<std::size_t>(j) * dim + i];
            if (std::fabs(aij - aji) > 1e-12 * std::max(1.0, std::fabs(aij)))
                throw ConfigError("quadratic: A is not symmetric");
        }
    std::vector<double> L;
    if (!cholesky(A, dim, L))
        throw ConfigError("quadratic: A is not positive definite");

    Objective obj;
    obj.dim = dim;
    obj.name = "quadratic";
    obj.argmin = cholesky_solve(L, dim, b);
    {
        // min value = 1/2 x*'A x* - b'x* = -1/2 b'x*
        double bx = 0.0;
        for (int i = 0; i < dim; ++i) bx += b[i] * (*obj.argmin)[i];
        obj.min_value = -0.5 * bx;
    }
    obj.eval = [A, b, dim](std::span<const double> th, std::int64_t,
                           std::vector<double>& grad) {
        grad.assign(dim, 0.0);
        double quad = 0.0, lin = 0.0;
        for (int i = 0; i < dim; ++i) {
            double Ath = 0.0;
            for (int j = 0; j < dim; ++j)
                Ath += A[static_cast<std::size_t>(i) * dim + j] * th[j];
            grad[i] = Ath - b[i];
            quad += th[i] * Ath;
            lin += b[i] * th[i];
        }
        return 0.5 * quad - lin;
    };
    obj.init = [dim, init_scale](std::uint64_t seed) {
        return gaussian_init(dim, init_scale, seed);
    };
    return obj;
}

Objective make_random_spd_quadratic(int dim, double eig_lo, double eig_hi,
                                    std::uint64_t seed, double init_scale) {
    if (dim < 1) throw ConfigError("quadratic: dim must be positive");
    if (!(eig_lo > 0.0 && eig_hi >= eig_lo))
        throw ConfigError("quadratic: need 0 < eig_lo <= eig_hi");

    // Eigenvalues log-spaced, eigenvectors from a Gram-Schmidt-orthogonalized
    // Gaussian matrix.
    std::vector<double> eig(dim);
    for (int i = 0; i < dim; ++i) {
        const double f = dim == 1 ? 0.0 : static_cast<double>(i) / (dim - 1);
        eig[i] = std::exp(std::log(eig_lo) + f * (std::log(eig_hi) - std::log(eig_lo)));
    }
    Rng rng(seed);
    std::vector<double> Q(static_cast<std::size_t>(dim) * dim);
    for (double& v : Q) v = rng.normal();
    for (int c = 0; c < dim; ++c) { // orthonormalize columns
        for (int p = 0; p < c; ++p) {
            double dot = 0.0;
            for (int r = 0; r < dim; ++r)
                dot += Q[static_cast<std::size_t>(r) * dim + c] *
                       Q[static_cast<std::size_t>(r) * dim + p];
            for (int r = 0; r < dim; ++r)
                Q[static_cast<std::size_t>(r) * dim + c] -=
                    dot * Q[static_cast<std::size_t>(r) * dim + p];
        }
        double norm = 0.0;
        for (int r = 0; r < dim; ++r) {
            const double v = Q[static_cast<std::size_t>(r) * dim + c];
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (int r = 0; r < dim; ++r)
            Q[static_cast<std::size_t>(r) * dim + c] /= norm;
    }
    std::vector<double> A(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j <= i; ++j) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k)
                s += Q[static_cast<std::size_t>(i) * dim + k] * eig[k] *
                     Q[static_cast<std::size_t>(j) * dim + k];
            A[static_cast<std::size_t>(i) * dim + j] = s;
            A[static_cast<std::size_t>(j) * dim + i] = s;
        }
    return make_quadratic(A, std::vector<double>(dim, 0.0), init_scale);
}

// ---- Rosenbrock / Rastrigin / Beale -------------------------------------------

Objective make_rosenbrock(int dim, double init_scale) {
    if (dim < 2) throw ConfigError("rosenbrock: dim must be >= 2");
    Objective obj;
    obj.dim = dim;
    obj.name = "rosenbrock";
    obj.argmin = std::vector<double>(dim, 1.0);
    obj.min_value = 0.0;
    obj.eval = [dim](std::span<const double> x, std::int64_t,
                     std::vector<double>& grad) {
        grad.assign(dim, 0.0);
        double f = 0.0;
        for (int i = 0; i + 1 < dim; ++i) {
            const double d = x[i + 1] - x[i] * x[i];
            const double e = 1.0 - x[i];
            f += 100.0 * d * d + e * e;
            grad[i] += -400.0 * x[i] * d - 2.0 * e;
            grad[i + 1] += 200.0 * d;
        }
        return f;
    };
    obj.init = [dim, init_scale](std::uint64_t seed) {
        return gaussian_init(dim, init_scale, seed);
    };
    return obj;
}

Objective make_rastrigin(int dim, double init_scale) {
    if (dim < 1) throw ConfigError("rastrigin: dim must be positive");
    Objective obj;
    obj.dim = dim;
    obj.name = "rastrigin";
    obj.argmin = std::vector<double>(dim, 0.0);
    obj.min_value = 0.0;
    obj.eval = [dim](std::span<const double> x, std::int64_t,
                     std::vector<double>& grad) {
        grad.assign(dim, 0.0);
        double f = 10.0 * dim;
        for (int i = 0; i < dim; ++i) {
            f += x[i] * x[i] - 10.0 * std::cos(kTwoPi * x[i]);
            grad[i] = 2.0 * x[i] + 10.0 * kTwoPi * std::sin(kTwoPi * x[i]);
        }
        return f;
    };
    obj.init = [dim, init_scale](std::uint64_t seed) {
        return gaussian_init(dim, init_scale, seed);
    };
    return obj;
}

Objective make_beale(double init_scale) {
    Objective obj;
    obj.dim = 2;
    obj.name = "beale";
    obj.argmin = std::vector<double>{3.0, 0.5};
    obj.min_value = 0.0;
    obj.eval = [](std::span<const double> p, std::int64_t,
                  std::vector<double>& grad) {
        const double x = p[0], y = p[1];
        const double t1 = 1.5 - x + x * y;
        const double t2 = 2.25 - x + x * y * y;
        const double t3 = 2.625 - x + x * y * y * y;
        grad.assign(2, 0.0);
        grad[0] = 2.0 * t1 * (y - 1.0) + 2.0 * t2 * (y * y - 1.0) +
                  2.0 * t3 * (y * y * y - 1.0);
        grad[1] = 2.0 * t1 * x + 4.0 * t2 * x * y + 6.0 * t3 * x * y * y;
        return t1 * t1 + t2 * t2 + t3 * t3;
    };
    obj.init = [init_scale](std::uint64_t seed) {
        return gaussian_init(2, init_scale, seed);
    };
    return obj;
}

Objective make_test_function(TestFunction kind, int dim, double init_scale) {
    switch (kind) {
    case TestFunction::Quadratic: {
        std::vector<double> A(static_cast<std::size_t>(dim) * dim, 0.0);
        for (int i = 0; i < dim; ++i) A[static_cast<std::size_t>(i) * dim + i] = 1.0;
        return make_quadratic(A, std::vector<double>(dim, 0.0), init_scale);
    }
    case TestFunction::Rosenbrock: return make_rosenbrock(dim, init_scale);
    case TestFunction::Rastrigin: return make_rastrigin(dim, init_scale);
    case TestFunction::Beale: return make_beale(init_scale);
    }
    throw ConfigError("unknown test function");
}

// ---- logistic regression -------------------------------------------------------

Objective make_logistic(const Dataset& ds, double init_scale) {
    const int d = ds.dim;
    const int dim = d + 1; // [w; bias]
    if (ds.train_idx.empty()) throw ConfigError("logistic: empty training split");
    bool has0 = false, has1 = false;
    for (int i : ds.train_idx) {
        if (ds.labels[i] == 0) has0 = true;
        else if (ds.labels[i] == 1) has1 = true;
        else throw ConfigError("logistic: labels must be binary 0/1");
    }
    for (int i : ds.val_idx)
        if (ds.labels[i] != 0 && ds.labels[i] != 1)
            throw ConfigError("logistic: labels must be binary 0/1");
    if (!has0 || !has1)
        throw ConfigError("logistic: training split contains a single class");

    // The dataset is shared by the closures; copy once.
    auto data = std::make_shared<const Dataset>(ds);

    auto margin = [d](const Dataset& dset, std::span<const double> th, int i) {
        double z = th[d]; // bias
        const auto x = dset.row(i);
        for (int j = 0; j < d; ++j) z += th[j] * x[j];
        return z;
    };

    Objective obj;
    obj.dim = dim;
    obj.name = "logistic";
    obj.eval = [data, margin, d, dim](std::span<const double> th, std::int64_t,
                                      std::vector<double>& grad) {
        grad.assign(dim, 0.0);
        double loss = 0.0;
        const double inv_n = 1.0 / static_cast<double>(data->train_idx.size());
        for (int i : data->train_idx) {
            const double y = static_cast<double>(data->labels[i]);
            const double z = margin(*data, th, i);
            loss += stable_softplus(z) - y * z;
            const double coef = (sigmoid(z) - y) * inv_n;
            const auto x = data->row(i);
            for (int j = 0; j < d; ++j) grad[j] += coef * x[j];
            grad[d] += coef;
        }
        return loss * inv_n;
    };
    obj.val_loss = [data, margin](std::span<const double> th) {
        if (data->val_idx.empty()) return 0.0;
        double loss = 0.0;
        for (int i : data->val_idx) {
            const double y = static_cast<double>(data->labels[i]);
            const double z = margin(*data, th, i);
            loss += stable_softplus(z) - y * z;
        }
        return loss / static_cast<double>(data->val_idx.size());
    };
    obj.val_f1 = [data, margin](std::span<const double> th) {
        // Binary F1 on the validation split; the empty-denominator corner
        // (no positives anywhere) counts as a perfect score.
        std::int64_t tp = 0, fp = 0, fn = 0;
        for (int i : data->val_idx) {
            const bool pred = margin(*data, th, i) > 0.0;
            const bool truth = data->labels[i] == 1;
            if (pred && truth) ++tp;
            else if (pred && !truth) ++fp;
            else if (!pred && truth) ++fn;
        }
        const std::int64_t den = 2 * tp + fp + fn;
        return den == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
    };
    obj.init = [dim, init_scale](std::uint64_t seed) {
        return gaussian_init(dim, init_scale, seed);
    };
    return obj;
}

// ---- miniature MLP -------------------------------------------------------------

void MiniMLPSpec::validate() const {
    if (widths.size() < 3)
        throw ConfigError("mlp: need at least one hidden layer "
                          "(widths must list input, hidden..., output)");
    for (int w : widths)
        if (w < 1) throw ConfigError("mlp: layer widths must be positive");
    if (param_count() >= 100000)
        throw ConfigError("mlp: parameter count must stay below 1e5");
    if (batch < 0) throw ConfigError("mlp: batch must be >= 0");
}

std::int64_t MiniMLPSpec::param_count() const {
    std::int64_t total = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        total += static_cast<std::int64_t>(widths[l + 1]) * widths[l] + widths[l + 1];
    return total;
}

namespace {

struct MlpLayout {
    std::vector<int> widths;
    std::vector<std::size_t> w_off, b_off; // per layer offsets into theta
    std::size_t total = 0;

    explicit MlpLayout(const std::vector<int>& ws) : widths(ws) {
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < ws.size(); ++l) {
            const auto out = static_cast<std::size_t>(ws[l + 1]);
            const auto in = static_cast<std::size_t>(ws[l]);
            w_off.push_back(off);
            off += out * in;
            b_off.push_back(off);
            off += out;
        }
        total = off;
    }
    std::size_t layers() const { return w_off.size(); }
};

// Forward pass for one example; returns the activations of every layer
// (acts[0] = input, acts.back() = logits).
void mlp_forward(const MlpLayout& lay, std::span<const double> th,
                 std::span<const double> x, std::vector<std::vector<double>>& acts) {
    acts.resize(lay.layers() + 1);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < lay.layers(); ++l) {
        const int out = lay.widths[l + 1];
        const int in = lay.widths[l];
        auto& a = acts[l + 1];
        a.assign(out, 0.0);
        const double* W = th.data() + lay.w_off[l];
        const double* b = th.data() + lay.b_off[l];
        for (int r = 0; r < out; ++r) {
            double z = b[r];
            const double* wrow = W + static_cast<std::size_t>(r) * in;
            for (int c = 0; c < in; ++c) z += wrow[c] * acts[l][c];
            a[r] = l + 1 < lay.layers() ? std::tanh(z) : z;
        }
    }
}

// Softmax cross-entropy of logits against label y; fills dlogits.
double softmax_ce(const std::vector<double>& logits, int y,
                  std::vector<double>& dlogits) {
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - zmax);
    const double lse = zmax + std::log(sum);
    dlogits.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c)
        dlogits[c] = std::exp(logits[c] - zmax) / sum;
    dlogits[static_cast<std::size_t>(y)] -= 1.0;
    return lse - logits[static_cast<std::size_t>(y)];
}

} // namespace

Objective make_mlp(const MiniMLPSpec& spec, const Dataset& ds) {
    spec.validate();
    if (spec.widths.front() != ds.dim)
        throw ShapeError("mlp: input width does not match feature dimension");
    const int classes = ds.num_classes();
    if (spec.widths.back() < classes)
        throw ShapeError("mlp: output width smaller than the number of classes");
    if (ds.train_idx.empty()) throw ConfigError("mlp: empty training split");

    auto data = std::make_shared<const Dataset>(ds);
    auto lay = std::make_shared<const MlpLayout>(spec.widths);
    const bool mean_reduce = spec.reduction == MiniMLPSpec::Reduction::Mean;
    const int batch = spec.batch;
    const std::uint64_t init_seed = spec.init_seed;

    // Deterministic batch schedule: a fresh seed-ordered shuffle per epoch.
    auto batch_indices = [data, batch, init_seed](std::int64_t step) {
        const auto& train = data->train_idx;
        if (batch == 0 || batch >= static_cast<int>(train.size())) return train;
        const auto bpe = static_cast<std::int64_t>(
            (train.size() + batch - 1) / static_cast<std::size_t>(batch));
        const std::int64_t epoch = step / bpe;
        const std::int64_t slot = step % bpe;
        std::vector<int> perm = train;
        Rng rng(mix64(init_seed, static_cast<std::uint64_t>(epoch) + 1));
        rng.shuffle(perm);
        const auto lo = static_cast<std::size_t>(slot) * batch;
        const auto hi = std::min(perm.size(), lo + static_cast<std::size_t>(batch));
        return std::vector<int>(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                perm.begin() + static_cast<std::ptrdiff_t>(hi));
    };

    // Shared forward+backward over a list of examples.
    auto eval_on = [data, lay](std::span<const double> th,
                               const std::vector<int>& idx, bool mean,
                               std::vector<double>* grad) {
        std::vector<std::vector<double>> acts, deltas;
        std::vector<double> dlogits;
        if (grad) grad->assign(lay->total, 0.0);
        double loss = 0.0;
        for (int i : idx) {
            mlp_forward(*lay, th, data->row(i), acts);
            loss += softmax_ce(acts.back(), data->labels[i], dlogits);
            if (!grad) continue;
            // Backward pass, layer by layer.
            deltas.assign(lay->layers() + 1, {});
            deltas[lay->layers()] = dlogits;
            for (std::size_t l = lay->layers(); l-- > 0;) {
                const int out = lay->widths[l + 1];
                const int in = lay->widths[l];
                const double* W = th.data() + lay->w_off[l];
                double* gW = grad->data() + lay->w_off[l];
                double* gb = grad->data() + lay->b_off[l];
                const auto& dz = deltas[l + 1];
                for (int r = 0; r < out; ++r) {
                    gb[r] += dz[r];
                    double* gWrow = gW + static_cast<std::size_t>(r) * in;
                    for (int c = 0; c < in; ++c) gWrow[c] += dz[r] * acts[l][c];
                }
                if (l == 0) continue;
                auto& dprev = deltas[l];
                dprev.assign(in, 0.0);
                for (int r = 0; r < out; ++r) {
                    const double* wrow = W + static_cast<std::size_t>(r) * in;
                    for (int c = 0; c < in; ++c) dprev[c] += wrow[c] * dz[r];
                }
                for (int c = 0; c < in; ++c) {
                    const double a = acts[l][c]; // tanh'(z) = 1 - tanh(z)^2
                    dprev[c] *= 1.0 - a * a;
                }
            }
        }
        if (mean && !idx.empty()) {
            const double inv = 1.0 / static_cast<double>(idx.size());
            loss *= inv;
            if (grad)
                for (double& g : *grad) g *= inv;
        }
        return loss;
    };

    Objective obj;
    obj.dim = static_cast<int>(lay->total);
    obj.name = "mlp";
    obj.eval = [eval_on, batch_indices, mean_reduce](
                   std::span<const double> th, std::int64_t step,
                   std::vector<double>& grad) {
        return eval_on(th, batch_indices(step), mean_reduce, &grad);
    };
    obj.val_loss = [eval_on, data](std::span<const double> th) {
        if (data->val_idx.empty()) return 0.0;
        return eval_on(th, data->val_idx, true, nullptr);
    };
    obj.val_f1 = [data, lay, classes](std::span<const double> th) {
        // Macro-F1 over all classes on the validation split.
        std::vector<std::int64_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
        std::vector<std::vector<double>> acts;
        for (int i : data->val_idx) {
            mlp_forward(*lay, th, data->row(i), acts);
            const auto& logits = acts.back();
            const int pred = static_cast<int>(
                std::max_element(logits.begin(), logits.end()) - logits.begin());
            const int truth = data->labels[i];
            if (pred == truth) ++tp[truth];
            else {
                if (pred < classes) ++fp[pred];
                ++fn[truth];
            }
        }
        double f1_sum = 0.0;
        for (int c = 0; c < classes; ++c) {
            const std::int64_t den = 2 * tp[c] + fp[c] + fn[c];
            f1_sum += den == 0 ? 0.0
                               : 2.0 * static_cast<double>(tp[c]) /
                                     static_cast<double>(den);
        }
        return classes == 0 ? 0.0 : f1_sum / classes;
    };
    obj.init = [lay, init_seed](std::uint64_t seed) {
        // Xavier-uniform weights, zero biases.
        std::vector<double> th(lay->total, 0.0);
        Rng rng(mix64(init_seed, seed));
        for (std::size_t l = 0; l < lay->layers(); ++l) {
            const int out = lay->widths[l + 1];
            const int in = lay->widths[l];
            const double limit = std::sqrt(6.0 / (in + out));
            for (std::size_t k = 0; k < static_cast<std::size_t>(out) * in; ++k)
                th[lay->w_off[l] + k] = rng.uniform(-limit, limit);
        }
        return th;
    };
    return obj;
}

// ---- sparse linear -------------------------------------------------------------

Objective make_sparse_linear(const Dataset& ds, double density, bool full_batch) {
    if (!(density > 0.0 && density < 1.0))
        throw ConfigError("sparse_linear: density must lie in (0,1)");
    const int d = ds.dim;
    const int n = ds.n;
    const int k = static_cast<int>(std::llround(density * d));
    if (k <= 0)
        throw ConfigError("sparse_linear: density yields zero active features");

    // One-hot-style design: row i activates k distinct coordinates, always
    // including i mod d, so coverage is complete once n >= d. The hidden
    // weight vector makes the targets exactly realizable.
    Rng rng(mix64(ds.seed, 0xACE5));
    auto active = std::make_shared<std::vector<std::vector<int>>>();
    active->reserve(n);
    for (int i = 0; i < n; ++i) {
        std::set<int> s{i % d};
        while (static_cast<int>(s.size()) < k)
            s.insert(static_cast<int>(rng.uniform_int(0, d - 1)));
        active->emplace_back(s.begin(), s.end());
    }
    auto w_star = std::make_shared<std::vector<double>>(d);
    for (double& w : *w_star) w = rng.normal();
    auto targets = std::make_shared<std::vector<double>>(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j : (*active)[i]) (*targets)[i] += (*w_star)[j];

    auto example_residual = [active, targets](std::span<const double> th, int i) {
        double pred = 0.0;
        for (int j : (*active)[i]) pred += th[j];
        return pred - (*targets)[i];
    };

    Objective obj;
    obj.dim = d;
    obj.name = "sparse_linear";
    obj.argmin = *w_star;
    obj.min_value = 0.0;
    if (full_batch) {
        obj.eval = [example_residual, active, d, n](std::span<const double> th,
                                                    std::int64_t,
                                                    std::vector<double>& grad) {
            grad.assign(d, 0.0);
            double loss = 0.0;
            const double inv_n = 1.0 / static_cast<double>(n);
            for (int i = 0; i < n; ++i) {
                const double r = example_residual(th, i);
                loss += 0.5 * r * r;
                for (int j : (*active)[i]) grad[j] += r * inv_n;
            }
            return loss * inv_n;
        };
    } else {
        obj.eval = [example_residual, active, d, n](std::span<const double> th,
                                                    std::int64_t step,
                                                    std::vector<double>& grad) {
            const int i = static_cast<int>(step % n);
            grad.assign(d, 0.0);
            const double r = example_residual(th, i);
            for (int j : (*active)[i]) grad[j] = r;
            return 0.5 * r * r;
        };
    }
    // Held-out metric: mean squared residual over the validation rows.
    auto val_idx = std::make_shared<const std::vector<int>>(ds.val_idx);
    obj.val_loss = [example_residual, val_idx](std::span<const double> th) {
        if (val_idx->empty()) return 0.0;
        double loss = 0.0;
        for (int i : *val_idx) {
            const double r = example_residual(th, i);
            loss += 0.5 * r * r;
        }
        return loss / static_cast<double>(val_idx->size());
    };
    obj.init = [d](std::uint64_t seed) { return gaussian_init(d, 1.0, seed); };
    return obj;
}

// ---- finite differences ---------------------------------------------------------

std::vector<double> finite_diff_gradient(const Objective& obj,
                                         std::span<const double> theta,
                                         double h, std::int64_t step) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_gradient: h must be positive");
    if (static_cast<int>(theta.size()) != obj.dim)
        throw ShapeError("finite_diff_gradient: theta dimension mismatch");
    std::vector<double> point(theta.begin(), theta.end());
    std::vector<double> scratch, grad(obj.dim);
    for (int i = 0; i < obj.dim; ++i) {
        const double orig = point[i];
        point[i] = orig + h;
        const double fp = obj.eval(point, step, scratch);
        point[i] = orig - h;
        const double fm = obj.eval(point, step, scratch);
        point[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace eveopt
