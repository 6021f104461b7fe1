#include "eveopt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "eveopt/rng.hpp"

namespace eveopt {

void DatasetSpec::validate() const {
    if (n < 2) throw ConfigError("dataset: need at least 2 examples");
    if (dim < 1) throw ConfigError("dataset: dim must be positive");
    if (kind == Kind::TwoArcs && dim != 2)
        throw ConfigError("dataset: two-arcs generator requires dim = 2");
    if (kind == Kind::Blobs && classes < 2)
        throw ConfigError("dataset: blobs need at least 2 classes");
    if (!(noise >= 0.0)) throw ConfigError("dataset: noise must be nonnegative");
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw ConfigError("dataset: train_frac must lie in (0,1)");
}

int Dataset::num_classes() const {
    int k = 0;
    for (int l : labels) k = std::max(k, l + 1);
    return k;
}

namespace {

void assign_prefix_split(Dataset& ds, double train_frac) {
    const int n_train = std::max(
        1, std::min(ds.n - 1, static_cast<int>(std::llround(train_frac * ds.n))));
    ds.train_idx.resize(n_train);
    std::iota(ds.train_idx.begin(), ds.train_idx.end(), 0);
    ds.val_idx.resize(ds.n - n_train);
    std::iota(ds.val_idx.begin(), ds.val_idx.end(), n_train);
}

} // namespace

Dataset synth_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);

    const int n = spec.n;
    const int d = spec.dim;
    std::vector<double> feats(static_cast<std::size_t>(n) * d);
    std::vector<int> labels(n);

    if (spec.kind == DatasetSpec::Kind::Blobs) {
        // Class centers: on a circle for 2-D, Gaussian at scale `spread`
        // otherwise. Examples are assigned to classes round-robin so every
        // class is populated.
        std::vector<double> centers(static_cast<std::size_t>(spec.classes) * d);
        for (int c = 0; c < spec.classes; ++c) {
            if (d == 2) {
                const double a = 6.283185307179586 * c / spec.classes;
                centers[2 * c + 0] = spec.spread * std::cos(a);
                centers[2 * c + 1] = spec.spread * std::sin(a);
            } else {
                for (int j = 0; j < d; ++j)
                    centers[static_cast<std::size_t>(c) * d + j] =
                        rng.normal(0.0, spec.spread);
            }
        }
        for (int i = 0; i < n; ++i) {
            const int c = i % spec.classes;
            labels[i] = c;
            for (int j = 0; j < d; ++j)
                feats[static_cast<std::size_t>(i) * d + j] =
                    centers[static_cast<std::size_t>(c) * d + j] +
                    rng.normal(0.0, spec.noise);
        }
    } else { // TwoArcs: two interleaved half-circles in 2-D
        for (int i = 0; i < n; ++i) {
            const int c = i % 2;
            labels[i] = c;
            const double t = 3.141592653589793 * rng.uniform();
            double x, y;
            if (c == 0) {
                x = std::cos(t);
                y = std::sin(t);
            } else {
                x = 1.0 - std::cos(t);
                y = 0.5 - std::sin(t);
            }
            feats[static_cast<std::size_t>(i) * 2 + 0] = x + rng.normal(0.0, spec.noise);
            feats[static_cast<std::size_t>(i) * 2 + 1] = y + rng.normal(0.0, spec.noise);
        }
    }

    // Shuffle the row order, then split by prefix: the shuffle realizes a
    // random split while keeping "train rows first" as a file-format
    // invariant.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    Dataset ds;
    ds.n = n;
    ds.dim = d;
    ds.seed = seed;
    ds.features.resize(feats.size());
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int src = order[i];
        ds.labels[i] = labels[src];
        for (int j = 0; j < d; ++j)
            ds.features[static_cast<std::size_t>(i) * d + j] =
                feats[static_cast<std::size_t>(src) * d + j];
    }
    assign_prefix_split(ds, spec.train_frac);
    return ds;
}

void export_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    char buf[40];
    for (int i = 0; i < ds.n; ++i) {
        for (int j = 0; j < ds.dim; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g",
                          ds.features[static_cast<std::size_t>(i) * ds.dim + j]);
            out << buf << ',';
        }
        out << ds.labels[i] << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

Dataset import_dataset_csv(const std::filesystem::path& path, double train_frac) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Dataset ds;
    std::string line;
    int expected_cols = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 2)
            throw IoError(path.string() + ": row with fewer than 2 columns");
        if (expected_cols == -1) {
            expected_cols = static_cast<int>(cells.size());
            ds.dim = expected_cols - 1;
        } else if (static_cast<int>(cells.size()) != expected_cols) {
            throw IoError(path.string() + ": ragged row");
        }
        for (int j = 0; j < ds.dim; ++j)
            ds.features.push_back(std::stod(cells[j]));
        ds.labels.push_back(std::stoi(cells.back()));
        ++ds.n;
    }
    if (ds.n == 0) throw IoError(path.string() + ": empty dataset");
    assign_prefix_split(ds, train_frac);
    return ds;
}

} // namespace eveopt
