#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eveopt/errors.hpp"

namespace eveopt {

// Parameters of the synthetic dataset generators.
struct DatasetSpec {
    enum class Kind { Blobs, TwoArcs };

    Kind kind = Kind::Blobs;
    int n = 200;          // number of examples
    int dim = 2;          // feature dimension (TwoArcs requires 2)
    int classes = 2;      // Blobs only
    double noise = 0.15;  // per-coordinate Gaussian jitter
    double spread = 2.0;  // distance scale of the class centers (Blobs)
    double train_frac = 0.8;

    void validate() const; // throws ConfigError
};

// In-memory dataset: row-major features, integer labels, train/validation
// index split. Rows are emitted in a seed-shuffled order with the training
// rows first, so a prefix split reproduces the generated split exactly (this
// is what makes the CSV round-trip preserve splits).
struct Dataset {
    std::vector<double> features; // n * dim, row-major
    std::vector<int> labels;      // n
    int n = 0;
    int dim = 0;
    std::uint64_t seed = 0; // generation seed (0 for imported data)
    std::vector<int> train_idx;
    std::vector<int> val_idx;

    std::span<const double> row(int i) const {
        return {features.data() + static_cast<std::size_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
    int num_classes() const;
};

// Deterministic generation: the same (spec, seed) yields bit-identical
// datasets.
Dataset synth_dataset(const DatasetSpec& spec, std::uint64_t seed);

// CSV persistence: one row per example, features first, label last, %.17g
// formatting (lossless round-trip). Import re-derives the split as a prefix
// split with the given train fraction.
void export_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset import_dataset_csv(const std::filesystem::path& path,
                           double train_frac = 0.8);

} // namespace eveopt
