#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eveopt/baselines.hpp"
#include "eveopt/dataset.hpp"
#include "eveopt/objectives.hpp"
#include "eveopt/optim.hpp"
#include "eveopt/stats.hpp"

#include "json.hpp"

namespace eveopt {

// Which objective a run optimizes, with all instance parameters. Every field
// participates in the manifest so runs are reproducible from it alone.
struct ObjectiveSpec {
    std::string kind = "quadratic"; // quadratic | rosenbrock | rastrigin |
                                    // beale | logistic | mlp | sparse_linear
    int dim = 10;                   // test-surface dimension
    double init_scale = 1.0;        // stddev of the Gaussian initial point

    // quadratic instance (random SPD with log-spaced eigenvalues)
    double eig_lo = 0.5;
    double eig_hi = 2.0;
    std::uint64_t instance_seed = 11;

    // dataset-backed kinds
    DatasetSpec dataset;
    std::uint64_t dataset_seed = 21;

    // sparse_linear
    double density = 0.05;
    bool full_batch = false;

    // mlp
    std::vector<int> hidden{16};
    int batch = 0;
    std::uint64_t mlp_init_seed = 1234;

    void validate() const; // throws ConfigError
};

Objective build_objective(const ObjectiveSpec& spec);

// Full description of one experiment or sweep.
struct ExperimentConfig {
    std::string sweep_id = "sweep";
    ObjectiveSpec objective;
    std::string optimizer = "eve"; // eve | sgd | momentum | adam | amsgrad
    EveConfig eve;
    BaselineConfig baseline;
    std::vector<double> lr1_grid{1e-3}; // primary grid, all optimizers
    std::vector<double> lr2_grid{1e-3}; // secondary grid, EVE only
    std::int64_t steps = 2000;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int val_every = 50;
    double divergence_threshold = 1e12;
    std::string pooling = "series"; // series | final | best
    int jobs = 1;
    bool timing = false; // write wall-clock seconds (breaks byte-reproducibility)
    std::filesystem::path out_dir = "out";

    bool is_eve() const { return optimizer == "eve"; }
    void validate() const; // throws ConfigError
};

// Result of one run. Row t of the CSV stores the training loss measured at
// the parameters entering step t; validation columns are evaluated after the
// step at the cadence (and at the final step).
struct RunRecord {
    std::string optimizer;
    double lr1 = 0.0;
    double lr2 = 0.0;
    std::uint64_t seed = 0;
    std::int64_t steps = 0;

    std::vector<double> train_loss;
    std::vector<std::int64_t> val_step;
    std::vector<double> val_loss;
    std::vector<double> val_f1; // empty unless the objective is a classifier

    bool diverged = false;
    std::int64_t diverged_at = -1; // 1-based step that triggered divergence
    double seconds = 0.0;
    std::uint64_t param_digest = 0; // FNV-1a over the final parameter bytes
    std::int64_t sparse_steps = 0;  // EVE branch counters
    std::int64_t dense_steps = 0;

    double final_loss() const; // last validation value, else last train loss
    double best_loss() const;  // min validation value, else min train loss
};

// Executes one (lr1, lr2, seed) cell. Deterministic given the config.
RunRecord run_single(const ExperimentConfig& cfg, double lr1, double lr2,
                     std::uint64_t seed);

// Single run at the first grid cell and first seed.
RunRecord run_experiment(const ExperimentConfig& cfg);

// Cartesian product lr1 x lr2 x seeds (lr2 collapses to one column for the
// baselines), records in canonical order (grid indices, then seed position)
// regardless of the number of worker threads. Diverged runs are flagged and
// never affect other runs.
std::vector<RunRecord> sweep(const ExperimentConfig& cfg);

// Pools a loss value per `field`:
//   "series" - every validation-loss entry of every record,
//   "final"  - one final loss per record,
//   "best"   - one best loss per record.
// ("final_val_loss"/"best_val_loss" are accepted aliases.)
SummaryStats summarize(std::span<const RunRecord> records,
                       const std::string& field);

// ---- persistence ---------------------------------------------------------------

std::uint64_t fnv1a_digest(std::span<const double> values);

std::string run_csv_name(std::size_t index, const RunRecord& rec);
void write_run_csv(const RunRecord& rec, const std::filesystem::path& path);
// Reads back the series columns (step/train/val/f1) of a run CSV.
RunRecord read_run_csv(const std::filesystem::path& path);

nlohmann::ordered_json summary_json(const ExperimentConfig& cfg,
                                    std::span<const RunRecord> records,
                                    const SummaryStats& stats);

// Writes per-run CSVs, manifest.json, summary.json and the two SVG plots
// (validation curves, final-loss histogram) into `dir`.
void export_sweep(const ExperimentConfig& cfg, std::span<const RunRecord> records,
                  const SummaryStats& stats, const std::filesystem::path& dir);

// Regenerates summary.json and the SVGs from manifest.json plus the run CSVs
// (no experiment is re-executed) and returns the regenerated summary.
// Byte-idempotent: running it twice changes nothing.
nlohmann::ordered_json report_from_dir(const std::filesystem::path& dir);

// ---- config (de)serialization -----------------------------------------------------

nlohmann::ordered_json objective_spec_to_json(const ObjectiveSpec& spec);
ObjectiveSpec objective_spec_from_json(const nlohmann::json& j);

// Strict parser: unknown keys are rejected. `seed_root` feeds the seed
// expansion when the config gives "num_seeds" instead of an explicit list.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  std::uint64_t seed_root);

// Loads and validates a JSON config file; parse errors are reported with a
// line number. Throws ConfigError/IoError.
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::uint64_t seed_root);

} // namespace eveopt
