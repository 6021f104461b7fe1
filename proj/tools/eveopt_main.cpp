#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "eveopt/errors.hpp"
#include "eveopt/harness.hpp"
#include "eveopt/rng.hpp"
#include "eveopt/stats.hpp"
#include "eveopt/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitBadConfig = 2;

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 42;
    int jobs = 0; // 0 = take the config's value
    std::string out_dir;
    std::string optimizer;
    std::vector<double> lr1;
    std::vector<double> lr2;
    std::int64_t steps = 0; // 0 = take the config's value
    bool timing = false;
};

// Builds the effective config: file first (when given), then flag overrides.
eveopt::ExperimentConfig resolve_config(const CommonOptions& opt) {
    eveopt::ExperimentConfig cfg;
    if (!opt.config_path.empty()) {
        cfg = eveopt::load_config(opt.config_path, opt.seed);
    } else {
        cfg.seeds = eveopt::expand_seed(opt.seed, 3);
    }
    if (!opt.optimizer.empty()) cfg.optimizer = opt.optimizer;
    if (!opt.lr1.empty()) cfg.lr1_grid = opt.lr1;
    if (!opt.lr2.empty()) cfg.lr2_grid = opt.lr2;
    if (opt.steps > 0) cfg.steps = opt.steps;
    if (opt.jobs > 0) cfg.jobs = opt.jobs;
    if (opt.timing) cfg.timing = true;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    cfg.validate();
    return cfg;
}

int cmd_verify(bool as_json) {
    const std::vector<eveopt::verify::CheckResult> checks =
        eveopt::verify::run_all_checks();
    if (as_json) {
        std::printf("%s\n", eveopt::verify::checks_to_json(checks).dump(2).c_str());
    } else {
        for (const auto& check : checks) {
            std::printf("%-44s %s  measured=%.6g tol=%.6g%s\n",
                        check.name.c_str(), check.passed ? "PASS" : "FAIL",
                        check.measured, check.tolerance,
                        check.gated ? "" : "  (informational)");
            if (!check.detail.empty()) {
                std::printf("    %s\n", check.detail.c_str());
            }
        }
    }
    return eveopt::verify::all_gated_passed(checks) ? kExitOk : kExitCheckFailed;
}

int cmd_run(const CommonOptions& opt, bool as_json) {
    const eveopt::ExperimentConfig cfg = resolve_config(opt);
    const eveopt::RunRecord rec = eveopt::run_experiment(cfg);
    if (as_json) {
        nlohmann::ordered_json j;
        j["optimizer"] = rec.optimizer;
        j["lr1"] = rec.lr1;
        j["lr2"] = rec.lr2;
        j["seed"] = rec.seed;
        j["steps_completed"] =
            static_cast<std::int64_t>(rec.train_loss.size());
        j["final_loss"] = rec.final_loss();
        j["best_loss"] = rec.best_loss();
        j["diverged"] = rec.diverged;
        j["diverged_at"] = rec.diverged_at;
        j["sparse_steps"] = rec.sparse_steps;
        j["dense_steps"] = rec.dense_steps;
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        std::printf("%s final=%.6g best=%.6g%s\n", rec.optimizer.c_str(),
                    rec.final_loss(), rec.best_loss(),
                    rec.diverged ? " (diverged)" : "");
    }
    if (!opt.out_dir.empty() || !opt.config_path.empty()) {
        const std::vector<eveopt::RunRecord> records{rec};
        const eveopt::SummaryStats stats =
            eveopt::summarize(records, cfg.pooling);
        eveopt::export_sweep(cfg, records, stats, cfg.out_dir);
    }
    return rec.diverged ? kExitCheckFailed : kExitOk;
}

int cmd_sweep(const CommonOptions& opt, bool as_json) {
    const eveopt::ExperimentConfig cfg = resolve_config(opt);
    const std::vector<eveopt::RunRecord> records = eveopt::sweep(cfg);
    const eveopt::SummaryStats stats = eveopt::summarize(records, cfg.pooling);
    eveopt::export_sweep(cfg, records, stats, cfg.out_dir);
    if (as_json) {
        std::printf("%s\n",
                    eveopt::summary_json(cfg, records, stats).dump(2).c_str());
    } else {
        std::printf("%s\n",
                    eveopt::format_stats_block({{cfg.optimizer, stats}}).c_str());
        std::printf("wrote %zu runs to %s\n", records.size(),
                    cfg.out_dir.string().c_str());
    }
    return kExitOk;
}

int cmd_report(const std::string& dir, bool as_json) {
    const nlohmann::ordered_json summary =
        eveopt::report_from_dir(std::filesystem::path(dir));
    if (as_json) {
        std::printf("%s\n", summary.dump(2).c_str());
    } else {
        std::printf("%s  %s\n",
                    summary.at("optimizer").get<std::string>().c_str(),
                    summary.at("table_row").get<std::string>().c_str());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EVE optimizer toolbox: theory checks, experiment runs, "
                 "learning-rate sweeps and report regeneration"};
    app.require_subcommand(1);

    bool as_json = false;
    app.add_flag("--json", as_json, "emit machine-readable JSON on stdout");

    CommonOptions opt;

    CLI::App* verify = app.add_subcommand(
        "verify", "run the built-in theory checks and exit 0 only if all pass");

    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_path,
                        "JSON experiment config file");
        cmd->add_option("--seed", opt.seed,
                        "root seed used when the config has no explicit seed list");
        cmd->add_option("--jobs", opt.jobs, "worker threads for sweeps");
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option("--optimizer", opt.optimizer,
                        "eve | sgd | momentum | adam | amsgrad");
        cmd->add_option("--lr1", opt.lr1,
                        "first learning rate grid (baselines read this one)");
        cmd->add_option("--lr2", opt.lr2, "second learning rate grid (EVE only)");
        cmd->add_option("--steps", opt.steps, "training steps per run");
        cmd->add_flag("--timing", opt.timing,
                      "record wall-clock seconds (breaks byte-reproducibility)");
    };

    CLI::App* run = app.add_subcommand(
        "run", "run a single experiment (first grid cell, first seed)");
    add_run_options(run);

    CLI::App* sweep = app.add_subcommand(
        "sweep", "run the full learning-rate x seed grid and export artifacts");
    add_run_options(sweep);

    std::string report_dir;
    CLI::App* report = app.add_subcommand(
        "report", "regenerate summary.json and plots from an exported sweep");
    report->add_option("dir", report_dir, "sweep output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11 prints its own message; --help lands here with Success
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadConfig;
    }

    try {
        if (verify->parsed()) return cmd_verify(as_json);
        if (run->parsed()) return cmd_run(opt, as_json);
        if (sweep->parsed()) return cmd_sweep(opt, as_json);
        if (report->parsed()) return cmd_report(report_dir, as_json);
        std::fprintf(stderr, "no subcommand given\n");
        return kExitBadConfig;
    } catch (const eveopt::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitBadConfig;
    } catch (const eveopt::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckFailed;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckFailed;
    }
}
