#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "eveopt/harness.hpp"
#include "eveopt/rng.hpp"

using namespace eveopt;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("eveopt_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// 10-dim quadratic with near-unit eigenvalues and a small start: EVE with
// default rates drives it far below 1e-6 within 2000 steps
ObjectiveSpec gentle_quadratic() {
    ObjectiveSpec spec;
    spec.kind = "quadratic";
    spec.dim = 10;
    spec.eig_lo = 0.9;
    spec.eig_hi = 1.1;
    spec.instance_seed = 11;
    spec.init_scale = 0.25;
    return spec;
}

} // namespace

TEST_CASE("ObjectiveSpec: validation") {
    ObjectiveSpec spec;
    CHECK_NOTHROW(spec.validate());
    ObjectiveSpec bad = spec;
    bad.kind = "banana";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.dim = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.kind = "rosenbrock";
    bad.dim = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.eig_lo = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.kind = "sparse_linear";
    bad.density = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.kind = "mlp";
    bad.hidden = {};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("build_objective: dispatch and dimensions") {
    ObjectiveSpec spec;
    spec.kind = "quadratic";
    spec.dim = 10;
    CHECK(build_objective(spec).dim == 10);

    spec.kind = "rosenbrock";
    spec.dim = 4;
    CHECK(build_objective(spec).dim == 4);

    spec.kind = "beale";
    CHECK(build_objective(spec).dim == 2);

    spec = ObjectiveSpec{};
    spec.kind = "logistic";
    spec.dataset.dim = 3;
    CHECK(build_objective(spec).dim == 4); // weights + bias

    spec = ObjectiveSpec{};
    spec.kind = "mlp";
    spec.dataset.dim = 4;
    spec.dataset.classes = 3;
    spec.hidden = {16};
    CHECK(build_objective(spec).dim == 4 * 16 + 16 + 16 * 3 + 3);

    spec = ObjectiveSpec{};
    spec.kind = "sparse_linear";
    spec.dataset.n = 120;
    spec.dataset.dim = 100;
    spec.density = 0.05;
    CHECK(build_objective(spec).dim == 100);
}

TEST_CASE("ExperimentConfig: validation") {
    ExperimentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    ExperimentConfig bad = cfg;
    bad.optimizer = "newton";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.lr1_grid = {};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.lr1_grid = {-0.1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.lr2_grid = {};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.steps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.seeds = {};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.val_every = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.pooling = "typo";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.jobs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("run_experiment: EVE reaches deep convergence on a gentle quadratic") {
    ExperimentConfig cfg;
    cfg.objective = gentle_quadratic();
    cfg.optimizer = "eve";
    cfg.steps = 2000;
    cfg.seeds = {1};
    const RunRecord rec = run_experiment(cfg);
    CHECK_FALSE(rec.diverged);
    CHECK(rec.final_loss() < 1e-6);
    CHECK(rec.train_loss.size() == 2000);
    CHECK(rec.sparse_steps == 0);
    CHECK(rec.dense_steps == 2000);
    CHECK(rec.seconds == 0.0); // timing is opt-in
}

TEST_CASE("run_experiment: validation cadence and the final step are recorded") {
    ExperimentConfig cfg;
    cfg.objective = gentle_quadratic();
    cfg.steps = 120;
    cfg.seeds = {1};
    cfg.val_every = 50;
    const RunRecord rec = run_experiment(cfg);
    CHECK(rec.val_step == std::vector<std::int64_t>{50, 100, 120});
    // objectives without a held-out split report the objective itself; the
    // value after step t equals the training loss recorded entering step t+1
    CHECK(rec.val_loss[0] == rec.train_loss[50]);
    CHECK(rec.val_loss[1] == rec.train_loss[100]);
    CHECK(rec.final_loss() == rec.val_loss.back());
}

TEST_CASE("run_experiment: SGD above the stability bound is flagged diverged") {
    ExperimentConfig cfg;
    cfg.objective.kind = "quadratic";
    cfg.objective.dim = 6;
    cfg.objective.eig_lo = 0.5;
    cfg.objective.eig_hi = 1.0; // max eigenvalue 1 -> stability needs lr < 2
    cfg.objective.instance_seed = 11;
    cfg.optimizer = "sgd";
    cfg.lr1_grid = {10.0};
    cfg.steps = 300;
    cfg.seeds = {1};
    const RunRecord rec = run_experiment(cfg);
    CHECK(rec.diverged);
    CHECK(rec.diverged_at > 0);
    CHECK(rec.train_loss.size() < 300);
    CHECK(rec.train_loss.size() <= static_cast<std::size_t>(rec.diverged_at));
    // every recorded value stays finite: non-finite losses are never recorded
    for (double loss : rec.train_loss) CHECK(std::isfinite(loss));
    CHECK(rec.lr2 == 0.0); // baselines carry no second learning rate
}

TEST_CASE("run_experiment: identical configs give byte-identical CSVs") {
    ExperimentConfig cfg;
    cfg.objective = gentle_quadratic();
    cfg.steps = 150;
    cfg.seeds = {9};
    const RunRecord a = run_experiment(cfg);
    const RunRecord b = run_experiment(cfg);
    CHECK(a.param_digest == b.param_digest);
    const fs::path dir = fresh_dir("rundet");
    write_run_csv(a, dir / "a.csv");
    write_run_csv(b, dir / "b.csv");
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    fs::remove_all(dir);
}

TEST_CASE("sweep: cardinality and canonical ordering") {
    ExperimentConfig cfg;
    cfg.objective = gentle_quadratic();
    cfg.steps = 5;

    SUBCASE("baseline: lr grid x seeds") {
        cfg.optimizer = "adam";
        cfg.lr1_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
        cfg.seeds = {1, 2, 3};
        const std::vector<RunRecord> records = sweep(cfg);
        REQUIRE(records.size() == 15);
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(records[i].lr1 == cfg.lr1_grid[i / 3]);
            CHECK(records[i].seed == cfg.seeds[i % 3]);
        }
    }

    SUBCASE("eve: lr1 x lr2 x seeds") {
        cfg.optimizer = "eve";
        cfg.lr1_grid = {1e-4, 1e-3, 1e-2, 1e-1};
        cfg.lr2_grid = {1e-4, 1e-3, 1e-2, 1e-1};
        cfg.seeds = {1, 2};
        const std::vector<RunRecord> records = sweep(cfg);
        REQUIRE(records.size() == 32);
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(records[i].lr1 == cfg.lr1_grid[i / 8]);
            CHECK(records[i].lr2 == cfg.lr2_grid[(i / 2) % 4]);
            CHECK(records[i].seed == cfg.seeds[i % 2]);
        }
    }
}

TEST_CASE("sweep: a diverging cell never poisons its neighbors") {
    ExperimentConfig cfg;
    cfg.objective.kind = "quadratic";
    cfg.objective.dim = 6;
    cfg.objective.eig_lo = 0.5;
    cfg.objective.eig_hi = 1.0;
    cfg.optimizer = "sgd";
    cfg.lr1_grid = {0.05, 10.0};
    cfg.steps = 300;
    cfg.seeds = {1};
    const std::vector<RunRecord> records = sweep(cfg);
    REQUIRE(records.size() == 2);
    CHECK_FALSE(records[0].diverged);
    CHECK(records[0].train_loss.size() == 300);
    CHECK(records[1].diverged);
}

TEST_CASE("sweep: worker count does not change any output") {
    ExperimentConfig serial;
    serial.objective = gentle_quadratic();
    serial.optimizer = "eve";
    serial.lr1_grid = {1e-3, 3e-3};
    serial.lr2_grid = {1e-3};
    serial.steps = 200;
    serial.seeds = {1, 2};
    ExperimentConfig parallel = serial;
    parallel.jobs = 4;
    const std::vector<RunRecord> a = sweep(serial);
    const std::vector<RunRecord> b = sweep(parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].train_loss == b[i].train_loss);
        CHECK(a[i].val_loss == b[i].val_loss);
        CHECK(a[i].param_digest == b[i].param_digest);
    }
}

TEST_CASE("summarize: pooling fields and aliases") {
    RunRecord r1;
    r1.val_loss = {4.0, 2.0};
    r1.train_loss = {9.0, 4.0, 2.0};
    RunRecord r2;
    r2.val_loss = {10.0, 8.0};
    r2.train_loss = {12.0, 10.0, 8.0};
    const std::vector<RunRecord> records{r1, r2};

    const SummaryStats series = summarize(records, "series");
    CHECK(series.count == 4);
    CHECK(series.median == doctest::Approx(6.0));
    CHECK(series.min == 2.0);

    const SummaryStats final_stats = summarize(records, "final");
    CHECK(final_stats.count == 2);
    CHECK(final_stats.mean == doctest::Approx(5.0));
    CHECK(summarize(records, "final_val_loss").mean ==
          doctest::Approx(final_stats.mean));

    const SummaryStats best = summarize(records, "best");
    CHECK(best.min == 2.0);
    CHECK(summarize(records, "best_val_loss").count == 2);

    CHECK_THROWS_AS((void)summarize(records, "p99"), ConfigError);
}

TEST_CASE("RunRecord: final and best fall back to train loss; divergence rules") {
    RunRecord rec;
    rec.train_loss = {5.0, 3.0, 4.0};
    CHECK(rec.final_loss() == 4.0);
    CHECK(rec.best_loss() == 3.0);
    rec.val_loss = {2.5, 2.8};
    CHECK(rec.final_loss() == 2.8);
    CHECK(rec.best_loss() == 2.5);
    rec.diverged = true; // diverged runs report the last recorded train loss
    CHECK(rec.final_loss() == 4.0);
}

TEST_CASE("fnv1a_digest: sensitive to values, order and sign bits") {
    const std::vector<double> a{1.0, 2.0};
    const std::vector<double> b{2.0, 1.0};
    CHECK(fnv1a_digest(a) == fnv1a_digest(a));
    CHECK(fnv1a_digest(a) != fnv1a_digest(b));
    CHECK(fnv1a_digest(std::vector<double>{0.0}) !=
          fnv1a_digest(std::vector<double>{-0.0}));
}

TEST_CASE("run CSV round trip: plain and f1-bearing records") {
    SUBCASE("quadratic: no f1 column") {
        ExperimentConfig cfg;
        cfg.objective = gentle_quadratic();
        cfg.steps = 120;
        cfg.seeds = {3};
        const RunRecord rec = run_experiment(cfg);
        const fs::path dir = fresh_dir("csvround");
        write_run_csv(rec, dir / "r.csv");
        const RunRecord back = read_run_csv(dir / "r.csv");
        CHECK(back.train_loss == rec.train_loss);
        CHECK(back.val_step == rec.val_step);
        CHECK(back.val_loss == rec.val_loss);
        CHECK(back.val_f1.empty());
        fs::remove_all(dir);
    }
    SUBCASE("logistic: f1 column present and lossless") {
        ExperimentConfig cfg;
        cfg.objective.kind = "logistic";
        cfg.objective.dataset.n = 60;
        cfg.objective.dataset.dim = 2;
        cfg.optimizer = "adam";
        cfg.lr1_grid = {1e-2};
        cfg.steps = 120;
        cfg.seeds = {3};
        const RunRecord rec = run_experiment(cfg);
        REQUIRE_FALSE(rec.val_f1.empty());
        const fs::path dir = fresh_dir("csvroundf1");
        write_run_csv(rec, dir / "r.csv");
        const std::string text = slurp(dir / "r.csv");
        CHECK(text.rfind("step,train_loss,val_loss,val_f1\n", 0) == 0);
        const RunRecord back = read_run_csv(dir / "r.csv");
        CHECK(back.train_loss == rec.train_loss);
        CHECK(back.val_loss == rec.val_loss);
        CHECK(back.val_f1 == rec.val_f1);
        fs::remove_all(dir);
    }
}

TEST_CASE("read_run_csv: malformed input is rejected") {
    const fs::path dir = fresh_dir("csvbad");
    {
        std::ofstream out(dir / "bad_header.csv");
        out << "step,loss\n1,0.5\n";
    }
    CHECK_THROWS_AS((void)read_run_csv(dir / "bad_header.csv"), IoError);
    {
        std::ofstream out(dir / "bad_steps.csv");
        out << "step,train_loss,val_loss\n1,0.5,\n3,0.4,\n";
    }
    CHECK_THROWS_AS((void)read_run_csv(dir / "bad_steps.csv"), IoError);
    CHECK_THROWS_AS((void)read_run_csv(dir / "missing.csv"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("export_sweep: file inventory and summary schema") {
    ExperimentConfig cfg;
    cfg.sweep_id = "inventory";
    cfg.objective = gentle_quadratic();
    cfg.optimizer = "eve";
    cfg.lr1_grid = {1e-3, 3e-3};
    cfg.lr2_grid = {1e-3};
    cfg.steps = 100;
    cfg.seeds = {1};
    const std::vector<RunRecord> records = sweep(cfg);
    const SummaryStats stats = summarize(records, cfg.pooling);
    const fs::path dir = fresh_dir("export");
    export_sweep(cfg, records, stats, dir);

    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "loss_curves.svg"));
    CHECK(fs::exists(dir / "final_loss_hist.svg"));
    int csvs = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".csv") ++csvs;
    }
    CHECK(csvs == 2);

    const auto summary = nlohmann::ordered_json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("sweep_id") == "inventory");
    CHECK(summary.at("optimizer") == "eve");
    CHECK(summary.at("grid").at("lr1").size() == 2);
    CHECK(summary.at("per_run").size() == 2);
    for (const auto& run : summary.at("per_run")) {
        CHECK(run.contains("csv"));
        CHECK(run.contains("final_loss"));
        CHECK(run.contains("best_loss"));
        CHECK(run.contains("diverged"));
        CHECK(run.contains("seconds"));
        CHECK(run.contains("param_digest"));
    }
    const auto& st = summary.at("stats");
    CHECK(st.at("min").get<double>() <= st.at("median").get<double>());
    CHECK(st.at("std").get<double>() >= 0.0);
    CHECK(summary.at("table_row").is_string());
    const std::string svg = slurp(dir / "loss_curves.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("report_from_dir: byte-idempotent regeneration") {
    ExperimentConfig cfg;
    cfg.sweep_id = "reportable";
    cfg.objective.kind = "logistic";
    cfg.objective.dataset.n = 60;
    cfg.objective.dataset.dim = 2;
    cfg.optimizer = "adam";
    cfg.lr1_grid = {1e-3, 1e-2};
    cfg.steps = 150;
    cfg.seeds = {1, 2};
    const std::vector<RunRecord> records = sweep(cfg);
    const SummaryStats stats = summarize(records, cfg.pooling);
    const fs::path dir = fresh_dir("report");
    export_sweep(cfg, records, stats, dir);

    const std::string summary_before = slurp(dir / "summary.json");
    const std::string curves_before = slurp(dir / "loss_curves.svg");
    const std::string hist_before = slurp(dir / "final_loss_hist.svg");

    const nlohmann::ordered_json regenerated = report_from_dir(dir);
    CHECK(slurp(dir / "summary.json") == summary_before);
    CHECK(slurp(dir / "loss_curves.svg") == curves_before);
    CHECK(slurp(dir / "final_loss_hist.svg") == hist_before);
    CHECK(regenerated ==
          nlohmann::ordered_json::parse(summary_before)); // same content
    fs::remove_all(dir);
}

TEST_CASE("report_from_dir: missing manifest is an error") {
    const fs::path dir = fresh_dir("reportmissing");
    CHECK_THROWS_AS((void)report_from_dir(dir), Error);
    fs::remove_all(dir);
}

TEST_CASE("config_from_json: defaults, overrides and rejection") {
    SUBCASE("empty object takes defaults and expands the seed root") {
        const ExperimentConfig cfg =
            config_from_json(nlohmann::json::object(), 42);
        CHECK(cfg.optimizer == "eve");
        CHECK(cfg.steps == 2000);
        CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
    }
    SUBCASE("num_seeds expands from the root deterministically") {
        nlohmann::json j;
        j["num_seeds"] = 4;
        const ExperimentConfig cfg = config_from_json(j, 42);
        CHECK(cfg.seeds == expand_seed(42, 4));
        CHECK(cfg.seeds.size() == 4);
    }
    SUBCASE("explicit seeds win over the root") {
        nlohmann::json j;
        j["seeds"] = {7, 8};
        const ExperimentConfig cfg = config_from_json(j, 42);
        CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8});
    }
    SUBCASE("seeds and num_seeds together are rejected") {
        nlohmann::json j;
        j["seeds"] = {7};
        j["num_seeds"] = 2;
        CHECK_THROWS_AS((void)config_from_json(j, 42), ConfigError);
    }
    SUBCASE("unknown keys are rejected with the key name") {
        nlohmann::json j;
        j["learning_rate"] = 0.1;
        try {
            (void)config_from_json(j, 42);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("learning_rate") !=
                  std::string::npos);
        }
    }
    SUBCASE("nested eve and objective blocks apply") {
        nlohmann::json j;
        j["optimizer"] = "eve";
        j["eve"]["beta3"] = 0.25;
        j["eve"]["alpha"] = 0.9;
        j["objective"]["kind"] = "rastrigin";
        j["objective"]["dim"] = 6;
        j["lr1_grid"] = {1e-3};
        j["lr2_grid"] = {1e-4};
        const ExperimentConfig cfg = config_from_json(j, 1);
        CHECK(cfg.eve.beta3 == 0.25);
        CHECK(cfg.eve.alpha == 0.9);
        CHECK(cfg.objective.kind == "rastrigin");
        CHECK(cfg.objective.dim == 6);
        CHECK(cfg.lr2_grid == std::vector<double>{1e-4});
    }
    SUBCASE("invalid values fail validation at load time") {
        nlohmann::json j;
        j["steps"] = 0;
        CHECK_THROWS_AS((void)config_from_json(j, 42), ConfigError);
        nlohmann::json j2;
        j2["optimizer"] = "bogus";
        CHECK_THROWS_AS((void)config_from_json(j2, 42), ConfigError);
        nlohmann::json j3;
        j3["eve"]["beta1"] = 1.5;
        CHECK_THROWS_AS((void)config_from_json(j3, 42), ConfigError);
    }
}

TEST_CASE("objective_spec json round trip") {
    ObjectiveSpec spec;
    spec.kind = "sparse_linear";
    spec.dataset.n = 80;
    spec.dataset.dim = 64;
    spec.dataset_seed = 5;
    spec.density = 0.1;
    const nlohmann::ordered_json j = objective_spec_to_json(spec);
    const ObjectiveSpec back = objective_spec_from_json(j);
    CHECK(back.kind == spec.kind);
    CHECK(back.dataset.n == spec.dataset.n);
    CHECK(back.dataset.dim == spec.dataset.dim);
    CHECK(back.dataset_seed == spec.dataset_seed);
    CHECK(back.density == spec.density);
}

TEST_CASE("expand_seed: deterministic, distinct per slot and per root") {
    const std::vector<std::uint64_t> a = expand_seed(42, 5);
    const std::vector<std::uint64_t> b = expand_seed(42, 5);
    const std::vector<std::uint64_t> c = expand_seed(43, 5);
    CHECK(a == b);
    CHECK(a != c);
    const std::set<std::uint64_t> uniq(a.begin(), a.end());
    CHECK(uniq.size() == 5);
}
