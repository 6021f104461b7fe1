#include "eveopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <thread>
#include <utility>

#include "eveopt/rng.hpp"
#include "eveopt/svg.hpp"

namespace eveopt {

namespace {

std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt_g4(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* dataset_kind_name(DatasetSpec::Kind kind) {
    return kind == DatasetSpec::Kind::Blobs ? "blobs" : "two_arcs";
}

DatasetSpec::Kind dataset_kind_from_name(const std::string& name) {
    if (name == "blobs") return DatasetSpec::Kind::Blobs;
    if (name == "two_arcs") return DatasetSpec::Kind::TwoArcs;
    throw ConfigError("unknown dataset kind: " + name);
}

const std::vector<std::string>& objective_kinds() {
    static const std::vector<std::string> kinds = {
        "quadratic", "rosenbrock", "rastrigin",    "beale",
        "logistic",  "mlp",        "sparse_linear"};
    return kinds;
}

bool objective_uses_dataset(const std::string& kind) {
    return kind == "logistic" || kind == "mlp" || kind == "sparse_linear";
}

// Normalizes a pooling name to "series", "final" or "best".
std::string normalize_pooling(const std::string& pooling) {
    if (pooling == "series") return "series";
    if (pooling == "final" || pooling == "final_val_loss") return "final";
    if (pooling == "best" || pooling == "best_val_loss") return "best";
    throw ConfigError("unknown pooling: " + pooling +
                      " (expected series, final or best)");
}

void check_keys(const nlohmann::json& j, const std::string& context,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        throw ConfigError(context + " must be a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown key '" + it.key() + "' in " + context);
        }
    }
}

std::string hex_digest(std::uint64_t digest) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(digest));
    return buf;
}

std::uint64_t digest_from_hex(const std::string& hex) {
    return std::stoull(hex, nullptr, 16);
}

std::string run_label(const RunRecord& rec) {
    char buf[128];
    if (rec.optimizer == "eve") {
        std::snprintf(buf, sizeof(buf), "lr1=%.4g lr2=%.4g seed=%llu", rec.lr1,
                      rec.lr2, static_cast<unsigned long long>(rec.seed));
    } else {
        std::snprintf(buf, sizeof(buf), "%s lr=%.4g seed=%llu",
                      rec.optimizer.c_str(), rec.lr1,
                      static_cast<unsigned long long>(rec.seed));
    }
    return buf;
}

// Shared by export_sweep and report_from_dir so regenerated plots are
// byte-identical to the originals.
void write_sweep_plots(const std::string& sweep_id,
                       std::span<const RunRecord> records,
                       const std::filesystem::path& dir) {
    std::vector<SvgSeries> curves;
    for (const RunRecord& rec : records) {
        if (rec.val_step.empty()) continue;
        SvgSeries s;
        s.label = run_label(rec);
        s.x.reserve(rec.val_step.size());
        for (std::int64_t step : rec.val_step) {
            s.x.push_back(static_cast<double>(step));
        }
        s.y = rec.val_loss;
        curves.push_back(std::move(s));
    }
    write_text_file(dir / "loss_curves.svg",
                    svg_line_plot(sweep_id + ": validation loss", curves,
                                  "step", "loss"));

    std::vector<double> finals;
    for (const RunRecord& rec : records) {
        double f = rec.final_loss();
        if (std::isfinite(f)) finals.push_back(f);
    }
    write_text_file(dir / "final_loss_hist.svg",
                    svg_histogram(sweep_id + ": final loss", finals, 12,
                                  "final loss"));
}

nlohmann::ordered_json run_scalars_json(const RunRecord& rec,
                                        const std::string& csv_name) {
    nlohmann::ordered_json j;
    j["csv"] = csv_name;
    j["optimizer"] = rec.optimizer;
    j["lr1"] = rec.lr1;
    j["lr2"] = rec.lr2;
    j["seed"] = rec.seed;
    j["steps"] = rec.steps;
    j["diverged"] = rec.diverged;
    j["diverged_at"] = rec.diverged_at;
    j["sparse_steps"] = rec.sparse_steps;
    j["dense_steps"] = rec.dense_steps;
    j["seconds"] = rec.seconds;
    j["param_digest"] = hex_digest(rec.param_digest);
    return j;
}

std::string json_text(const nlohmann::ordered_json& j) {
    return j.dump(2) + "\n";
}

// The core training loop. The objective is passed in so sweep() can build it
// once and share it across worker threads (evaluation is stateless).
RunRecord run_loop(const ExperimentConfig& cfg, const Objective& obj,
                   double lr1, double lr2, std::uint64_t seed) {
    RunRecord rec;
    rec.optimizer = cfg.optimizer;
    rec.lr1 = lr1;
    rec.lr2 = cfg.is_eve() ? lr2 : 0.0;
    rec.seed = seed;
    rec.steps = cfg.steps;

    if (!obj.eval || !obj.init) {
        throw ConfigError("objective is missing eval or init");
    }

    const bool eve = cfg.is_eve();
    EveConfig ecfg = cfg.eve;
    BaselineConfig bcfg = cfg.baseline;
    if (eve) {
        ecfg.lr1 = lr1;
        ecfg.lr2 = lr2;
        ecfg.validate();
    } else {
        bcfg.kind = baseline_kind_from_string(cfg.optimizer);
        bcfg.lr = lr1;
        bcfg.validate();
    }

    std::vector<double> theta = obj.init(seed);
    const int dim = static_cast<int>(theta.size());
    EveState estate = EveState::zeros(dim);
    BaselineState bstate =
        eve ? BaselineState{} : BaselineState::zeros(bcfg.kind, dim);

    const bool has_val = static_cast<bool>(obj.val_loss);
    const bool has_f1 = static_cast<bool>(obj.val_f1);
    std::vector<double> grad(theta.size());
    std::vector<double> scratch(theta.size());

    const auto t_begin = std::chrono::steady_clock::now();
    for (std::int64_t s = 0; s < cfg.steps; ++s) {
        const std::int64_t t = s + 1;
        const double loss = obj.eval(theta, s, grad);
        if (!std::isfinite(loss)) {
            // never recorded: the series ends at the last finite loss
            rec.diverged = true;
            rec.diverged_at = t;
            break;
        }
        rec.train_loss.push_back(loss);
        if (loss > cfg.divergence_threshold) {
            rec.diverged = true;
            rec.diverged_at = t;
            break;
        }

        bool finite = true;
        if (eve) {
            const StepInfo info = eve_step(theta, grad, estate, ecfg);
            finite = info.finite;
            if (info.mode == GradientMode::Sparse) {
                ++rec.sparse_steps;
            } else {
                ++rec.dense_steps;
            }
        } else {
            finite = baseline_step(theta, grad, bstate, bcfg);
        }
        if (!finite) {
            rec.diverged = true;
            rec.diverged_at = t;
            break;
        }

        if (t % cfg.val_every == 0 || t == cfg.steps) {
            rec.val_step.push_back(t);
            if (has_val) {
                rec.val_loss.push_back(obj.val_loss(theta));
                if (has_f1) rec.val_f1.push_back(obj.val_f1(theta));
            } else {
                // no held-out split: report the objective at the new iterate
                rec.val_loss.push_back(obj(theta, scratch));
            }
        }
    }
    const auto t_end = std::chrono::steady_clock::now();
    if (cfg.timing) {
        rec.seconds = std::chrono::duration<double>(t_end - t_begin).count();
    }
    rec.param_digest = fnv1a_digest(theta);
    return rec;
}

} // namespace

// ---- specs -------------------------------------------------------------------

void ObjectiveSpec::validate() const {
    const auto& kinds = objective_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
        throw ConfigError("unknown objective kind: " + kind);
    }
    if (dim < 1) {
        throw ConfigError("objective dim must be >= 1");
    }
    if (kind == "rosenbrock" && dim < 2) {
        throw ConfigError("rosenbrock requires dim >= 2");
    }
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
        throw ConfigError("init_scale must be finite and >= 0");
    }
    if (kind == "quadratic") {
        if (!(eig_lo > 0.0) || !(eig_hi >= eig_lo)) {
            throw ConfigError("quadratic requires 0 < eig_lo <= eig_hi");
        }
    }
    if (objective_uses_dataset(kind)) {
        dataset.validate();
        if (kind == "logistic" && dataset.kind == DatasetSpec::Kind::Blobs &&
            dataset.classes != 2) {
            throw ConfigError("logistic requires a binary dataset");
        }
        if (kind == "sparse_linear" && !(density > 0.0 && density <= 1.0)) {
            throw ConfigError("sparse_linear density must be in (0, 1]");
        }
        if (kind == "mlp") {
            if (hidden.empty()) {
                throw ConfigError("mlp requires at least one hidden width");
            }
            for (int w : hidden) {
                if (w < 1) throw ConfigError("mlp hidden widths must be >= 1");
            }
            if (batch < 0) throw ConfigError("mlp batch must be >= 0");
        }
    }
}

Objective build_objective(const ObjectiveSpec& spec) {
    spec.validate();
    if (spec.kind == "quadratic") {
        return make_random_spd_quadratic(spec.dim, spec.eig_lo, spec.eig_hi,
                                         spec.instance_seed, spec.init_scale);
    }
    if (spec.kind == "rosenbrock") {
        return make_rosenbrock(spec.dim, spec.init_scale);
    }
    if (spec.kind == "rastrigin") {
        return make_rastrigin(spec.dim, spec.init_scale);
    }
    if (spec.kind == "beale") {
        return make_beale(spec.init_scale);
    }
    const Dataset ds = synth_dataset(spec.dataset, spec.dataset_seed);
    if (spec.kind == "logistic") {
        return make_logistic(ds, spec.init_scale);
    }
    if (spec.kind == "sparse_linear") {
        return make_sparse_linear(ds, spec.density, spec.full_batch);
    }
    // mlp
    MiniMLPSpec mlp;
    mlp.widths.push_back(ds.dim);
    mlp.widths.insert(mlp.widths.end(), spec.hidden.begin(), spec.hidden.end());
    mlp.widths.push_back(std::max(2, ds.num_classes()));
    mlp.init_seed = spec.mlp_init_seed;
    mlp.batch = spec.batch;
    return make_mlp(mlp, ds);
}

void ExperimentConfig::validate() const {
    if (sweep_id.empty()) {
        throw ConfigError("sweep_id must not be empty");
    }
    objective.validate();
    if (!is_eve()) {
        baseline_kind_from_string(optimizer); // throws on unknown names
    }
    if (lr1_grid.empty()) {
        throw ConfigError("lr1_grid must not be empty");
    }
    for (double lr : lr1_grid) {
        if (!(lr > 0.0) || !std::isfinite(lr)) {
            throw ConfigError("lr1_grid entries must be finite and > 0");
        }
    }
    if (is_eve()) {
        if (lr2_grid.empty()) {
            throw ConfigError("lr2_grid must not be empty");
        }
        for (double lr : lr2_grid) {
            if (!(lr > 0.0) || !std::isfinite(lr)) {
                throw ConfigError("lr2_grid entries must be finite and > 0");
            }
        }
        EveConfig probe = eve;
        probe.lr1 = lr1_grid.front();
        probe.lr2 = lr2_grid.front();
        probe.validate();
    } else {
        BaselineConfig probe = baseline;
        probe.kind = baseline_kind_from_string(optimizer);
        probe.lr = lr1_grid.front();
        probe.validate();
    }
    if (steps < 1) {
        throw ConfigError("steps must be >= 1");
    }
    if (seeds.empty()) {
        throw ConfigError("seeds must not be empty");
    }
    if (val_every < 1) {
        throw ConfigError("val_every must be >= 1");
    }
    if (!(divergence_threshold > 0.0)) {
        throw ConfigError("divergence_threshold must be > 0");
    }
    normalize_pooling(pooling);
    if (jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
}

// ---- records -----------------------------------------------------------------

double RunRecord::final_loss() const {
    if (diverged) {
        if (!train_loss.empty()) return train_loss.back();
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (!val_loss.empty()) return val_loss.back();
    if (!train_loss.empty()) return train_loss.back();
    return std::numeric_limits<double>::quiet_NaN();
}

double RunRecord::best_loss() const {
    const std::vector<double>& src = val_loss.empty() ? train_loss : val_loss;
    if (src.empty()) return std::numeric_limits<double>::quiet_NaN();
    return *std::min_element(src.begin(), src.end());
}

RunRecord run_single(const ExperimentConfig& cfg, double lr1, double lr2,
                     std::uint64_t seed) {
    cfg.validate();
    const Objective obj = build_objective(cfg.objective);
    return run_loop(cfg, obj, lr1, lr2, seed);
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const double lr2 = cfg.is_eve() ? cfg.lr2_grid.front() : 0.0;
    return run_single(cfg, cfg.lr1_grid.front(), lr2, cfg.seeds.front());
}

std::vector<RunRecord> sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const Objective obj = build_objective(cfg.objective);

    struct Cell {
        double lr1;
        double lr2;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    const std::vector<double> lr2s =
        cfg.is_eve() ? cfg.lr2_grid : std::vector<double>{0.0};
    for (double lr1 : cfg.lr1_grid) {
        for (double lr2 : lr2s) {
            for (std::uint64_t seed : cfg.seeds) {
                cells.push_back({lr1, lr2, seed});
            }
        }
    }

    std::vector<RunRecord> records(cells.size());
    const int jobs = std::max(
        1, std::min<int>(cfg.jobs, static_cast<int>(cells.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            records[i] = run_loop(cfg, obj, cells[i].lr1, cells[i].lr2,
                                  cells[i].seed);
        }
        return records;
    }

    // Worker threads claim cells by index; each writes only its own slot, so
    // the result order is canonical no matter how work interleaves.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (;;) {
                    const std::size_t i =
                        next.fetch_add(1, std::memory_order_relaxed);
                    if (i >= cells.size()) return;
                    records[i] = run_loop(cfg, obj, cells[i].lr1, cells[i].lr2,
                                          cells[i].seed);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (std::thread& worker : workers) {
        worker.join();
    }
    for (const std::exception_ptr& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return records;
}

SummaryStats summarize(std::span<const RunRecord> records,
                       const std::string& field) {
    const std::string pooling = normalize_pooling(field);
    std::vector<double> pool;
    for (const RunRecord& rec : records) {
        if (pooling == "series") {
            pool.insert(pool.end(), rec.val_loss.begin(), rec.val_loss.end());
        } else if (pooling == "final") {
            pool.push_back(rec.final_loss());
        } else {
            pool.push_back(rec.best_loss());
        }
    }
    return summarize_values(pool);
}

// ---- persistence ---------------------------------------------------------------

std::uint64_t fnv1a_digest(std::span<const double> values) {
    std::uint64_t hash = 14695981039346656037ull;
    for (double value : values) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
        for (int shift = 0; shift < 64; shift += 8) {
            hash ^= (bits >> shift) & 0xffull;
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

std::string run_csv_name(std::size_t index, const RunRecord& rec) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "run-%03zu_lr1-%s_lr2-%s_seed-%llu.csv",
                  index, fmt_g4(rec.lr1).c_str(), fmt_g4(rec.lr2).c_str(),
                  static_cast<unsigned long long>(rec.seed));
    return buf;
}

void write_run_csv(const RunRecord& rec, const std::filesystem::path& path) {
    const bool has_f1 = !rec.val_f1.empty();
    std::string text = has_f1 ? "step,train_loss,val_loss,val_f1\n"
                              : "step,train_loss,val_loss\n";
    std::size_t vi = 0;
    for (std::size_t i = 0; i < rec.train_loss.size(); ++i) {
        const std::int64_t step = static_cast<std::int64_t>(i) + 1;
        text += std::to_string(step);
        text += ',';
        text += fmt_g17(rec.train_loss[i]);
        text += ',';
        if (vi < rec.val_step.size() && rec.val_step[vi] == step) {
            text += fmt_g17(rec.val_loss[vi]);
            if (has_f1) {
                text += ',';
                text += fmt_g17(rec.val_f1[vi]);
            }
            ++vi;
        } else if (has_f1) {
            text += ',';
        }
        text += '\n';
    }
    write_text_file(path, text);
}

RunRecord read_run_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("empty run CSV: " + path.string());
    }
    bool has_f1 = false;
    if (line == "step,train_loss,val_loss,val_f1") {
        has_f1 = true;
    } else if (line != "step,train_loss,val_loss") {
        throw IoError("unexpected run CSV header in " + path.string() + ": " +
                      line);
    }

    RunRecord rec;
    std::int64_t expected_step = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t begin = 0;
        while (true) {
            const std::size_t comma = line.find(',', begin);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(begin));
                break;
            }
            cells.push_back(line.substr(begin, comma - begin));
            begin = comma + 1;
        }
        if (cells.size() < 3 || cells.size() > 4) {
            throw IoError("malformed row in " + path.string() + ": " + line);
        }
        const std::int64_t step = std::stoll(cells[0]);
        if (step != expected_step) {
            throw IoError("non-contiguous steps in " + path.string());
        }
        ++expected_step;
        rec.train_loss.push_back(std::strtod(cells[1].c_str(), nullptr));
        if (!cells[2].empty()) {
            rec.val_step.push_back(step);
            rec.val_loss.push_back(std::strtod(cells[2].c_str(), nullptr));
            if (has_f1) {
                if (cells.size() < 4 || cells[3].empty()) {
                    throw IoError("missing val_f1 cell in " + path.string());
                }
                rec.val_f1.push_back(std::strtod(cells[3].c_str(), nullptr));
            }
        }
    }
    return rec;
}

nlohmann::ordered_json objective_spec_to_json(const ObjectiveSpec& spec) {
    nlohmann::ordered_json j;
    j["kind"] = spec.kind;
    j["dim"] = spec.dim;
    j["init_scale"] = spec.init_scale;
    if (spec.kind == "quadratic") {
        j["eig_lo"] = spec.eig_lo;
        j["eig_hi"] = spec.eig_hi;
        j["instance_seed"] = spec.instance_seed;
    }
    if (objective_uses_dataset(spec.kind)) {
        nlohmann::ordered_json d;
        d["kind"] = dataset_kind_name(spec.dataset.kind);
        d["n"] = spec.dataset.n;
        d["dim"] = spec.dataset.dim;
        d["classes"] = spec.dataset.classes;
        d["noise"] = spec.dataset.noise;
        d["spread"] = spec.dataset.spread;
        d["train_frac"] = spec.dataset.train_frac;
        j["dataset"] = std::move(d);
        j["dataset_seed"] = spec.dataset_seed;
    }
    if (spec.kind == "sparse_linear") {
        j["density"] = spec.density;
        j["full_batch"] = spec.full_batch;
    }
    if (spec.kind == "mlp") {
        j["hidden"] = spec.hidden;
        j["batch"] = spec.batch;
        j["mlp_init_seed"] = spec.mlp_init_seed;
    }
    return j;
}

ObjectiveSpec objective_spec_from_json(const nlohmann::json& j) {
    check_keys(j, "objective",
               {"kind", "dim", "init_scale", "eig_lo", "eig_hi",
                "instance_seed", "dataset", "dataset_seed", "density",
                "full_batch", "hidden", "batch", "mlp_init_seed"});
    ObjectiveSpec spec;
    spec.kind = j.value("kind", spec.kind);
    spec.dim = j.value("dim", spec.dim);
    spec.init_scale = j.value("init_scale", spec.init_scale);
    spec.eig_lo = j.value("eig_lo", spec.eig_lo);
    spec.eig_hi = j.value("eig_hi", spec.eig_hi);
    spec.instance_seed = j.value("instance_seed", spec.instance_seed);
    if (j.contains("dataset")) {
        const nlohmann::json& d = j.at("dataset");
        check_keys(d, "objective.dataset",
                   {"kind", "n", "dim", "classes", "noise", "spread",
                    "train_frac"});
        if (d.contains("kind")) {
            spec.dataset.kind =
                dataset_kind_from_name(d.at("kind").get<std::string>());
        }
        spec.dataset.n = d.value("n", spec.dataset.n);
        spec.dataset.dim = d.value("dim", spec.dataset.dim);
        spec.dataset.classes = d.value("classes", spec.dataset.classes);
        spec.dataset.noise = d.value("noise", spec.dataset.noise);
        spec.dataset.spread = d.value("spread", spec.dataset.spread);
        spec.dataset.train_frac = d.value("train_frac", spec.dataset.train_frac);
    }
    spec.dataset_seed = j.value("dataset_seed", spec.dataset_seed);
    spec.density = j.value("density", spec.density);
    spec.full_batch = j.value("full_batch", spec.full_batch);
    if (j.contains("hidden")) {
        spec.hidden = j.at("hidden").get<std::vector<int>>();
    }
    spec.batch = j.value("batch", spec.batch);
    spec.mlp_init_seed = j.value("mlp_init_seed", spec.mlp_init_seed);
    return spec;
}

namespace {

nlohmann::ordered_json eve_config_json(const EveConfig& cfg) {
    nlohmann::ordered_json j;
    j["lr1"] = cfg.lr1;
    j["lr2"] = cfg.lr2;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["beta3"] = cfg.beta3;
    j["alpha"] = cfg.alpha;
    j["epsilon"] = cfg.epsilon;
    j["zero_tol"] = cfg.zero_tol;
    j["sparse_frac"] = cfg.sparse_frac;
    return j;
}

nlohmann::ordered_json baseline_config_json(const BaselineConfig& cfg) {
    nlohmann::ordered_json j;
    j["lr"] = cfg.lr;
    j["mu"] = cfg.mu;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["epsilon"] = cfg.epsilon;
    return j;
}

nlohmann::ordered_json manifest_json(const ExperimentConfig& cfg,
                                     std::span<const RunRecord> records) {
    nlohmann::ordered_json j;
    j["sweep_id"] = cfg.sweep_id;
    j["optimizer"] = cfg.optimizer;
    j["objective"] = objective_spec_to_json(cfg.objective);
    j["eve"] = eve_config_json(cfg.eve);
    j["baseline"] = baseline_config_json(cfg.baseline);
    j["grid"]["lr1"] = cfg.lr1_grid;
    j["grid"]["lr2"] =
        cfg.is_eve() ? cfg.lr2_grid : std::vector<double>{};
    j["steps"] = cfg.steps;
    j["seeds"] = cfg.seeds;
    j["val_every"] = cfg.val_every;
    j["divergence_threshold"] = cfg.divergence_threshold;
    j["pooling"] = normalize_pooling(cfg.pooling);
    j["timing"] = cfg.timing;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        runs.push_back(run_scalars_json(records[i],
                                        run_csv_name(i, records[i])));
    }
    j["runs"] = std::move(runs);
    return j;
}

} // namespace

nlohmann::ordered_json summary_json(const ExperimentConfig& cfg,
                                    std::span<const RunRecord> records,
                                    const SummaryStats& stats) {
    nlohmann::ordered_json j;
    j["sweep_id"] = cfg.sweep_id;
    j["optimizer"] = cfg.optimizer;
    j["objective"] = objective_spec_to_json(cfg.objective);
    j["grid"]["lr1"] = cfg.lr1_grid;
    j["grid"]["lr2"] =
        cfg.is_eve() ? cfg.lr2_grid : std::vector<double>{};
    j["seeds"] = cfg.seeds;
    j["steps"] = cfg.steps;
    j["val_every"] = cfg.val_every;
    j["pooling"] = normalize_pooling(cfg.pooling);
    nlohmann::ordered_json per_run = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        nlohmann::ordered_json r =
            run_scalars_json(records[i], run_csv_name(i, records[i]));
        r["final_loss"] = records[i].final_loss();
        r["best_loss"] = records[i].best_loss();
        per_run.push_back(std::move(r));
    }
    j["per_run"] = std::move(per_run);
    j["stats"]["median"] = stats.median;
    j["stats"]["mean"] = stats.mean;
    j["stats"]["std"] = stats.std;
    j["stats"]["min"] = stats.min;
    j["stats"]["count"] = stats.count;
    j["table_row"] = format_stats_row(stats);
    return j;
}

void export_sweep(const ExperimentConfig& cfg, std::span<const RunRecord> records,
                  const SummaryStats& stats, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " +
                      ec.message());
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        write_run_csv(records[i], dir / run_csv_name(i, records[i]));
    }
    write_text_file(dir / "manifest.json", json_text(manifest_json(cfg, records)));
    write_text_file(dir / "summary.json",
                    json_text(summary_json(cfg, records, stats)));
    write_sweep_plots(cfg.sweep_id, records, dir);
}

nlohmann::ordered_json report_from_dir(const std::filesystem::path& dir) {
    const nlohmann::ordered_json manifest = [&] {
        try {
            return nlohmann::ordered_json::parse(
                read_text_file(dir / "manifest.json"));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("manifest.json parse error: ") +
                              e.what());
        }
    }();

    ExperimentConfig cfg;
    try {
        cfg.sweep_id = manifest.at("sweep_id").get<std::string>();
        cfg.optimizer = manifest.at("optimizer").get<std::string>();
        cfg.objective = objective_spec_from_json(manifest.at("objective"));
        cfg.lr1_grid = manifest.at("grid").at("lr1").get<std::vector<double>>();
        cfg.lr2_grid = manifest.at("grid").at("lr2").get<std::vector<double>>();
        cfg.steps = manifest.at("steps").get<std::int64_t>();
        cfg.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
        cfg.val_every = manifest.at("val_every").get<int>();
        cfg.divergence_threshold = manifest.at("divergence_threshold").get<double>();
        cfg.pooling = manifest.at("pooling").get<std::string>();
        cfg.timing = manifest.at("timing").get<bool>();

        std::vector<RunRecord> records;
        for (const auto& run : manifest.at("runs")) {
            RunRecord rec = read_run_csv(dir / run.at("csv").get<std::string>());
            rec.optimizer = run.at("optimizer").get<std::string>();
            rec.lr1 = run.at("lr1").get<double>();
            rec.lr2 = run.at("lr2").get<double>();
            rec.seed = run.at("seed").get<std::uint64_t>();
            rec.steps = run.at("steps").get<std::int64_t>();
            rec.diverged = run.at("diverged").get<bool>();
            rec.diverged_at = run.at("diverged_at").get<std::int64_t>();
            rec.sparse_steps = run.at("sparse_steps").get<std::int64_t>();
            rec.dense_steps = run.at("dense_steps").get<std::int64_t>();
            rec.seconds = run.at("seconds").get<double>();
            rec.param_digest =
                digest_from_hex(run.at("param_digest").get<std::string>());
            records.push_back(std::move(rec));
        }

        const SummaryStats stats = summarize(records, cfg.pooling);
        nlohmann::ordered_json summary = summary_json(cfg, records, stats);
        write_text_file(dir / "summary.json", json_text(summary));
        write_sweep_plots(cfg.sweep_id, records, dir);
        return summary;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest.json: ") + e.what());
    }
}

// ---- config loading ---------------------------------------------------------------

ExperimentConfig config_from_json(const nlohmann::json& j,
                                  std::uint64_t seed_root) {
    try {
        check_keys(j, "config",
                   {"sweep_id", "objective", "optimizer", "eve", "baseline",
                    "lr1_grid", "lr2_grid", "steps", "seeds", "num_seeds",
                    "val_every", "divergence_threshold", "pooling", "jobs",
                    "timing", "out"});
        ExperimentConfig cfg;
        cfg.sweep_id = j.value("sweep_id", cfg.sweep_id);
        if (j.contains("objective")) {
            cfg.objective = objective_spec_from_json(j.at("objective"));
        }
        cfg.optimizer = j.value("optimizer", cfg.optimizer);
        if (j.contains("eve")) {
            const nlohmann::json& e = j.at("eve");
            check_keys(e, "eve",
                       {"lr1", "lr2", "beta1", "beta2", "beta3", "alpha",
                        "epsilon", "zero_tol", "sparse_frac"});
            cfg.eve.lr1 = e.value("lr1", cfg.eve.lr1);
            cfg.eve.lr2 = e.value("lr2", cfg.eve.lr2);
            cfg.eve.beta1 = e.value("beta1", cfg.eve.beta1);
            cfg.eve.beta2 = e.value("beta2", cfg.eve.beta2);
            cfg.eve.beta3 = e.value("beta3", cfg.eve.beta3);
            cfg.eve.alpha = e.value("alpha", cfg.eve.alpha);
            cfg.eve.epsilon = e.value("epsilon", cfg.eve.epsilon);
            cfg.eve.zero_tol = e.value("zero_tol", cfg.eve.zero_tol);
            cfg.eve.sparse_frac = e.value("sparse_frac", cfg.eve.sparse_frac);
        }
        if (j.contains("baseline")) {
            const nlohmann::json& b = j.at("baseline");
            check_keys(b, "baseline", {"lr", "mu", "beta1", "beta2", "epsilon"});
            cfg.baseline.lr = b.value("lr", cfg.baseline.lr);
            cfg.baseline.mu = b.value("mu", cfg.baseline.mu);
            cfg.baseline.beta1 = b.value("beta1", cfg.baseline.beta1);
            cfg.baseline.beta2 = b.value("beta2", cfg.baseline.beta2);
            cfg.baseline.epsilon = b.value("epsilon", cfg.baseline.epsilon);
        }
        if (j.contains("lr1_grid")) {
            cfg.lr1_grid = j.at("lr1_grid").get<std::vector<double>>();
        }
        if (j.contains("lr2_grid")) {
            cfg.lr2_grid = j.at("lr2_grid").get<std::vector<double>>();
        }
        cfg.steps = j.value("steps", cfg.steps);
        if (j.contains("seeds") && j.contains("num_seeds")) {
            throw ConfigError("give either seeds or num_seeds, not both");
        }
        if (j.contains("seeds")) {
            cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        } else if (j.contains("num_seeds")) {
            const int n = j.at("num_seeds").get<int>();
            if (n < 1) throw ConfigError("num_seeds must be >= 1");
            cfg.seeds = expand_seed(seed_root, static_cast<std::size_t>(n));
        }
        cfg.val_every = j.value("val_every", cfg.val_every);
        cfg.divergence_threshold =
            j.value("divergence_threshold", cfg.divergence_threshold);
        cfg.pooling = j.value("pooling", cfg.pooling);
        cfg.jobs = j.value("jobs", cfg.jobs);
        cfg.timing = j.value("timing", cfg.timing);
        if (j.contains("out")) {
            cfg.out_dir = j.at("out").get<std::string>();
        }
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::uint64_t seed_root) {
    const std::string text = [&] {
        try {
            return read_text_file(path);
        } catch (const IoError& e) {
            throw ConfigError(e.what());
        }
    }();
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // map the byte offset to a line/column position
        std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        offset = std::min(offset, text.size());
        std::size_t line = 1;
        std::size_t last_newline = 0;
        for (std::size_t i = 0; i < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                last_newline = i + 1;
            }
        }
        const std::size_t column = offset - last_newline + 1;
        throw ConfigError(path.string() + ":" + std::to_string(line) + ":" +
                          std::to_string(column) + ": " + e.what());
    }
    return config_from_json(parsed, seed_root);
}

} // namespace eveopt
