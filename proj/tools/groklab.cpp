// Command-line surface for the grokking laboratory.
//
// Subcommands: dataset-zp, dataset-composite, coverage, train, dynamics,
// report. Exit codes: 0 success, 1 flag/usage errors, 2 invalid
// configuration values, 3 missing input file, 4 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "groklab/composite.hpp"
#include "groklab/coverage.hpp"
#include "groklab/diagnostics.hpp"
#include "groklab/dynamics.hpp"
#include "groklab/model.hpp"
#include "groklab/png.hpp"
#include "groklab/report.hpp"
#include "groklab/rng.hpp"
#include "groklab/split.hpp"
#include "groklab/task.hpp"
#include "groklab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace groklab;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitRuntime = 4;

struct MissingFileError : std::runtime_error {
    explicit MissingFileError(const std::string& path)
        : std::runtime_error("missing input file: " + path) {}
};

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw MissingFileError(path);
}

// Paths are interpreted relative to --output-dir unless absolute.
std::string resolve_path(const std::string& output_dir, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute() || output_dir.empty() || output_dir == ".") return path;
    return (fs::path(output_dir) / p).string();
}

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_text_file(const std::string& path, const std::string& text) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::optional<uint64_t> env_seed_override() {
    const char* raw = std::getenv("GROKLAB_SEED");
    if (!raw || !*raw) return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (end == raw || *end != '\0')
        throw std::invalid_argument(std::string("GROKLAB_SEED is not an integer: ") + raw);
    return static_cast<uint64_t>(v);
}

// ---------------------------------------------------------------------------
// dataset-zp
// ---------------------------------------------------------------------------

struct DatasetZpArgs {
    int p = 97;
    std::string terms = "i+j";
    int offset = 0;
    std::string kind = "random";
    int k = 0;
    int t = 0;
    double frac = 0.3;
    uint64_t seed = 0;
    std::string out = "split.json";
    std::string output_dir = ".";
};

int run_dataset_zp(const DatasetZpArgs& a) {
    TaskSpec task(a.p, parse_polynomial(a.terms), a.offset);
    SplitSpec spec;
    if (a.kind == "random")
        spec = RandomSplit{a.frac, a.seed};
    else if (a.kind == "square_reserve")
        spec = SquareReserveSplit{a.k, a.frac, a.seed};
    else if (a.kind == "strip_reserve")
        spec = StripReserveSplit{a.t, a.frac, a.seed};
    else
        throw std::invalid_argument("unknown split kind: " + a.kind);

    const Split split = build_split(task, spec);
    const std::string path = resolve_path(a.output_dir, a.out);
    ensure_parent_dir(path);
    save_split(path, task, spec, split);

    ordered_json summary;
    summary["path"] = path;
    summary["kind"] = split_spec_name(spec);
    summary["p"] = task.p;
    summary["terms"] = polynomial_to_string(task.terms);
    summary["train_size"] = split.train.size();
    summary["test_size"] = split.test.size();
    std::cout << summary.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// dataset-composite
// ---------------------------------------------------------------------------

struct DatasetCompositeArgs {
    int n = 11;
    int height = 56;
    int width = 56;
    double frac = 0.25;
    uint64_t seed = 0;
    std::string out = "composite";
    std::string dict_dir;
    bool sidecar = false;
    std::string output_dir = ".";
};

int run_dataset_composite(const DatasetCompositeArgs& a) {
    std::vector<DictionaryEntry> dict;
    if (!a.dict_dir.empty()) {
        if (!fs::is_directory(a.dict_dir)) throw MissingFileError(a.dict_dir);
        dict = load_dictionary(a.dict_dir, a.n);
    } else {
        dict = generate_dictionary(a.n, a.height, a.width, a.seed);
    }

    CompositeConfig config;
    config.quadrant_height = dict.front().image.height;
    config.quadrant_width = dict.front().image.width;
    config.train_fraction = a.frac;
    config.seed = a.seed;
    config.rgb_sidecar = a.sidecar;

    const std::string out_dir = resolve_path(a.output_dir, a.out);
    const CompositeSummary summary = generate_dataset(dict, out_dir, config);

    ordered_json j;
    j["out_dir"] = out_dir;
    j["n"] = a.n;
    j["samples"] = summary.samples;
    j["train_count"] = summary.train_count;
    ordered_json hist = ordered_json::object();
    for (const auto& [label, count] : summary.label_histogram)
        hist[std::to_string(label)] = count;
    j["label_histogram"] = hist;
    std::cout << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// coverage
// ---------------------------------------------------------------------------

struct CoverageArgs {
    int p = 0;
    int radius = 1;
    std::string metric = "torus";
    std::string split_file;
    double frac = -1.0;  // <0 = no on-the-fly split
    std::string terms = "i+j";
    uint64_t seed = 0;
    int d1 = 0;  // 0 = skip the per-class audit
    int mc_trials = 0;
    double alpha = -1.0;  // <0 = default to alpha_threshold
    std::string out;      // empty = stdout
    std::string output_dir = ".";
};

Metric parse_metric(const std::string& name) {
    if (name == "torus") return Metric::torus;
    if (name == "grid") return Metric::grid;
    throw std::invalid_argument("unknown metric: " + name + " (expected torus|grid)");
}

int run_coverage(const CoverageArgs& a) {
    const Metric metric = parse_metric(a.metric);

    std::optional<TaskSpec> task;
    std::optional<Split> split;
    SplitSpec spec = RandomSplit{};
    int p = a.p;

    if (!a.split_file.empty()) {
        const std::string split_path = resolve_path(a.output_dir, a.split_file);
        require_file(split_path);
        LoadedSplit loaded = load_split(split_path);
        if (a.p != 0 && a.p != loaded.task.p)
            throw std::invalid_argument("--p disagrees with the split file (" +
                                        std::to_string(a.p) + " vs " +
                                        std::to_string(loaded.task.p) + ")");
        p = loaded.task.p;
        task = loaded.task;
        spec = loaded.spec;
        split = std::move(loaded.split);
    } else if (a.frac > 0.0) {
        if (a.p == 0) throw std::invalid_argument("--frac needs --p");
        task = TaskSpec(a.p, parse_polynomial(a.terms));
        spec = RandomSplit{a.frac, a.seed};
        split = build_split(*task, spec);
    } else if (a.p == 0) {
        throw std::invalid_argument("coverage needs --p or --split");
    }

    ordered_json j;
    const long long C = ball_size(a.radius, metric, p);
    if (split) {
        CoverageConfig config{a.radius, metric};
        const CoverageReport report = coverage_report(*split, p, config);
        j = ordered_json::parse(coverage_report_to_json(report));
        j["p"] = p;
        j["split_kind"] = split_spec_name(spec);
    } else {
        j["prop"] = nullptr;
        j["ball_size"] = C;
        j["alpha_threshold"] = alpha_threshold(p, C);
        j["radius"] = a.radius;
        j["metric"] = a.metric;
        j["p"] = p;
    }

    if (a.d1 > 0) {
        if (!split) throw std::invalid_argument("--d1 needs a split (--split or --frac)");
        const ResidueClasses classes = class_partition(*task);
        const ConditionReport cond = condition_i_report(*split, classes, p, a.d1, metric);
        ordered_json cj;
        cj["d1"] = cond.d1;
        cj["overall"] = cond.overall;
        cj["per_class"] = cond.per_class;
        cj["class_test_counts"] = cond.class_test_counts;
        j["condition"] = cj;
    }

    if (a.mc_trials > 0) {
        const double alpha = a.alpha > 0.0 ? a.alpha : alpha_threshold(p, C);
        const MonteCarloProp mc =
            monte_carlo_expected_prop(p, alpha, a.radius, metric, a.mc_trials, a.seed);
        ordered_json mj;
        mj["alpha"] = alpha;
        mj["trials"] = a.mc_trials;
        mj["mean_prop"] = mc.mean;
        mj["std_error"] = mc.std_error;
        j["monte_carlo"] = mj;
    }

    const std::string text = j.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        const std::string path = resolve_path(a.output_dir, a.out);
        write_text_file(path, text);
        std::cout << path << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config_file;
    std::string output_dir;  // overrides the config's output_dir
    bool dry_run = false;
    long long epochs = -1;  // <0 = keep config value
    double lr = -1.0;
    double stop_at_test_acc = -2.0;
    int eval_every = -1;
    int batch_size = -1;
    int snapshot_every = -1;
    std::optional<uint64_t> seed;
};

struct RunConfig {
    TaskSpec task{3, parse_polynomial("i+j")};
    SplitSpec split_spec = RandomSplit{};
    std::optional<std::string> split_file;
    ModelConfig model;
    TrainConfig train;
    std::string output_dir = ".";
    ReportOptions report;
};

SplitSpec split_spec_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "random") {
        return RandomSplit{j.value("frac", 0.3), j.value("seed", uint64_t{0})};
    } else if (kind == "square_reserve") {
        return SquareReserveSplit{j.at("k").get<int>(), j.value("frac", 0.3),
                                  j.value("seed", uint64_t{0})};
    } else if (kind == "strip_reserve") {
        return StripReserveSplit{j.at("t").get<int>(), j.value("frac", 0.3),
                                 j.value("seed", uint64_t{0})};
    }
    throw std::invalid_argument("unknown split kind: " + kind);
}

RunConfig parse_run_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    try {
        const auto& tj = j.at("task");
        cfg.task = TaskSpec(tj.at("p").get<int>(),
                            parse_polynomial(tj.value("terms", std::string("i+j"))),
                            tj.value("offset", 0));

        if (j.contains("split")) {
            const auto& sj = j.at("split");
            if (sj.contains("file"))
                cfg.split_file = sj.at("file").get<std::string>();
            else
                cfg.split_spec = split_spec_from_json(sj);
        }

        const auto mj = j.value("model", nlohmann::json::object());
        cfg.model.d_model = mj.value("d_model", 128);
        cfg.model.n_heads = mj.value("n_heads", 4);
        cfg.model.n_layers = mj.value("n_layers", 1);
        cfg.model.d_mlp = mj.value("d_mlp", 0);
        cfg.model.use_layer_norm = mj.value("layer_norm", false);
        cfg.model.causal_mask = mj.value("causal_mask", true);
        cfg.model.vocab_size = cfg.task.vocab_size();
        cfg.model.out_classes = cfg.task.p;

        const auto nj = j.value("train", nlohmann::json::object());
        cfg.train.lr = nj.value("lr", 1e-3);
        cfg.train.beta1 = nj.value("beta1", 0.9);
        cfg.train.beta2 = nj.value("beta2", 0.98);
        cfg.train.eps = nj.value("eps", 1e-8);
        cfg.train.weight_decay = nj.value("weight_decay", 1.0);
        cfg.train.epochs = nj.value("epochs", 1LL);
        cfg.train.batch_size = nj.value("batch_size", 0);
        cfg.train.seed = nj.value("seed", uint64_t{0});
        cfg.train.eval_every = nj.value("eval_every", 10);
        cfg.train.stop_at_test_acc = nj.value("stop_at_test_acc", -1.0);
        cfg.train.snapshot_every = nj.value("snapshot_every", 0);
        if (nj.contains("init")) {
            const auto& ij = nj.at("init");
            const std::string kind = ij.value("kind", std::string("standard"));
            if (kind == "standard") {
                cfg.train.init = StandardInit{ij.value("std", 0.02)};
            } else if (kind == "circulant") {
                cfg.train.init =
                    CirculantInit{ij.value("seed", uint64_t{0}), ij.value("std", 0.02)};
            } else {
                throw std::invalid_argument("unknown init kind: " + kind);
            }
        }

        cfg.output_dir = j.value("output_dir", std::string("."));
        const auto rj = j.value("report", nlohmann::json::object());
        cfg.report.log_x = rj.value("log_x", false);
        cfg.report.raw_med = rj.value("raw_med", false);
        cfg.report.p = cfg.task.p;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad run config: ") + e.what());
    }
    return cfg;
}

ordered_json resolved_config_json(const RunConfig& cfg, const Split& split) {
    ordered_json j;
    j["task"] = {{"p", cfg.task.p},
                 {"terms", polynomial_to_string(cfg.task.terms)},
                 {"offset", cfg.task.operand_offset},
                 {"vocab_size", cfg.task.vocab_size()}};

    ordered_json sj;
    if (std::holds_alternative<RandomSplit>(cfg.split_spec)) {
        const auto& s = std::get<RandomSplit>(cfg.split_spec);
        sj = {{"kind", "random"}, {"frac", s.train_fraction}, {"seed", s.seed}};
    } else if (std::holds_alternative<SquareReserveSplit>(cfg.split_spec)) {
        const auto& s = std::get<SquareReserveSplit>(cfg.split_spec);
        sj = {{"kind", "square_reserve"}, {"k", s.k}, {"frac", s.train_fraction}, {"seed", s.seed}};
    } else {
        const auto& s = std::get<StripReserveSplit>(cfg.split_spec);
        sj = {{"kind", "strip_reserve"}, {"t", s.t}, {"frac", s.train_fraction}, {"seed", s.seed}};
    }
    if (cfg.split_file) sj["file"] = *cfg.split_file;
    sj["train_size"] = split.train.size();
    sj["test_size"] = split.test.size();
    j["split"] = sj;

    j["model"] = {{"vocab_size", cfg.model.vocab_size},
                  {"d_model", cfg.model.d_model},
                  {"n_heads", cfg.model.n_heads},
                  {"n_layers", cfg.model.n_layers},
                  {"d_mlp", cfg.model.mlp_width()},
                  {"out_classes", cfg.model.out_classes},
                  {"layer_norm", cfg.model.use_layer_norm},
                  {"causal_mask", cfg.model.causal_mask}};

    ordered_json ij;
    if (std::holds_alternative<StandardInit>(cfg.train.init)) {
        ij = {{"kind", "standard"}, {"std", std::get<StandardInit>(cfg.train.init).std}};
    } else {
        const auto& c = std::get<CirculantInit>(cfg.train.init);
        ij = {{"kind", "circulant"}, {"seed", c.seed}, {"std", c.std}};
    }
    j["train"] = {{"lr", cfg.train.lr},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"eps", cfg.train.eps},
                  {"weight_decay", cfg.train.weight_decay},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"seed", cfg.train.seed},
                  {"init", ij},
                  {"eval_every", cfg.train.eval_every},
                  {"stop_at_test_acc", cfg.train.stop_at_test_acc},
                  {"snapshot_every", cfg.train.snapshot_every}};

    j["output_dir"] = cfg.output_dir;
    j["report"] = {{"log_x", cfg.report.log_x}, {"raw_med", cfg.report.raw_med}};
    return j;
}

int run_train(const TrainArgs& a) {
    RunConfig cfg = parse_run_config(read_text_file(a.config_file));

    // Flag overrides beat the config file; GROKLAB_SEED beats both.
    if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
    if (a.epochs >= 0) cfg.train.epochs = a.epochs;
    if (a.lr >= 0.0) cfg.train.lr = a.lr;
    if (a.stop_at_test_acc > -2.0) cfg.train.stop_at_test_acc = a.stop_at_test_acc;
    if (a.eval_every >= 0) cfg.train.eval_every = a.eval_every;
    if (a.batch_size >= 0) cfg.train.batch_size = a.batch_size;
    if (a.snapshot_every >= 0) cfg.train.snapshot_every = a.snapshot_every;
    std::optional<uint64_t> seed = a.seed;
    if (const auto env = env_seed_override()) seed = env;
    if (seed) {
        cfg.train.seed = *seed;
        std::visit([&](auto& s) { s.seed = *seed; }, cfg.split_spec);
        if (auto* circ = std::get_if<CirculantInit>(&cfg.train.init)) circ->seed = *seed;
    }

    cfg.model.validate();
    cfg.train.validate();

    Split split;
    if (cfg.split_file) {
        const std::string split_path = resolve_path(cfg.output_dir, *cfg.split_file);
        require_file(split_path);
        LoadedSplit loaded = load_split(split_path);
        if (loaded.task.p != cfg.task.p || loaded.task.terms != cfg.task.terms ||
            loaded.task.operand_offset != cfg.task.operand_offset)
            throw std::invalid_argument("split file task disagrees with config task");
        cfg.split_spec = loaded.spec;
        if (seed) {
            // A seed override rebuilds a file-referenced split from its spec.
            std::visit([&](auto& s) { s.seed = *seed; }, cfg.split_spec);
            split = build_split(cfg.task, cfg.split_spec);
        } else {
            split = std::move(loaded.split);
        }
    } else {
        split = build_split(cfg.task, cfg.split_spec);
    }

    const ordered_json resolved = resolved_config_json(cfg, split);
    if (a.dry_run) {
        std::cout << resolved.dump(2) << "\n";
        return 0;
    }

    fs::create_directories(cfg.output_dir);
    write_text_file(resolve_path(cfg.output_dir, "config_resolved.json"), resolved.dump(2) + "\n");
    save_split(resolve_path(cfg.output_dir, "split.json"), cfg.task, cfg.split_spec, split);

    std::ofstream csv(resolve_path(cfg.output_dir, "metrics.csv"), std::ios::binary);
    std::ofstream jsonl(resolve_path(cfg.output_dir, "metrics.jsonl"), std::ios::binary);
    if (!csv || !jsonl) throw std::runtime_error("cannot open metrics outputs");
    csv << metrics_csv_header() << "\n";

    std::vector<MetricsRow> rows;
    MetricsSink sink = [&](const MetricsRow& row) {
        rows.push_back(row);
        csv << metrics_row_csv(row) << "\n";
        jsonl << metrics_row_jsonl(row) << "\n";
        csv.flush();
        jsonl.flush();
    };

    TrainResult result = train(cfg.task, split, cfg.model, cfg.train, sink);

    save_checkpoint(resolve_path(cfg.output_dir, "checkpoint"), cfg.model, result.params,
                    result.final_epoch, Rng::stream(cfg.train.seed, StreamTag::batch).state());
    write_text_file(resolve_path(cfg.output_dir, "grokking.json"),
                    grokking_report_to_json(result.grokking) + "\n");
    if (!rows.empty())
        write_text_file(resolve_path(cfg.output_dir, "report.svg"),
                        render_metrics_svg(rows, cfg.report));
    if (!result.embedding_snapshots.empty()) {
        const std::string snap_dir = resolve_path(cfg.output_dir, "snapshots");
        fs::create_directories(snap_dir);
        for (const auto& [epoch, rows_matrix] : result.embedding_snapshots) {
            char name[64];
            std::snprintf(name, sizeof name, "embedding_%08lld.bin", epoch);
            save_matrix((fs::path(snap_dir) / name).string(), rows_matrix);
        }
    }

    ordered_json summary;
    summary["output_dir"] = cfg.output_dir;
    summary["final_epoch"] = result.final_epoch;
    summary["diverged"] = result.diverged;
    if (!rows.empty()) {
        summary["train_acc"] = rows.back().train_acc;
        summary["test_acc"] = rows.back().test_acc;
        summary["train_loss"] = rows.back().train_loss;
        summary["test_loss"] = rows.back().test_loss;
    }
    summary["grokking"] = ordered_json::parse(grokking_report_to_json(result.grokking));
    std::cout << summary.dump(2) << "\n";

    if (result.diverged) {
        std::cerr << "training diverged at epoch " << result.final_epoch
                  << "; partial outputs kept in " << cfg.output_dir << "\n";
        return kExitRuntime;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// dynamics
// ---------------------------------------------------------------------------

struct DynamicsArgs {
    std::vector<std::string> starts;
    int delta = 1;
    double h = 0.01;
    double t_end = 100.0;
    std::string out = "trajectory.csv";
    std::string output_dir = ".";
};

ReducedState parse_start(const std::string& text) {
    ReducedState s;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &s.x, &s.w, &s.u, &extra) != 3)
        throw std::invalid_argument("bad --start (expected x,w,u): " + text);
    return s;
}

int run_dynamics(const DynamicsArgs& a) {
    std::vector<ReducedState> starts;
    if (a.starts.empty())
        starts.push_back({0.5, 0.5, 0.5});
    else
        for (const auto& text : a.starts) starts.push_back(parse_start(text));

    const fs::path out(a.out);
    for (size_t idx = 0; idx < starts.size(); ++idx) {
        std::string name = a.out;
        if (starts.size() > 1) {
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, "_%03zu", idx);
            fs::path numbered = out.parent_path() / (out.stem().string() + suffix +
                                                     out.extension().string());
            name = numbered.string();
        }
        const std::string path = resolve_path(a.output_dir, name);
        ensure_parent_dir(path);

        const Trajectory traj = integrate(starts[idx], a.delta, a.h, a.t_end);
        save_trajectory_csv(path, traj);

        const TrajectoryPoint& last = traj.points.back();
        const LyapunovValues lyap = lyapunov({last.x, last.w, last.u});
        ordered_json j;
        j["file"] = path;
        j["start"] = {starts[idx].x, starts[idx].w, starts[idx].u};
        j["delta"] = a.delta;
        j["final"] = {last.x, last.w, last.u};
        j["v_final"] = lyap.v;
        j["v_dot_final"] = lyap.v_dot;
        j["left_cube"] = traj.left_cube;
        std::cout << j.dump() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
    std::string metrics_file;
    std::string out = "report.svg";
    std::string grokking_out;  // empty = stdout
    bool log_x = false;
    bool raw_med = false;
    int p = 0;
    std::string output_dir = ".";
};

int run_report(const ReportArgs& a) {
    const std::string metrics_path = resolve_path(a.output_dir, a.metrics_file);
    require_file(metrics_path);
    const std::vector<MetricsRow> rows = read_metrics_csv(metrics_path);
    if (rows.empty()) throw std::invalid_argument("metrics file has no rows: " + metrics_path);

    ReportOptions options;
    options.log_x = a.log_x;
    options.raw_med = a.raw_med;
    options.p = a.p;

    const std::string svg_path = resolve_path(a.output_dir, a.out);
    write_text_file(svg_path, render_metrics_svg(rows, options));

    const GrokkingReport grokking = detect_grokking(rows);
    const std::string grokking_json = grokking_report_to_json(grokking) + "\n";
    if (a.grokking_out.empty()) {
        std::cout << grokking_json;
    } else {
        write_text_file(resolve_path(a.output_dir, a.grokking_out), grokking_json);
        std::cout << svg_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"groklab: grokking laboratory for modular-arithmetic transformers"};
    app.require_subcommand(1);

    DatasetZpArgs zp;
    auto* zp_cmd = app.add_subcommand("dataset-zp", "Build and save a train/test split");
    zp_cmd->add_option("--p", zp.p, "prime modulus")->required();
    zp_cmd->add_option("--terms", zp.terms, "label polynomial, e.g. i+j or i^2+i*j+j^2");
    zp_cmd->add_option("--offset", zp.offset, "second-operand token offset");
    zp_cmd->add_option("--kind", zp.kind, "random | square_reserve | strip_reserve");
    zp_cmd->add_option("--k", zp.k, "square edge (square_reserve)");
    zp_cmd->add_option("--t", zp.t, "strip height (strip_reserve)");
    zp_cmd->add_option("--frac", zp.frac, "train fraction of non-reserved pairs");
    zp_cmd->add_option("--seed", zp.seed, "split RNG seed");
    zp_cmd->add_option("--out", zp.out, "split JSON path");
    zp_cmd->add_option("--output-dir", zp.output_dir, "base directory for relative paths");

    DatasetCompositeArgs comp;
    auto* comp_cmd =
        app.add_subcommand("dataset-composite", "Generate the composite-image dataset");
    comp_cmd->add_option("--n", comp.n, "dictionary size")->required();
    comp_cmd->add_option("--height", comp.height, "quadrant height");
    comp_cmd->add_option("--width", comp.width, "quadrant width");
    comp_cmd->add_option("--frac", comp.frac, "train fraction");
    comp_cmd->add_option("--seed", comp.seed, "glyph/split RNG seed");
    comp_cmd->add_option("--out", comp.out, "output directory (must be empty)");
    comp_cmd->add_option("--dict", comp.dict_dir, "load dictionary from directory of .rgb files");
    comp_cmd->add_flag("--sidecar", comp.sidecar, "also write raw .rgb sidecars");
    comp_cmd->add_option("--output-dir", comp.output_dir, "base directory for relative paths");

    CoverageArgs cov;
    auto* cov_cmd = app.add_subcommand("coverage", "Manhattan coverage report");
    cov_cmd->add_option("--p", cov.p, "prime modulus");
    cov_cmd->add_option("--radius", cov.radius, "strict Manhattan radius");
    cov_cmd->add_option("--metric", cov.metric, "torus | grid");
    cov_cmd->add_option("--split", cov.split_file, "split JSON to analyze");
    cov_cmd->add_option("--frac", cov.frac, "build a random split with this train fraction");
    cov_cmd->add_option("--terms", cov.terms, "label polynomial for --frac / --d1");
    cov_cmd->add_option("--seed", cov.seed, "RNG seed for --frac / Monte-Carlo");
    cov_cmd->add_option("--d1", cov.d1, "per-class nearest-neighbour audit distance");
    cov_cmd->add_option("--mc-trials", cov.mc_trials, "Monte-Carlo trials for expected prop");
    cov_cmd->add_option("--alpha", cov.alpha, "Monte-Carlo train fraction (default threshold)");
    cov_cmd->add_option("--out", cov.out, "report JSON path (default stdout)");
    cov_cmd->add_option("--output-dir", cov.output_dir, "base directory for relative paths");

    TrainArgs tr;
    auto* tr_cmd = app.add_subcommand("train", "Run a training experiment from a JSON config");
    tr_cmd->add_option("--config", tr.config_file, "run config JSON")->required();
    tr_cmd->add_option("--output-dir", tr.output_dir, "override the config output_dir");
    tr_cmd->add_flag("--dry-run", tr.dry_run, "validate and echo the resolved config only");
    tr_cmd->add_option("--epochs", tr.epochs, "override train.epochs");
    tr_cmd->add_option("--lr", tr.lr, "override train.lr");
    tr_cmd->add_option("--stop-at-test-acc", tr.stop_at_test_acc,
                       "override train.stop_at_test_acc");
    tr_cmd->add_option("--eval-every", tr.eval_every, "override train.eval_every");
    tr_cmd->add_option("--batch-size", tr.batch_size, "override train.batch_size");
    tr_cmd->add_option("--snapshot-every", tr.snapshot_every, "override train.snapshot_every");
    uint64_t seed_flag = 0;
    auto* seed_opt = tr_cmd->add_option("--seed", seed_flag, "override every config seed");

    DynamicsArgs dyn;
    auto* dyn_cmd = app.add_subcommand("dynamics", "Integrate the reduced training flow");
    dyn_cmd->add_option("--start", dyn.starts, "start state x,w,u (repeatable)");
    dyn_cmd->add_option("--delta", dyn.delta, "class indicator (0 or 1)");
    dyn_cmd->add_option("--step", dyn.h, "RK4 step size");
    dyn_cmd->add_option("--t-end", dyn.t_end, "integration horizon");
    dyn_cmd->add_option("--out", dyn.out, "trajectory CSV path");
    dyn_cmd->add_option("--output-dir", dyn.output_dir, "base directory for relative paths");

    ReportArgs rep;
    auto* rep_cmd = app.add_subcommand("report", "Render metrics CSV to SVG + grokking JSON");
    rep_cmd->add_option("--metrics", rep.metrics_file, "metrics CSV")->required();
    rep_cmd->add_option("--out", rep.out, "SVG path");
    rep_cmd->add_option("--grokking-out", rep.grokking_out, "grokking JSON path (default stdout)");
    rep_cmd->add_flag("--log-x", rep.log_x, "log-scale the epoch axis");
    rep_cmd->add_flag("--raw-med", rep.raw_med, "plot MED times p (requires --p)");
    rep_cmd->add_option("--p", rep.p, "modulus for --raw-med");
    rep_cmd->add_option("--output-dir", rep.output_dir, "base directory for relative paths");

    try {
        app.parse(argc, argv);
        if (seed_opt->count() > 0) tr.seed = seed_flag;
        if (zp_cmd->parsed()) return run_dataset_zp(zp);
        if (comp_cmd->parsed()) return run_dataset_composite(comp);
        if (cov_cmd->parsed()) return run_coverage(cov);
        if (tr_cmd->parsed()) return run_train(tr);
        if (dyn_cmd->parsed()) return run_dynamics(dyn);
        if (rep_cmd->parsed()) return run_report(rep);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const MissingFileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingFile;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
