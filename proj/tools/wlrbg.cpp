// Command-line surface: synthesize datasets, run any decomposer, evaluate
// against ground truth, and compare methods side by side.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wlrbg/decomposition.hpp"
#include "wlrbg/errors.hpp"
#include "wlrbg/frame_io.hpp"
#include "wlrbg/metrics.hpp"
#include "wlrbg/numerics.hpp"
#include "wlrbg/pipeline.hpp"
#include "wlrbg/rpca.hpp"
#include "wlrbg/synth.hpp"
#include "wlrbg/wlr.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace wlrbg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

const std::set<std::string> kMethods = {"wlr-pipeline", "wlr", "gtls",
                                        "golub",        "iealm", "apg"};

// Typed view over repeated --param key=value flags. Unknown keys are
// rejected once a method has consumed what it understands.
class ParamTable {
public:
    explicit ParamTable(const std::vector<std::string>& raw) {
        for (const auto& entry : raw) {
            const auto at = entry.find('=');
            if (at == std::string::npos || at == 0) {
                throw ConfigError("--param expects key=value, got '" + entry + "'");
            }
            values_[entry.substr(0, at)] = entry.substr(at + 1);
        }
    }

    double number(const std::string& key, double fallback) {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("--param " + key + ": cannot parse '" + it->second +
                              "' as a number");
        }
    }

    Index integer(const std::string& key, Index fallback) {
        const double v = number(key, static_cast<double>(fallback));
        const Index i = static_cast<Index>(std::llround(v));
        if (static_cast<double>(i) != v) {
            throw ConfigError("--param " + key + ": expected an integer");
        }
        return i;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        return it->second;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_) {
            if (!consumed_.count(key)) {
                throw ConfigError("unknown --param key '" + key + "'");
            }
        }
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

Index thread_count(Index flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("WLRBG_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<Index>(v);
    }
    return 1;
}

json method_defaults() {
    json d;
    d["synth"] = {{"height", 64},           {"width", 80},
                  {"frames", 120},          {"sprite_size", 12},
                  {"empty_ranges", "2:5,90:100"}, {"static_range", "110:120"},
                  {"noise_sigma", 0.0},     {"illumination", 0.0}};
    d["wlr-pipeline"] = {{"i1", 2},
                         {"i2", 1},
                         {"epsilon", 1e-7},
                         {"max_iter", 50},
                         {"w1_low", 500.0},
                         {"w1_high", 1000.0},
                         {"eps1_strategy", "otsu"},
                         {"init_energy", 0.9}};
    d["wlr"] = {{"k", "ceil(n/2)"}, {"r", "k+1"},        {"epsilon", 1e-7},
                {"max_iter", 50},   {"w1_low", 500.0},   {"w1_high", 1000.0}};
    d["gtls"] = {{"k", "ceil(n/2)"}, {"r", "k+1"}, {"lambda", 1e8}};
    d["golub"] = {{"k", "ceil(n/2)"}, {"r", "k+1"}};
    d["iealm"] = {{"lambda", "1/sqrt(max(m,n))"},
                  {"mu", 1.5},
                  {"rho", 1.25},
                  {"tol", 1e-7},
                  {"max_iter", 500}};
    d["apg"] = {{"lambda", "1/sqrt(max(m,n))"}, {"tol", 1e-7}, {"max_iter", 500}};
    return d;
}

std::pair<Index, Index> parse_range(const std::string& text) {
    const auto at = text.find(':');
    if (at == std::string::npos) throw ConfigError("range must look like first:last");
    try {
        return {static_cast<Index>(std::stoll(text.substr(0, at))),
                static_cast<Index>(std::stoll(text.substr(at + 1)))};
    } catch (const std::exception&) {
        throw ConfigError("cannot parse range '" + text + "'");
    }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    synth::SynthSpec spec;
    std::vector<std::string> empty_ranges;
    std::string static_range;
};

int run_synth(const SynthArgs& args) {
    synth::SynthSpec spec = args.spec;
    if (!args.empty_ranges.empty()) {
        spec.empty_ranges.clear();
        for (const auto& r : args.empty_ranges) spec.empty_ranges.push_back(parse_range(r));
    }
    if (!args.static_range.empty()) spec.static_range = parse_range(args.static_range);

    const io::Dataset ds = synth::generate(spec);
    const fs::path out(args.out);
    fs::create_directories(out);
    io::save_frames(ds.frames, ds.height, ds.width, out / "frames");
    io::save_frames(*ds.ground_truth, ds.height, ds.width, out / "masks");
    io::write_manifest(out / "manifest.json", ds.height, ds.width, ds.n_frames(),
                       "frames/*.pgm", "masks/*.pgm");
    std::cout << "wrote " << ds.n_frames() << " frames to " << out.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

struct DecomposeArgs {
    std::string manifest;
    std::string method;
    std::string out;
    std::uint64_t seed = 0;
    Index threads = 0;
    std::vector<std::string> params;
};

json selection_to_json(const pipeline::FrameSelection& sel) {
    json j;
    j["eps1"] = sel.eps1;
    j["eps2"] = sel.eps2;
    j["k"] = sel.k;
    j["r"] = sel.r;
    j["s"] = sel.s;
    j["scores"] = sel.scores;
    j["permutation"] = sel.permutation;
    return j;
}

void write_viewable_foreground(const DenseMatrix& fg, Index h, Index w, const fs::path& dir) {
    DenseMatrix view(fg.rows(), fg.cols());
    for (Index i = 0; i < fg.size(); ++i) view.data()[i] = std::abs(fg.data()[i]);
    io::save_frames(view, h, w, dir);
}

int run_decompose(const DecomposeArgs& args) {
    if (!kMethods.count(args.method)) {
        throw ConfigError("unknown method '" + args.method + "'");
    }
    const io::Dataset ds = io::load_manifest(args.manifest);
    const Index m = ds.pixels();
    const Index n = ds.n_frames();
    const Index threads = thread_count(args.threads);
    ParamTable params(args.params);

    const fs::path out(args.out);
    fs::create_directories(out);

    json state;
    state["method"] = args.method;
    state["seed"] = args.seed;
    state["threads"] = threads;
    state["dataset"] = {{"height", ds.height}, {"width", ds.width}, {"n_frames", n}};

    DenseMatrix background, foreground;
    std::optional<DenseMatrix> thresholded;

    const auto default_k = (n + 1) / 2;
    const auto started = std::chrono::steady_clock::now();

    if (args.method == "wlr-pipeline") {
        pipeline::PipelineConfig cfg;
        cfg.i1 = params.integer("i1", cfg.i1);
        cfg.i2 = params.integer("i2", cfg.i2);
        cfg.epsilon = params.number("epsilon", cfg.epsilon);
        cfg.wlr_max_iter = params.integer("max_iter", cfg.wlr_max_iter);
        cfg.w1_low = params.number("w1_low", cfg.w1_low);
        cfg.w1_high = params.number("w1_high", cfg.w1_high);
        cfg.init_energy = params.number("init_energy", cfg.init_energy);
        const std::string strategy = params.text("eps1_strategy", "otsu");
        if (strategy == "otsu") {
            cfg.eps1_strategy = pipeline::Eps1Strategy::kOtsu;
        } else if (strategy == "p95") {
            cfg.eps1_strategy = pipeline::Eps1Strategy::kPercentile95;
        } else {
            throw ConfigError("eps1_strategy must be 'otsu' or 'p95'");
        }
        cfg.seed = args.seed;
        cfg.threads = threads;
        params.reject_unknown();

        const auto result = pipeline::run_pipeline(ds, cfg);
        background = result.decomposition.background;
        foreground = result.decomposition.foreground;
        thresholded = result.foreground_thresholded;
        state["config"] = {{"i1", cfg.i1},
                           {"i2", cfg.i2},
                           {"epsilon", cfg.epsilon},
                           {"max_iter", cfg.wlr_max_iter},
                           {"w1_low", cfg.w1_low},
                           {"w1_high", cfg.w1_high},
                           {"eps1_strategy", strategy},
                           {"init_energy", cfg.init_energy}};
        state["selection"] = selection_to_json(result.selection);
        state["iterations"] = result.decomposition.iterations;
        state["converged"] = result.decomposition.converged;
        state["svd_count"] = result.decomposition.svd_count;
        state["objective_history"] = result.state.objective_history;
        state["error_history"] = result.state.error_history;
        state["rank_deficient"] = result.state.rank_deficient;
    } else if (args.method == "wlr") {
        wlr::WlrConfig cfg;
        cfg.k = params.integer("k", default_k);
        cfg.r = params.integer("r", cfg.k + 1);
        cfg.epsilon = params.number("epsilon", 1e-7);
        cfg.max_iter = params.integer("max_iter", 50);
        const double w1_low = params.number("w1_low", 500.0);
        const double w1_high = params.number("w1_high", 1000.0);
        cfg.seed = args.seed;
        cfg.threads = threads;
        params.reject_unknown();
        if (cfg.k <= 0 || cfg.k > n) throw ConfigError("wlr: k out of range");
        if (!(w1_low > 0) || w1_high < w1_low) {
            throw ConfigError("wlr: need 0 < w1_low <= w1_high");
        }

        std::mt19937_64 rng(args.seed ^ 0xd1b54a32d192ed03ULL);
        const DenseMatrix w1 = DenseMatrix::random_uniform(m, cfg.k, w1_low, w1_high, rng);
        const DenseMatrix a1 = ds.frames.cols(0, cfg.k);
        const DenseMatrix a2 = ds.frames.cols(cfg.k, n - cfg.k);
        const auto [st, dec] = wlr::solve_wlr(a1, a2, w1, cfg);
        background = dec.background;
        foreground = dec.foreground;
        state["config"] = {{"k", cfg.k},
                           {"r", cfg.r},
                           {"epsilon", cfg.epsilon},
                           {"max_iter", cfg.max_iter},
                           {"w1_low", w1_low},
                           {"w1_high", w1_high}};
        state["iterations"] = dec.iterations;
        state["converged"] = dec.converged;
        state["svd_count"] = dec.svd_count;
        state["objective_history"] = st.objective_history;
        state["error_history"] = st.error_history;
        state["rank_deficient"] = st.rank_deficient;
    } else if (args.method == "gtls" || args.method == "golub") {
        const Index k = params.integer("k", default_k);
        const Index r = params.integer("r", k + 1);
        double lambda = 0.0;
        if (args.method == "gtls") lambda = params.number("lambda", 1e8);
        params.reject_unknown();
        if (k <= 0 || k > n) throw ConfigError(args.method + ": k out of range");

        const DenseMatrix a1 = ds.frames.cols(0, k);
        const DenseMatrix a2 = ds.frames.cols(k, n - k);
        background = args.method == "gtls" ? wlr::solve_gtls(a1, a2, lambda, r)
                                           : wlr::golub_solve(a1, a2, r);
        foreground = ds.frames - background;
        state["config"] = {{"k", k}, {"r", r}};
        if (args.method == "gtls") state["config"]["lambda"] = lambda;
        state["iterations"] = 1;
        state["converged"] = true;
        state["svd_count"] = args.method == "gtls" ? 1 : 2;
    } else {  // iealm | apg
        rpca::RpcaConfig cfg;
        cfg.lambda = params.number("lambda", rpca::default_lambda(m, n));
        cfg.tol = params.number("tol", cfg.tol);
        cfg.max_iter = params.integer("max_iter", cfg.max_iter);
        if (args.method == "iealm") {
            cfg.mu = params.number("mu", cfg.mu);
            cfg.rho = params.number("rho", cfg.rho);
        }
        params.reject_unknown();

        const Decomposition dec = args.method == "iealm" ? rpca::solve_iealm(ds.frames, cfg)
                                                         : rpca::solve_apg(ds.frames, cfg);
        background = dec.background;
        foreground = dec.foreground;
        state["config"] = {{"lambda", cfg.lambda},
                           {"tol", cfg.tol},
                           {"max_iter", cfg.max_iter}};
        if (args.method == "iealm") {
            state["config"]["mu"] = cfg.mu;
            state["config"]["rho"] = cfg.rho;
        }
        state["iterations"] = dec.iterations;
        state["converged"] = dec.converged;
        state["svd_count"] = dec.svd_count;
        state["residual_rel"] = dec.residual_rel;
    }

    const auto elapsed = std::chrono::steady_clock::now() - started;
    state["timing_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();

    io::save_matrix(background, out / "background.f64");
    io::save_matrix(foreground, out / "foreground.f64");
    io::save_frames(background, ds.height, ds.width, out / "background");
    if (thresholded) {
        io::save_matrix(*thresholded, out / "foreground_thresholded.f64");
        write_viewable_foreground(*thresholded, ds.height, ds.width, out / "foreground");
    } else {
        write_viewable_foreground(foreground, ds.height, ds.width, out / "foreground");
    }
    state["files"] = {{"background", "background.f64"}, {"foreground", "foreground.f64"}};
    if (thresholded) state["files"]["foreground_thresholded"] = "foreground_thresholded.f64";

    std::ofstream(out / "state.json") << state.dump(2) << "\n";
    std::cout << args.method << ": " << state["iterations"] << " iterations in "
              << state["timing_ms"] << " ms\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string manifest;
    std::string run_dir;
    std::string out;
    bool ssim_maps = false;
};

json evaluate_run(const io::Dataset& ds, const fs::path& run_dir, const fs::path& out,
                  bool ssim_maps) {
    if (!ds.ground_truth) {
        throw DataError("evaluate: ground truth required (manifest has no gt_glob)");
    }
    std::ifstream state_in(run_dir / "state.json");
    if (!state_in) throw DataError((run_dir / "state.json").string() + ": cannot open");
    json state;
    state_in >> state;

    const DenseMatrix raw = io::load_matrix(run_dir / "foreground.f64");
    DenseMatrix quality = raw;
    if (state.contains("files") && state["files"].contains("foreground_thresholded")) {
        quality = io::load_matrix(
            run_dir / state["files"]["foreground_thresholded"].get<std::string>());
    }
    if (raw.rows() != ds.pixels() || raw.cols() != ds.n_frames()) {
        throw DataError("evaluate: decomposition geometry does not match the dataset");
    }

    const auto report =
        metrics::evaluate_foreground(raw, quality, *ds.ground_truth, ds.height, ds.width,
                                     ssim_maps);
    fs::create_directories(out);
    metrics::RocResult roc{report.roc, report.auc};
    metrics::write_roc_csv(out / "roc.csv", roc);
    metrics::write_per_frame_csv(out / "per_frame.csv", report);
    if (ssim_maps) {
        DenseMatrix sheet(report.ssim_maps.front().size(),
                          static_cast<Index>(report.ssim_maps.size()));
        for (std::size_t j = 0; j < report.ssim_maps.size(); ++j) {
            DenseMatrix scaled = report.ssim_maps[j];
            for (Index i = 0; i < scaled.size(); ++i) {
                scaled.data()[i] = std::clamp(scaled.data()[i], 0.0, 1.0) * 255.0;
            }
            sheet.set_col(static_cast<Index>(j), io::vectorize(scaled).col_span(0));
        }
        io::save_frames(sheet, report.ssim_maps.front().rows(),
                        report.ssim_maps.front().cols(), out / "ssim_maps", "map_");
    }

    double mse_sum = 0.0, psnr_sum = 0.0, mssim_sum = 0.0;
    Index psnr_finite = 0;
    for (std::size_t j = 0; j < report.frame_mse.size(); ++j) {
        mse_sum += report.frame_mse[j];
        mssim_sum += report.frame_mssim[j];
        if (std::isfinite(report.frame_psnr[j])) {
            psnr_sum += report.frame_psnr[j];
            ++psnr_finite;
        }
    }
    const auto frames = static_cast<double>(report.frame_mse.size());
    json summary;
    summary["method"] = state.value("method", "unknown");
    summary["auc"] = report.auc;
    summary["mean_mse"] = mse_sum / frames;
    summary["mean_psnr_finite"] = psnr_finite > 0 ? psnr_sum / psnr_finite : 0.0;
    summary["psnr_inf_frames"] = report.frame_mse.size() - psnr_finite;
    summary["mean_mssim"] = mssim_sum / frames;
    summary["n_frames"] = report.frame_mse.size();
    summary["iterations"] = state.value("iterations", Index{0});
    summary["svd_count"] = state.value("svd_count", Index{0});
    summary["converged"] = state.value("converged", true);
    summary["timing_ms"] = state.value("timing_ms", Index{0});
    std::ofstream(out / "summary.json") << summary.dump(2) << "\n";
    return summary;
}

int run_evaluate(const EvaluateArgs& args) {
    const io::Dataset ds = io::load_manifest(args.manifest);
    const json summary = evaluate_run(ds, args.run_dir, args.out, args.ssim_maps);
    std::cout << "auc " << summary["auc"] << ", mean mssim " << summary["mean_mssim"] << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
    std::string manifest;
    std::vector<std::string> methods;
    std::string out;
    std::uint64_t seed = 0;
    Index threads = 0;
};

int run_compare(const CompareArgs& args) {
    if (args.methods.empty()) throw ConfigError("compare: no methods given");
    const fs::path out(args.out);
    fs::create_directories(out);

    std::vector<json> rows;
    for (const auto& method : args.methods) {
        DecomposeArgs dec;
        dec.manifest = args.manifest;
        dec.method = method;
        dec.out = (out / method).string();
        dec.seed = args.seed;
        dec.threads = args.threads;
        run_decompose(dec);
        const io::Dataset ds = io::load_manifest(args.manifest);
        rows.push_back(evaluate_run(ds, out / method, out / method / "eval", false));
    }

    std::ofstream csv(out / "compare.csv");
    csv << "method,wall_ms,iterations,svd_count,converged,auc,mean_psnr_finite,"
           "psnr_inf_frames,mean_mssim\n";
    for (const auto& row : rows) {
        csv << row["method"].get<std::string>() << "," << row["timing_ms"] << ","
            << row["iterations"] << "," << row["svd_count"] << ","
            << (row["converged"].get<bool>() ? 1 : 0) << "," << row["auc"] << ","
            << row["mean_psnr_finite"] << "," << row["psnr_inf_frames"] << ","
            << row["mean_mssim"] << "\n";
    }
    std::cout << "wrote " << rows.size() << " rows to " << (out / "compare.csv").string()
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted low-rank background estimation toolkit"};
    app.require_subcommand(0, 1);
    bool print_defaults = false;
    app.add_flag("--print-defaults", print_defaults,
                 "Print all method defaults as JSON and exit");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
    synth_cmd->add_option("--height", synth_args.spec.height);
    synth_cmd->add_option("--width", synth_args.spec.width);
    synth_cmd->add_option("--frames", synth_args.spec.n_frames);
    synth_cmd->add_option("--sprite-size", synth_args.spec.sprite_size);
    synth_cmd->add_option("--noise-sigma", synth_args.spec.noise_sigma);
    synth_cmd->add_option("--illumination", synth_args.spec.illumination);
    synth_cmd->add_option("--seed", synth_args.spec.seed);
    synth_cmd->add_option("--empty-range", synth_args.empty_ranges,
                          "Foreground-free frame range first:last (repeatable)");
    synth_cmd->add_option("--static-range", synth_args.static_range,
                          "Frozen-sprite frame range first:last");

    DecomposeArgs dec_args;
    auto* dec_cmd = app.add_subcommand("decompose", "Run a background/foreground method");
    dec_cmd->add_option("--manifest", dec_args.manifest, "Dataset manifest JSON")->required();
    dec_cmd->add_option("--method", dec_args.method,
                        "wlr-pipeline | wlr | gtls | golub | iealm | apg")
        ->required();
    dec_cmd->add_option("--out", dec_args.out, "Output directory")->required();
    dec_cmd->add_option("--seed", dec_args.seed);
    dec_cmd->add_option("--threads", dec_args.threads);
    dec_cmd->add_option("--param", dec_args.params, "Method parameter key=value (repeatable)");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a decomposition against masks");
    eval_cmd->add_option("--manifest", eval_args.manifest)->required();
    eval_cmd->add_option("--run", eval_args.run_dir, "Decompose output directory")->required();
    eval_cmd->add_option("--out", eval_args.out, "Report directory")->required();
    eval_cmd->add_flag("--ssim-maps", eval_args.ssim_maps, "Also write per-frame SSIM maps");

    CompareArgs cmp_args;
    auto* cmp_cmd = app.add_subcommand("compare", "Decompose and evaluate several methods");
    cmp_cmd->add_option("--manifest", cmp_args.manifest)->required();
    cmp_cmd->add_option("--methods", cmp_args.methods, "Methods to run")
        ->required()
        ->delimiter(',');
    cmp_cmd->add_option("--out", cmp_args.out)->required();
    cmp_cmd->add_option("--seed", cmp_args.seed);
    cmp_cmd->add_option("--threads", cmp_args.threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (print_defaults) {
            std::cout << method_defaults().dump(2) << "\n";
            return kExitOk;
        }
        if (synth_cmd->parsed()) return run_synth(synth_args);
        if (dec_cmd->parsed()) return run_decompose(dec_args);
        if (eval_cmd->parsed()) return run_evaluate(eval_args);
        if (cmp_cmd->parsed()) return run_compare(cmp_args);
        std::cout << app.help();
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}
