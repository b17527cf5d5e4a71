#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "offgrid/offgrid.hpp"

namespace fs = std::filesystem;
using namespace offgrid;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string solver_name;
    double snr = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
};

double pick_snr(const ExperimentConfig& cfg, const CommonArgs& args) {
    return std::isnan(args.snr) ? cfg.snr_list.front() : args.snr;
}

std::uint64_t pick_seed(const ExperimentConfig& cfg, const CommonArgs& args) {
    return args.seed_set ? args.seed : cfg.base_seed;
}

Measurement make_measurement(const ExperimentConfig& cfg, double snr, std::uint64_t seed,
                             CMatrix* snapshots_out = nullptr) {
    const Scenario sc =
        Scenario::at_snr(cfg.true_thetas, snr, cfg.noise_variance, cfg.snapshots, seed);
    const CMatrix snaps = simulate_snapshots(sc, cfg.geometry);
    if (snapshots_out) *snapshots_out = snaps;
    return assemble_measurement(sample_covariance(snaps));
}

const SolverEntry& find_solver(const ExperimentConfig& cfg, const std::string& name) {
    for (const auto& e : cfg.solvers)
        if (e.name == name) return e;
    throw ConfigError("solver '" + name + "' is not configured in this experiment");
}

int cmd_simulate(const ExperimentConfig& cfg, const CommonArgs& args) {
    const double snr = pick_snr(cfg, args);
    const std::uint64_t seed = pick_seed(cfg, args);
    const std::string out = args.out_dir.empty() ? cfg.output_dir : args.out_dir;
    fs::create_directories(out);

    CMatrix snaps;
    const Measurement meas = make_measurement(cfg, snr, seed, &snaps);
    write_snapshots_bin(out + "/snapshots.bin", snaps);

    nlohmann::json meta;
    meta["sensors"] = cfg.geometry.size();
    meta["snapshots"] = cfg.snapshots;
    meta["snr_db"] = snr;
    meta["seed"] = seed;
    meta["noise_floor"] = meas.noise_floor;
    meta["layout"] = "column-major, interleaved re/im float64";
    std::ofstream(out + "/snapshots.json") << meta.dump(2) << "\n";

    std::printf("wrote %s/snapshots.bin (%d x %d) and snapshots.json, noise floor %.6f\n",
                out.c_str(), cfg.geometry.size(), cfg.snapshots, meas.noise_floor);
    return 0;
}

int cmd_solve(const ExperimentConfig& cfg, const CommonArgs& args) {
    const SolverEntry& entry = find_solver(cfg, args.solver_name);
    const double snr = pick_snr(cfg, args);
    const std::uint64_t seed = pick_seed(cfg, args);
    const std::string out = args.out_dir.empty() ? cfg.output_dir : args.out_dir;
    fs::create_directories(out);

    const Dictionary dict = build_dictionary(cfg.geometry, cfg.grid, cfg.derivative_model);
    const ConstraintMatrix cm = constraint_matrix(cfg.grid);
    const Measurement meas = make_measurement(cfg, snr, seed);

    const SolverRunContext ctx{dict, cm, nullptr, 0.0, cfg.snapshots,
                               static_cast<int>(cfg.true_thetas.size())};
    SolverResult trace;
    const RunRecord rec = run_solver_entry(entry, meas, ctx, &trace);

    if (rec.aborted) {
        std::printf("solver %s aborted: %s\n", entry.name.c_str(), rec.diagnostic.c_str());
        return 1;
    }
    const std::string trace_path = out + "/" + entry.name + "_trace.csv";
    trace_export(trace, trace_path);

    std::printf("solver %s at SNR %g dB (seed %llu): %d iterations, eta %.6g\n",
                entry.name.c_str(), snr, static_cast<unsigned long long>(seed), rec.iterations,
                rec.eta_used);
    for (std::size_t i = 0; i < rec.estimate.thetas.size(); ++i)
        std::printf("  source %zu: theta %.4f deg (power %.4f)\n", i + 1, rec.estimate.thetas[i],
                    rec.estimate.powers[i]);
    std::printf("trace: %s\n", trace_path.c_str());
    return 0;
}

int cmd_spectrum(const ExperimentConfig& cfg, const CommonArgs& args) {
    const double snr = pick_snr(cfg, args);
    const std::uint64_t seed = pick_seed(cfg, args);
    const std::string out = args.out_dir.empty() ? cfg.output_dir : args.out_dir;
    fs::create_directories(out);

    const Dictionary dict = build_dictionary(cfg.geometry, cfg.grid, cfg.derivative_model);
    const ConstraintMatrix cm = constraint_matrix(cfg.grid);
    const Measurement meas = make_measurement(cfg, snr, seed);
    const int sources = static_cast<int>(cfg.true_thetas.size());

    int failures = 0;
    for (const auto& entry : cfg.solvers) {
        if (!args.solver_name.empty() && entry.name != args.solver_name) continue;
        const SolverRunContext ctx{dict, cm, nullptr, 0.0, cfg.snapshots, sources};
        SolverResult trace;
        const RunRecord rec = run_solver_entry(entry, meas, ctx, &trace);
        if (rec.aborted) {
            std::printf("solver %s aborted: %s\n", entry.name.c_str(), rec.diagnostic.c_str());
            ++failures;
            continue;
        }
        const RVector spec =
            entry.kind == SolverKind::Music
                ? music_spectrum(meas.sample_cov, cfg.geometry, cfg.grid, sources).spectrum
                : solution_spectrum(trace.x_hat);
        const std::string path = out + "/" + entry.name + "_spectrum.csv";
        write_spectrum_csv(path, cfg.grid, spec);
        std::printf("wrote %s\n", path.c_str());
    }
    return failures > 0 ? 1 : 0;
}

int cmd_bench(ExperimentConfig cfg, const CommonArgs& args, bool full, bool strict, int threads) {
    if (args.seed_set) cfg.base_seed = args.seed;
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;

    BenchOptions opt;
    opt.full = full;
    opt.strict = strict;
    opt.threads = threads;
    const BenchSummary summary = run_experiment(cfg, opt);

    std::printf("bench: %d runs, %d aborted; results in %s and %s\n", summary.total_runs,
                summary.aborts, summary.rmse_csv_path.c_str(), summary.results_json_path.c_str());
    if (summary.aborts > 0) {
        std::printf("warning: %d solver runs aborted (see results.json)\n", summary.aborts);
        if (strict) return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"off-grid DoA group-sparsity solver bench"};
    app.require_subcommand(1);

    CommonArgs args;
    bool full = false, strict = false;
    int threads = 0;

    const auto add_common = [&](CLI::App* sub, bool with_solver) {
        sub->add_option("--config", args.config_path, "experiment config file")->required();
        if (with_solver) sub->add_option("--solver", args.solver_name, "solver name");
        auto* seed_opt = sub->add_option("--seed", args.seed, "seed override");
        seed_opt->each([&](const std::string&) { args.seed_set = true; });
        sub->add_option("--snr", args.snr, "SNR in dB (default: first of snr_list)");
        sub->add_option("--out", args.out_dir, "output directory override");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "dump snapshots for one scenario");
    add_common(simulate, false);

    CLI::App* solve = app.add_subcommand("solve", "run one solver on one instance");
    add_common(solve, true);

    CLI::App* bench = app.add_subcommand("bench", "Monte-Carlo sweep over the SNR list");
    add_common(bench, false);
    bench->add_flag("--full", full, "paper-scale trial count");
    bench->add_flag("--strict", strict, "exit nonzero if any solver run aborts");
    bench->add_option("--threads", threads, "worker threads (default: hardware)");

    CLI::App* spectrum = app.add_subcommand("spectrum", "export normalized spectra");
    add_common(spectrum, true);

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = load_experiment_config(args.config_path);
        if (simulate->parsed()) return cmd_simulate(cfg, args);
        if (solve->parsed()) {
            if (args.solver_name.empty()) {
                std::fprintf(stderr, "solve: --solver is required\n");
                return 1;
            }
            return cmd_solve(cfg, args);
        }
        if (spectrum->parsed()) return cmd_spectrum(cfg, args);
        if (bench->parsed()) return cmd_bench(cfg, args, full, strict, threads);
    } catch (const ConfigError& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
