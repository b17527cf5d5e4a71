#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "offgrid/array_model.hpp"
#include "offgrid/aspg.hpp"
#include "offgrid/cadmm.hpp"
#include "offgrid/config.hpp"
#include "offgrid/csv.hpp"
#include "offgrid/egt.hpp"
#include "offgrid/metrics.hpp"
#include "offgrid/prox.hpp"
#include "offgrid/rng.hpp"
#include "offgrid/sdco.hpp"
#include "offgrid/signal.hpp"

namespace offgrid {

struct BenchOptions {
    bool full = false;   // paper-scale trial count
    bool strict = false; // handled by the CLI exit code
    int threads = 0;     // 0 = hardware concurrency
    bool write_traces = true;
};

struct RunRecord {
    bool aborted = false;
    std::string diagnostic;
    DoAEstimate estimate;
    int iterations = 0;
    double eta_used = 0.0;
    double recon_error = 0.0;
};

struct BenchSummary {
    int total_runs = 0;
    int aborts = 0;
    std::string results_json_path;
    std::string rmse_csv_path;
};

// eta = c * sigma_n_hat * sqrt(log N) / sqrt(T), the usual noise-scaled
// group-lasso weight.
inline double default_eta(double noise_floor, int grid_size, int snapshots, double scale) {
    return scale * std::sqrt(noise_floor) * std::sqrt(std::log(static_cast<double>(grid_size))) /
           std::sqrt(static_cast<double>(snapshots));
}

// Interleaved re/im doubles, column-major; debugging dump format.
inline void write_snapshots_bin(const std::string& path, const CMatrix& snaps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_snapshots_bin: cannot open " + path);
    for (Eigen::Index c = 0; c < snaps.cols(); ++c)
        for (Eigen::Index r = 0; r < snaps.rows(); ++r) {
            const double re = snaps(r, c).real(), im = snaps(r, c).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof(double));
            out.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
}

inline CMatrix read_snapshots_bin(const std::string& path, int rows, int cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_snapshots_bin: cannot open " + path);
    CMatrix snaps(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) {
            double re = 0, im = 0;
            in.read(reinterpret_cast<char*>(&re), sizeof(double));
            in.read(reinterpret_cast<char*>(&im), sizeof(double));
            snaps(r, c) = Complex(re, im);
        }
    if (!in) throw std::runtime_error("read_snapshots_bin: truncated file " + path);
    return snaps;
}

// Group-norm profile of a solver iterate over the grid, normalized to peak 1;
// the power-versus-angle spectrum the experiment figures use.
inline RVector solution_spectrum(const RVector& x_hat) {
    const Eigen::Index n = group_count(x_hat);
    RVector spec(n);
    for (Eigen::Index i = 0; i < n; ++i) spec[i] = group_norm(x_hat, i);
    const double peak = spec.maxCoeff();
    if (peak > 0.0) spec /= peak;
    return spec;
}

inline void write_spectrum_csv(const std::string& path, const AngularGrid& grid,
                               const RVector& spectrum) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_spectrum_csv: cannot open " + path);
    out << "angle_deg,power\n";
    const double peak = spectrum.maxCoeff();
    for (int i = 0; i < grid.size(); ++i)
        out << csv_row({format_double(grid.phi[i]),
                        format_double(peak > 0.0 ? spectrum[i] / peak : 0.0)});
}

struct SolverRunContext {
    const Dictionary& dict;
    const ConstraintMatrix& cm;
    const CadmmCache* cadmm_cache; // may be null
    double op_norm_g;
    int snapshots;
    int sources;
};

// Runs one solver entry on one measurement, returning the estimate and trace.
inline RunRecord run_solver_entry(const SolverEntry& entry, const Measurement& meas,
                                  const SolverRunContext& ctx, SolverResult* trace_out = nullptr) {
    RunRecord rec;
    const double eta = entry.eta > 0.0
                           ? entry.eta
                           : default_eta(meas.noise_floor, ctx.dict.atoms(), ctx.snapshots,
                                         entry.eta_scale);
    rec.eta_used = eta;
    SolverResult res;
    try {
        switch (entry.kind) {
        case SolverKind::Cadmm: {
            CadmmConfig c = entry.cadmm;
            c.eta = eta;
            res = solve_cadmm(meas, ctx.dict, c, ctx.cadmm_cache);
            break;
        }
        case SolverKind::AspgL1:
        case SolverKind::AspgL2: {
            AspgConfig c = entry.aspg;
            c.eta = eta;
            res = solve_aspg(meas, ctx.dict, c);
            break;
        }
        case SolverKind::Egt: {
            EgtConfig c = entry.egt;
            c.eta = eta;
            c.op_norm_g = ctx.op_norm_g;
            res = solve_egt(meas, ctx.dict, c);
            break;
        }
        case SolverKind::Sdco:
        case SolverKind::SdcoCt: {
            SdcoConfig c = entry.sdco;
            c.epsilon = entry.epsilon > 0.0 ? entry.epsilon
                                            : default_sdco_epsilon(meas, ctx.snapshots);
            res = entry.kind == SolverKind::SdcoCt
                      ? solve_sdco_continuation(meas, ctx.dict, ctx.cm, c)
                      : solve_sdco(meas, ctx.dict, ctx.cm, c);
            break;
        }
        case SolverKind::Music: {
            MusicResult mr = music_spectrum(meas.sample_cov, ctx.dict.geometry, ctx.dict.grid,
                                            ctx.sources);
            rec.estimate = mr.estimate;
            rec.iterations = 0;
            if (trace_out) *trace_out = SolverResult{};
            return rec;
        }
        }
    } catch (const std::exception& ex) {
        rec.aborted = true;
        rec.diagnostic = ex.what();
        if (trace_out) *trace_out = SolverResult{};
        return rec;
    }

    rec.iterations = res.iterations;
    if (res.aborted) {
        rec.aborted = true;
        rec.diagnostic = res.diagnostic;
    } else {
        rec.estimate = recover_doas(res.x_hat, ctx.dict.grid, ctx.sources);
    }
    if (trace_out) *trace_out = std::move(res);
    return rec;
}

inline BenchSummary run_experiment(const ExperimentConfig& cfg, const BenchOptions& opt = {}) {
    namespace fs = std::filesystem;
    const int trials = opt.full ? cfg.full_trials : cfg.trials;
    const int n_snr = static_cast<int>(cfg.snr_list.size());
    const int n_solvers = static_cast<int>(cfg.solvers.size());
    const int sources = static_cast<int>(cfg.true_thetas.size());

    fs::create_directories(cfg.output_dir);
    fs::create_directories(cfg.output_dir + "/traces");
    fs::create_directories(cfg.output_dir + "/spectra");

    const Dictionary dict = build_dictionary(cfg.geometry, cfg.grid, cfg.derivative_model);
    const ConstraintMatrix cm = constraint_matrix(cfg.grid);
    const double op_norm_g = operator_norm(dict.G);

    // one ridge factorization per distinct rho among cadmm entries
    std::vector<CadmmCache> caches;
    for (const auto& e : cfg.solvers)
        if (e.kind == SolverKind::Cadmm) {
            bool found = false;
            for (const auto& c : caches) found = found || c.rho == e.cadmm.rho;
            if (!found) caches.push_back(build_cadmm_cache(dict, e.cadmm.rho));
        }
    const auto cache_for = [&](double rho) -> const CadmmCache* {
        for (const auto& c : caches)
            if (c.rho == rho) return &c;
        return nullptr;
    };

    // results[si][t][sv]
    std::vector<std::vector<std::vector<RunRecord>>> results(
        n_snr, std::vector<std::vector<RunRecord>>(trials, std::vector<RunRecord>(n_solvers)));

    struct Cell { int si, t; };
    std::vector<Cell> cells;
    for (int si = 0; si < n_snr; ++si)
        for (int t = 0; t < trials; ++t) cells.push_back({si, t});

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        std::size_t idx;
        while ((idx = next.fetch_add(1)) < cells.size()) {
            const auto [si, t] = cells[idx];
            const std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(si), t);
            const Scenario sc = Scenario::at_snr(cfg.true_thetas, cfg.snr_list[si],
                                                 cfg.noise_variance, cfg.snapshots, seed);
            const Measurement meas = assemble_measurement(
                sample_covariance(simulate_snapshots(sc, cfg.geometry)));

            for (int sv = 0; sv < n_solvers; ++sv) {
                const SolverEntry& entry = cfg.solvers[sv];
                const SolverRunContext ctx{dict, cm,
                                           entry.kind == SolverKind::Cadmm
                                               ? cache_for(entry.cadmm.rho)
                                               : nullptr,
                                           op_norm_g, cfg.snapshots, sources};
                SolverResult trace;
                RunRecord rec = run_solver_entry(entry, meas, ctx, &trace);
                if (!rec.aborted)
                    rec.recon_error = reconstruction_error_single(rec.estimate, cfg.true_thetas);

                const std::string tag = entry.name + "_snr" + format_double(cfg.snr_list[si]);
                if (opt.write_traces && entry.kind != SolverKind::Music)
                    trace_export(trace, cfg.output_dir + "/traces/" + tag + "_trial" +
                                            std::to_string(t) + ".csv");
                if (t == 0) {
                    RVector spec = RVector::Zero(cfg.grid.size());
                    if (!rec.aborted) {
                        spec = entry.kind == SolverKind::Music
                                   ? music_spectrum(meas.sample_cov, cfg.geometry, cfg.grid,
                                                    sources)
                                         .spectrum
                                   : solution_spectrum(trace.x_hat);
                    }
                    write_spectrum_csv(cfg.output_dir + "/spectra/" + tag + ".csv", cfg.grid, spec);
                }
                results[si][t][sv] = std::move(rec);
            }
        }
    };

    unsigned n_threads = opt.threads > 0 ? static_cast<unsigned>(opt.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, cells.size());
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    // sequential reduction in fixed order keeps outputs byte-identical
    BenchSummary summary;
    summary.total_runs = n_snr * trials * n_solvers;

    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["base_seed"] = cfg.base_seed;
    doc["trials"] = trials;
    doc["snapshots"] = cfg.snapshots;
    doc["grid_size"] = cfg.grid.size();
    doc["sensors"] = cfg.geometry.size();
    doc["true_thetas"] = cfg.true_thetas;
    doc["snr_list"] = cfg.snr_list;

    std::ofstream rmse_csv(cfg.output_dir + "/rmse.csv", std::ios::binary);
    if (!rmse_csv) throw std::runtime_error("run_experiment: cannot write rmse.csv");
    std::vector<std::string> header{"snr_db"};
    for (const auto& e : cfg.solvers) header.push_back(e.name);
    rmse_csv << csv_row(header);

    nlohmann::json runs = nlohmann::json::object();
    for (int si = 0; si < n_snr; ++si) {
        std::vector<std::string> row{format_double(cfg.snr_list[si])};
        nlohmann::json per_snr = nlohmann::json::object();
        for (int sv = 0; sv < n_solvers; ++sv) {
            std::vector<DoAEstimate> ests;
            nlohmann::json aborts = nlohmann::json::array();
            double recon_acc = 0.0, eta_acc = 0.0;
            long iter_acc = 0;
            for (int t = 0; t < trials; ++t) {
                const RunRecord& rec = results[si][t][sv];
                if (rec.aborted) {
                    aborts.push_back({{"trial", t}, {"diagnostic", rec.diagnostic}});
                    ++summary.aborts;
                } else {
                    ests.push_back(rec.estimate);
                    recon_acc += rec.recon_error;
                    iter_acc += rec.iterations;
                    eta_acc += rec.eta_used;
                }
            }
            const int ok = static_cast<int>(ests.size());
            const double rmse_val = ok > 0 ? rmse(ests, cfg.true_thetas)
                                           : std::numeric_limits<double>::quiet_NaN();
            row.push_back(format_double(rmse_val));
            nlohmann::json js;
            js["rmse"] = rmse_val;
            js["recon_error_mean"] = ok > 0 ? recon_acc / ok : 0.0;
            js["mean_iterations"] = ok > 0 ? static_cast<double>(iter_acc) / ok : 0.0;
            js["eta_mean"] = ok > 0 ? eta_acc / ok : 0.0;
            js["successes"] = ok;
            js["aborts"] = aborts;
            per_snr[cfg.solvers[sv].name] = js;
        }
        rmse_csv << csv_row(row);
        runs[format_double(cfg.snr_list[si])] = per_snr;
    }
    rmse_csv.close();
    doc["runs"] = runs;

    std::ofstream json_out(cfg.output_dir + "/results.json", std::ios::binary);
    if (!json_out) throw std::runtime_error("run_experiment: cannot write results.json");
    json_out << doc.dump(2) << "\n";

    summary.results_json_path = cfg.output_dir + "/results.json";
    summary.rmse_csv_path = cfg.output_dir + "/rmse.csv";
    return summary;
}

} // namespace offgrid
