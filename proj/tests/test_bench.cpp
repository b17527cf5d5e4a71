#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "offgrid/bench.hpp"

using namespace offgrid;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_config(const fs::path& dir, const std::string& body) {
    fs::create_directories(dir);
    const fs::path p = dir / "exp.cfg";
    std::ofstream out(p);
    out << body;
    out.close();
    return p.string();
}

const char* tiny_config = R"(# tiny experiment
[array]
sensors = 4
spacing = 0.5

[grid]
min = -20
max = 20
spacing = 0.5

[scenario]
thetas = -5.2, 6.1
noise_variance = 1.0
snapshots = 64

[experiment]
snr_list = 4
trials = 2
base_seed = 99
solvers = cadmm, music
output_dir = OUTDIR

[cadmm]
max_iters = 400
tol_primal = 1e-5
tol_dual = 1e-5

[music]
)";

} // namespace

TEST_CASE("csv quoting") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_quote("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("config parsing") {
    const fs::path dir = fs::temp_directory_path() / "offgrid_cfg_test";

    SUBCASE("full parse") {
        const auto path = write_config(dir, tiny_config);
        const ExperimentConfig cfg = load_experiment_config(path);
        CHECK(cfg.geometry.size() == 4);
        CHECK(cfg.grid.size() == 80);
        CHECK(cfg.true_thetas.size() == 2);
        CHECK(cfg.snapshots == 64);
        CHECK(cfg.snr_list == std::vector<double>{4.0});
        CHECK(cfg.trials == 2);
        CHECK(cfg.base_seed == 99);
        REQUIRE(cfg.solvers.size() == 2);
        CHECK(cfg.solvers[0].kind == SolverKind::Cadmm);
        CHECK(cfg.solvers[0].cadmm.max_iters == 400);
        CHECK(cfg.solvers[1].kind == SolverKind::Music);
    }

    SUBCASE("missing solver section rejected") {
        const auto path = write_config(dir, "[scenario]\nthetas = 1\n[experiment]\n"
                                            "snr_list = 0\nsolvers = cadmm\n");
        CHECK_THROWS_AS(load_experiment_config(path), ConfigError);
    }

    SUBCASE("bad number rejected") {
        const auto path =
            write_config(dir, "[scenario]\nthetas = banana\n[experiment]\nsnr_list = 0\n");
        CHECK_THROWS_AS(load_experiment_config(path), ConfigError);
    }

    SUBCASE("unknown solver rejected") {
        const auto path = write_config(dir, "[scenario]\nthetas = 1\n[experiment]\n"
                                            "snr_list = 0\nsolvers = warp\n[warp]\n");
        CHECK_THROWS_AS(load_experiment_config(path), ConfigError);
    }

    fs::remove_all(dir);
}

TEST_CASE("trace export") {
    const fs::path dir = fs::temp_directory_path() / "offgrid_trace_test";
    fs::create_directories(dir);
    const std::string path = (dir / "trace.csv").string();

    SUBCASE("empty trace writes the header only") {
        SolverResult res;
        trace_export(res, path);
        const std::string text = slurp(path);
        CHECK(text == "iter,objective,residual_primal,residual_dual,gap,mu1,mu2,step\n");
    }

    SUBCASE("five iterations give six lines and round-trip exactly") {
        SolverResult res;
        res.iterations = 5;
        for (int i = 0; i < 5; ++i) {
            res.objective_trace.push_back(1.0 / (i + 1));
            res.residual_primal_trace.push_back(std::pow(0.1, i));
            res.residual_dual_trace.push_back(std::sqrt(2.0) * (i + 1));
        }
        trace_export(res, path);

        std::ifstream in(path, std::ios::binary);
        const auto rows = csv_parse(in);
        REQUIRE(rows.size() == 6); // header + 5
        for (int i = 0; i < 5; ++i) {
            const auto& row = rows[i + 1];
            REQUIRE(row.size() == 8);
            CHECK(std::stoi(row[0]) == i + 1);
            CHECK(std::stod(row[1]) == res.objective_trace[i]);
            CHECK(std::stod(row[2]) == res.residual_primal_trace[i]);
            CHECK(std::stod(row[3]) == res.residual_dual_trace[i]);
            CHECK(row[4].empty()); // gap column unused by this solver
            CHECK(row[7].empty());
        }
    }

    fs::remove_all(dir);
}

TEST_CASE("bench run produces deterministic outputs and consistent accounting") {
    const fs::path base = fs::temp_directory_path() / "offgrid_bench_test";
    fs::remove_all(base);
    const auto cfg_path = write_config(base, tiny_config);

    ExperimentConfig cfg = load_experiment_config(cfg_path);
    cfg.output_dir = (base / "run1").string();
    BenchOptions opt;
    opt.threads = 2;
    const BenchSummary s1 = run_experiment(cfg, opt);
    CHECK(s1.total_runs == 2 * 2); // trials x solvers x snrs
    CHECK(s1.aborts == 0);

    cfg.output_dir = (base / "run2").string();
    const BenchSummary s2 = run_experiment(cfg, opt);

    SUBCASE("rmse.csv shape") {
        std::ifstream in(s1.rmse_csv_path, std::ios::binary);
        const auto rows = csv_parse(in);
        REQUIRE(rows.size() == 2); // header + one snr row
        CHECK(rows[0] == std::vector<std::string>{"snr_db", "cadmm", "music"});
        CHECK(rows[1].size() == 3);
        CHECK(std::stod(rows[1][1]) >= 0.0);
    }

    SUBCASE("byte-identical outputs under the same seed") {
        CHECK(slurp(s1.rmse_csv_path) == slurp(s2.rmse_csv_path));
        CHECK(slurp(s1.results_json_path) == slurp(s2.results_json_path));
        CHECK(slurp((base / "run1/traces/cadmm_snr4_trial0.csv").string()) ==
              slurp((base / "run2/traces/cadmm_snr4_trial0.csv").string()));
    }

    SUBCASE("trace and spectra files exist") {
        CHECK(fs::exists(base / "run1/traces/cadmm_snr4_trial0.csv"));
        CHECK(fs::exists(base / "run1/traces/cadmm_snr4_trial1.csv"));
        CHECK(fs::exists(base / "run1/spectra/cadmm_snr4.csv"));
        CHECK(fs::exists(base / "run1/spectra/music_snr4.csv"));
        // music has no iteration trace
        CHECK_FALSE(fs::exists(base / "run1/traces/music_snr4_trial0.csv"));
    }

    SUBCASE("results.json records the run") {
        nlohmann::json doc = nlohmann::json::parse(slurp(s1.results_json_path));
        CHECK(doc["schema_version"] == 1);
        CHECK(doc["trials"] == 2);
        CHECK(doc["runs"]["4"]["cadmm"]["successes"] == 2);
        CHECK(doc["runs"]["4"]["cadmm"]["rmse"].is_number());
    }

    fs::remove_all(base);
}

TEST_CASE("bench records solver aborts and reconciles counts") {
    // four sources with a four-sensor array: MUSIC needs K < M and aborts
    const std::string body = R"(
[array]
sensors = 4
[grid]
min = -20
max = 20
spacing = 1.0
[scenario]
thetas = -12, -4, 3, 11
snapshots = 32
[experiment]
snr_list = 6
trials = 2
base_seed = 7
solvers = music
output_dir = OUTDIR
[music]
)";
    const fs::path base = fs::temp_directory_path() / "offgrid_abort_test";
    fs::remove_all(base);
    const auto cfg_path = write_config(base, body);
    ExperimentConfig cfg = load_experiment_config(cfg_path);
    cfg.output_dir = (base / "out").string();

    const BenchSummary summary = run_experiment(cfg, {});
    CHECK(summary.total_runs == 2);
    CHECK(summary.aborts == 2);

    nlohmann::json doc = nlohmann::json::parse(slurp(summary.results_json_path));
    CHECK(doc["runs"]["6"]["music"]["successes"] == 0);
    CHECK(doc["runs"]["6"]["music"]["aborts"].size() == 2);
    // successes + aborts reconcile with trials x solvers x snrs
    const int successes = doc["runs"]["6"]["music"]["successes"];
    CHECK(successes + summary.aborts == summary.total_runs);

    fs::remove_all(base);
}

TEST_CASE("snapshots binary round trip") {
    const fs::path dir = fs::temp_directory_path() / "offgrid_bin_test";
    fs::create_directories(dir);
    GaussianRng rng(12);
    CMatrix snaps(4, 9);
    for (int i = 0; i < 4; ++i)
        for (int t = 0; t < 9; ++t) snaps(i, t) = rng.circular(1.0);
    const std::string path = (dir / "snaps.bin").string();
    write_snapshots_bin(path, snaps);
    CHECK(fs::file_size(path) == 4 * 9 * 2 * sizeof(double));
    const CMatrix back = read_snapshots_bin(path, 4, 9);
    CHECK((back - snaps).norm() == 0.0);
    fs::remove_all(dir);
}
