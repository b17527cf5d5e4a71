#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "offgrid/array_model.hpp"
#include "offgrid/aspg.hpp"
#include "offgrid/cadmm.hpp"
#include "offgrid/egt.hpp"
#include "offgrid/sdco.hpp"

namespace offgrid {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key = value file with [section] headers; '#' or ';' start a comment.
class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in) {
        KeyValueFile kv;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(strip_comment(line));
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
                section = trim(t.substr(1, t.size() - 2));
                kv.sections_[section];
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            kv.sections_[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
        }
        return kv;
    }

    static KeyValueFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        return parse(in);
    }

    bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
    bool has(const std::string& s, const std::string& k) const {
        auto it = sections_.find(s);
        return it != sections_.end() && it->second.count(k) > 0;
    }

    std::string get_string(const std::string& s, const std::string& k, const std::string& dflt) const {
        auto it = sections_.find(s);
        if (it == sections_.end()) return dflt;
        auto jt = it->second.find(k);
        return jt == it->second.end() ? dflt : jt->second;
    }

    double get_double(const std::string& s, const std::string& k, double dflt) const {
        if (!has(s, k)) return dflt;
        return to_double(sections_.at(s).at(k), s, k);
    }

    int get_int(const std::string& s, const std::string& k, int dflt) const {
        return static_cast<int>(get_double(s, k, dflt));
    }

    std::uint64_t get_u64(const std::string& s, const std::string& k, std::uint64_t dflt) const {
        if (!has(s, k)) return dflt;
        try {
            return std::stoull(sections_.at(s).at(k));
        } catch (const std::exception&) {
            throw ConfigError("config: bad integer for " + s + "." + k);
        }
    }

    std::vector<double> get_list(const std::string& s, const std::string& k,
                                 std::vector<double> dflt = {}) const {
        if (!has(s, k)) return dflt;
        std::vector<double> out;
        for (const auto& item : split(sections_.at(s).at(k))) out.push_back(to_double(item, s, k));
        return out;
    }

    std::vector<std::string> get_names(const std::string& s, const std::string& k) const {
        if (!has(s, k)) return {};
        return split(sections_.at(s).at(k));
    }

    static std::vector<std::string> split(const std::string& v) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream is(v);
        while (std::getline(is, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

private:
    static std::string strip_comment(const std::string& s) {
        const auto pos = s.find_first_of("#;");
        return pos == std::string::npos ? s : s.substr(0, pos);
    }
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }
    static double to_double(const std::string& v, const std::string& s, const std::string& k) {
        std::size_t used = 0;
        double d = 0;
        try {
            d = std::stod(v, &used);
        } catch (const std::exception&) {
            throw ConfigError("config: bad number for " + s + "." + k + ": '" + v + "'");
        }
        if (used != v.size()) throw ConfigError("config: trailing junk in " + s + "." + k + ": '" + v + "'");
        return d;
    }

    std::map<std::string, std::map<std::string, std::string>> sections_;
};

enum class SolverKind { Cadmm, AspgL1, AspgL2, Egt, Sdco, SdcoCt, Music };

inline SolverKind solver_kind_from_name(const std::string& name) {
    if (name == "cadmm") return SolverKind::Cadmm;
    if (name == "aspg_l1") return SolverKind::AspgL1;
    if (name == "aspg_l2") return SolverKind::AspgL2;
    if (name == "egt") return SolverKind::Egt;
    if (name == "sdco") return SolverKind::Sdco;
    if (name == "sdco_ct") return SolverKind::SdcoCt;
    if (name == "music") return SolverKind::Music;
    throw ConfigError("unknown solver name: " + name);
}

struct SolverEntry {
    std::string name;
    SolverKind kind = SolverKind::Cadmm;
    double eta = -1.0;       // < 0: per-measurement rule eta_scale * sigma_n_hat * sqrt(log N / T)
    double eta_scale = 1.0;
    double epsilon = -1.0;   // SDCO; < 0: trace(R)/sqrt(T)
    CadmmConfig cadmm;
    AspgConfig aspg;
    EgtConfig egt;
    SdcoConfig sdco;
};

struct ExperimentConfig {
    ArrayGeometry geometry;
    AngularGrid grid;
    DerivativeModel derivative_model = DerivativeModel::PaperKron;
    std::vector<double> true_thetas;
    double noise_variance = 1.0;
    int snapshots = 100;
    std::vector<double> snr_list;
    int trials = 20;      // desk profile
    int full_trials = 100;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    std::vector<SolverEntry> solvers;
};

inline SolverEntry parse_solver_entry(const KeyValueFile& kv, const std::string& name) {
    SolverEntry e;
    e.name = name;
    e.kind = solver_kind_from_name(name);
    e.eta = kv.get_double(name, "eta", -1.0);
    e.eta_scale = kv.get_double(name, "eta_scale", 1.0);
    switch (e.kind) {
    case SolverKind::Cadmm:
        e.cadmm.rho = kv.get_double(name, "rho", 1.0);
        e.cadmm.max_iters = kv.get_int(name, "max_iters", 5000);
        e.cadmm.tol_primal = kv.get_double(name, "tol_primal", 1e-6);
        e.cadmm.tol_dual = kv.get_double(name, "tol_dual", 1e-6);
        break;
    case SolverKind::AspgL1:
    case SolverKind::AspgL2:
        e.aspg.variant = e.kind == SolverKind::AspgL1 ? PenaltyVariant::L1 : PenaltyVariant::L2;
        e.aspg.mu = kv.get_double(name, "mu", 1e-8);
        e.aspg.gamma = kv.get_double(name, "gamma", 0.5);
        e.aspg.alpha0 = kv.get_double(name, "alpha0", 1.0);
        e.aspg.max_iters = kv.get_int(name, "max_iters", 2000);
        e.aspg.tol = kv.get_double(name, "tol", 1e-8);
        break;
    case SolverKind::Egt:
        e.egt.max_iters = kv.get_int(name, "max_iters", 500);
        e.egt.tol_gap = kv.get_double(name, "tol_gap", 1e-6);
        e.egt.s_max = kv.get_double(name, "s_max", 0.0);
        e.egt.mu_scale = kv.get_double(name, "mu_scale", 1.0);
        break;
    case SolverKind::Sdco:
    case SolverKind::SdcoCt:
        e.epsilon = kv.get_double(name, "epsilon", -1.0);
        e.sdco.mu0 = kv.get_double(name, "mu0", 1.0);
        e.sdco.max_iters = kv.get_int(name, "max_iters", 1000);
        e.sdco.tol = kv.get_double(name, "tol", 1e-8);
        e.sdco.shrink_rule = kv.get_string(name, "shrink_rule", "paper") == "prox"
                                 ? ShrinkRule::ProxExact
                                 : ShrinkRule::Paper;
        e.sdco.continuation_rounds =
            e.kind == SolverKind::SdcoCt ? kv.get_int(name, "rounds", 8) : 1;
        e.sdco.continuation_alpha = kv.get_double(name, "alpha", 0.5);
        break;
    case SolverKind::Music:
        break;
    }
    return e;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    const KeyValueFile kv = KeyValueFile::load(path);
    ExperimentConfig cfg;

    if (kv.has("array", "positions")) {
        cfg.geometry.sensor_positions = kv.get_list("array", "positions");
    } else {
        cfg.geometry = ArrayGeometry::ula(kv.get_int("array", "sensors", 8),
                                          kv.get_double("array", "spacing", 0.5));
    }
    cfg.geometry.validate();

    cfg.grid = AngularGrid::uniform(kv.get_double("grid", "min", -90.0),
                                    kv.get_double("grid", "max", 90.0),
                                    kv.get_double("grid", "spacing", 0.5));

    const std::string deriv = kv.get_string("grid", "derivative", "paper");
    if (deriv == "paper") cfg.derivative_model = DerivativeModel::PaperKron;
    else if (deriv == "product") cfg.derivative_model = DerivativeModel::ProductRule;
    else throw ConfigError("config: grid.derivative must be 'paper' or 'product'");

    cfg.true_thetas = kv.get_list("scenario", "thetas");
    if (cfg.true_thetas.empty()) throw ConfigError("config: scenario.thetas is required");
    cfg.noise_variance = kv.get_double("scenario", "noise_variance", 1.0);
    cfg.snapshots = kv.get_int("scenario", "snapshots", 100);
    if (cfg.snapshots < 1) throw ConfigError("config: scenario.snapshots must be >= 1");

    cfg.snr_list = kv.get_list("experiment", "snr_list");
    if (cfg.snr_list.empty()) throw ConfigError("config: experiment.snr_list is required");
    cfg.trials = kv.get_int("experiment", "trials", 20);
    if (cfg.trials < 1) throw ConfigError("config: experiment.trials must be >= 1");
    cfg.full_trials = kv.get_int("experiment", "full_trials", 100);
    cfg.base_seed = kv.get_u64("experiment", "base_seed", 1);
    cfg.output_dir = kv.get_string("experiment", "output_dir", "out");

    const auto names = kv.get_names("experiment", "solvers");
    if (names.empty()) throw ConfigError("config: experiment.solvers is required");
    for (const auto& n : names) {
        if (!kv.has_section(n)) throw ConfigError("config: solver '" + n + "' has no section");
        cfg.solvers.push_back(parse_solver_entry(kv, n));
    }
    return cfg;
}

} // namespace offgrid
