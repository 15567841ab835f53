#pragma once

// File-driven experiment runner behind the command line: parses a flat JSON
// config, dispatches one experiment, and writes CSV/JSON artifacts whose
// names derive from (experiment, seed). Exit contract: 0 pass, 2 acceptance
// failure; configuration and runtime errors are thrown and mapped to 1 by the
// caller.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dyadic/analysis.hpp"
#include "dyadic/io.hpp"
#include "dyadic/version.hpp"

namespace dyadic {

struct ExperimentConfig {
    std::string experiment;
    TreeConfig tree;
    ModelKind model = ModelKind::ItoLinear;
    Scheme scheme = Scheme::EulerMaruyama;
    double t0 = 0.0;
    double t_end = 0.1;
    double dt = 1e-4;
    std::uint64_t seed = 1;
    std::size_t n_paths = 1;
    QMode qmatrix_mode = QMode::Leaky;
    unsigned max_workers = 0;  // 0: DYADIC_MAX_WORKERS env or hardware count

    std::string initial_kind = "unit_node";  // zero | unit_node | random_l2 | values
    NodeId initial_node = 1;
    std::vector<double> initial_values;

    double z_threshold = 3.0;
    double familywise_alpha = 0.001;
    std::vector<double> check_times{0.02, 0.05};
    double tv_tolerance = 0.01;
    double profile_tol = 1e-12;
    double profile_t0 = -1.0;

    std::string output_dir = ".";
};

namespace detail {

inline ModelKind parse_model(const std::string& name) {
    if (name == "deterministic-nonlinear") return ModelKind::DeterministicNonlinear;
    if (name == "ito-nonlinear") return ModelKind::ItoNonlinear;
    if (name == "ito-linear") return ModelKind::ItoLinear;
    if (name == "stratonovich-nonlinear") return ModelKind::StratonovichNonlinear;
    if (name == "stratonovich-linear") return ModelKind::StratonovichLinear;
    throw config_error("model: unknown kind '" + name + "'");
}

inline Scheme parse_scheme(const std::string& name) {
    if (name == "euler-maruyama") return Scheme::EulerMaruyama;
    if (name == "heun") return Scheme::Heun;
    throw config_error("scheme: unknown scheme '" + name + "'");
}

inline QMode parse_qmode(const std::string& name) {
    if (name == "leaky") return QMode::Leaky;
    if (name == "conservative") return QMode::Conservative;
    throw config_error("qmatrix_mode: unknown mode '" + name + "'");
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(std::string(key) + ": invalid value type");
    }
}

} // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (!j.contains("experiment") || !j.at("experiment").is_string())
        throw config_error("experiment: missing or not a string");
    cfg.experiment = j.at("experiment").get<std::string>();

    cfg.tree.max_generation = detail::get_or(j, "max_generation", 2);
    cfg.tree.arity = detail::get_or(j, "arity", 2);
    cfg.tree.sigma = detail::get_or(j, "sigma", 1.0);
    if (j.contains("coeff_values"))
        cfg.tree.law = ExplicitLaw{j.at("coeff_values").get<std::vector<double>>()};
    else
        cfg.tree.law = GeometricLaw{detail::get_or(j, "coeff_base", 2.0)};

    cfg.model = detail::parse_model(detail::get_or<std::string>(j, "model", "ito-linear"));
    cfg.scheme = detail::parse_scheme(detail::get_or<std::string>(j, "scheme", "euler-maruyama"));
    cfg.t0 = detail::get_or(j, "t0", 0.0);
    cfg.t_end = detail::get_or(j, "t_end", 0.1);
    cfg.dt = detail::get_or(j, "dt", 1e-4);
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    cfg.n_paths = detail::get_or<std::size_t>(j, "n_paths", 1);
    cfg.qmatrix_mode = detail::parse_qmode(detail::get_or<std::string>(j, "qmatrix_mode", "leaky"));
    cfg.max_workers = detail::get_or<unsigned>(j, "max_workers", 0);
    cfg.initial_kind = detail::get_or<std::string>(j, "initial_kind", "unit_node");
    cfg.initial_node = detail::get_or<NodeId>(j, "initial_node", 1);
    if (j.contains("initial_values"))
        cfg.initial_values = j.at("initial_values").get<std::vector<double>>();
    cfg.z_threshold = detail::get_or(j, "z_threshold", 3.0);
    cfg.familywise_alpha = detail::get_or(j, "familywise_alpha", 0.001);
    if (j.contains("check_times"))
        cfg.check_times = j.at("check_times").get<std::vector<double>>();
    cfg.tv_tolerance = detail::get_or(j, "tv_tolerance", 0.01);
    cfg.profile_tol = detail::get_or(j, "profile_tol", 1e-12);
    cfg.profile_t0 = detail::get_or(j, "profile_t0", -1.0);
    cfg.output_dir = detail::get_or<std::string>(j, "output_dir", ".");
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw config_error("cannot open config file " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config file " + file.string() + " is not valid JSON: " + e.what());
    }
    return parse_experiment_config(j);
}

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = cfg.experiment;
    j["max_generation"] = cfg.tree.max_generation;
    j["arity"] = cfg.tree.arity;
    j["sigma"] = cfg.tree.sigma;
    if (const auto* geo = std::get_if<GeometricLaw>(&cfg.tree.law))
        j["coeff_base"] = geo->base;
    else
        j["coeff_values"] = std::get<ExplicitLaw>(cfg.tree.law).coeff;
    j["model"] = model_name(cfg.model);
    j["scheme"] = scheme_name(cfg.scheme);
    j["t0"] = cfg.t0;
    j["t_end"] = cfg.t_end;
    j["dt"] = cfg.dt;
    j["seed"] = cfg.seed;
    j["n_paths"] = cfg.n_paths;
    j["qmatrix_mode"] = qmode_name(cfg.qmatrix_mode);
    j["max_workers"] = cfg.max_workers;
    j["initial_kind"] = cfg.initial_kind;
    j["initial_node"] = cfg.initial_node;
    if (!cfg.initial_values.empty()) j["initial_values"] = cfg.initial_values;
    j["z_threshold"] = cfg.z_threshold;
    j["familywise_alpha"] = cfg.familywise_alpha;
    j["check_times"] = cfg.check_times;
    j["tv_tolerance"] = cfg.tv_tolerance;
    j["profile_tol"] = cfg.profile_tol;
    j["profile_t0"] = cfg.profile_t0;
    return j;
}

namespace detail {

inline State build_initial_state(const ExperimentConfig& cfg, const Tree& tree) {
    State x(tree.node_count(), 0.0);
    if (cfg.initial_kind == "zero") return x;
    if (cfg.initial_kind == "unit_node") {
        if (cfg.initial_node == 0 || cfg.initial_node >= tree.node_count())
            throw config_error("initial_node: must be a non-root node id below " +
                               std::to_string(tree.node_count()));
        x[cfg.initial_node] = 1.0;
        return x;
    }
    if (cfg.initial_kind == "random_l2") {
        double e = 0.0;
        for (NodeId j = 1; j < tree.node_count(); ++j) {
            x[j] = rng::gaussian(cfg.seed, rng::domain_initial_state,
                                 {static_cast<std::uint32_t>(j), 0, 0, 0});
            e += x[j] * x[j];
        }
        const double norm = std::sqrt(e);
        for (NodeId j = 1; j < tree.node_count(); ++j) x[j] /= norm;
        return x;
    }
    if (cfg.initial_kind == "values") {
        if (cfg.initial_values.size() != tree.node_count())
            throw config_error("initial_values: expected " + std::to_string(tree.node_count()) +
                               " entries, got " + std::to_string(cfg.initial_values.size()));
        if (cfg.initial_values[0] != 0.0)
            throw config_error("initial_values: root component must be 0");
        return cfg.initial_values;
    }
    throw config_error("initial_kind: unknown kind '" + cfg.initial_kind + "'");
}

class ArtifactWriter {
public:
    ArtifactWriter(const ExperimentConfig& cfg, const std::filesystem::path& dir)
        : cfg_(cfg), dir_(dir) {
        std::filesystem::create_directories(dir_);
        prefix_ = cfg.experiment + "-" + std::to_string(cfg.seed) + "-";
    }

    std::filesystem::path path(const std::string& artifact) const {
        return dir_ / (prefix_ + artifact);
    }

    template <class Fn>
    void csv(const std::string& artifact, Fn&& fn) {
        std::ofstream os(path(artifact));
        fn(os);
        outputs_.push_back(prefix_ + artifact);
    }

    void json(const std::string& artifact, const nlohmann::json& j) {
        std::ofstream os(path(artifact));
        os << j.dump(2) << '\n';
        outputs_.push_back(prefix_ + artifact);
    }

    void manifest() {
        nlohmann::json j;
        j["experiment"] = cfg_.experiment;
        j["seed"] = cfg_.seed;
        j["version"] = version;
        j["config"] = config_json(cfg_);
        j["outputs"] = outputs_;
        std::ofstream os(path("manifest.json"));
        os << j.dump(2) << '\n';
    }

private:
    const ExperimentConfig& cfg_;
    std::filesystem::path dir_;
    std::string prefix_;
    std::vector<std::string> outputs_;
};

// ---- individual experiments ------------------------------------------------

inline int run_simulate(const ExperimentConfig& cfg, const Tree& tree, ArtifactWriter& out) {
    const TimeGrid grid = TimeGrid::from_step(cfg.t0, cfg.t_end, cfg.dt);
    const State x0 = build_initial_state(cfg, tree);
    if (cfg.model == ModelKind::DeterministicNonlinear) {
        const SdePath path = integrate_ode(tree, x0, grid);
        out.csv("path.csv", [&](std::ostream& os) { write_path_csv(path, os); });
        return 0;
    }
    if (cfg.n_paths == 1) {
        const SdePath path =
            integrate_sde(tree, cfg.model, x0, grid, NoisePlan(cfg.seed, 0, grid.dt), cfg.scheme);
        out.csv("path.csv", [&](std::ostream& os) { write_path_csv(path, os); });
        return 0;
    }
    const MomentTable table = estimate_moments(tree, cfg.model, x0, grid, cfg.seed,
                                               cfg.n_paths, cfg.scheme, cfg.max_workers);
    out.csv("moments-x.csv",
            [&](std::ostream& os) { write_moments_csv(table, MomentKind::Intensity, os); });
    out.csv("moments-x2.csv",
            [&](std::ostream& os) { write_moments_csv(table, MomentKind::SquaredIntensity, os); });
    return 0;
}

inline int run_moments_check(const ExperimentConfig& cfg, const Tree& tree, ArtifactWriter& out) {
    if (cfg.model != ModelKind::ItoLinear || cfg.scheme != Scheme::EulerMaruyama)
        throw config_error("model/scheme: moments-check drives the Ito linear model "
                           "with euler-maruyama");
    const TimeGrid grid = TimeGrid::from_step(cfg.t0, cfg.t_end, cfg.dt);
    const State x0 = build_initial_state(cfg, tree);

    const MomentTable table = estimate_moments(tree, cfg.model, x0, grid, cfg.seed,
                                               cfg.n_paths, cfg.scheme, cfg.max_workers);
    const QMatrix qm = build_qmatrix(tree, QMode::Leaky);
    std::vector<double> y0(qm.dim, 0.0);
    for (std::size_t s = 0; s < qm.dim; ++s) {
        const double v = x0[qm.state_to_node[s]];
        y0[s] = v * v;
    }
    const ForwardSolution oracle = forward_solve(qm, y0, grid);
    const ComparisonReport report = compare_moments(table, oracle, cfg.z_threshold);

    const double familywise_bound = normal_quantile_upper(
        cfg.familywise_alpha / (2.0 * static_cast<double>(report.n_cells)));
    const bool pass = report.max_abs_z <= familywise_bound &&
                      report.violating_fraction <= 0.01;

    out.csv("comparison.csv", [&](std::ostream& os) {
        write_comparison_csv(report, grid, oracle.state_to_node, os);
    });
    out.csv("forward.csv", [&](std::ostream& os) { write_forward_csv(oracle, os); });
    nlohmann::json j;
    j["n_cells"] = report.n_cells;
    j["n_z_cells"] = report.n_z_cells;
    j["max_z"] = report.max_abs_z;
    j["familywise_bound"] = familywise_bound;
    j["n_violations"] = report.n_violations;
    j["violating_fraction"] = report.violating_fraction;
    j["pass"] = pass;
    out.json("report.json", j);
    return pass ? 0 : 2;
}

inline int run_ctmc_check(const ExperimentConfig& cfg, const Tree& tree, ArtifactWriter& out) {
    const QMatrix qm = build_qmatrix(tree, cfg.qmatrix_mode);
    const auto start = qm.state_of(cfg.initial_node);
    if (!start) throw config_error("initial_node: node is not a state of the q-matrix");
    const double horizon = cfg.t_end;
    for (double t : cfg.check_times)
        if (!(t > 0.0) || t > horizon)
            throw config_error("check_times: every time must lie in (0, t_end]");

    const TimeGrid grid = TimeGrid::from_step(0.0, horizon, cfg.dt);
    std::vector<double> y0(qm.dim, 0.0);
    y0[*start] = 1.0;
    const ForwardSolution oracle = forward_solve(qm, y0, grid);

    // Empirical occupation counts at the check times.
    std::vector<std::vector<std::size_t>> counts(cfg.check_times.size(),
                                                 std::vector<std::size_t>(qm.dim, 0));
    for (std::size_t chain = 0; chain < cfg.n_paths; ++chain) {
        const JumpPath path = ctmc_simulate(qm, *start, horizon, cfg.seed, chain);
        for (std::size_t k = 0; k < cfg.check_times.size(); ++k)
            if (auto s = path.state_at(cfg.check_times[k])) ++counts[k][*s];
    }

    double max_tv = 0.0;
    nlohmann::json tv_json = nlohmann::json::array();
    out.csv("distribution.csv", [&](std::ostream& os) {
        os << "time,state,empirical,oracle\n";
        for (std::size_t k = 0; k < cfg.check_times.size(); ++k) {
            const auto i = static_cast<std::size_t>(
                std::llround((cfg.check_times[k] - grid.t0) / grid.dt));
            double tv = 0.0;
            for (std::size_t s = 0; s < qm.dim; ++s) {
                const double emp = static_cast<double>(counts[k][s]) /
                                   static_cast<double>(cfg.n_paths);
                tv += std::abs(emp - oracle.at(i, s));
                os << format_double(cfg.check_times[k]) << ',' << s << ','
                   << format_double(emp) << ',' << format_double(oracle.at(i, s)) << '\n';
            }
            tv *= 0.5;
            max_tv = std::max(max_tv, tv);
            tv_json.push_back({{"time", cfg.check_times[k]}, {"total_variation", tv}});
        }
    });

    const bool pass = max_tv <= cfg.tv_tolerance;
    nlohmann::json j;
    j["n_chains"] = cfg.n_paths;
    j["total_variation"] = tv_json;
    j["max_total_variation"] = max_tv;
    j["tolerance"] = cfg.tv_tolerance;
    j["pass"] = pass;
    out.json("report.json", j);
    return pass ? 0 : 2;
}

inline int run_girsanov_check(const ExperimentConfig& cfg, const Tree& tree, ArtifactWriter& out) {
    const TimeGrid grid = TimeGrid::from_step(cfg.t0, cfg.t_end, cfg.dt);
    const State x0 = build_initial_state(cfg, tree);

    TerminalSink linear(tree, /*with_inverse_ledger=*/true);
    simulate_ensemble(tree, ModelKind::ItoLinear, x0, grid, cfg.seed, cfg.n_paths,
                      Scheme::EulerMaruyama, linear, cfg.max_workers, /*path_offset=*/0);
    TerminalSink nonlinear(tree, /*with_inverse_ledger=*/false);
    simulate_ensemble(tree, ModelKind::ItoNonlinear, x0, grid, cfg.seed, cfg.n_paths,
                      Scheme::EulerMaruyama, nonlinear, cfg.max_workers,
                      /*path_offset=*/cfg.n_paths);

    const auto& lin = linear.stats();
    const auto& non = nonlinear.stats();
    const double density_z = std::abs(lin.density_mean() - 1.0) /
                             std::max(lin.density_std_error(), 1e-300);
    bool nodes_pass = true;
    double max_node_z = 0.0;

    out.csv("estimates.csv", [&](std::ostream& os) {
        os << "node_index,direct,direct_se,reweighted,reweighted_se,z\n";
        for (NodeId j = 1; j < tree.node_count(); ++j) {
            const double d = non.mean(j), dse = non.std_error(j);
            const double r = lin.weighted_mean(j), rse = lin.weighted_std_error(j);
            const double comb = std::sqrt(dse * dse + rse * rse);
            double z = 0.0;
            if (comb > 0.0) {
                z = (d - r) / comb;
            } else if (std::abs(d - r) > 1e-12) {
                nodes_pass = false;
            }
            max_node_z = std::max(max_node_z, std::abs(z));
            if (std::abs(z) > 3.0) nodes_pass = false;
            os << j << ',' << format_double(d) << ',' << format_double(dse) << ','
               << format_double(r) << ',' << format_double(rse) << ',' << format_double(z)
               << '\n';
        }
    });

    // Ledger trace of the first linear path, for inspection.
    const SdePath sample = integrate_sde(tree, ModelKind::ItoLinear, x0, grid,
                                         NoisePlan(cfg.seed, 0, grid.dt), Scheme::EulerMaruyama);
    const GirsanovLedger ledger = ledger_inverse(tree, sample);
    out.csv("ledger0.csv", [&](std::ostream& os) { write_ledger_csv(ledger, os); });

    const bool pass = density_z <= 3.0 && nodes_pass;
    nlohmann::json j;
    j["density_mean"] = lin.density_mean();
    j["density_std_error"] = lin.density_std_error();
    j["density_z"] = density_z;
    j["effective_sample_size"] = lin.effective_sample_size();
    j["max_node_z"] = max_node_z;
    j["pass"] = pass;
    out.json("report.json", j);
    return pass ? 0 : 2;
}

inline int run_nonuniqueness(const ExperimentConfig& cfg, const Tree& tree, ArtifactWriter& out) {
    if (!(cfg.t_end < -cfg.profile_t0))
        throw config_error("t_end: must lie before the blow-up time -profile_t0");
    const TimeGrid grid = TimeGrid::from_step(cfg.t0, cfg.t_end, cfg.dt);

    // Asymptotic-decay default guess for the profile solve.
    State guess(tree.node_count(), 0.0);
    const double base = std::get_if<GeometricLaw>(&cfg.tree.law)
                            ? std::get<GeometricLaw>(cfg.tree.law).base
                            : 2.0;
    const double gamma = std::cbrt(1.0 / (static_cast<double>(tree.arity()) * base));
    for (NodeId j = 1; j < tree.node_count(); ++j)
        guess[j] = std::pow(gamma, static_cast<double>(tree.generation(j)));
    const SelfSimilarProfile profile =
        solve_selfsimilar(tree, guess, cfg.profile_tol, cfg.profile_t0);

    const NonuniquenessReport report = nonuniqueness_experiment(tree, profile, grid);
    out.csv("trajectories.csv",
            [&](std::ostream& os) { write_nonuniqueness_csv(report, os); });

    bool energy_increasing = true;
    for (std::size_t i = 1; i < report.energy_selfsimilar.size(); ++i)
        if (report.energy_selfsimilar[i] <= report.energy_selfsimilar[i - 1])
            energy_increasing = false;
    double galerkin_drift = 0.0;
    for (double e : report.energy_galerkin)
        galerkin_drift = std::max(galerkin_drift,
                                  std::abs(e - report.energy_galerkin[0]) /
                                      report.energy_galerkin[0]);
    const double divergence =
        report.l2_distance.empty() ? 0.0 : report.relative_divergence(report.l2_distance.size() - 1);

    const bool pass = profile.converged && !report.galerkin_blowup && energy_increasing &&
                      galerkin_drift <= 1e-8 && divergence >= 0.1;
    nlohmann::json j;
    j["profile_residual"] = profile.residual_norm;
    j["profile_converged"] = profile.converged;
    j["t0"] = profile.t0;
    j["tree"] = tree_json(tree);
    j["galerkin_blowup"] = report.galerkin_blowup;
    j["galerkin_energy_drift"] = galerkin_drift;
    j["selfsimilar_energy_increasing"] = energy_increasing;
    j["relative_divergence_at_t_end"] = divergence;
    j["pass"] = pass;
    out.json("report.json", j);
    return pass ? 0 : 2;
}

inline int run_selfsimilar(const ExperimentConfig& cfg, const Tree& tree, ArtifactWriter& out) {
    State guess(tree.node_count(), 0.0);
    if (!cfg.initial_values.empty()) {
        if (cfg.initial_values.size() != tree.node_count())
            throw config_error("initial_values: expected one guess entry per node");
        guess = cfg.initial_values;
    } else {
        const double base = std::get_if<GeometricLaw>(&cfg.tree.law)
                                ? std::get<GeometricLaw>(cfg.tree.law).base
                                : 2.0;
        const double gamma = std::cbrt(1.0 / (static_cast<double>(tree.arity()) * base));
        for (NodeId j = 1; j < tree.node_count(); ++j)
            guess[j] = std::pow(gamma, static_cast<double>(tree.generation(j)));
    }
    const SelfSimilarProfile profile =
        solve_selfsimilar(tree, guess, cfg.profile_tol, cfg.profile_t0);
    out.csv("profile.csv",
            [&](std::ostream& os) { write_profile_csv(tree, profile, os); });
    nlohmann::json j;
    j["residual_norm"] = profile.residual_norm;
    j["converged"] = profile.converged;
    j["trivial"] = profile.trivial();
    j["t0"] = profile.t0;
    j["tree"] = tree_json(tree);
    j["pass"] = profile.converged;
    out.json("report.json", j);
    return profile.converged ? 0 : 2;
}

inline int run_qmatrix_audit(const ExperimentConfig& cfg, const Tree& tree, ArtifactWriter& out) {
    const QMatrix qm = build_qmatrix(tree, cfg.qmatrix_mode);
    const QMatrixReport report = validate_qmatrix(qm);

    bool defects_ok = true;
    double max_defect = 0.0;
    for (std::size_t s = 0; s < qm.dim; ++s) {
        const double defect = report.conservative_defect[s];
        max_defect = std::max(max_defect, std::abs(defect));
        const int g = tree.generation(qm.state_to_node[s]);
        const bool leak_state =
            cfg.qmatrix_mode == QMode::Leaky && (g == 1 || g == tree.max_generation());
        if (leak_state ? !(defect > 0.0) : defect != 0.0) defects_ok = false;
    }

    nlohmann::json j;
    j["mode"] = qmode_name(cfg.qmatrix_mode);
    j["dimension"] = qm.dim;
    j["stable"] = report.stable;
    j["symmetric_defect"] = report.symmetric_defect;
    j["max_abs_conservative_defect"] = max_defect;
    j["defect_pattern_ok"] = defects_ok;
    bool pass = report.stable && report.symmetric_defect == 0.0 && defects_ok;
    if (cfg.qmatrix_mode == QMode::Conservative) {
        const LaplacianReport lap = laplacian_check(qm);
        j["negative_semidefinite"] = lap.is_negative_semidefinite;
        j["min_eigenvalue_upper_bound"] = lap.min_eigenvalue_upper_bound;
        pass = pass && lap.is_negative_semidefinite;
    }
    j["pass"] = pass;
    out.csv("qmatrix.csv", [&](std::ostream& os) { write_qmatrix_csv(qm, os); });
    out.json("report.json", j);
    return pass ? 0 : 2;
}

} // namespace detail

/// Run one experiment; returns the process exit code (0 pass, 2 acceptance
/// failure). Throws config_error for invalid configuration and
/// runtime errors (including integrator blow-up outside the nonuniqueness
/// experiment) for the caller to map to exit code 1.
inline int run_experiment(const ExperimentConfig& cfg) {
    const Tree tree = build_tree(cfg.tree);
    detail::ArtifactWriter out(cfg, cfg.output_dir);
    int code = 0;
    if (cfg.experiment == "simulate")
        code = detail::run_simulate(cfg, tree, out);
    else if (cfg.experiment == "moments-check")
        code = detail::run_moments_check(cfg, tree, out);
    else if (cfg.experiment == "ctmc-check")
        code = detail::run_ctmc_check(cfg, tree, out);
    else if (cfg.experiment == "girsanov-check")
        code = detail::run_girsanov_check(cfg, tree, out);
    else if (cfg.experiment == "nonuniqueness")
        code = detail::run_nonuniqueness(cfg, tree, out);
    else if (cfg.experiment == "selfsimilar")
        code = detail::run_selfsimilar(cfg, tree, out);
    else if (cfg.experiment == "qmatrix-audit")
        code = detail::run_qmatrix_audit(cfg, tree, out);
    else
        throw config_error("experiment: unknown experiment '" + cfg.experiment + "'");
    out.manifest();
    return code;
}

} // namespace dyadic
