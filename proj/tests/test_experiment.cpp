#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dyadic/experiment.hpp"

using namespace dyadic;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "dyadic-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json base_config(const std::string& experiment) {
    return {
        {"experiment", experiment}, {"max_generation", 2}, {"arity", 2},
        {"coeff_base", 2.0},        {"sigma", 1.0},        {"seed", 7},
        {"t0", 0.0},                {"t_end", 0.02},       {"dt", 1e-3},
    };
}

} // namespace

TEST_CASE("config parsing: malformed fields are named") {
    auto j = base_config("simulate");
    j["arity"] = 0;
    auto cfg = parse_experiment_config(j);
    CHECK_THROWS_WITH(run_experiment(cfg), Catch::Matchers::ContainsSubstring("arity"));

    auto bad_model = base_config("simulate");
    bad_model["model"] = "viscous";
    CHECK_THROWS_WITH(parse_experiment_config(bad_model),
                      Catch::Matchers::ContainsSubstring("model"));

    auto bad_exp = base_config("frobnicate");
    auto cfg2 = parse_experiment_config(bad_exp);
    cfg2.output_dir = fresh_dir("bad-exp").string();
    CHECK_THROWS_WITH(run_experiment(cfg2), Catch::Matchers::ContainsSubstring("experiment"));

    nlohmann::json no_exp = {{"max_generation", 1}};
    CHECK_THROWS_AS(parse_experiment_config(no_exp), config_error);
}

TEST_CASE("qmatrix-audit: conservative run passes and reports zero defects") {
    auto j = base_config("qmatrix-audit");
    j["max_generation"] = 3;
    j["qmatrix_mode"] = "conservative";
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("qmatrix-audit").string();
    CHECK(run_experiment(cfg) == 0);

    const auto report = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "qmatrix-audit-7-report.json"));
    CHECK(report.at("symmetric_defect").get<double>() == 0.0);
    CHECK(report.at("stable").get<bool>());
    CHECK(report.at("negative_semidefinite").get<bool>());
    CHECK(report.at("pass").get<bool>());
    CHECK(fs::exists(fs::path(cfg.output_dir) / "qmatrix-audit-7-qmatrix.csv"));
    CHECK(fs::exists(fs::path(cfg.output_dir) / "qmatrix-audit-7-manifest.json"));
}

TEST_CASE("simulate: repeat runs produce byte-identical artifacts") {
    auto j = base_config("simulate");
    j["model"] = "ito-linear";
    j["scheme"] = "euler-maruyama";
    j["n_paths"] = 50;
    j["initial_kind"] = "unit_node";
    j["initial_node"] = 1;

    auto cfg = parse_experiment_config(j);
    const auto dir_a = fresh_dir("sim-a");
    const auto dir_b = fresh_dir("sim-b");
    cfg.output_dir = dir_a.string();
    REQUIRE(run_experiment(cfg) == 0);
    cfg.output_dir = dir_b.string();
    REQUIRE(run_experiment(cfg) == 0);

    for (const char* name : {"simulate-7-moments-x.csv", "simulate-7-moments-x2.csv"}) {
        const std::string a = slurp(dir_a / name);
        const std::string b = slurp(dir_b / name);
        REQUIRE_FALSE(a.empty());
        CHECK(a == b);
    }
}

TEST_CASE("simulate: single path writes a trajectory file") {
    auto j = base_config("simulate");
    j["n_paths"] = 1;
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("sim-single").string();
    REQUIRE(run_experiment(cfg) == 0);
    const std::string csv = slurp(fs::path(cfg.output_dir) / "simulate-7-path.csv");
    CHECK(csv.rfind("time,node_index,value\n", 0) == 0);
}

TEST_CASE("moments-check: small acceptance-style run passes") {
    auto j = base_config("moments-check");
    j["t_end"] = 0.05;
    j["dt"] = 2e-4;
    j["n_paths"] = 400;
    j["seed"] = 2026;
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("moments-check").string();
    CHECK(run_experiment(cfg) == 0);
    const auto report =
        nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "moments-check-2026-report.json"));
    CHECK(report.at("pass").get<bool>());
    CHECK(report.at("max_z").get<double>() < report.at("familywise_bound").get<double>());
}

TEST_CASE("moments-check: rejects a mismatched model") {
    auto j = base_config("moments-check");
    j["model"] = "ito-nonlinear";
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("moments-bad").string();
    CHECK_THROWS_AS(run_experiment(cfg), config_error);
}

TEST_CASE("ctmc-check: conservative chain matches its forward equation") {
    auto j = base_config("ctmc-check");
    j["qmatrix_mode"] = "conservative";
    j["t_end"] = 0.05;
    j["dt"] = 1e-4;
    j["n_paths"] = 20000;
    j["check_times"] = {0.02, 0.05};
    j["tv_tolerance"] = 0.02;
    j["initial_node"] = 1;
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("ctmc-check").string();
    CHECK(run_experiment(cfg) == 0);
}

TEST_CASE("selfsimilar: converged profile on the depth-5 binary tree") {
    auto j = base_config("selfsimilar");
    j["max_generation"] = 5;
    j["profile_tol"] = 1e-12;
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("selfsimilar").string();
    CHECK(run_experiment(cfg) == 0);
    const auto report =
        nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "selfsimilar-7-report.json"));
    CHECK(report.at("converged").get<bool>());
    CHECK_FALSE(report.at("trivial").get<bool>());
    CHECK(report.at("residual_norm").get<double>() <= 1e-10);
}

TEST_CASE("nonuniqueness: divergence report on a small tree") {
    auto j = base_config("nonuniqueness");
    j["max_generation"] = 4;
    j["t_end"] = 0.9;
    j["dt"] = 2e-4;
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("nonuniqueness").string();
    CHECK(run_experiment(cfg) == 0);
    const auto report =
        nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "nonuniqueness-7-report.json"));
    CHECK(report.at("pass").get<bool>());
    CHECK(report.at("relative_divergence_at_t_end").get<double>() >= 0.1);
    CHECK(report.at("galerkin_energy_drift").get<double>() <= 1e-8);
}

TEST_CASE("girsanov-check: two-estimator agreement at small scale") {
    auto j = base_config("girsanov-check");
    j["t_end"] = 0.05;
    j["dt"] = 2e-4;
    j["n_paths"] = 1500;
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("girsanov-check").string();
    CHECK(run_experiment(cfg) == 0);
    const auto report =
        nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "girsanov-check-7-report.json"));
    CHECK(report.at("pass").get<bool>());
    CHECK(report.at("density_z").get<double>() <= 3.0);
}

TEST_CASE("manifest: echoes the resolved configuration") {
    auto j = base_config("qmatrix-audit");
    auto cfg = parse_experiment_config(j);
    cfg.output_dir = fresh_dir("manifest").string();
    REQUIRE(run_experiment(cfg) == 0);
    const auto manifest =
        nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "qmatrix-audit-7-manifest.json"));
    CHECK(manifest.at("experiment") == "qmatrix-audit");
    CHECK(manifest.at("seed").get<std::uint64_t>() == 7);
    CHECK(manifest.at("config").at("arity").get<int>() == 2);
    CHECK(manifest.contains("version"));
    CHECK(manifest.at("outputs").is_array());
}
