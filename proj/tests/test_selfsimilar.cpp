#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dyadic/selfsimilar.hpp"

using namespace dyadic;

namespace {

Tree binary(int n, double b = 2.0) {
    return build_tree({.max_generation = n, .arity = 2, .law = GeometricLaw{b}, .sigma = 1.0});
}

State decay_guess(const Tree& tree) {
    const double gamma = std::cbrt(1.0 / (2.0 * 2.0));
    State g(tree.node_count(), 0.0);
    for (NodeId j = 1; j < tree.node_count(); ++j)
        g[j] = std::pow(gamma, static_cast<double>(tree.generation(j)));
    return g;
}

} // namespace

TEST_CASE("residual_selfsimilar: zero profile solves the recursion") {
    const Tree tree = binary(4);
    for (double v : residual_selfsimilar(tree, State(tree.node_count(), 0.0))) CHECK(v == 0.0);
}

TEST_CASE("residual_selfsimilar: generation-1 component collapses with a_0 = 0") {
    // With the root coefficient pinned at zero, the generation-1 residual is
    // a_j (1 - sum_k c_k a_k); the symmetric values s, 1/8 make it vanish.
    const Tree tree = binary(2);
    State a(7, 0.0);
    const double s = 0.4375;
    a[1] = a[2] = s;
    a[3] = a[4] = a[5] = a[6] = 0.125;
    const auto res = residual_selfsimilar(tree, a);
    CHECK(res[1] == 0.0);  // s * (1 - 2*4*(1/8)) exactly
    CHECK(res[2] == 0.0);
}

TEST_CASE("residual_selfsimilar: rejects a nonzero root coefficient") {
    const Tree tree = binary(2);
    State a(7, 0.0);
    a[0] = 1.0;
    CHECK_THROWS_AS(residual_selfsimilar(tree, a), std::invalid_argument);
}

TEST_CASE("solve_selfsimilar: zero guess returns the flagged trivial profile") {
    const Tree tree = binary(4);
    const auto profile = solve_selfsimilar(tree, State(tree.node_count(), 0.0), 1e-12);
    CHECK(profile.converged);
    CHECK(profile.trivial());
    CHECK(profile.residual_norm == 0.0);
}

TEST_CASE("solve_selfsimilar: nontrivial binary profile at depth 6") {
    const Tree tree = binary(6);
    const auto profile = solve_selfsimilar(tree, decay_guess(tree), 1e-12);
    REQUIRE(profile.converged);
    CHECK_FALSE(profile.trivial());
    CHECK(profile.residual_norm <= 1e-10);

    // Forced generation-2 value: sum_k c_k a_k = 1 at generation 1 means
    // d * b^2 * alpha_2 = 1.
    const NodeId gen2 = tree.generation_begin(2);
    CHECK_THAT(profile.a[gen2], Catch::Matchers::WithinAbs(0.125, 1e-12));

    // l2 diagnostic: per-generation tail decreasing over the last 3 generations.
    double tail[7] = {};
    for (NodeId j = 1; j < tree.node_count(); ++j)
        tail[tree.generation(j)] += profile.a[j] * profile.a[j];
    CHECK(tail[4] > tail[5]);
    CHECK(tail[5] > tail[6]);
}

TEST_CASE("solve_selfsimilar: substitution check for the closed form") {
    // X_j(t) = a_j / (t - t0) solves the deterministic system where the
    // recursion residual vanishes: the defect is residual * (t - t0)^{-2}.
    const Tree tree = binary(6);
    const auto profile = solve_selfsimilar(tree, decay_guess(tree), 1e-12);
    const double t0 = profile.t0;
    for (double t : {-0.5, 0.0, 2.0}) {
        const double u = t - t0;
        State x(tree.node_count());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = profile.a[j] / u;
        const State f = drift_deterministic(tree, x);
        for (NodeId j = 1; j < tree.node_count(); ++j) {
            if (tree.generation(j) > tree.max_generation() - 2) continue;
            const double dxdt = -profile.a[j] / (u * u);
            CHECK_THAT(f[j] - dxdt, Catch::Matchers::WithinAbs(0.0, 1e-10 / (u * u)));
        }
    }
}

TEST_CASE("time_reversed_state: examples and pole") {
    const Tree tree = binary(3);
    auto profile = solve_selfsimilar(tree, decay_guess(tree), 1e-10);
    profile.t0 = -1.0;

    const State x = time_reversed_state(profile, 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(x[j] == -profile.a[j]);

    // Magnitudes diverge toward the reversed blow-up time.
    const State late = time_reversed_state(profile, 0.999);
    CHECK(std::abs(late[1]) > 100.0 * std::abs(x[1]));
    CHECK_THROWS_AS(time_reversed_state(profile, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(time_reversed_state(profile, 1.5), std::invalid_argument);

    SECTION("zero profile maps to the zero state") {
        SelfSimilarProfile trivial;
        trivial.a.assign(tree.node_count(), 0.0);
        trivial.t0 = -1.0;
        for (double v : time_reversed_state(trivial, 0.5)) CHECK(v == 0.0);
    }
}

TEST_CASE("time reversal satisfies the forward system") {
    const Tree tree = binary(6);
    const auto profile = solve_selfsimilar(tree, decay_guess(tree), 1e-12);
    for (double t : {0.0, 0.4, 0.8}) {
        const double u = -t - profile.t0;
        const State xhat = time_reversed_state(profile, t);
        const State f = drift_deterministic(tree, xhat);
        for (NodeId j = 1; j < tree.node_count(); ++j) {
            if (tree.generation(j) > tree.max_generation() - 2) continue;
            const double dxdt = -profile.a[j] / (u * u);
            CHECK_THAT(f[j] - dxdt, Catch::Matchers::WithinAbs(0.0, 1e-10 / (u * u)));
        }
    }
}

TEST_CASE("scale covariance of the residual") {
    // c -> 2c with a -> a/2 scales the residual by exactly 1/2; powers of two
    // keep floating point exact.
    const int n = 3;
    const std::size_t extended = tree_node_count(n + 1, 2);
    std::vector<double> coeff(extended, 0.0);
    std::mt19937 gen(23);
    std::uniform_real_distribution<double> dist(0.5, 4.0);
    for (std::size_t j = 1; j < extended; ++j) coeff[j] = dist(gen);

    std::vector<double> doubled(coeff);
    for (double& v : doubled) v *= 2.0;
    const Tree tree = build_tree({.max_generation = n, .arity = 2, .law = ExplicitLaw{coeff}, .sigma = 1.0});
    const Tree scaled = build_tree({.max_generation = n, .arity = 2, .law = ExplicitLaw{doubled}, .sigma = 1.0});

    State a(tree.node_count(), 0.0);
    for (NodeId j = 1; j < tree.node_count(); ++j) a[j] = dist(gen);
    State half(a);
    for (double& v : half) v *= 0.5;

    const auto base = residual_selfsimilar(tree, a);
    const auto transformed = residual_selfsimilar(scaled, half);
    for (std::size_t j = 0; j < base.size(); ++j) CHECK(transformed[j] == 0.5 * base[j]);
}

TEST_CASE("nonuniqueness_experiment: zero profile gives identical trajectories") {
    const Tree tree = binary(3);
    SelfSimilarProfile trivial;
    trivial.a.assign(tree.node_count(), 0.0);
    trivial.t0 = -1.0;
    trivial.converged = true;
    const auto report = nonuniqueness_experiment(tree, trivial, TimeGrid::from_step(0.0, 0.5, 1e-3));
    for (double v : report.l2_distance) CHECK(v == 0.0);
    for (double v : report.energy_selfsimilar) CHECK(v == 0.0);
    for (double v : report.energy_galerkin) CHECK(v == 0.0);
}

TEST_CASE("nonuniqueness_experiment: closed form blows up while Galerkin conserves") {
    const Tree tree = binary(5);
    const auto profile = solve_selfsimilar(tree, decay_guess(tree), 1e-12);
    REQUIRE(profile.converged);
    const TimeGrid grid = TimeGrid::from_step(0.0, 0.9, 2e-4);
    const auto report = nonuniqueness_experiment(tree, profile, grid);
    REQUIRE_FALSE(report.galerkin_blowup);

    for (std::size_t i = 1; i < report.energy_selfsimilar.size(); ++i)
        CHECK(report.energy_selfsimilar[i] > report.energy_selfsimilar[i - 1]);
    for (double e : report.energy_galerkin)
        CHECK_THAT(e, Catch::Matchers::WithinRel(report.energy_galerkin[0], 1e-8));
    CHECK(report.relative_divergence(grid.n_steps) >= 0.1);

    SECTION("grid extending past the blow-up time is rejected") {
        CHECK_THROWS_AS(nonuniqueness_experiment(tree, profile, TimeGrid::from_step(0.0, 1.5, 1e-3)),
                        std::invalid_argument);
    }
}
