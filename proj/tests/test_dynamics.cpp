#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dyadic/dynamics.hpp"

using namespace dyadic;

namespace {

Tree binary(int n, double b = 2.0, double sigma = 1.0) {
    return build_tree({.max_generation = n, .arity = 2, .law = GeometricLaw{b}, .sigma = sigma});
}

State random_state(const Tree& tree, std::mt19937& gen) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    State x(tree.node_count());
    for (NodeId j = 1; j < tree.node_count(); ++j) x[j] = dist(gen);
    x[0] = 0.0;
    return x;
}

double dot(const State& a, const State& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

TEST_CASE("drift_deterministic: zero state is a fixed point") {
    const Tree tree = binary(3);
    const State x(tree.node_count(), 0.0);
    for (double v : drift_deterministic(tree, x)) CHECK(v == 0.0);
}

TEST_CASE("drift_deterministic: hand-evaluated component") {
    const Tree tree = binary(2);
    State x(7, 0.0);
    x[1] = 1.0;
    x[3] = 1.0;
    x[4] = 1.0;
    const State out = drift_deterministic(tree, x);
    CHECK(out[1] == -8.0);  // 2*0^2 - (4*1*1 + 4*1*1)
    CHECK(out[0] == 0.0);
}

TEST_CASE("drift_deterministic: depth-1 tree has vanishing drift") {
    const Tree tree = binary(1);
    State x{0.0, 0.7, -0.3};
    for (double v : drift_deterministic(tree, x)) CHECK(v == 0.0);
}

TEST_CASE("ito_correction: hand value with ghost coefficients") {
    const Tree tree = binary(1);
    State x{0.0, 1.0, 0.0};
    const State out = ito_correction(tree, x);
    CHECK(out[1] == -18.0);  // -(1/2)(4 + 16 + 16)
    CHECK(out[2] == 0.0);
}

TEST_CASE("ito_correction: linear in the state") {
    const Tree tree = binary(3);
    std::mt19937 gen(42);
    const State x = random_state(tree, gen);
    State x2(x);
    for (double& v : x2) v *= 2.0;
    const State a = ito_correction(tree, x);
    const State b = ito_correction(tree, x2);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(b[j] == 2.0 * a[j]);
}

TEST_CASE("drift: per-model relations") {
    const Tree tree = binary(2);
    std::mt19937 gen(7);
    const State x = random_state(tree, gen);

    const State det = drift(ModelKind::DeterministicNonlinear, tree, x);
    const State ito_nl = drift(ModelKind::ItoNonlinear, tree, x);
    const State ito_l = drift(ModelKind::ItoLinear, tree, x);
    const State corr = ito_correction(tree, x);

    for (std::size_t j = 0; j < x.size(); ++j) {
        CHECK(ito_nl[j] == det[j] + corr[j]);
        CHECK(ito_l[j] == corr[j]);
        CHECK(drift(ModelKind::StratonovichNonlinear, tree, x)[j] == det[j]);
        CHECK(drift(ModelKind::StratonovichLinear, tree, x)[j] == 0.0);
    }
}

TEST_CASE("drift: ito-linear depth-1 equals the correction example") {
    const Tree tree = binary(1);
    State x{0.0, 1.0, 0.0};
    CHECK(drift(ModelKind::ItoLinear, tree, x)[1] == -18.0);
}

TEST_CASE("drift: dimension mismatch is rejected") {
    const Tree tree = binary(2);
    State x(3, 0.0);
    CHECK_THROWS_AS(drift(ModelKind::ItoLinear, tree, x), std::invalid_argument);
    CHECK_THROWS_AS(drift_deterministic(tree, x), std::invalid_argument);
    CHECK_THROWS_AS(ito_correction(tree, x), std::invalid_argument);
}

TEST_CASE("apply_noise: multiplicative structure") {
    const Tree tree = binary(2);
    const State zero(7, 0.0);
    State dw(7, 1.0);
    for (double v : apply_noise(tree, zero, dw)) CHECK(v == 0.0);

    State x(7, 0.4);
    x[0] = 0.0;
    const State no_dw(7, 0.0);
    for (double v : apply_noise(tree, x, no_dw)) CHECK(v == 0.0);
}

TEST_CASE("apply_noise: child-noise term reaches the parent") {
    const Tree tree = binary(2);
    State x(7, 0.0);
    x[1] = 1.0;
    x[3] = 1.0;
    State dw(7, 0.0);
    dw[3] = 1.0;
    const State out = apply_noise(tree, x, dw);
    CHECK(out[1] == -4.0);     // -c_3 x_3 dW_3
    CHECK(out[3] == 4.0);      // +c_3 x_1 dW_3
    CHECK(out[0] == 0.0);

    SECTION("vanishes when the child intensity is zero") {
        x[3] = 0.0;
        CHECK(apply_noise(tree, x, dw)[1] == 0.0);
    }
    SECTION("increment count mismatch rejected") {
        State short_dw(3, 0.0);
        CHECK_THROWS_AS(apply_noise(tree, x, short_dw), std::invalid_argument);
    }
}

TEST_CASE("apply_noise: bilinear in state and increments") {
    const Tree tree = binary(3);
    std::mt19937 gen(3);
    const State x = random_state(tree, gen);
    State dw1(tree.node_count()), dw2(tree.node_count());
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& v : dw1) v = dist(gen);
    for (auto& v : dw2) v = dist(gen);

    State combo(tree.node_count());
    for (std::size_t j = 0; j < combo.size(); ++j) combo[j] = 0.5 * dw1[j] + 2.0 * dw2[j];
    const State lhs = apply_noise(tree, x, combo);
    const State a = apply_noise(tree, x, dw1);
    const State b = apply_noise(tree, x, dw2);
    for (std::size_t j = 0; j < lhs.size(); ++j)
        CHECK_THAT(lhs[j], Catch::Matchers::WithinAbs(0.5 * a[j] + 2.0 * b[j], 1e-12));

    State x4(x);
    for (double& v : x4) v *= 4.0;
    const State scaled = apply_noise(tree, x4, dw1);
    for (std::size_t j = 0; j < scaled.size(); ++j) CHECK(scaled[j] == 4.0 * a[j]);
}

TEST_CASE("energy: examples") {
    CHECK(energy(State{}) == 0.0);
    CHECK(energy(State{0.0, 1.0, 0.0}) == 1.0);
    CHECK(energy(State{0.0, 3.0, 4.0}) == 25.0);
}

TEST_CASE("boundary_dissipation: ghost leak rate") {
    const Tree tree = binary(1);
    State x{0.0, 1.0, 0.0};
    CHECK(boundary_dissipation(tree, x) == 32.0);
    CHECK(boundary_dissipation(tree, State{0.0, 0.0, 0.0}) == 0.0);

    // sigma^2 homogeneity; sigma = 2 keeps the scaling exact.
    const Tree loud = binary(1, 2.0, 2.0);
    CHECK(boundary_dissipation(loud, x) == 4.0 * 32.0);
}

TEST_CASE("root_dissipation: generation-1 leak toward the pinned root") {
    const Tree tree = binary(2);
    State x(7, 0.0);
    x[1] = 1.0;
    x[2] = 0.5;
    CHECK(root_dissipation(tree, x) == 4.0 * 1.0 + 4.0 * 0.25);
    CHECK(dissipation_rate(tree, x) == boundary_dissipation(tree, x) + root_dissipation(tree, x));
}

TEST_CASE("telescoping: deterministic drift is orthogonal to the state") {
    std::mt19937 gen(11);
    for (const auto& [n, d, b] : {std::tuple{2, 2, 2.0}, std::tuple{4, 2, 2.0},
                                  std::tuple{3, 3, 1.5874010519681994}}) {
        const Tree tree = build_tree({.max_generation = n, .arity = d,
                                      .law = GeometricLaw{b}, .sigma = 1.0});
        for (int rep = 0; rep < 20; ++rep) {
            const State x = random_state(tree, gen);
            const State f = drift_deterministic(tree, x);
            // Scale: coefficients up to b^N and cubic terms in x.
            CHECK_THAT(dot(x, f), Catch::Matchers::WithinAbs(0.0, 1e-11));
        }
    }
}

TEST_CASE("Ito energy balance matches the dissipation rate") {
    // 2 <x, drift> + sum_j (s^2 c_j^2 x_parent^2 + s^2 sum_children c_k^2 x_k^2)
    // = -boundary_dissipation, for the linear and nonlinear Ito drifts alike.
    std::mt19937 gen(13);
    for (double sigma : {1.0, 0.5}) {
        const Tree tree = build_tree({.max_generation = 3, .arity = 2,
                                      .law = GeometricLaw{2.0}, .sigma = sigma});
        for (ModelKind model : {ModelKind::ItoLinear, ModelKind::ItoNonlinear}) {
            for (int rep = 0; rep < 10; ++rep) {
                const State x = random_state(tree, gen);
                const State f = drift(model, tree, x);
                const double s2 = sigma * sigma;
                double qv = 0.0;  // formal sum including the root row
                for (NodeId j = 0; j < tree.node_count(); ++j) {
                    const double xp = j == 0 ? 0.0 : x[tree.parent(j)];
                    qv += s2 * tree.coeff(j) * tree.coeff(j) * xp * xp;
                    for (NodeId k : children_of(tree, j))
                        qv += s2 * tree.coeff(k) * tree.coeff(k) * x[k] * x[k];
                }
                const double balance = 2.0 * dot(x, f) + qv;
                CHECK_THAT(balance, Catch::Matchers::WithinAbs(-boundary_dissipation(tree, x), 1e-10));
            }
        }
    }
}

TEST_CASE("correction splits into interior and boundary parts") {
    const Tree tree = binary(3);
    std::mt19937 gen(17);
    const State x = random_state(tree, gen);
    State full, interior, boundary;
    ito_correction(tree, x, full);
    ito_correction_interior(tree, x, interior);
    ito_correction_boundary(tree, x, boundary);
    for (std::size_t j = 0; j < full.size(); ++j)
        CHECK_THAT(full[j], Catch::Matchers::WithinAbs(interior[j] + boundary[j], 1e-14));

    // Depth-1: no interior edges at all, the whole correction is boundary.
    const Tree shallow = binary(1);
    State y{0.0, 1.0, -0.5};
    ito_correction_interior(shallow, y, interior);
    for (double v : interior) CHECK(v == 0.0);
}
