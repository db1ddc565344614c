#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cqdyn/toy_model.hpp"

#include <cmath>
#include <random>

using namespace cqdyn;
using ops::Matrix;
using state::HybridStateAtomic;

namespace {

const toy::ToyModelParams& params() {
    static const auto p = toy::ToyModelParams::make();
    return p;
}

HybridStateAtomic random_atomic(std::mt19937& rng, int n_atoms = 3) {
    std::normal_distribution<double> gauss;
    HybridStateAtomic s;
    double trace = 0.0;
    for (int k = 0; k < n_atoms; ++k) {
        Matrix g(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) g(i, j) = ops::Complex(gauss(rng), gauss(rng));
        Matrix block = g * g.adjoint();
        trace += block.trace().real();
        s.atoms.push_back({{Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)),
                            Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng))},
                           block});
    }
    for (auto& atom : s.atoms) atom.block /= trace;
    return s;
}

}  // namespace

TEST_CASE("parameter validation") {
    auto p = params();
    p.kappa = -1.0;
    CHECK_THROWS_AS(toy::ToyAtomicGenerator{p}, std::invalid_argument);
    p = params();
    p.rho_i = 2.0 * ops::identity(2);
    CHECK_THROWS_AS(toy::ToyAtomicGenerator{p}, std::invalid_argument);
}

TEST_CASE("analytic state hits the closed-form checkpoints") {
    const auto at0 = state::canonicalize(toy::toy_analytic_state(params(), 0.0));
    REQUIRE(at0.atoms.size() == 1);
    CHECK(phase::distance(at0.atoms[0].z, params().initial_point()) < 1e-14);
    CHECK((at0.atoms[0].block - params().rho_i).cwiseAbs().maxCoeff() < 1e-15);

    const double t_half = 2.0 * std::log(2.0);  // e^{-kappa t} = 1/2
    const auto mid = state::canonicalize(toy::toy_analytic_state(params(), t_half));
    REQUIRE(mid.atoms.size() == 2);
    HybridStateAtomic expected{{{params().final_state, 0.25 * ops::identity(2)},
                                {params().initial_point(), 0.5 * params().rho_i}}};
    CHECK(state::atomic_distance(mid, expected) < 1e-12);

    const auto late = state::canonicalize(toy::toy_analytic_state(params(), 500.0));
    HybridStateAtomic limit{{{params().final_state, 0.5 * ops::identity(2)}}};
    CHECK(state::atomic_distance(late, limit) < 1e-12);
}

TEST_CASE("exact propagation agrees with the analytic solution") {
    const auto initial = toy::toy_initial_state(params());
    for (double t : {0.0, 0.1, 1.0, 2.0 * std::log(2.0), 7.5}) {
        CHECK(state::atomic_distance(toy::evolve_atomic_toy(params(), initial, t),
                                     toy::toy_analytic_state(params(), t)) < 1e-13);
    }
    CHECK_THROWS_AS(toy::evolve_atomic_toy(params(), initial, -0.5), std::domain_error);
}

TEST_CASE("propagation is a semigroup on arbitrary atomic states") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const auto rho = random_atomic(rng);
        const auto two_leg = toy::evolve_atomic_toy(
            params(), toy::evolve_atomic_toy(params(), rho, 0.4), 1.1);
        const auto one_leg = toy::evolve_atomic_toy(params(), rho, 1.5);
        CHECK(state::atomic_distance(two_leg, one_leg) < 1e-12);
    }
}

TEST_CASE("generator derivative at the initial delta") {
    toy::ToyAtomicGenerator explicit_channels(params(), false);
    toy::ToyAtomicGenerator collapsed(params(), true);
    const auto initial = toy::toy_initial_state(params());

    const auto derivative = state::canonicalize(explicit_channels.apply(initial));
    HybridStateAtomic expected{
        {{params().final_state, (params().kappa / 2.0) * ops::identity(2)},
         {params().initial_point(), -params().kappa * params().rho_i}}};
    CHECK(state::atomic_distance(derivative, expected) < 1e-14);

    // the four-channel sum and the twirl-collapsed path are the same map
    std::mt19937 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const auto rho = random_atomic(rng);
        CHECK(state::atomic_distance(explicit_channels.apply(rho), collapsed.apply(rho))
              < 1e-13);
    }
}

TEST_CASE("grid discretization reproduces the atomic generator") {
    const auto model = toy::make_toy_grid_model(params());
    const double vol = model.grid->cell_volume();
    const auto derivative = model.generator->apply(model.initial);

    toy::ToyAtomicGenerator atomic(params());
    const auto reference =
        state::canonicalize(atomic.apply(toy::toy_initial_state(params())));
    // reference atoms: gain at the final state, loss at the initial point
    CHECK((derivative.blocks[model.final_cell] * vol - reference.atoms[0].block)
              .cwiseAbs().maxCoeff() < 1e-12);
    CHECK((derivative.blocks[model.initial_cell] * vol - reference.atoms[1].block)
              .cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spin expectation and angular momentum records") {
    const double t_half = 2.0 * std::log(2.0);
    CHECK(toy::toy_spin_expectation(params(), t_half, 2) == doctest::Approx(0.25));
    CHECK(toy::toy_spin_expectation(params(), t_half, 0) == doctest::Approx(0.0));

    const auto at0 = toy::toy_angular_momentum(params(), 0.0);
    CHECK((at0.total - Eigen::Vector3d(0.0, 0.0, 1.5)).norm() < 1e-14);
    CHECK((at0.orbital - Eigen::Vector3d(0.0, 0.0, 1.0)).norm() < 1e-14);

    const auto mid = toy::toy_angular_momentum(params(), t_half);
    CHECK((mid.total - Eigen::Vector3d(0.0, 0.0, 0.75)).norm() < 1e-12);

    CHECK(toy::toy_angular_momentum(params(), 2000.0).total.norm() < 1e-12);
}

TEST_CASE("J_z decays exponentially at 1000 sample times") {
    const auto initial = toy::toy_initial_state(params());
    double worst_z = 0.0, worst_xy = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double t = 10.0 * k / 999.0;
        const auto s = toy::evolve_atomic_toy(params(), initial, t);
        worst_z = std::max(worst_z,
                           std::abs(evo::expectation(toy::toy_J_field(2, 1.0), s) -
                                    1.5 * std::exp(-0.5 * t)));
        worst_xy = std::max({worst_xy,
                             std::abs(evo::expectation(toy::toy_J_field(0, 1.0), s)),
                             std::abs(evo::expectation(toy::toy_J_field(1, 1.0), s))});
    }
    CHECK(worst_z < 1e-12);
    CHECK(worst_xy < 1e-12);
}

TEST_CASE("evolution commutes with rotations") {
    std::mt19937 rng(37);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> uni(-M_PI, M_PI);
    const auto rho = random_atomic(rng);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
        axis.normalize();
        const double angle = uni(rng);
        const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        const Matrix u = ops::rotation_unitary(axis, angle);
        const auto rotate_then_evolve =
            toy::evolve_atomic_toy(params(), state::rotate_state(r, u, rho), 0.9);
        const auto evolve_then_rotate =
            state::rotate_state(r, u, toy::evolve_atomic_toy(params(), rho, 0.9));
        CHECK(state::atomic_distance(rotate_then_evolve, evolve_then_rotate) < 1e-12);
    }
}

TEST_CASE("conservation is restored in the weak-coupling limit") {
    auto p = params();
    p.kappa = 1e-8;
    const auto initial = toy::toy_initial_state(p);
    const auto j0 = toy::toy_angular_momentum(p, 0.0).total;
    double drift = 0.0;
    for (double t : {0.25, 0.5, 1.0}) {
        const auto s = toy::evolve_atomic_toy(p, initial, t);
        Eigen::Vector3d j;
        for (int a = 0; a < 3; ++a) j[a] = evo::expectation(toy::toy_J_field(a, 1.0), s);
        drift = std::max(drift, (j - j0).norm());
    }
    CHECK(drift < 1e-7);
}

TEST_CASE("nonconservation demonstration verdict") {
    std::vector<double> t_grid;
    for (int k = 0; k <= 50; ++k) t_grid.push_back(5.0 * k / 50.0);
    const auto report = toy::nonconservation_demo(params(), t_grid, 1e-3, 2027);
    CHECK(report.eom_rotationally_invariant);
    CHECK_FALSE(report.j_conserved);
    CHECK(report.symmetry_residual < 1e-10);
    CHECK(report.max_atomic_deviation < 1e-9);
    CHECK(report.max_grid_deviation < 1e-6);
    CHECK((report.j_initial - Eigen::Vector3d(0.0, 0.0, 1.5)).norm() < 1e-12);
    CHECK(report.j_final.norm() < report.j_initial.norm() * 0.1 + 1e-9);
}
