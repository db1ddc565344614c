#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cqdyn/hybrid_state.hpp"
#include "cqdyn/toy_model.hpp"

#include <random>

using namespace cqdyn;
using ops::Matrix;
using state::HybridStateAtomic;
using state::HybridStateGrid;

namespace {

const toy::ToyModelParams& params() {
    static const auto p = toy::ToyModelParams::make();
    return p;
}

}  // namespace

TEST_CASE("normalization checks") {
    const auto initial = toy::toy_initial_state(params());
    CHECK(state::check_normalization(initial) < 1e-12);
    CHECK(state::check_normalization(toy::toy_analytic_state(params(), 1.0)) < 1e-12);

    HybridStateAtomic doubled = initial;
    for (auto& atom : doubled.atoms) atom.block *= 2.0;
    CHECK(state::check_normalization(doubled) == doctest::Approx(1.0));
}

TEST_CASE("classical reduction") {
    const double t = 0.8;
    const double x = std::exp(-params().kappa * t);
    const auto weights = state::reduce_classical(toy::toy_analytic_state(params(), t));
    REQUIRE(weights.size() == 2);
    double at_z0 = -1.0, at_origin = -1.0;
    for (const auto& [z, w] : weights) {
        if (z.q.norm() < 1e-12)
            at_origin = w;
        else
            at_z0 = w;
    }
    CHECK(at_z0 == doctest::Approx(x).epsilon(1e-12));
    CHECK(at_origin == doctest::Approx(1.0 - x).epsilon(1e-12));

    // uniform I/(2V) over a volume-V grid reduces to the flat density 1/V
    const auto grid = std::make_shared<phase::PhaseSpaceGrid>(
        std::vector<phase::Axis>{{0.0, 2.0, 4}, {0.0, 1.0, 3}});
    const double volume = 2.0;
    HybridStateGrid uniform{grid.get(),
                            std::vector<Matrix>(grid->size(), ops::identity(2) / (2.0 * volume))};
    const auto density = state::reduce_classical(uniform);
    for (Eigen::Index i = 0; i < density.values.size(); ++i)
        CHECK(density.values[i] == doctest::Approx(1.0 / volume));
    CHECK(phase::integrate(density) == doctest::Approx(1.0));
}

TEST_CASE("quantum reduction follows the analytic mixing curve") {
    const Matrix at0 = state::reduce_quantum(toy::toy_analytic_state(params(), 0.0));
    CHECK((at0 - params().rho_i).cwiseAbs().maxCoeff() < 1e-14);

    for (double t : {0.2, 1.0, 3.0}) {
        const double x = std::exp(-params().kappa * t);
        const Matrix expected = x * params().rho_i + (1.0 - x) * ops::identity(2) / 2.0;
        const Matrix got = state::reduce_quantum(toy::toy_analytic_state(params(), t));
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-13);
    }

    const Matrix late = state::reduce_quantum(toy::toy_analytic_state(params(), 80.0));
    CHECK((late - ops::identity(2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("expectation values") {
    const auto initial = toy::toy_initial_state(params());
    CHECK(state::expectation(state::scalar_observable("norm", 2), initial)
          == doctest::Approx(1.0));

    CHECK(evo::expectation(toy::toy_J_field(2, 1.0), initial) == doctest::Approx(1.5));

    const double t = 2.0 * std::log(2.0);
    state::HybridObservable spin_z{[](const phase::PhaseSpacePoint&) { return 1.0; },
                                   0.5 * ops::sigma_z(), "Sz"};
    CHECK(state::expectation(spin_z, toy::toy_analytic_state(params(), t))
          == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("purity decay") {
    CHECK(state::purity(toy::toy_initial_state(params())) == doctest::Approx(1.0));
    CHECK(state::purity(toy::toy_analytic_state(params(), 100.0))
          == doctest::Approx(0.5).epsilon(1e-10));
    for (double t : {0.5, 1.5, 4.0}) {
        const double x = std::exp(-params().kappa * t);
        CHECK(state::purity(toy::toy_analytic_state(params(), t))
              == doctest::Approx(0.5 * (1.0 + x * x)).epsilon(1e-12));
    }
}

TEST_CASE("rotations act covariantly on J") {
    const auto s = toy::toy_analytic_state(params(), 0.7);
    const auto same = state::rotate_state(Eigen::Matrix3d::Identity(), ops::identity(2), s);
    CHECK(state::atomic_distance(same, s) < 1e-14);

    std::mt19937 rng(5);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> uni(-M_PI, M_PI);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
        axis.normalize();
        const double angle = uni(rng);
        const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        const Matrix u = ops::rotation_unitary(axis, angle);
        const auto rotated = state::rotate_state(r, u, s);
        Eigen::Vector3d j, j_rot;
        for (int a = 0; a < 3; ++a) {
            j[a] = evo::expectation(toy::toy_J_field(a, 1.0), s);
            j_rot[a] = evo::expectation(toy::toy_J_field(a, 1.0), rotated);
        }
        CHECK((j_rot - r * j).cwiseAbs().maxCoeff() < 1e-12);
    }

    CHECK_THROWS_AS(state::rotate_state(Eigen::Matrix3d::Identity(), 2.0 * ops::identity(2), s),
                    std::invalid_argument);
}

TEST_CASE("positivity reports") {
    Matrix indefinite = Matrix::Zero(2, 2);
    indefinite(0, 0) = 1.1;
    indefinite(1, 1) = -0.1;
    HybridStateAtomic bad{{{params().initial_point(), indefinite}}};
    const auto report = state::positivity_report(bad);
    CHECK(report.min_eigenvalue == doctest::Approx(-0.1));
    CHECK(report.location == 0);

    const auto grid = std::make_shared<phase::PhaseSpaceGrid>(
        std::vector<phase::Axis>{{0.0, 2.0, 2}, {0.0, 1.0, 2}});
    const double volume = 2.0;
    HybridStateGrid uniform{grid.get(),
                            std::vector<Matrix>(grid->size(), ops::identity(2) / (2.0 * volume))};
    CHECK(state::positivity_report(uniform).min_eigenvalue
          == doctest::Approx(1.0 / (2.0 * volume)));

    for (double t : {0.0, 0.4, 2.0, 30.0})
        CHECK(state::positivity_report(toy::toy_analytic_state(params(), t)).min_eigenvalue
              >= -1e-15);
}

TEST_CASE("atomic canonicalization and distance") {
    const auto z0 = params().initial_point();
    HybridStateAtomic split{{{z0, 0.25 * ops::identity(2)}, {z0, 0.25 * ops::identity(2)}}};
    const auto merged = state::canonicalize(split);
    REQUIRE(merged.atoms.size() == 1);
    CHECK((merged.atoms[0].block - 0.5 * ops::identity(2)).cwiseAbs().maxCoeff() < 1e-15);

    HybridStateAtomic whole{{{z0, 0.5 * ops::identity(2)}}};
    CHECK(state::atomic_distance(split, whole) < 1e-15);

    HybridStateAtomic other{{{phase::PhaseSpacePoint::make3({9, 9, 9}, {0, 0, 0}),
                              0.5 * ops::identity(2)}}};
    CHECK(state::atomic_distance(whole, other) == doctest::Approx(0.5));
}

TEST_CASE("JSON checkpoint round trip") {
    const auto s = toy::toy_analytic_state(params(), 1.3);
    const auto restored = state::atomic_from_json(state::to_json(s));
    CHECK(state::atomic_distance(restored, s) < 1e-15);

    std::mt19937 rng(3);
    std::normal_distribution<double> gauss;
    Matrix m(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = ops::Complex(gauss(rng), gauss(rng));
    const Matrix back = state::matrix_from_json(state::matrix_to_json(m));
    CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(state::atomic_from_json({{"type", "grid"}}), std::invalid_argument);
}
