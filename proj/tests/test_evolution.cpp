#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cqdyn/evolution.hpp"
#include "cqdyn/models.hpp"
#include "cqdyn/toy_model.hpp"

#include <cmath>
#include <memory>
#include <random>

using namespace cqdyn;
using ops::Complex;
using ops::Matrix;
using state::HybridStateGrid;

namespace {

double sup_distance(const HybridStateGrid& a, const HybridStateGrid& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
        worst = std::max(worst, (a.blocks[i] - b.blocks[i]).cwiseAbs().maxCoeff());
    return worst;
}

}  // namespace

TEST_CASE("matrix exponential") {
    CHECK((evo::expm(Eigen::MatrixXcd::Zero(3, 3)) - Eigen::MatrixXcd::Identity(3, 3))
              .cwiseAbs().maxCoeff() < 1e-15);

    Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(2, 2);
    l(1, 1) = -1.0;
    for (double t : {0.1, 1.0, 5.0}) {
        const Eigen::MatrixXcd p = evo::expm(t * l);
        CHECK(std::abs(p(0, 0) - 1.0) < 1e-14);
        CHECK(std::abs(p(1, 1) - std::exp(-t)) < 1e-14);
        CHECK(std::abs(p(0, 1)) + std::abs(p(1, 0)) < 1e-15);
    }
}

TEST_CASE("single RK4 step reproduces qubit precession to O(dt^5)") {
    auto model = models::build_model({{"name", "qubit_precession"}});
    const double dt = 0.01;
    const auto stepped = evo::step_rk4(*model.generator, model.initial, dt);

    // d<sx>/dt = -2<sy>: starting from |+>, <sx>(t) = cos(2t), <sy>(t) = sin(2t)
    const double vol = model.grid->cell_volume();
    const double sx = (ops::sigma_x() * stepped.blocks[0]).trace().real() * vol;
    const double sy = (ops::sigma_y() * stepped.blocks[0]).trace().real() * vol;
    CHECK(std::abs(sx - std::cos(2.0 * dt)) < 1e-9);
    CHECK(std::abs(std::abs(sy) - std::abs(std::sin(2.0 * dt))) < 1e-9);
}

TEST_CASE("RK4 local error is fifth order") {
    const auto model = toy::make_toy_grid_model(toy::ToyModelParams::make());
    const Eigen::MatrixXcd lmat = model.generator->liouvillian_matrix();
    auto local_error = [&](double dt) {
        const auto numeric = evo::step_rk4(*model.generator, model.initial, dt);
        const auto exact = evo::evolve_exact(lmat, model.initial, dt);
        return sup_distance(numeric, exact);
    };
    const double coarse = local_error(0.2);
    const double fine = local_error(0.1);
    CHECK(coarse / fine > 25.0);  // 2^5 = 32 up to higher-order contamination
    CHECK(coarse / fine < 40.0);
}

TEST_CASE("grid evolution tracks the relaxation curve") {
    const auto params = toy::ToyModelParams::make();
    const auto model = toy::make_toy_grid_model(params);
    const auto traj = evo::evolve(*model.generator, model.initial, 10.0, 1e-3,
                                  model.j_observables);
    REQUIRE_FALSE(traj.aborted);
    REQUIRE(traj.labels.size() == 3);

    double worst = 0.0, worst_trace = 0.0;
    const double j0 = traj.observables[2][0];
    CHECK(j0 == doctest::Approx(1.5).epsilon(1e-10));
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double analytic = j0 * std::exp(-params.kappa * traj.times[k]);
        worst = std::max(worst, std::abs(traj.observables[2][k] - analytic));
        worst_trace = std::max(worst_trace, traj.trace_dev[k]);
    }
    CHECK(worst < 1e-6);
    CHECK(worst_trace < 1e-9);
}

TEST_CASE("trace deviation stays small over long random-coupling runs") {
    auto model = models::make_random_valid_model(8, 314);
    const auto traj = evo::evolve(*model.generator, model.initial, 10.0, 1e-3);
    REQUIRE_FALSE(traj.aborted);
    REQUIRE(traj.times.size() == 10001);
    double worst = 0.0;
    for (double dev : traj.trace_dev) worst = std::max(worst, dev);
    CHECK(worst < 1e-9);
}

TEST_CASE("exact propagation matches the analytic relaxation") {
    const auto params = toy::ToyModelParams::make();
    const auto model = toy::make_toy_grid_model(params);
    const Eigen::MatrixXcd lmat = model.generator->liouvillian_matrix();

    CHECK(sup_distance(evo::evolve_exact(lmat, model.initial, 0.0), model.initial) < 1e-15);

    const auto at1 = evo::evolve_exact(lmat, model.initial, 1.0);
    const double x = std::exp(-params.kappa);
    const double vol = model.grid->cell_volume();
    CHECK((at1.blocks[model.initial_cell] - x * params.rho_i / vol).cwiseAbs().maxCoeff()
          < 1e-12);
    CHECK((at1.blocks[model.final_cell] - 0.5 * (1.0 - x) * ops::identity(2) / vol)
              .cwiseAbs().maxCoeff() < 1e-12);

    const auto late = evo::evolve_exact(lmat, model.initial, 200.0);
    CHECK((late.blocks[model.final_cell] - 0.5 * ops::identity(2) / vol).cwiseAbs().maxCoeff()
          < 1e-12);
    CHECK(late.blocks[model.initial_cell].cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("RK4 agrees with the exponential oracle on every stock model") {
    for (const std::string name : {"toy", "qubit_precession", "depolarizing",
                                   "metastable_pair"}) {
        auto model = models::build_model({{"name", name}}, 7);
        if (model.grid->size() * 4 > 512) continue;
        const auto traj = evo::evolve(*model.generator, model.initial, 1.0, 1e-3);
        REQUIRE_FALSE(traj.aborted);
        const auto exact =
            evo::evolve_exact(model.generator->liouvillian_matrix(), model.initial, 1.0);
        CHECK(sup_distance(traj.final_state, exact) < 1e-6);
    }
}

TEST_CASE("semigroup property of the exact propagator") {
    const auto model = toy::make_toy_grid_model(toy::ToyModelParams::make());
    const Eigen::MatrixXcd lmat = model.generator->liouvillian_matrix();
    const auto two_leg =
        evo::evolve_exact(lmat, evo::evolve_exact(lmat, model.initial, 0.7), 1.6);
    const auto one_leg = evo::evolve_exact(lmat, model.initial, 2.3);
    CHECK(sup_distance(two_leg, one_leg) < 1e-13);
}

TEST_CASE("monitors abort on unphysical states") {
    const auto model = toy::make_toy_grid_model(toy::ToyModelParams::make());
    HybridStateGrid doubled = model.initial;
    for (auto& block : doubled.blocks) block *= 2.0;
    const auto traj = evo::evolve(*model.generator, doubled, 1.0, 1e-3);
    CHECK(traj.aborted);
    CHECK(traj.abort_time == doctest::Approx(0.0));
}

TEST_CASE("snapshots are recorded on the requested cadence") {
    const auto model = toy::make_toy_grid_model(toy::ToyModelParams::make());
    evo::EvolveOptions options;
    options.snapshot_every = 100;
    const auto traj =
        evo::evolve(*model.generator, model.initial, 1.0, 1e-3, {}, options);
    REQUIRE(traj.snapshots.size() == traj.snapshot_times.size());
    CHECK(traj.snapshots.size() == 11);
    CHECK(traj.snapshot_times.front() == doctest::Approx(0.0));
    CHECK(traj.snapshot_times.back() == doctest::Approx(1.0));
}

TEST_CASE("observable sums evaluate fields pointwise") {
    const auto jz = toy::toy_J_field(2, 1.0);
    const phase::PhaseSpacePoint z{Eigen::Vector3d(1.0, 0.0, 0.0),
                                   Eigen::Vector3d(0.0, 1.0, 0.0)};
    const Matrix field = jz.field_at(z);
    // (q x p)_z = 1 at this point, so the field is I + sz/2
    CHECK((field - (ops::identity(2) + 0.5 * ops::sigma_z())).cwiseAbs().maxCoeff() < 1e-15);
}
