#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cqdyn/evolution.hpp"
#include "cqdyn/models.hpp"

#include <algorithm>

using namespace cqdyn;
using ops::Matrix;

TEST_CASE("builtin registry") {
    const auto names = models::builtin_names();
    for (const std::string expected :
         {"toy", "qubit_precession", "depolarizing", "metastable_pair", "random_valid"})
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());
    CHECK_THROWS_AS(models::build_model({{"name", "no_such_model"}}), std::invalid_argument);
}

TEST_CASE("every builtin ships a normalized positive initial state") {
    for (const auto& name : models::builtin_names()) {
        CAPTURE(name);
        auto model = models::build_model({{"name", name}}, 99);
        CHECK(model.name == name);
        CHECK(state::check_normalization(model.initial) < 1e-10);
        CHECK(state::positivity_report(model.initial).min_eigenvalue > -1e-12);
        // one derivative application conserves probability
        const auto drho = model.generator->apply(model.initial);
        double trace = 0.0;
        for (const auto& block : drho.blocks) trace += block.trace().real();
        CHECK(std::abs(trace * model.grid->cell_volume()) < 1e-9);
    }
}

TEST_CASE("toy parameter parsing") {
    const auto defaults = models::toy_params_from_json({});
    CHECK(defaults.kappa == doctest::Approx(0.5));
    CHECK(defaults.q0.isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));

    const auto custom = models::toy_params_from_json(
        {{"kappa", 2.0}, {"hbar", 0.5}, {"q0", {0.0, 1.0, 0.0}}, {"p0", {0.0, 0.0, 2.0}}});
    CHECK(custom.kappa == doctest::Approx(2.0));
    CHECK(custom.hbar == doctest::Approx(0.5));
    CHECK(custom.q0.isApprox(Eigen::Vector3d(0.0, 1.0, 0.0)));
    CHECK(custom.p0.isApprox(Eigen::Vector3d(0.0, 0.0, 2.0)));

    CHECK_THROWS_AS(models::toy_params_from_json({{"kappa", -1.0}}), std::invalid_argument);
}

TEST_CASE("random model generation is seed-deterministic") {
    auto a = models::make_random_valid_model(12, 42);
    auto b = models::make_random_valid_model(12, 42);
    auto c = models::make_random_valid_model(12, 43);
    REQUIRE(a.grid->size() == 12);
    double mismatch_ab = 0.0, mismatch_ac = 0.0;
    for (std::ptrdiff_t i = 0; i < a.grid->size(); ++i) {
        mismatch_ab = std::max(mismatch_ab,
                               (a.initial.blocks[i] - b.initial.blocks[i]).cwiseAbs().maxCoeff());
        mismatch_ac = std::max(mismatch_ac,
                               (a.initial.blocks[i] - c.initial.blocks[i]).cwiseAbs().maxCoeff());
    }
    CHECK(mismatch_ab == 0.0);
    CHECK(mismatch_ac > 0.0);

    const auto la = a.generator->liouvillian_matrix();
    const auto lb = b.generator->liouvillian_matrix();
    CHECK((la - lb).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("depolarizing model relaxes toward the maximally mixed block") {
    auto model = models::build_model({{"name", "depolarizing"}});
    const auto traj = evo::evolve(*model.generator, model.initial, 10.0, 1e-3);
    REQUIRE_FALSE(traj.aborted);
    const Matrix rho = state::reduce_quantum(traj.final_state);
    CHECK((rho - ops::identity(2) / 2.0).cwiseAbs().maxCoeff() < 1e-3);
}
