#include "cqdyn/models.hpp"

#include <random>
#include <stdexcept>

namespace cqdyn::models {

using gen::CouplingSpec;
using ops::Matrix;
using phase::Axis;
using phase::PhaseSpaceGrid;
using phase::PhaseSpacePoint;

std::vector<std::string> builtin_names() {
    return {"toy", "qubit_precession", "depolarizing", "metastable_pair", "random_valid"};
}

toy::ToyModelParams toy_params_from_json(const nlohmann::json& params) {
    toy::ToyModelParams p = toy::ToyModelParams::make();
    if (params.contains("kappa")) p.kappa = params.at("kappa").get<double>();
    if (params.contains("hbar")) p.hbar = params.at("hbar").get<double>();
    if (params.contains("q0")) {
        const auto v = params.at("q0").get<std::vector<double>>();
        p.q0 = Eigen::Vector3d(v.at(0), v.at(1), v.at(2));
    }
    if (params.contains("p0")) {
        const auto v = params.at("p0").get<std::vector<double>>();
        p.p0 = Eigen::Vector3d(v.at(0), v.at(1), v.at(2));
    }
    if (params.contains("rho_i")) p.rho_i = state::matrix_from_json(params.at("rho_i"));
    p.validate();
    return p;
}

namespace {

evo::ObservableSum spin_observable(int a) {
    return evo::single_term({[](const PhaseSpacePoint&) { return 1.0; }, ops::sigma(a),
                             std::string("s") + "xyz"[a]});
}

BuiltModel make_toy_model(const nlohmann::json& params) {
    const auto p = toy_params_from_json(params);
    const auto grid_model = toy::make_toy_grid_model(p);
    BuiltModel model;
    model.name = "toy";
    model.grid = grid_model.grid;
    model.generator = grid_model.generator;
    model.initial = grid_model.initial;
    model.observables = grid_model.j_observables;
    model.toy_params = p;
    return model;
}

BuiltModel make_qubit_precession() {
    auto grid = std::make_shared<const PhaseSpaceGrid>(
        std::vector<Axis>{{0.0, 1.0, 1}, {0.0, 1.0, 1}});
    CouplingSpec spec;
    spec.basis = ops::make_su_basis(2);
    const Matrix h = ops::sigma_z();
    spec.hamiltonian = [h](const PhaseSpacePoint&) { return h; };

    BuiltModel model;
    model.name = "qubit_precession";
    model.grid = grid;
    model.generator = std::make_shared<gen::GridGenerator>(spec, grid);
    Matrix plus(2, 2);
    plus << 0.5, 0.5,
            0.5, 0.5;
    model.initial = {grid.get(), {plus}};
    for (int a = 0; a < 3; ++a) model.observables.push_back(spin_observable(a));
    return model;
}

BuiltModel make_depolarizing(const nlohmann::json& params) {
    const double gamma = params.value("gamma", 1.0);
    auto grid = std::make_shared<const PhaseSpaceGrid>(
        std::vector<Axis>{{0.0, 1.0, 1}, {0.0, 1.0, 1}});
    CouplingSpec spec;
    spec.basis = ops::make_su_basis(2);
    Matrix rates = Matrix::Zero(4, 4);
    for (int a = 1; a < 4; ++a) rates(a, a) = gamma / 4.0;
    spec.lindblad_rates = [rates](const PhaseSpacePoint&) { return rates; };

    BuiltModel model;
    model.name = "depolarizing";
    model.grid = grid;
    model.generator = std::make_shared<gen::GridGenerator>(spec, grid);
    Matrix rho0 = Matrix::Zero(2, 2);
    rho0(0, 0) = 1.0;
    model.initial = {grid.get(), {rho0}};
    model.observables.push_back(spin_observable(2));
    return model;
}

// Two independent copies of the toy coupling on disjoint cell pairs, with
// decay rates kappa1 >> kappa2; the slow block carries the metastable regime.
BuiltModel make_metastable_pair(const nlohmann::json& params) {
    const double kappa1 = params.value("kappa1", 1.0);
    const double kappa2 = params.value("kappa2", 1e-3);
    auto grid = std::make_shared<const PhaseSpaceGrid>(
        std::vector<Axis>{{0.0, 4.0, 4}, {0.0, 1.0, 1}});
    const double vol = grid->cell_volume();
    const double half_cell = grid->axes()[0].spacing() / 2.0;
    // cells 0,1: fast block (final, initial); cells 2,3: slow block
    const double fast_final = grid->point(0).q[0];
    const double slow_final = grid->point(2).q[0];
    const double split = grid->point(2).q[0] - half_cell;

    CouplingSpec spec;
    spec.basis = ops::make_su_basis(2);
    spec.kernel = [=](const PhaseSpacePoint& z, const PhaseSpacePoint& zp) {
        const bool fast_block = zp.q[0] < split;
        const double kappa = fast_block ? kappa1 : kappa2;
        const double target = fast_block ? fast_final : slow_final;
        const double rho_f = std::abs(z.q[0] - target) < half_cell ? 1.0 / vol : 0.0;
        return Matrix((kappa / 4.0) * rho_f * ops::identity(4));
    };

    BuiltModel model;
    model.name = "metastable_pair";
    model.grid = grid;
    model.generator = std::make_shared<gen::GridGenerator>(spec, grid);
    model.initial = {grid.get(), std::vector<Matrix>(4, Matrix::Zero(2, 2))};
    Matrix rho0 = Matrix::Zero(2, 2);
    rho0(0, 0) = 1.0;
    model.initial.blocks[1] = 0.5 * rho0 / vol;
    model.initial.blocks[3] = 0.5 * rho0 / vol;
    model.observables.push_back(spin_observable(2));
    return model;
}

}  // namespace

BuiltModel make_random_valid_model(int cells, unsigned seed, double rate_scale) {
    if (cells < 1 || cells > 32)
        throw std::invalid_argument("make_random_valid_model: cells must be in [1, 32]");
    auto grid = std::make_shared<const PhaseSpaceGrid>(
        std::vector<Axis>{{-1.0, 1.0, cells}, {0.0, 1.0, 1}});
    const double vol = grid->cell_volume();
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto random_matrix = [&](int n) {
        Matrix g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = ops::Complex(gauss(rng), gauss(rng));
        return g;
    };

    auto hs = std::make_shared<std::vector<Matrix>>();
    auto lambdas = std::make_shared<std::vector<Matrix>>();
    auto wtable = std::make_shared<std::vector<Matrix>>();
    for (int i = 0; i < cells; ++i) {
        const Matrix g = random_matrix(2);
        hs->push_back(0.5 * (g + g.adjoint()));
        const Matrix l = random_matrix(4);
        lambdas->push_back(rate_scale / 4.0 * (l * l.adjoint()));
    }
    for (int i = 0; i < cells * cells; ++i) {
        const Matrix w = random_matrix(4);
        Matrix full = rate_scale / (4.0 * cells * vol) * (w * w.adjoint());
        // Keep the identity component decoupled from the traceless block so the
        // displacement moments contract to real backreaction coefficients.
        full.row(0).tail(3).setZero();
        full.col(0).tail(3).setZero();
        wtable->push_back(full);
    }

    CouplingSpec spec;
    spec.basis = ops::make_su_basis(2);
    auto grid_ref = grid;
    spec.hamiltonian = [hs, grid_ref](const PhaseSpacePoint& z) {
        return (*hs)[grid_ref->locate(z)];
    };
    spec.lindblad_rates = [lambdas, grid_ref](const PhaseSpacePoint& z) {
        return (*lambdas)[grid_ref->locate(z)];
    };
    spec.kernel = [wtable, grid_ref, cells](const PhaseSpacePoint& z,
                                            const PhaseSpacePoint& zp) {
        return (*wtable)[grid_ref->locate(z) * cells + grid_ref->locate(zp)];
    };

    BuiltModel model;
    model.name = "random_valid";
    model.grid = grid;
    model.generator = std::make_shared<gen::GridGenerator>(spec, grid);
    model.initial = {grid.get(), {}};
    Matrix total = Matrix::Zero(2, 2);
    for (int i = 0; i < cells; ++i) {
        const Matrix g = random_matrix(2);
        model.initial.blocks.push_back(g * g.adjoint());
        total += model.initial.blocks.back();
    }
    const double norm = total.trace().real() * vol;
    for (auto& block : model.initial.blocks) block /= norm;
    model.observables.push_back(spin_observable(2));
    return model;
}

BuiltModel build_model(const nlohmann::json& model_cfg, unsigned seed) {
    const std::string name = model_cfg.value("name", "");
    const nlohmann::json params = model_cfg.value("params", nlohmann::json::object());
    if (name == "toy") return make_toy_model(params);
    if (name == "qubit_precession") return make_qubit_precession();
    if (name == "depolarizing") return make_depolarizing(params);
    if (name == "metastable_pair") return make_metastable_pair(params);
    if (name == "random_valid")
        return make_random_valid_model(params.value("cells", 16),
                                       params.value("seed", seed),
                                       params.value("rate_scale", 0.5));
    throw std::invalid_argument("build_model: unknown model.name '" + name + "'");
}

}  // namespace cqdyn::models
