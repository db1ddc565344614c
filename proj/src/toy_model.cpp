#include "cqdyn/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cqdyn::toy {

ToyModelParams ToyModelParams::make() {
    ToyModelParams params;
    params.rho_i = Matrix::Zero(2, 2);
    params.rho_i(0, 0) = 1.0;
    return params;
}

void ToyModelParams::validate() const {
    if (kappa <= 0.0) throw std::invalid_argument("ToyModelParams: kappa must be positive");
    if (hbar <= 0.0) throw std::invalid_argument("ToyModelParams: hbar must be positive");
    if (rho_i.rows() != 2 || rho_i.cols() != 2)
        throw std::invalid_argument("ToyModelParams: rho_i must be 2x2");
    if (!ops::validate_density(rho_i, 1e-10).valid)
        throw std::invalid_argument("ToyModelParams: rho_i is not a valid density matrix");
}

ToyAtomicGenerator::ToyAtomicGenerator(ToyModelParams params, bool collapse_twirl)
    : params_(std::move(params)), collapse_twirl_(collapse_twirl) {
    params_.validate();
}

HybridStateAtomic ToyAtomicGenerator::apply(const HybridStateAtomic& rho) const {
    Matrix total = state::reduce_quantum(rho);
    HybridStateAtomic out;
    out.atoms.reserve(rho.atoms.size() + 1);
    for (const auto& atom : rho.atoms)
        out.atoms.push_back({atom.z, -params_.kappa * atom.block});
    Matrix gain = collapse_twirl_
                      ? Matrix((params_.kappa / 2.0) * total.trace() * ops::identity(2))
                      : Matrix((params_.kappa / 4.0) * ops::pauli_twirl(total));
    out.atoms.push_back({params_.final_state, std::move(gain)});
    return state::canonicalize(out);
}

Matrix ToyAtomicGenerator::adjoint_at(
    const std::function<Matrix(const PhaseSpacePoint&)>& a, const PhaseSpacePoint& z) const {
    const Matrix a_f = a(params_.final_state);
    const Matrix gain = collapse_twirl_
                            ? Matrix((params_.kappa / 2.0) * a_f.trace() * ops::identity(2))
                            : Matrix((params_.kappa / 4.0) * ops::pauli_twirl(a_f));
    return -params_.kappa * a(z) + gain;
}

HybridStateAtomic toy_initial_state(const ToyModelParams& params) {
    params.validate();
    return {{{params.initial_point(), params.rho_i}}};
}

HybridStateAtomic toy_analytic_state(const ToyModelParams& params, double t) {
    return evolve_atomic_toy(params, toy_initial_state(params), t);
}

HybridStateAtomic evolve_atomic_toy(const ToyModelParams& params,
                                    const HybridStateAtomic& rho0, double t) {
    if (t < 0.0) throw std::domain_error("evolve_atomic_toy: t must be nonnegative");
    const double decay = std::exp(-params.kappa * t);
    const Matrix total = state::reduce_quantum(rho0);
    HybridStateAtomic out;
    out.atoms.reserve(rho0.atoms.size() + 1);
    for (const auto& atom : rho0.atoms) out.atoms.push_back({atom.z, decay * atom.block});
    if (decay < 1.0)
        out.atoms.push_back({params.final_state,
                             0.5 * (1.0 - decay) * total.trace() * ops::identity(2)});
    return state::canonicalize(out);
}

double toy_spin_expectation(const ToyModelParams& params, double t, int a) {
    return params.hbar / 2.0 * std::exp(-params.kappa * t) *
           (ops::sigma(a) * params.rho_i).trace().real();
}

AngularMomentumRecord toy_angular_momentum(const ToyModelParams& params, double t) {
    const double decay = std::exp(-params.kappa * t);
    AngularMomentumRecord record;
    record.t = t;
    record.orbital = decay * params.q0.cross(params.p0);
    for (int a = 0; a < 3; ++a)
        record.spin[a] = toy_spin_expectation(params, t, a);
    record.total = record.orbital + record.spin;
    return record;
}

evo::ObservableSum toy_J_field(int a, double hbar) {
    const std::string label = std::string("J") + "xyz"[a];
    state::HybridObservable orbital{
        [a](const PhaseSpacePoint& z) {
            const Eigen::Vector3d q = z.q, p = z.p;
            return q.cross(p)[a];
        },
        ops::identity(2), label + "_orbital"};
    state::HybridObservable spin{[](const PhaseSpacePoint&) { return 1.0; },
                                 hbar / 2.0 * ops::sigma(a), label + "_spin"};
    return {label, {orbital, spin}};
}

ToyGridModel make_toy_grid_model(const ToyModelParams& params) {
    params.validate();
    // Two abstract cells: cell 0 holds the final state, cell 1 the initial delta.
    auto grid = std::make_shared<const phase::PhaseSpaceGrid>(
        std::vector<phase::Axis>{{0.0, 2.0, 2}, {0.0, 1.0, 1}});
    const double vol = grid->cell_volume();
    const double final_q = grid->point(0).q[0];
    const double initial_q = grid->point(1).q[0];
    const double half_cell = grid->axes()[0].spacing() / 2.0;

    gen::CouplingSpec spec;
    spec.basis = ops::make_su_basis(2);
    const double kappa = params.kappa;
    spec.kernel = [kappa, vol, final_q, half_cell](const PhaseSpacePoint& z,
                                                   const PhaseSpacePoint&) {
        const double rho_f = std::abs(z.q[0] - final_q) < half_cell ? 1.0 / vol : 0.0;
        return Matrix((kappa / 4.0) * rho_f * ops::identity(4));
    };

    ToyGridModel model;
    model.grid = grid;
    model.generator = std::make_shared<gen::GridGenerator>(std::move(spec), grid);
    model.final_cell = 0;
    model.initial_cell = 1;
    model.initial.grid = grid.get();
    model.initial.blocks.assign(grid->size(), Matrix::Zero(2, 2));
    model.initial.blocks[model.initial_cell] = params.rho_i / vol;

    const Eigen::Vector3d l0 = params.q0.cross(params.p0);
    for (int a = 0; a < 3; ++a) {
        const std::string label = std::string("J") + "xyz"[a];
        state::HybridObservable orbital{
            [initial_q, half_cell, value = l0[a]](const PhaseSpacePoint& z) {
                return std::abs(z.q[0] - initial_q) < half_cell ? value : 0.0;
            },
            ops::identity(2), label + "_orbital"};
        state::HybridObservable spin{[](const PhaseSpacePoint&) { return 1.0; },
                                     params.hbar / 2.0 * ops::sigma(a), label + "_spin"};
        model.j_observables.push_back({label, {orbital, spin}});
    }
    return model;
}

namespace {

HybridStateAtomic random_atomic_state(std::mt19937& rng, int n_atoms) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    HybridStateAtomic s;
    for (int k = 0; k < n_atoms; ++k) {
        Eigen::Vector3d q, p;
        for (int i = 0; i < 3; ++i) {
            q[i] = gauss(rng);
            p[i] = gauss(rng);
        }
        Matrix g(2, 2);
        for (int i = 0; i < 4; ++i) g(i / 2, i % 2) = ops::Complex(gauss(rng), gauss(rng));
        s.atoms.push_back({{q, p}, Matrix(g * g.adjoint())});
    }
    const double trace = state::total_trace(s);
    for (auto& atom : s.atoms) atom.block /= trace;
    return s;
}

}  // namespace

NonconservationReport nonconservation_demo(const ToyModelParams& params,
                                           const std::vector<double>& t_grid,
                                           double grid_dt, unsigned seed) {
    if (t_grid.empty())
        throw std::invalid_argument("nonconservation_demo: empty time grid");
    params.validate();

    NonconservationReport report;
    std::vector<evo::ObservableSum> j_fields;
    for (int a = 0; a < 3; ++a) j_fields.push_back(toy_J_field(a, params.hbar));

    // Atomic exact evolution vs the analytic closed form.
    const HybridStateAtomic initial = toy_initial_state(params);
    double j_scale = 0.0;
    for (double t : t_grid) {
        const HybridStateAtomic s = evolve_atomic_toy(params, initial, t);
        const AngularMomentumRecord analytic = toy_angular_momentum(params, t);
        for (int a = 0; a < 3; ++a) {
            const double numeric = evo::expectation(j_fields[a], s);
            report.max_atomic_deviation = std::max(
                report.max_atomic_deviation, std::abs(numeric - analytic.total[a]));
            j_scale = std::max(j_scale, std::abs(analytic.total[a]));
        }
    }
    report.j_initial = toy_angular_momentum(params, 0.0).total;
    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
    report.j_final = toy_angular_momentum(params, t_max).total;
    report.j_conserved =
        (report.j_final - report.j_initial).cwiseAbs().maxCoeff() <=
        1e-8 * std::max(1.0, j_scale);

    // Grid RK4 cross-check on the two-cell discretization.
    const ToyGridModel grid_model = make_toy_grid_model(params);
    const auto traj = evo::evolve(*grid_model.generator, grid_model.initial, t_max,
                                  grid_dt, grid_model.j_observables);
    for (std::size_t step = 0; step < traj.times.size(); ++step) {
        const AngularMomentumRecord analytic = toy_angular_momentum(params, traj.times[step]);
        for (int a = 0; a < 3; ++a)
            report.max_grid_deviation =
                std::max(report.max_grid_deviation,
                         std::abs(traj.observables[a][step] - analytic.total[a]));
    }

    // Rotation covariance of the generator on a finite test-state family.
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * M_PI);
    const ToyAtomicGenerator generator(params);
    std::vector<HybridStateAtomic> test_states{initial};
    for (int k = 0; k < 5; ++k) test_states.push_back(random_atomic_state(rng, 2));
    for (int r = 0; r < 30; ++r) {
        Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
        axis.normalize();
        const double angle = angle_dist(rng);
        const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        const Matrix u = ops::rotation_unitary(axis, angle);
        for (const auto& s : test_states) {
            const auto lhs = state::rotate_state(rot, u, generator.apply(s));
            const auto rhs = generator.apply(state::rotate_state(rot, u, s));
            report.symmetry_residual =
                std::max(report.symmetry_residual, state::atomic_distance(lhs, rhs));
        }
    }
    report.eom_rotationally_invariant = report.symmetry_residual <= 1e-10;
    return report;
}

}  // namespace cqdyn::toy
