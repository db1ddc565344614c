#include "cqdyn/audit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cqdyn::audit {

namespace {

double frob(const Matrix& m) { return m.norm(); }

state::HybridStateAtomic random_atomic_state(std::mt19937& rng, int n_atoms) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    state::HybridStateAtomic s;
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

double pairing_derivative(const toy::ToyAtomicGenerator& generator, const ObsFn& obs,
                          const state::HybridStateAtomic& rho) {
    double sum = 0.0;
    for (const auto& atom : rho.atoms)
        sum += (generator.adjoint_at(obs, atom.z) * atom.block).trace().real();
    return sum;
}

}  // namespace

double conservation_check(const toy::ToyAtomicGenerator& generator, const ObsFn& obs,
                          const std::vector<PhaseSpacePoint>& test_points) {
    double norm_a = 0.0, norm_la = 0.0;
    for (const auto& z : test_points) {
        norm_a = std::max(norm_a, frob(obs(z)));
        norm_la = std::max(norm_la, frob(generator.adjoint_at(obs, z)));
    }
    if (norm_a == 0.0) return 0.0;
    return norm_la / norm_a;
}

double conservation_check(const gen::GridGenerator& generator,
                          const gen::ObservableField& field) {
    const double vol = generator.grid().cell_volume();
    const auto dual = generator.apply_adjoint(field);
    double norm_a = 0.0, norm_la = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        norm_a += vol * field[i].squaredNorm();
        norm_la += vol * dual[i].squaredNorm();
    }
    if (norm_a == 0.0) return 0.0;
    return std::sqrt(norm_la / norm_a);
}

double symmetry_check(const toy::ToyAtomicGenerator& generator, const Eigen::Matrix3d& r,
                      const Matrix& u,
                      const std::vector<state::HybridStateAtomic>& states) {
    double residual = 0.0;
    for (const auto& s : states) {
        const auto lhs = state::rotate_state(r, u, generator.apply(s));
        const auto rhs = generator.apply(state::rotate_state(r, u, s));
        residual = std::max(residual, state::atomic_distance(lhs, rhs));
    }
    return residual;
}

AuditVerdict noether_audit(const toy::ToyModelParams& params, int n_rotations,
                           unsigned seed) {
    params.validate();
    const toy::ToyAtomicGenerator generator(params);
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * M_PI);

    AuditVerdict verdict;
    verdict.observable = "J";

    std::vector<state::HybridStateAtomic> test_states{toy::toy_initial_state(params)};
    for (int k = 0; k < 10; ++k) test_states.push_back(random_atomic_state(rng, 2));
    for (int r = 0; r < n_rotations; ++r) {
        Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
        axis.normalize();
        const double angle = angle_dist(rng);
        const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        const Matrix u = ops::rotation_unitary(axis, angle);
        verdict.symmetry_residual =
            std::max(verdict.symmetry_residual, symmetry_check(generator, rot, u, test_states));
    }

    std::vector<PhaseSpacePoint> test_points{params.initial_point(), params.final_state};
    for (int k = 0; k < 8; ++k) {
        Eigen::Vector3d q, p;
        for (int i = 0; i < 3; ++i) {
            q[i] = gauss(rng);
            p[i] = gauss(rng);
        }
        test_points.push_back({q, p});
    }
    std::vector<ObsFn> j_fields;
    for (int a = 0; a < 3; ++a) j_fields.push_back(field_of(toy::toy_J_field(a, params.hbar)));
    for (const auto& obs : j_fields)
        verdict.conservation_residual =
            std::max(verdict.conservation_residual,
                     conservation_check(generator, obs, test_points));

    // d<J_z>/dt along the trajectory, via the pairing and via finite differences.
    const auto jz = toy::toy_J_field(2, params.hbar);
    const auto jz_fn = j_fields[2];
    const auto initial = toy::toy_initial_state(params);
    const double fd_step = 1e-4;
    double max_rate = 0.0, j_scale = 0.0;
    for (int k = 0; k <= 50; ++k) {
        const double t = 0.1 * k;
        const auto rho_t = toy::evolve_atomic_toy(params, initial, t);
        const double via_pairing = pairing_derivative(generator, jz_fn, rho_t);
        const double plus =
            evo::expectation(jz, toy::evolve_atomic_toy(params, initial, t + fd_step));
        double via_fd;
        if (t < fd_step) {
            // second-order one-sided stencil at the left endpoint
            const double here = evo::expectation(jz, rho_t);
            const double plus2 = evo::expectation(
                jz, toy::evolve_atomic_toy(params, initial, t + 2.0 * fd_step));
            via_fd = (-3.0 * here + 4.0 * plus - plus2) / (2.0 * fd_step);
        } else {
            const double minus =
                evo::expectation(jz, toy::evolve_atomic_toy(params, initial, t - fd_step));
            via_fd = (plus - minus) / (2.0 * fd_step);
        }
        if (std::abs(via_pairing - via_fd) > 1e-7 * std::max(1.0, std::abs(via_pairing)))
            throw std::runtime_error(
                "noether_audit: pairing and finite-difference d<A>/dt disagree");
        verdict.dAdt_times.push_back(t);
        verdict.dAdt_pairing.push_back(via_pairing);
        verdict.dAdt_numeric.push_back(via_fd);
        max_rate = std::max(max_rate, std::abs(via_pairing));
        j_scale = std::max(j_scale, std::abs(evo::expectation(jz, rho_t)));
    }

    verdict.symmetric = verdict.symmetry_residual <= 1e-10;
    verdict.conserved = verdict.conservation_residual <= 1e-8 &&
                        max_rate <= 1e-8 * std::max(1.0, j_scale);
    return verdict;
}

nlohmann::json AuditVerdict::to_json() const {
    return {{"observable", observable},
            {"symmetric", symmetric},
            {"conserved", conserved},
            {"symmetry_residual", symmetry_residual},
            {"conservation_residual", conservation_residual},
            {"dJdt_samples",
             {{"t", dAdt_times}, {"pairing", dAdt_pairing}, {"numeric", dAdt_numeric}}}};
}

ConsistencyReport consistency_suite(const toy::ToyModelParams& params, double horizon) {
    params.validate();
    ConsistencyReport report;
    const auto initial = toy::toy_initial_state(params);
    const int n_samples = 21;

    // I: classical marginal nonnegative and normalized along the trajectory.
    {
        double residual = 0.0;
        for (int k = 0; k < n_samples; ++k) {
            const double t = horizon * k / (n_samples - 1);
            const auto s = toy::evolve_atomic_toy(params, initial, t);
            double total = 0.0;
            for (const auto& [z, w] : state::reduce_classical(s)) {
                residual = std::max(residual, std::max(0.0, -w));
                total += w;
            }
            residual = std::max(residual, std::abs(total - 1.0));
        }
        report.entries.push_back({"I", residual <= 1e-10, residual,
                                  "classical marginal >= 0 and integrates to 1"});
    }

    // II: quantum marginal is a positive semidefinite unit-trace operator.
    {
        double residual = 0.0;
        for (int k = 0; k < n_samples; ++k) {
            const double t = horizon * k / (n_samples - 1);
            const auto rho = state::reduce_quantum(toy::evolve_atomic_toy(params, initial, t));
            const auto density = ops::validate_density(rho, 1e-10);
            residual = std::max({residual, std::max(0.0, -density.min_eigenvalue),
                                 density.trace_deviation, density.herm_residual});
        }
        report.entries.push_back({"II", residual <= 1e-10, residual,
                                  "quantum marginal PSD with unit trace"});
    }

    // III: uncoupled limit evolves by the standard quantum and classical laws.
    {
        auto grid = std::make_shared<const phase::PhaseSpaceGrid>(
            std::vector<phase::Axis>{{0.0, 1.0, 1}, {0.0, 1.0, 1}});
        gen::CouplingSpec spec;
        spec.basis = ops::make_su_basis(2);
        const Matrix h = ops::sigma_z();
        spec.hamiltonian = [h](const PhaseSpacePoint&) { return h; };
        const gen::GridGenerator generator(spec, grid);
        state::HybridStateGrid rho0{grid.get(), {params.rho_i}};
        const double t = 1.0;
        const auto traj = evo::evolve(generator, rho0, t, 1e-3);
        const Matrix u = evo::expm(ops::Complex(0.0, -1.0) * h * t);
        const Matrix expected = u * params.rho_i * u.adjoint();
        const double residual =
            (state::reduce_quantum(traj.final_state) - expected).cwiseAbs().maxCoeff();
        report.entries.push_back({"III", residual <= 1e-8, residual,
                                  "uncoupled sector follows the von Neumann equation"});
    }

    // IV: equivariance of unitary conjugation with the uncoupled evolution.
    {
        auto grid = std::make_shared<const phase::PhaseSpaceGrid>(
            std::vector<phase::Axis>{{0.0, 1.0, 1}, {0.0, 1.0, 1}});
        const Matrix u = ops::rotation_unitary(Eigen::Vector3d(1, 0, 0), 0.7);
        const Matrix h = ops::sigma_z();
        const Matrix h_rotated = u * h * u.adjoint();
        gen::CouplingSpec spec_plain, spec_rotated;
        spec_plain.basis = spec_rotated.basis = ops::make_su_basis(2);
        spec_plain.hamiltonian = [h](const PhaseSpacePoint&) { return h; };
        spec_rotated.hamiltonian = [h_rotated](const PhaseSpacePoint&) { return h_rotated; };
        const gen::GridGenerator gen_plain(spec_plain, grid);
        const gen::GridGenerator gen_rotated(spec_rotated, grid);
        state::HybridStateGrid rho0{grid.get(), {params.rho_i}};
        state::HybridStateGrid rho0_rotated{grid.get(),
                                            {Matrix(u * params.rho_i * u.adjoint())}};
        const double t = 1.0;
        const auto a = evo::evolve(gen_rotated, rho0_rotated, t, 1e-3).final_state;
        const auto b = evo::evolve(gen_plain, rho0, t, 1e-3).final_state;
        const double residual =
            (a.blocks[0] - u * b.blocks[0] * u.adjoint()).cwiseAbs().maxCoeff();
        report.entries.push_back(
            {"IV", residual <= 1e-8, residual, "unitary conjugation commutes with evolution"});
    }

    // V(a): standard conservation laws; the toy model violates this by design.
    {
        const auto j0 = toy::toy_angular_momentum(params, 0.0).total;
        const double max_rate = params.kappa * j0.norm();
        const bool conserved = max_rate <= 1e-8;
        report.model_violates_conservation = !conserved;
        report.entries.push_back({"V(a)", conserved, max_rate,
                                  conserved ? "angular momentum conserved"
                                            : "dJ/dt = -kappa J != 0 (violation reported, "
                                              "not a test failure)"});
    }

    // VI: quantum purity is not a constant of motion.
    {
        const double purity_i = (params.rho_i * params.rho_i).trace().real();
        const double trace_i = params.rho_i.trace().real();
        double residual = 0.0, lo = 1.0, hi = 0.0;
        bool decreasing = true;
        double previous = 2.0;
        for (int k = 0; k < n_samples; ++k) {
            const double t = horizon * k / (n_samples - 1);
            const double numeric =
                state::purity(toy::evolve_atomic_toy(params, initial, t));
            const double x = std::exp(-params.kappa * t);
            const double analytic =
                x * x * purity_i + x * (1.0 - x) * trace_i + (1.0 - x) * (1.0 - x) / 2.0;
            residual = std::max(residual, std::abs(numeric - analytic));
            if (numeric >= previous) decreasing = false;
            previous = numeric;
            lo = std::min(lo, numeric);
            hi = std::max(hi, numeric);
        }
        const bool non_constant = hi - lo > 1e-6;
        report.entries.push_back(
            {"VI", (!non_constant || decreasing) && residual <= 1e-9, residual,
             non_constant ? "purity strictly decreasing (backreaction present)"
                          : "purity constant: no backreaction channel"});
    }
    return report;
}

nlohmann::json ConsistencyReport::to_json() const {
    nlohmann::json entries_json = nlohmann::json::array();
    for (const auto& e : entries)
        entries_json.push_back(
            {{"name", e.name}, {"pass", e.pass}, {"residual", e.residual}, {"note", e.note}});
    return {{"entries", entries_json},
            {"model_violates_conservation", model_violates_conservation},
            {"implementation_ok", implementation_ok()}};
}

}  // namespace cqdyn::audit
