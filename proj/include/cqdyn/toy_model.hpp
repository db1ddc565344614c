// toy_model.hpp — a qubit coupled to a classical particle in 3+1 dimensions:
// generator (explicit four-channel and twirl-collapsed paths), exact atomic
// propagation, analytic solution, spin and angular-momentum formulas, and the
// nonconservation demonstration.

#pragma once

#include "cqdyn/coupling.hpp"
#include "cqdyn/evolution.hpp"
#include "cqdyn/hybrid_state.hpp"

#include <memory>
#include <vector>

namespace cqdyn::toy {

using ops::Matrix;
using phase::PhaseSpacePoint;
using state::HybridStateAtomic;

struct ToyModelParams {
    double kappa = 0.5;
    Eigen::Vector3d q0{1.0, 0.0, 0.0};
    Eigen::Vector3d p0{0.0, 1.0, 0.0};
    Matrix rho_i;  // defaults to |0><0| (see make())
    double hbar = 1.0;
    PhaseSpacePoint final_state{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};

    static ToyModelParams make();
    void validate() const;
    PhaseSpacePoint initial_point() const { return {q0, p0}; }
};

// d rho_hat / dt = -kappa rho_hat(z)
//   + (kappa/4) rho_f(z) int (rho_hat(z') + sum_a sigma_a rho_hat(z') sigma_a) dz'.
// The twirl-collapsed path replaces the channel sum by (kappa/2) Tr[rho_hat] I;
// keeping both makes the collapse a tested identity rather than an assumption.
class ToyAtomicGenerator {
public:
    explicit ToyAtomicGenerator(ToyModelParams params, bool collapse_twirl = false);

    const ToyModelParams& params() const { return params_; }

    // Derivative state (atoms of the input scaled by -kappa plus the gain atom
    // at the final-state location).
    HybridStateAtomic apply(const HybridStateAtomic& rho) const;

    // (L^dag A)(z) for an operator field A.
    Matrix adjoint_at(const std::function<Matrix(const PhaseSpacePoint&)>& a,
                      const PhaseSpacePoint& z) const;

private:
    ToyModelParams params_;
    bool collapse_twirl_;
};

HybridStateAtomic toy_initial_state(const ToyModelParams& params);

// e^{-kappa t} delta(z - z0) rho_i + 1/2 (1 - e^{-kappa t}) delta(z - z_f) I
HybridStateAtomic toy_analytic_state(const ToyModelParams& params, double t);

// Exact closed-form propagation of an arbitrary finitely supported state.
HybridStateAtomic evolve_atomic_toy(const ToyModelParams& params,
                                    const HybridStateAtomic& rho0, double t);

// (hbar/2) e^{-kappa t} Tr[sigma_a rho_i], a in {0, 1, 2} for {x, y, z}
double toy_spin_expectation(const ToyModelParams& params, double t, int a);

struct AngularMomentumRecord {
    double t = 0.0;
    Eigen::Vector3d orbital;  // <q x p>
    Eigen::Vector3d spin;     // (hbar/2) <sigma_a>
    Eigen::Vector3d total;    // orbital + spin
};

AngularMomentumRecord toy_angular_momentum(const ToyModelParams& params, double t);

// Total-angular-momentum observable J_a(z) = (q x p)_a I + (hbar/2) sigma_a,
// as an operator field over phase-space points (n = 3).
evo::ObservableSum toy_J_field(int a, double hbar);

// Two-cell grid discretization of the toy model: one cell carries the initial
// delta, the other the final state; the kernel is the generic W form.
struct ToyGridModel {
    std::shared_ptr<const phase::PhaseSpaceGrid> grid;
    std::shared_ptr<gen::GridGenerator> generator;
    state::HybridStateGrid initial;
    std::vector<evo::ObservableSum> j_observables;  // Jx, Jy, Jz
    std::ptrdiff_t initial_cell = 0;
    std::ptrdiff_t final_cell = 0;
};

ToyGridModel make_toy_grid_model(const ToyModelParams& params);

struct NonconservationReport {
    bool eom_rotationally_invariant = false;
    bool j_conserved = false;
    double symmetry_residual = 0.0;
    double max_atomic_deviation = 0.0;  // atomic numeric vs analytic J(t)
    double max_grid_deviation = 0.0;    // grid RK4 vs analytic J_z(t)
    Eigen::Vector3d j_initial;
    Eigen::Vector3d j_final;
};

NonconservationReport nonconservation_demo(const ToyModelParams& params,
                                           const std::vector<double>& t_grid,
                                           double grid_dt = 1e-3, unsigned seed = 12345);

}  // namespace cqdyn::toy
