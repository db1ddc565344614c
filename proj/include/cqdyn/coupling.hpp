// coupling.hpp — assembly and application of the CQ master-equation
// generator: Hamiltonian term, local dissipator lambda(z), nonlocal kernel
// W(z|z'), classical drift/diffusion moments, Liouvillian matrix, adjoint,
// displacement moments, backreaction summaries, diffusion-decoherence check.

#pragma once

#include "cqdyn/hybrid_state.hpp"
#include "cqdyn/operators.hpp"
#include "cqdyn/phase_space.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cqdyn::gen {

using ops::Matrix;
using ops::OperatorBasis;
using phase::PhaseSpaceGrid;
using phase::PhaseSpacePoint;
using state::HybridStateGrid;

struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Field of operators A(z), one per grid cell (adjoint machinery input).
using ObservableField = std::vector<Matrix>;

// Amplitude kernel (z, z') -> d^2 x d^2 matrix over basis indices.
using PairKernel = std::function<Matrix(const PhaseSpacePoint&, const PhaseSpacePoint&)>;

struct CouplingSpec {
    OperatorBasis basis;
    std::function<Matrix(const PhaseSpacePoint&)> hamiltonian;     // H(z), optional
    std::function<Matrix(const PhaseSpacePoint&)> lindblad_rates;  // lambda(z), optional
    PairKernel kernel;                                             // W(z|z'), optional
    std::function<Eigen::VectorXd(const PhaseSpacePoint&)> drift;       // D^{00}_{(1)i}(z)
    std::function<Eigen::MatrixXd(const PhaseSpacePoint&)> diffusion;   // D^{00}_{(2)ij}(z)
};

// The generator bound to a grid. Coupling data is materialized per cell at
// construction, which also enforces the positive-semidefiniteness
// requirements on lambda(z), W(z|z'), and lambda(z) + W(z).
class GridGenerator {
public:
    GridGenerator(CouplingSpec spec, std::shared_ptr<const PhaseSpaceGrid> grid);

    const PhaseSpaceGrid& grid() const { return *grid_; }
    std::shared_ptr<const PhaseSpaceGrid> grid_ptr() const { return grid_; }
    const OperatorBasis& basis() const { return spec_.basis; }
    int dim() const { return spec_.basis.dim; }
    bool has_kernel() const { return static_cast<bool>(spec_.kernel); }
    const PairKernel& kernel() const { return spec_.kernel; }

    // d rho_hat / dt, same shape as the input state.
    HybridStateGrid apply(const HybridStateGrid& rho) const;

    // L^dag acting on an operator field, the pairing dual of apply().
    ObservableField apply_adjoint(const ObservableField& afield) const;

    // Dense matrix over vectorized states (cell-major, column-major blocks).
    Eigen::MatrixXcd liouvillian_matrix() const;

    HybridStateGrid zero_state() const;

private:
    void apply_classical_moments(const HybridStateGrid& rho, HybridStateGrid& out) const;
    Matrix kernel_at(std::ptrdiff_t i, std::ptrdiff_t j) const;

    CouplingSpec spec_;
    std::shared_ptr<const PhaseSpaceGrid> grid_;
    std::vector<Matrix> h_;        // per cell, empty if no Hamiltonian
    std::vector<Matrix> lambda_;   // per cell, empty if no local dissipator
    std::vector<Matrix> wbar_;     // W(z) = int W(z'|z) dz', per cell
    std::vector<Matrix> wtable_;   // materialized W(z_i|z_j) when small enough
    std::vector<Matrix> products_; // L_nu^dag L_mu, index nu * d^2 + mu
};

// --------------------------------------------------------------------------
// Vectorization helpers (cell-major, column-major within each block)

Eigen::VectorXcd vectorize(const HybridStateGrid& s);
HybridStateGrid devectorize(const Eigen::VectorXcd& v,
                            std::shared_ptr<const PhaseSpaceGrid> grid, int d);

// --------------------------------------------------------------------------
// Displacement moments of amplitude kernels

struct MomentTensor {
    int order = 0;
    int zdim = 0;                            // number of phase-space axes
    std::vector<std::vector<Matrix>> comps;  // comps[cell][flat spatial index]

    const Matrix& at(std::ptrdiff_t cell, int i = 0, int j = 0) const {
        return comps[cell][order == 2 ? i * zdim + j : (order == 1 ? i : 0)];
    }
};

MomentTensor compute_moments(const PairKernel& amplitudes, int order,
                             const PhaseSpaceGrid& grid);

struct BackreactionSummary {
    double d0 = 0.0;
    Eigen::VectorXd d1;
    Eigen::MatrixXd d2;
};

BackreactionSummary backreaction_summary(const HybridStateGrid& rho,
                                         const MomentTensor& m0,
                                         const MomentTensor& m1,
                                         const MomentTensor& m2,
                                         const OperatorBasis& basis);

struct DdVerdict {
    bool pass = false;                // matrix-PSD form
    bool pass_componentwise = false;  // per index pair (i, j)
    bool verdicts_agree = false;
    double min_eigenvalue = 0.0;      // of 2 d0 d2 - d1 d1^T
    int worst_i = 0, worst_j = 0;     // worst componentwise pair
    double worst_margin = 0.0;        // 2 d2_ij d0 - d1_i d1_j at (worst_i, worst_j)
};

DdVerdict check_diffusion_decoherence(const BackreactionSummary& summary);

}  // namespace cqdyn::gen
