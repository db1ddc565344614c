// operators.hpp — dense Hermitian-matrix algebra: su(d) bases, commutators,
// the Pauli twirl, spin-1/2 rotations, eigendecomposition, density checks.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqdyn::ops {

using Matrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double kHermTol = 1e-12;

inline Matrix identity(int d) { return Matrix::Identity(d, d); }

inline Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0.0, 1.0,
         1.0, 0.0;
    return m;
}

inline Matrix sigma_y() {
    Matrix m(2, 2);
    m << 0.0, Complex(0.0, -1.0),
         Complex(0.0, 1.0), 0.0;
    return m;
}

inline Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1.0, 0.0,
         0.0, -1.0;
    return m;
}

inline Matrix sigma(int a) {
    switch (a) {
        case 0: return sigma_x();
        case 1: return sigma_y();
        case 2: return sigma_z();
        default: throw std::invalid_argument("sigma: axis must be 0, 1, or 2");
    }
}

inline double herm_residual(const Matrix& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& a, double tol = kHermTol) {
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return herm_residual(a) <= tol * scale;
}

// Hilbert-Schmidt orthogonal set {L_0 = I, L_alpha}, Tr[L_a L_b] = c delta_ab.
struct OperatorBasis {
    int dim = 0;
    std::vector<Matrix> ops;   // d^2 operators, ops[0] = identity
    double hs_norm = 0.0;      // c

    int size() const { return static_cast<int>(ops.size()); }
};

// Generalized Gell-Mann generators of su(d), normalized to Tr[L_a L_b] = 2 delta_ab
// so that d = 2 yields the Pauli matrices.
inline OperatorBasis make_su_basis(int d) {
    if (d < 2) throw std::invalid_argument("make_su_basis: dimension must be >= 2");
    OperatorBasis basis;
    basis.dim = d;
    basis.hs_norm = 2.0;
    basis.ops.push_back(identity(d));
    for (int k = 0; k < d; ++k) {
        for (int j = 0; j < k; ++j) {
            Matrix sym = Matrix::Zero(d, d);
            sym(j, k) = 1.0;
            sym(k, j) = 1.0;
            basis.ops.push_back(sym);
            Matrix asym = Matrix::Zero(d, d);
            asym(j, k) = Complex(0.0, -1.0);
            asym(k, j) = Complex(0.0, 1.0);
            basis.ops.push_back(asym);
        }
    }
    for (int l = 1; l < d; ++l) {
        Matrix diag = Matrix::Zero(d, d);
        const double norm = std::sqrt(2.0 / (l * (l + 1.0)));
        for (int m = 0; m < l; ++m) diag(m, m) = norm;
        diag(l, l) = -norm * l;
        basis.ops.push_back(diag);
    }
    return basis;
}

inline Matrix commutator(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("commutator: shape mismatch");
    return a * b - b * a;
}

inline Matrix anticommutator(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("anticommutator: shape mismatch");
    return a * b + b * a;
}

// rho + sx rho sx + sy rho sy + sz rho sz; equals 2 Tr[rho] I for any 2x2 rho.
inline Matrix pauli_twirl(const Matrix& rho) {
    if (rho.rows() != 2 || rho.cols() != 2)
        throw std::invalid_argument("pauli_twirl: requires a 2x2 matrix");
    Matrix out = rho;
    for (int a = 0; a < 3; ++a) {
        const Matrix s = sigma(a);
        out += s * rho * s;
    }
    return out;
}

// exp(-i angle (n . sigma) / 2)
inline Matrix rotation_unitary(const Eigen::Vector3d& axis, double angle) {
    if (std::abs(axis.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("rotation_unitary: axis must be a unit vector");
    const Matrix n_sigma = axis.x() * sigma_x() + axis.y() * sigma_y() + axis.z() * sigma_z();
    return std::cos(angle / 2.0) * identity(2)
         - Complex(0.0, 1.0) * std::sin(angle / 2.0) * n_sigma;
}

struct EigResult {
    Eigen::VectorXd values;   // ascending
    Matrix vectors;           // columns are eigenvectors
};

inline EigResult eig_hermitian(const Matrix& a, double tol = kHermTol) {
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (herm_residual(a) > tol * scale)
        throw std::invalid_argument("eig_hermitian: input is not Hermitian within tolerance");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eig_hermitian: eigendecomposition failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver((a + a.adjoint()) / 2.0);
    return solver.eigenvalues().minCoeff();
}

struct DensityReport {
    double herm_residual = 0.0;
    double min_eigenvalue = 0.0;
    double trace_deviation = 0.0;
    bool valid = false;
};

inline DensityReport validate_density(const Matrix& rho, double tol = 1e-10) {
    DensityReport report;
    report.herm_residual = herm_residual(rho);
    report.min_eigenvalue = min_eigenvalue(rho);
    report.trace_deviation = std::abs(rho.trace().real() - 1.0);
    report.valid = report.min_eigenvalue >= -tol && report.trace_deviation <= tol
                && std::abs(rho.trace().imag()) <= tol;
    return report;
}

}  // namespace cqdyn::ops
