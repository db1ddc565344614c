// spectral.hpp — Liouvillian spectrum analysis: eigenvalue classification,
// stationary states, asymptotic projection, metastable-gap detection.

#pragma once

#include "cqdyn/coupling.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace cqdyn::spectral {

enum class EigClass { stationary, rotating, decaying_real, decaying_spiral };

std::string to_string(EigClass c);

struct Metastable {
    int m = 0;           // index (|Re| ascending, stationary excluded) of the fast side
    double ratio = 0.0;  // |Re lambda_fast| / |Re lambda_slow|
    double timescale = 0.0;  // 1 / |Re lambda_slow|, the metastable-interval bound
};

struct SpectralReport {
    Eigen::VectorXcd eigenvalues;  // sorted by descending real part
    std::vector<EigClass> classes;
    int zero_multiplicity = 0;
    Eigen::MatrixXcd steady_basis;  // orthonormal kernel columns (vectorized states)
    std::optional<Metastable> metastable;
    double scale = 0.0;             // max |lambda|
    double eigvec_condition = 0.0;
    bool near_defective = false;

    nlohmann::json to_json() const;
};

SpectralReport classify_spectrum(const Eigen::MatrixXcd& liouvillian,
                                 double tol_zero = 1e-9, double gap_threshold = 100.0);

// Kernel basis devectorized to states; PSD trace-normalizable vectors come
// back normalized, others as raw Hermitized blocks.
std::vector<gen::HybridStateGrid> steady_states(
    const Eigen::MatrixXcd& liouvillian,
    std::shared_ptr<const phase::PhaseSpaceGrid> grid, int d, double tol_zero = 1e-9);

struct AsymptoticResult {
    bool has_limit = false;          // false when rotating modes are present
    Eigen::VectorXcd state;          // vectorized limit (valid when has_limit)
    Eigen::VectorXcd orbit_frequencies;  // rotating eigenvalues otherwise
};

AsymptoticResult asymptotic_projection(const Eigen::MatrixXcd& liouvillian,
                                       const Eigen::VectorXcd& rho0_vec,
                                       double tol_zero = 1e-9);

// Gap search over eigenvalues sorted by |Re| ascending with stationary ones
// excluded; returns the first consecutive ratio >= threshold.
std::optional<Metastable> metastable_gap(const Eigen::VectorXcd& eigenvalues,
                                         double ratio_threshold = 100.0,
                                         double tol_zero = 1e-9);

}  // namespace cqdyn::spectral
