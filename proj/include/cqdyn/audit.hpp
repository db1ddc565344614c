// audit.hpp — symmetry checks of the generator, conservation checks via the
// adjoint, the combined Noether verdict, and the consistency-requirement suite.

#pragma once

#include "cqdyn/coupling.hpp"
#include "cqdyn/toy_model.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace cqdyn::audit {

using ops::Matrix;
using phase::PhaseSpacePoint;

// Operator field A(z) as a callable (atomic representation).
using ObsFn = std::function<Matrix(const PhaseSpacePoint&)>;

inline ObsFn field_of(const evo::ObservableSum& obs) {
    return [obs](const PhaseSpacePoint& z) { return obs.field_at(z); };
}

// ||L^dag A|| / ||A|| in the sup-Frobenius norm over test points (atomic) or
// the quadrature pairing norm (grid); 0 within 1e-10 iff conserved.
double conservation_check(const toy::ToyAtomicGenerator& generator, const ObsFn& obs,
                          const std::vector<PhaseSpacePoint>& test_points);
double conservation_check(const gen::GridGenerator& generator,
                          const gen::ObservableField& field);

// max over test states of ||U.L(rho) - L.U(rho)|| for U = rotate_state(R, U, .)
double symmetry_check(const toy::ToyAtomicGenerator& generator, const Eigen::Matrix3d& r,
                      const Matrix& u, const std::vector<state::HybridStateAtomic>& states);

struct AuditVerdict {
    std::string observable;
    double symmetry_residual = 0.0;
    double conservation_residual = 0.0;
    std::vector<double> dAdt_times;
    std::vector<double> dAdt_pairing;   // via the adjoint pairing
    std::vector<double> dAdt_numeric;   // finite differences of <A>(t)
    bool symmetric = false;
    bool conserved = false;

    nlohmann::json to_json() const;
};

// Rotation-family audit of the toy model against the total angular momentum.
AuditVerdict noether_audit(const toy::ToyModelParams& params, int n_rotations = 30,
                           unsigned seed = 12345);

struct ConsistencyEntry {
    std::string name;
    bool pass = false;
    double residual = 0.0;
    std::string note;
};

struct ConsistencyReport {
    std::vector<ConsistencyEntry> entries;
    bool model_violates_conservation = false;  // requirement V(a), reported not failed

    bool implementation_ok() const {
        for (const auto& e : entries)
            if (e.name != "V(a)" && !e.pass) return false;
        return true;
    }
    nlohmann::json to_json() const;
};

ConsistencyReport consistency_suite(const toy::ToyModelParams& params, double horizon);

}  // namespace cqdyn::audit
