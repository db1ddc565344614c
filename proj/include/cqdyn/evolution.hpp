// evolution.hpp — fixed-step RK4 propagation with per-step monitoring, and
// exact matrix-exponential propagation as the brute-force oracle.

#pragma once

#include "cqdyn/coupling.hpp"
#include "cqdyn/hybrid_state.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cqdyn::evo {

using gen::GridGenerator;
using state::HybridObservable;
using state::HybridStateGrid;

// Observables of the form sum_k f_k(z) A_k; covers J_a = (q x p)_a I + (hbar/2) sigma_a.
struct ObservableSum {
    std::string label;
    std::vector<HybridObservable> terms;

    ops::Matrix field_at(const phase::PhaseSpacePoint& z) const {
        ops::Matrix a = ops::Matrix::Zero(terms.front().quantum.rows(),
                                          terms.front().quantum.cols());
        for (const auto& term : terms) a += term.classical(z) * term.quantum;
        return a;
    }
};

template <typename State>
double expectation(const ObservableSum& obs, const State& s) {
    double sum = 0.0;
    for (const auto& term : obs.terms) sum += state::expectation(term, s);
    return sum;
}

inline ObservableSum single_term(const HybridObservable& obs) {
    return {obs.label, {obs}};
}

struct EvolveOptions {
    double trace_abort = 1e-6;        // abort when |trace - 1| exceeds this
    double positivity_abort = -1e-6;  // abort when min block eigenvalue falls below
    int snapshot_every = 0;           // 0: keep no intermediate snapshots
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> trace_dev;
    std::vector<double> min_eig;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> observables;  // observables[k][step]
    std::vector<double> snapshot_times;
    std::vector<HybridStateGrid> snapshots;
    HybridStateGrid final_state;
    bool aborted = false;
    double abort_time = 0.0;
};

HybridStateGrid step_rk4(const GridGenerator& generator, const HybridStateGrid& rho,
                         double dt);

Trajectory evolve(const GridGenerator& generator, const HybridStateGrid& rho0,
                  double t_final, double dt,
                  const std::vector<ObservableSum>& monitors = {},
                  const EvolveOptions& options = {});

// Scaling-and-squaring Pade matrix exponential (dense, desk scale).
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a);

HybridStateGrid evolve_exact(const Eigen::MatrixXcd& liouvillian,
                             const HybridStateGrid& rho0, double t);

}  // namespace cqdyn::evo
