#include "cqdyn/evolution.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace cqdyn::evo {

HybridStateGrid step_rk4(const GridGenerator& generator, const HybridStateGrid& rho,
                         double dt) {
    if (dt <= 0.0) throw std::invalid_argument("step_rk4: dt must be positive");
    const auto k1 = generator.apply(rho);

    HybridStateGrid stage = rho;
    for (std::size_t i = 0; i < stage.blocks.size(); ++i)
        stage.blocks[i] += 0.5 * dt * k1.blocks[i];
    const auto k2 = generator.apply(stage);

    for (std::size_t i = 0; i < stage.blocks.size(); ++i)
        stage.blocks[i] = rho.blocks[i] + 0.5 * dt * k2.blocks[i];
    const auto k3 = generator.apply(stage);

    for (std::size_t i = 0; i < stage.blocks.size(); ++i)
        stage.blocks[i] = rho.blocks[i] + dt * k3.blocks[i];
    const auto k4 = generator.apply(stage);

    HybridStateGrid out = rho;
    for (std::size_t i = 0; i < out.blocks.size(); ++i) {
        out.blocks[i] += (dt / 6.0) * (k1.blocks[i] + 2.0 * k2.blocks[i] +
                                       2.0 * k3.blocks[i] + k4.blocks[i]);
        out.blocks[i] = (out.blocks[i] + out.blocks[i].adjoint().eval()) / 2.0;
        if (!out.blocks[i].allFinite())
            throw std::runtime_error("step_rk4: non-finite state after step");
    }
    return out;
}

Trajectory evolve(const GridGenerator& generator, const HybridStateGrid& rho0,
                  double t_final, double dt, const std::vector<ObservableSum>& monitors,
                  const EvolveOptions& options) {
    if (t_final <= 0.0) throw std::invalid_argument("evolve: t_final must be positive");
    if (dt <= 0.0) throw std::invalid_argument("evolve: dt must be positive");

    Trajectory traj;
    for (const auto& obs : monitors) traj.labels.push_back(obs.label);
    traj.observables.assign(monitors.size(), {});

    const auto record = [&](double t, const HybridStateGrid& s) -> bool {
        const double dev = state::check_normalization(s);
        const double min_eig = state::positivity_report(s).min_eigenvalue;
        traj.times.push_back(t);
        traj.trace_dev.push_back(dev);
        traj.min_eig.push_back(min_eig);
        for (std::size_t k = 0; k < monitors.size(); ++k)
            traj.observables[k].push_back(expectation(monitors[k], s));
        if (dev > options.trace_abort || min_eig < options.positivity_abort) {
            traj.aborted = true;
            traj.abort_time = t;
            return false;
        }
        return true;
    };

    const auto n_steps = static_cast<long>(std::llround(t_final / dt));
    HybridStateGrid current = rho0;
    if (options.snapshot_every > 0) {
        traj.snapshot_times.push_back(0.0);
        traj.snapshots.push_back(current);
    }
    if (record(0.0, current)) {
        for (long step = 1; step <= n_steps; ++step) {
            current = step_rk4(generator, current, dt);
            const double t = step * dt;
            if (options.snapshot_every > 0 && step % options.snapshot_every == 0) {
                traj.snapshot_times.push_back(t);
                traj.snapshots.push_back(current);
            }
            if (!record(t, current)) break;
        }
    }
    traj.final_state = current;
    return traj;
}

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a) { return a.exp(); }

HybridStateGrid evolve_exact(const Eigen::MatrixXcd& liouvillian,
                             const HybridStateGrid& rho0, double t) {
    if (liouvillian.rows() > 4096)
        throw gen::CapacityError("evolve_exact: matrix exceeds the 4096 cap");
    const Eigen::VectorXcd v = expm(liouvillian * t) * gen::vectorize(rho0);
    HybridStateGrid out = rho0;
    const int d = rho0.dim();
    for (std::size_t i = 0; i < out.blocks.size(); ++i)
        out.blocks[i] = Eigen::Map<const ops::Matrix>(v.data() + i * d * d, d, d);
    return out;
}

}  // namespace cqdyn::evo
