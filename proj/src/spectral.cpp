#include "cqdyn/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace cqdyn::spectral {

std::string to_string(EigClass c) {
    switch (c) {
        case EigClass::stationary: return "stationary";
        case EigClass::rotating: return "rotating";
        case EigClass::decaying_real: return "decaying_real";
        case EigClass::decaying_spiral: return "decaying_spiral";
    }
    return "unknown";
}

namespace {

struct EigenData {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;
    double scale = 0.0;
    double condition = 0.0;
};

EigenData decompose(const Eigen::MatrixXcd& liouvillian) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(liouvillian);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("classify_spectrum: eigendecomposition failed");
    EigenData data{solver.eigenvalues(), solver.eigenvectors(), 0.0, 0.0};
    data.scale = data.values.size() ? data.values.cwiseAbs().maxCoeff() : 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(data.vectors);
    const auto& sv = svd.singularValues();
    data.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                             : std::numeric_limits<double>::infinity();
    return data;
}

EigClass classify_one(const std::complex<double>& lambda, double cut) {
    const double re = lambda.real(), im = lambda.imag();
    if (std::abs(lambda) <= cut) return EigClass::stationary;
    if (std::abs(re) <= cut) return EigClass::rotating;
    if (std::abs(im) <= cut) return EigClass::decaying_real;
    return EigClass::decaying_spiral;
}

}  // namespace

SpectralReport classify_spectrum(const Eigen::MatrixXcd& liouvillian, double tol_zero,
                                 double gap_threshold) {
    const EigenData data = decompose(liouvillian);
    const double cut = tol_zero * std::max(data.scale, 1e-300);

    SpectralReport report;
    report.scale = data.scale;
    report.eigvec_condition = data.condition;
    report.near_defective = data.condition > 1e8;

    std::vector<int> order(data.values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (data.values[a].real() != data.values[b].real())
            return data.values[a].real() > data.values[b].real();
        return data.values[a].imag() > data.values[b].imag();
    });

    report.eigenvalues.resize(data.values.size());
    for (Eigen::Index k = 0; k < data.values.size(); ++k) {
        const auto lambda = data.values[order[k]];
        if (lambda.real() > cut)
            throw std::runtime_error(
                "classify_spectrum: eigenvalue with positive real part (CP dynamics forbids growth)");
        report.eigenvalues[k] = lambda;
        report.classes.push_back(classify_one(lambda, cut));
        if (report.classes.back() == EigClass::stationary) ++report.zero_multiplicity;
    }

    // Kernel basis via SVD, robust to non-normal generators.
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(liouvillian, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double sv_cut = tol_zero * std::max(sv.size() ? sv(0) : 0.0, 1e-300);
    int kernel_dim = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) <= sv_cut) ++kernel_dim;
    report.steady_basis = svd.matrixV().rightCols(kernel_dim);

    report.metastable = metastable_gap(report.eigenvalues, gap_threshold, tol_zero);
    return report;
}

std::vector<gen::HybridStateGrid> steady_states(
    const Eigen::MatrixXcd& liouvillian,
    std::shared_ptr<const phase::PhaseSpaceGrid> grid, int d, double tol_zero) {
    const SpectralReport report = classify_spectrum(liouvillian, tol_zero);
    if (report.steady_basis.cols() == 0)
        std::cerr << "steady_states: empty kernel (trace-preserving generators always "
                     "have a left kernel)\n";
    std::vector<gen::HybridStateGrid> states;
    for (Eigen::Index k = 0; k < report.steady_basis.cols(); ++k) {
        gen::HybridStateGrid s = gen::devectorize(report.steady_basis.col(k), grid, d);
        for (auto& block : s.blocks) block = (block + block.adjoint().eval()) / 2.0;
        const double trace = state::total_trace(s);
        if (std::abs(trace) > 1e-8) {
            for (auto& block : s.blocks) block /= trace;
            if (state::positivity_report(s).min_eigenvalue < -1e-8) {
                // non-PSD kernel vector; keep the Hermitized raw form
                s = gen::devectorize(report.steady_basis.col(k), grid, d);
                for (auto& block : s.blocks) block = (block + block.adjoint().eval()) / 2.0;
            }
        }
        states.push_back(std::move(s));
    }
    return states;
}

AsymptoticResult asymptotic_projection(const Eigen::MatrixXcd& liouvillian,
                                       const Eigen::VectorXcd& rho0_vec, double tol_zero) {
    const EigenData data = decompose(liouvillian);
    const double cut = tol_zero * std::max(data.scale, 1e-300);

    AsymptoticResult result;
    std::vector<Eigen::Index> rotating;
    double slowest_nonzero = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < data.values.size(); ++k) {
        const EigClass c = classify_one(data.values[k], cut);
        if (c == EigClass::rotating) rotating.push_back(k);
        if (c != EigClass::stationary)
            slowest_nonzero = std::min(slowest_nonzero, std::abs(data.values[k].real()));
    }
    if (!rotating.empty()) {
        result.orbit_frequencies.resize(rotating.size());
        for (std::size_t i = 0; i < rotating.size(); ++i)
            result.orbit_frequencies[i] = data.values[rotating[i]];
        return result;
    }

    result.has_limit = true;
    if (data.condition > 1e8 || !std::isfinite(slowest_nonzero)) {
        // near-defective: long-time propagation instead of the spectral projector
        const double t = std::isfinite(slowest_nonzero) ? 50.0 / slowest_nonzero : 1.0;
        result.state = (liouvillian * t).exp() * rho0_vec;
        return result;
    }
    Eigen::VectorXcd modes = data.vectors.partialPivLu().solve(rho0_vec);
    for (Eigen::Index k = 0; k < data.values.size(); ++k)
        if (classify_one(data.values[k], cut) != EigClass::stationary) modes[k] = 0.0;
    result.state = data.vectors * modes;
    return result;
}

std::optional<Metastable> metastable_gap(const Eigen::VectorXcd& eigenvalues,
                                         double ratio_threshold, double tol_zero) {
    const double scale =
        eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    const double cut = tol_zero * std::max(scale, 1e-300);
    std::vector<double> decay_rates;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
        if (std::abs(eigenvalues[k]) > cut)
            decay_rates.push_back(std::abs(eigenvalues[k].real()));
    std::sort(decay_rates.begin(), decay_rates.end());
    for (std::size_t m = 1; m < decay_rates.size(); ++m) {
        if (decay_rates[m - 1] <= 0.0) continue;
        const double ratio = decay_rates[m] / decay_rates[m - 1];
        if (ratio >= ratio_threshold)
            return Metastable{static_cast<int>(m), ratio, 1.0 / decay_rates[m - 1]};
    }
    return std::nullopt;
}

nlohmann::json SpectralReport::to_json() const {
    nlohmann::json eigs = nlohmann::json::array();
    nlohmann::json class_names = nlohmann::json::array();
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        eigs.push_back({eigenvalues[k].real(), eigenvalues[k].imag()});
        class_names.push_back(to_string(classes[k]));
    }
    nlohmann::json j{{"eigenvalues", eigs},
                     {"classes", class_names},
                     {"zero_multiplicity", zero_multiplicity},
                     {"metastable", nullptr},
                     {"near_defective", near_defective}};
    if (metastable)
        j["metastable"] = {{"m", metastable->m},
                           {"ratio", metastable->ratio},
                           {"timescale", metastable->timescale}};
    return j;
}

}  // namespace cqdyn::spectral
