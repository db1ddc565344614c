// hybrid_state.hpp — the operator-valued state rho_hat(z): grid and atomic
// representations, reductions, expectation values, purity, rotations, and a
// JSON checkpoint layout.

#pragma once

#include "cqdyn/operators.hpp"
#include "cqdyn/phase_space.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cqdyn::state {

using ops::Matrix;
using phase::PhaseSpaceGrid;
using phase::PhaseSpacePoint;
using phase::ScalarField;

struct HybridStateGrid {
    const PhaseSpaceGrid* grid = nullptr;
    std::vector<Matrix> blocks;  // one d x d block per cell, density per volume

    int dim() const { return blocks.empty() ? 0 : static_cast<int>(blocks.front().rows()); }
};

struct Atom {
    PhaseSpacePoint z;
    Matrix block;  // unnormalized quantum block carried by the point mass
};

struct HybridStateAtomic {
    std::vector<Atom> atoms;

    int dim() const { return atoms.empty() ? 0 : static_cast<int>(atoms.front().block.rows()); }
};

inline constexpr double kAtomMergeTol = 1e-9;

// Merge atoms closer than kAtomMergeTol and sort by coordinates; the canonical
// form makes atomic states directly comparable.
inline HybridStateAtomic canonicalize(const HybridStateAtomic& s) {
    HybridStateAtomic out;
    for (const auto& atom : s.atoms) {
        bool merged = false;
        for (auto& existing : out.atoms) {
            if (phase::distance(existing.z, atom.z) < kAtomMergeTol) {
                existing.block += atom.block;
                merged = true;
                break;
            }
        }
        if (!merged) out.atoms.push_back(atom);
    }
    std::sort(out.atoms.begin(), out.atoms.end(), [](const Atom& a, const Atom& b) {
        const Eigen::VectorXd ca = a.z.coords(), cb = b.z.coords();
        for (Eigen::Index i = 0; i < ca.size(); ++i) {
            if (ca[i] < cb[i] - kAtomMergeTol) return true;
            if (ca[i] > cb[i] + kAtomMergeTol) return false;
        }
        return false;
    });
    return out;
}

// Sup over matched atoms of the blockwise max-abs difference.
inline double atomic_distance(const HybridStateAtomic& a, const HybridStateAtomic& b) {
    const HybridStateAtomic ca = canonicalize(a), cb = canonicalize(b);
    double worst = 0.0;
    std::vector<bool> used(cb.atoms.size(), false);
    for (const auto& atom : ca.atoms) {
        bool found = false;
        for (std::size_t j = 0; j < cb.atoms.size(); ++j) {
            if (used[j]) continue;
            if (phase::distance(atom.z, cb.atoms[j].z) < kAtomMergeTol) {
                worst = std::max(worst, (atom.block - cb.atoms[j].block).cwiseAbs().maxCoeff());
                used[j] = true;
                found = true;
                break;
            }
        }
        if (!found) worst = std::max(worst, atom.block.cwiseAbs().maxCoeff());
    }
    for (std::size_t j = 0; j < cb.atoms.size(); ++j)
        if (!used[j]) worst = std::max(worst, cb.atoms[j].block.cwiseAbs().maxCoeff());
    return worst;
}

struct HybridObservable {
    std::function<double(const PhaseSpacePoint&)> classical;  // scalar f(z)
    Matrix quantum;                                           // Hermitian A
    std::string label;
};

inline HybridObservable scalar_observable(const std::string& label, int d) {
    return {[](const PhaseSpacePoint&) { return 1.0; }, ops::identity(d), label};
}

// --------------------------------------------------------------------------
// Normalization and reductions

inline double total_trace(const HybridStateGrid& s) {
    double sum = 0.0;
    for (const auto& block : s.blocks) sum += block.trace().real();
    return sum * s.grid->cell_volume();
}

inline double total_trace(const HybridStateAtomic& s) {
    double sum = 0.0;
    for (const auto& atom : s.atoms) sum += atom.block.trace().real();
    return sum;
}

template <typename State>
double check_normalization(const State& s) {
    return std::abs(total_trace(s) - 1.0);
}

inline ScalarField reduce_classical(const HybridStateGrid& s) {
    ScalarField f{s.grid, Eigen::VectorXd(s.grid->size())};
    for (std::ptrdiff_t i = 0; i < s.grid->size(); ++i)
        f.values[i] = s.blocks[i].trace().real();
    return f;
}

inline std::vector<std::pair<PhaseSpacePoint, double>> reduce_classical(const HybridStateAtomic& s) {
    std::vector<std::pair<PhaseSpacePoint, double>> weights;
    weights.reserve(s.atoms.size());
    for (const auto& atom : s.atoms)
        weights.emplace_back(atom.z, atom.block.trace().real());
    return weights;
}

inline Matrix reduce_quantum(const HybridStateGrid& s) {
    Matrix sum = Matrix::Zero(s.dim(), s.dim());
    for (const auto& block : s.blocks) sum += block;
    return sum * s.grid->cell_volume();
}

inline Matrix reduce_quantum(const HybridStateAtomic& s) {
    Matrix sum = Matrix::Zero(s.dim(), s.dim());
    for (const auto& atom : s.atoms) sum += atom.block;
    return sum;
}

// --------------------------------------------------------------------------
// Expectation values

inline ops::Complex expectation_complex(const HybridObservable& obs, const HybridStateGrid& s) {
    ops::Complex sum = 0.0;
    for (std::ptrdiff_t i = 0; i < s.grid->size(); ++i)
        sum += obs.classical(s.grid->point(i)) * (obs.quantum * s.blocks[i]).trace();
    return sum * s.grid->cell_volume();
}

inline ops::Complex expectation_complex(const HybridObservable& obs, const HybridStateAtomic& s) {
    ops::Complex sum = 0.0;
    for (const auto& atom : s.atoms)
        sum += obs.classical(atom.z) * (obs.quantum * atom.block).trace();
    return sum;
}

template <typename State>
double expectation(const HybridObservable& obs, const State& s) {
    const ops::Complex value = expectation_complex(obs, s);
    if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value.real())))
        throw std::runtime_error("expectation: non-real value for observable " + obs.label);
    return value.real();
}

template <typename State>
double purity(const State& s) {
    const Matrix rho = reduce_quantum(s);
    return (rho * rho).trace().real();
}

// --------------------------------------------------------------------------
// Rotations and positivity

inline HybridStateAtomic rotate_state(const Eigen::Matrix3d& r, const Matrix& u,
                                      const HybridStateAtomic& s) {
    if ((u * u.adjoint() - ops::identity(static_cast<int>(u.rows()))).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("rotate_state: U is not unitary");
    HybridStateAtomic out;
    out.atoms.reserve(s.atoms.size());
    for (const auto& atom : s.atoms)
        out.atoms.push_back({phase::rotate_point(r, atom.z), u * atom.block * u.adjoint()});
    return out;
}

struct PositivityReport {
    double min_eigenvalue = 0.0;
    std::ptrdiff_t location = -1;  // cell or atom index
};

inline PositivityReport positivity_report(const HybridStateGrid& s) {
    PositivityReport report{std::numeric_limits<double>::infinity(), -1};
    for (std::ptrdiff_t i = 0; i < s.grid->size(); ++i) {
        const double m = ops::min_eigenvalue(s.blocks[i]);
        if (m < report.min_eigenvalue) report = {m, i};
    }
    return report;
}

inline PositivityReport positivity_report(const HybridStateAtomic& s) {
    PositivityReport report{std::numeric_limits<double>::infinity(), -1};
    for (std::size_t i = 0; i < s.atoms.size(); ++i) {
        const double m = ops::min_eigenvalue(s.atoms[i].block);
        if (m < report.min_eigenvalue) report = {m, static_cast<std::ptrdiff_t>(i)};
    }
    return report;
}

// --------------------------------------------------------------------------
// JSON checkpoint layout: complex entries as [re, im] pairs

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.size();
    const auto cols = rows ? j.at(0).size() : 0;
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < cols; ++k)
            m(i, k) = ops::Complex(j.at(i).at(k).at(0).get<double>(),
                                   j.at(i).at(k).at(1).get<double>());
    return m;
}

inline nlohmann::json to_json(const HybridStateGrid& s) {
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& ax : s.grid->axes()) axes.push_back({ax.min, ax.max, ax.count});
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& block : s.blocks) blocks.push_back(matrix_to_json(block));
    return {{"type", "grid"}, {"grid", {{"axes", axes}}}, {"blocks", blocks}};
}

inline nlohmann::json to_json(const HybridStateAtomic& s) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& atom : s.atoms) {
        atoms.push_back({{"z", {{"q", std::vector<double>(atom.z.q.begin(), atom.z.q.end())},
                                {"p", std::vector<double>(atom.z.p.begin(), atom.z.p.end())}}},
                         {"M", matrix_to_json(atom.block)}});
    }
    return {{"type", "atomic"}, {"atoms", atoms}};
}

inline HybridStateAtomic atomic_from_json(const nlohmann::json& j) {
    if (j.at("type") != "atomic")
        throw std::invalid_argument("atomic_from_json: not an atomic state document");
    HybridStateAtomic s;
    for (const auto& entry : j.at("atoms")) {
        const auto qv = entry.at("z").at("q").get<std::vector<double>>();
        const auto pv = entry.at("z").at("p").get<std::vector<double>>();
        PhaseSpacePoint z{Eigen::Map<const Eigen::VectorXd>(qv.data(), qv.size()),
                          Eigen::Map<const Eigen::VectorXd>(pv.data(), pv.size())};
        s.atoms.push_back({z, matrix_from_json(entry.at("M"))});
    }
    return s;
}

}  // namespace cqdyn::state
