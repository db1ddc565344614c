// phase_space.hpp — points z = (q, p), uniform cell-centered grids with
// midpoint quadrature, discretized deltas, and SO(3) point rotations.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cqdyn::phase {

struct PhaseSpacePoint {
    Eigen::VectorXd q;
    Eigen::VectorXd p;

    int dof() const { return static_cast<int>(q.size()); }

    // Flat coordinate vector (q axes then p axes), matching grid axis order.
    Eigen::VectorXd coords() const {
        Eigen::VectorXd z(q.size() + p.size());
        z << q, p;
        return z;
    }

    static PhaseSpacePoint from_coords(const Eigen::VectorXd& z) {
        const auto n = z.size() / 2;
        return {z.head(n), z.tail(n)};
    }

    static PhaseSpacePoint make3(const Eigen::Vector3d& q, const Eigen::Vector3d& p) {
        return {q, p};
    }
};

inline double distance(const PhaseSpacePoint& a, const PhaseSpacePoint& b) {
    return std::sqrt((a.q - b.q).squaredNorm() + (a.p - b.p).squaredNorm());
}

struct Axis {
    double min = 0.0;
    double max = 0.0;
    int count = 0;

    double spacing() const { return (max - min) / count; }
    double center(int k) const { return min + (k + 0.5) * spacing(); }
};

// Uniform cell-centered grid over R^{2n}; lexicographic cell ordering with the
// last axis fastest.
class PhaseSpaceGrid {
public:
    explicit PhaseSpaceGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
        if (axes_.empty() || axes_.size() % 2 != 0)
            throw std::invalid_argument("PhaseSpaceGrid: need an even, nonzero number of axes");
        cell_volume_ = 1.0;
        for (const auto& ax : axes_) {
            if (ax.count < 1 || ax.min >= ax.max)
                throw std::invalid_argument("PhaseSpaceGrid: malformed axis (need count >= 1, min < max)");
            cell_volume_ *= ax.spacing();
        }
        strides_.assign(axes_.size(), 1);
        for (int i = static_cast<int>(axes_.size()) - 2; i >= 0; --i)
            strides_[i] = strides_[i + 1] * axes_[i + 1].count;
        size_ = strides_[0] * axes_[0].count;
        const int n = dof();
        points_.reserve(size_);
        std::vector<int> idx(axes_.size(), 0);
        for (std::ptrdiff_t cell = 0; cell < size_; ++cell) {
            Eigen::VectorXd qv(n), pv(n);
            for (int a = 0; a < n; ++a) qv[a] = axes_[a].center(idx[a]);
            for (int a = 0; a < n; ++a) pv[a] = axes_[n + a].center(idx[n + a]);
            points_.push_back({qv, pv});
            for (int a = static_cast<int>(axes_.size()) - 1; a >= 0; --a) {
                if (++idx[a] < axes_[a].count) break;
                idx[a] = 0;
            }
        }
    }

    int dof() const { return static_cast<int>(axes_.size()) / 2; }
    int naxes() const { return static_cast<int>(axes_.size()); }
    std::ptrdiff_t size() const { return size_; }
    double cell_volume() const { return cell_volume_; }
    const std::vector<Axis>& axes() const { return axes_; }
    const PhaseSpacePoint& point(std::ptrdiff_t cell) const { return points_[cell]; }
    std::ptrdiff_t stride(int axis) const { return strides_[axis]; }
    int axis_index(std::ptrdiff_t cell, int axis) const {
        return static_cast<int>((cell / strides_[axis]) % axes_[axis].count);
    }

    // Cell containing z, or -1 if z lies outside the domain.
    std::ptrdiff_t locate(const PhaseSpacePoint& z) const {
        const Eigen::VectorXd c = z.coords();
        std::ptrdiff_t cell = 0;
        for (int a = 0; a < naxes(); ++a) {
            if (c[a] < axes_[a].min || c[a] > axes_[a].max) return -1;
            int k = static_cast<int>(std::floor((c[a] - axes_[a].min) / axes_[a].spacing()));
            if (k == axes_[a].count) --k;  // top edge
            cell += k * strides_[a];
        }
        return cell;
    }

    bool near_boundary(std::ptrdiff_t cell, int margin = 2) const {
        for (int a = 0; a < naxes(); ++a) {
            const int k = axis_index(cell, a);
            if (k < margin || k >= axes_[a].count - margin) return true;
        }
        return false;
    }

private:
    std::vector<Axis> axes_;
    std::vector<std::ptrdiff_t> strides_;
    std::vector<PhaseSpacePoint> points_;
    double cell_volume_ = 0.0;
    std::ptrdiff_t size_ = 0;
};

inline PhaseSpaceGrid build_grid(const std::vector<Axis>& axes) {
    return PhaseSpaceGrid(axes);
}

struct ScalarField {
    const PhaseSpaceGrid* grid = nullptr;
    Eigen::VectorXd values;
};

inline double integrate(const ScalarField& f) {
    if (!f.grid) throw std::invalid_argument("integrate: field is not bound to a grid");
    if (f.values.size() != f.grid->size())
        throw std::invalid_argument("integrate: value count does not match grid");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) sum += f.values[i];
    return sum * f.grid->cell_volume();
}

// Nearest-cell deposition: the containing cell gets 1/cell_volume.
inline ScalarField deposit_delta(const PhaseSpacePoint& z0, const PhaseSpaceGrid& grid) {
    const auto cell = grid.locate(z0);
    if (cell < 0) throw std::domain_error("deposit_delta: point outside grid domain");
    ScalarField f{&grid, Eigen::VectorXd::Zero(grid.size())};
    f.values[cell] = 1.0 / grid.cell_volume();
    return f;
}

inline PhaseSpacePoint rotate_point(const Eigen::Matrix3d& r, const PhaseSpacePoint& z) {
    if (z.dof() != 3) throw std::invalid_argument("rotate_point: requires n = 3");
    if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("rotate_point: matrix is not orthogonal");
    return {r * z.q, r * z.p};
}

}  // namespace cqdyn::phase
