#include "cqdyn/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace cqdyn::gen {

namespace {

int worker_count() {
    static const int count = [] {
        if (const char* env = std::getenv("CQDYN_THREADS")) {
            const int requested = std::atoi(env);
            if (requested >= 1) return requested;
        }
        return 1;
    }();
    return count;
}

// Disjoint-write loop over [0, n); deterministic regardless of worker count.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
    const int workers = std::min<std::ptrdiff_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::ptrdiff_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

void require_psd(const Matrix& m, double tol, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (ops::herm_residual(m) > tol * scale)
        throw std::invalid_argument(std::string(what) + " is not Hermitian");
    if (ops::min_eigenvalue(m) < -tol * scale)
        throw std::invalid_argument(std::string(what) + " is not positive semidefinite");
}

}  // namespace

GridGenerator::GridGenerator(CouplingSpec spec, std::shared_ptr<const PhaseSpaceGrid> grid)
    : spec_(std::move(spec)), grid_(std::move(grid)) {
    if (spec_.basis.dim < 2 || spec_.basis.ops.empty())
        throw std::invalid_argument("GridGenerator: coupling spec carries no operator basis");
    const std::ptrdiff_t n = grid_->size();
    const int d2 = spec_.basis.size();

    products_.reserve(static_cast<std::size_t>(d2) * d2);
    for (int nu = 0; nu < d2; ++nu)
        for (int mu = 0; mu < d2; ++mu)
            products_.push_back(spec_.basis.ops[nu].adjoint() * spec_.basis.ops[mu]);

    if (spec_.hamiltonian) {
        h_.reserve(n);
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            Matrix h = spec_.hamiltonian(grid_->point(i));
            if (!ops::is_hermitian(h))
                throw std::invalid_argument("GridGenerator: H(z) is not Hermitian");
            h_.push_back(std::move(h));
        }
    }
    if (spec_.lindblad_rates) {
        lambda_.reserve(n);
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            Matrix l = spec_.lindblad_rates(grid_->point(i));
            require_psd(l, 1e-10, "lambda(z)");
            lambda_.push_back(std::move(l));
        }
    }
    if (spec_.kernel) {
        const bool materialize = n <= 512;
        if (materialize) wtable_.reserve(static_cast<std::size_t>(n) * n);
        wbar_.assign(n, Matrix::Zero(d2, d2));
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            for (std::ptrdiff_t j = 0; j < n; ++j) {
                Matrix w = spec_.kernel(grid_->point(i), grid_->point(j));
                require_psd(w, 1e-10, "W(z|z')");
                wbar_[j] += w * grid_->cell_volume();
                if (materialize) wtable_.push_back(std::move(w));
            }
        }
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            Matrix total = wbar_[i];
            if (!lambda_.empty()) total += lambda_[i];
            require_psd(total, 1e-10, "lambda(z) + W(z)");
        }
    }
    if (spec_.drift || spec_.diffusion) {
        for (int a = 0; a < grid_->naxes(); ++a) {
            const int count = grid_->axes()[a].count;
            if (count > 1 && count < 3)
                throw std::invalid_argument(
                    "GridGenerator: classical moment terms need >= 3 cells per active axis");
        }
    }
}

Matrix GridGenerator::kernel_at(std::ptrdiff_t i, std::ptrdiff_t j) const {
    if (!wtable_.empty()) return wtable_[i * grid_->size() + j];
    return spec_.kernel(grid_->point(i), grid_->point(j));
}

HybridStateGrid GridGenerator::zero_state() const {
    HybridStateGrid s;
    s.grid = grid_.get();
    s.blocks.assign(grid_->size(), Matrix::Zero(dim(), dim()));
    return s;
}

HybridStateGrid GridGenerator::apply(const HybridStateGrid& rho) const {
    const std::ptrdiff_t n = grid_->size();
    if (static_cast<std::ptrdiff_t>(rho.blocks.size()) != n)
        throw std::invalid_argument("GridGenerator::apply: state/grid mismatch");
    const int d2 = spec_.basis.size();
    const double vol = grid_->cell_volume();
    const ops::Complex imag_unit(0.0, 1.0);
    const auto& ls = spec_.basis.ops;

    HybridStateGrid out = zero_state();
    parallel_for(n, [&](std::ptrdiff_t i) {
        Matrix acc = Matrix::Zero(dim(), dim());
        const Matrix& rho_i = rho.blocks[i];
        if (!h_.empty()) acc -= imag_unit * (h_[i] * rho_i - rho_i * h_[i]);
        if (!lambda_.empty()) {
            const Matrix& l = lambda_[i];
            for (int nu = 0; nu < d2; ++nu) {
                for (int mu = 0; mu < d2; ++mu) {
                    const ops::Complex c = l(mu, nu);
                    if (c == 0.0) continue;
                    acc += c * (ls[mu] * rho_i * ls[nu].adjoint());
                    const Matrix& prod = products_[nu * d2 + mu];
                    acc -= 0.5 * c * (prod * rho_i + rho_i * prod);
                }
            }
        }
        if (spec_.kernel) {
            for (std::ptrdiff_t j = 0; j < n; ++j) {
                const Matrix w = kernel_at(i, j);
                for (int nu = 0; nu < d2; ++nu)
                    for (int mu = 0; mu < d2; ++mu) {
                        const ops::Complex c = w(mu, nu);
                        if (c == 0.0) continue;
                        acc += vol * c * (ls[mu] * rho.blocks[j] * ls[nu].adjoint());
                    }
            }
            const Matrix& wb = wbar_[i];
            for (int nu = 0; nu < d2; ++nu)
                for (int mu = 0; mu < d2; ++mu) {
                    const ops::Complex c = wb(mu, nu);
                    if (c == 0.0) continue;
                    const Matrix& prod = products_[nu * d2 + mu];
                    acc -= 0.5 * c * (prod * rho_i + rho_i * prod);
                }
        }
        out.blocks[i] = std::move(acc);
    });
    if (spec_.drift || spec_.diffusion) apply_classical_moments(rho, out);
    return out;
}

namespace {

// Second-order first derivative along one axis; one-sided at the boundary.
std::vector<Matrix> derivative(const std::vector<Matrix>& f, const PhaseSpaceGrid& grid,
                               int axis) {
    const std::ptrdiff_t n = grid.size();
    const int count = grid.axes()[axis].count;
    std::vector<Matrix> out(n);
    if (count == 1) {
        for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = Matrix::Zero(f[i].rows(), f[i].cols());
        return out;
    }
    const double h = grid.axes()[axis].spacing();
    const std::ptrdiff_t s = grid.stride(axis);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const int k = grid.axis_index(i, axis);
        if (k == 0)
            out[i] = (-3.0 * f[i] + 4.0 * f[i + s] - f[i + 2 * s]) / (2.0 * h);
        else if (k == count - 1)
            out[i] = (3.0 * f[i] - 4.0 * f[i - s] + f[i - 2 * s]) / (2.0 * h);
        else
            out[i] = (f[i + s] - f[i - s]) / (2.0 * h);
    }
    return out;
}

}  // namespace

void GridGenerator::apply_classical_moments(const HybridStateGrid& rho,
                                            HybridStateGrid& out) const {
    const std::ptrdiff_t n = grid_->size();
    const int naxes = grid_->naxes();
    if (spec_.drift) {
        for (int a = 0; a < naxes; ++a) {
            if (grid_->axes()[a].count == 1) continue;
            std::vector<Matrix> flux(n);
            for (std::ptrdiff_t i = 0; i < n; ++i)
                flux[i] = spec_.drift(grid_->point(i))[a] * rho.blocks[i];
            const auto dflux = derivative(flux, *grid_, a);
            for (std::ptrdiff_t i = 0; i < n; ++i) out.blocks[i] -= dflux[i];
        }
    }
    if (spec_.diffusion) {
        for (int a = 0; a < naxes; ++a) {
            if (grid_->axes()[a].count == 1) continue;
            for (int b = 0; b < naxes; ++b) {
                if (grid_->axes()[b].count == 1) continue;
                std::vector<Matrix> flux(n);
                bool nonzero = false;
                for (std::ptrdiff_t i = 0; i < n; ++i) {
                    const double dab = spec_.diffusion(grid_->point(i))(a, b);
                    nonzero = nonzero || dab != 0.0;
                    flux[i] = dab * rho.blocks[i];
                }
                if (!nonzero) continue;
                const auto inner = derivative(flux, *grid_, b);
                const auto outer = derivative(inner, *grid_, a);
                for (std::ptrdiff_t i = 0; i < n; ++i) out.blocks[i] += outer[i];
            }
        }
    }
}

ObservableField GridGenerator::apply_adjoint(const ObservableField& afield) const {
    const std::ptrdiff_t n = grid_->size();
    if (static_cast<std::ptrdiff_t>(afield.size()) != n)
        throw std::invalid_argument("GridGenerator::apply_adjoint: field/grid mismatch");

    if (spec_.drift || spec_.diffusion) {
        // Exact discrete dual via the matrix representation.
        const Eigen::MatrixXcd lmat = liouvillian_matrix();
        HybridStateGrid afield_state{grid_.get(), afield};
        const Eigen::VectorXcd dual = lmat.adjoint() * vectorize(afield_state);
        return devectorize(dual, grid_, dim()).blocks;
    }

    const int d2 = spec_.basis.size();
    const double vol = grid_->cell_volume();
    const ops::Complex imag_unit(0.0, 1.0);
    const auto& ls = spec_.basis.ops;

    ObservableField out(n, Matrix::Zero(dim(), dim()));
    parallel_for(n, [&](std::ptrdiff_t j) {
        Matrix acc = Matrix::Zero(dim(), dim());
        const Matrix& a_j = afield[j];
        if (!h_.empty()) acc += imag_unit * (h_[j] * a_j - a_j * h_[j]);
        if (!lambda_.empty()) {
            const Matrix& l = lambda_[j];
            for (int nu = 0; nu < d2; ++nu)
                for (int mu = 0; mu < d2; ++mu) {
                    const ops::Complex c = l(mu, nu);
                    if (c == 0.0) continue;
                    acc += c * (ls[nu].adjoint() * a_j * ls[mu]);
                    const Matrix& prod = products_[nu * d2 + mu];
                    acc -= 0.5 * c * (prod * a_j + a_j * prod);
                }
        }
        if (spec_.kernel) {
            for (std::ptrdiff_t i = 0; i < n; ++i) {
                const Matrix w = kernel_at(i, j);
                for (int nu = 0; nu < d2; ++nu)
                    for (int mu = 0; mu < d2; ++mu) {
                        const ops::Complex c = w(mu, nu);
                        if (c == 0.0) continue;
                        acc += vol * c * (ls[nu].adjoint() * afield[i] * ls[mu]);
                    }
            }
            const Matrix& wb = wbar_[j];
            for (int nu = 0; nu < d2; ++nu)
                for (int mu = 0; mu < d2; ++mu) {
                    const ops::Complex c = wb(mu, nu);
                    if (c == 0.0) continue;
                    const Matrix& prod = products_[nu * d2 + mu];
                    acc -= 0.5 * c * (prod * a_j + a_j * prod);
                }
        }
        out[j] = std::move(acc);
    });
    return out;
}

Eigen::MatrixXcd GridGenerator::liouvillian_matrix() const {
    const std::ptrdiff_t n = grid_->size();
    const int d = dim();
    const std::ptrdiff_t total = n * d * d;
    if (total > 4096)
        throw CapacityError("liouvillian_matrix: vectorized dimension exceeds the 4096 cap");

    Eigen::MatrixXcd lmat(total, total);
    HybridStateGrid basis_state = zero_state();
    for (std::ptrdiff_t col = 0; col < total; ++col) {
        const std::ptrdiff_t cell = col / (d * d);
        const std::ptrdiff_t entry = col % (d * d);
        basis_state.blocks[cell](entry % d, entry / d) = 1.0;
        lmat.col(col) = vectorize(apply(basis_state));
        basis_state.blocks[cell](entry % d, entry / d) = 0.0;
    }
    return lmat;
}

Eigen::VectorXcd vectorize(const HybridStateGrid& s) {
    const int d = s.dim();
    Eigen::VectorXcd v(static_cast<Eigen::Index>(s.blocks.size()) * d * d);
    Eigen::Index offset = 0;
    for (const auto& block : s.blocks) {
        v.segment(offset, d * d) = Eigen::Map<const Eigen::VectorXcd>(block.data(), d * d);
        offset += d * d;
    }
    return v;
}

HybridStateGrid devectorize(const Eigen::VectorXcd& v,
                            std::shared_ptr<const PhaseSpaceGrid> grid, int d) {
    if (v.size() != grid->size() * d * d)
        throw std::invalid_argument("devectorize: size mismatch");
    HybridStateGrid s;
    s.grid = grid.get();
    s.blocks.reserve(grid->size());
    for (std::ptrdiff_t i = 0; i < grid->size(); ++i)
        s.blocks.push_back(Eigen::Map<const Matrix>(v.data() + i * d * d, d, d));
    return s;
}

MomentTensor compute_moments(const PairKernel& amplitudes, int order,
                             const PhaseSpaceGrid& grid) {
    if (order < 0 || order > 2)
        throw std::invalid_argument("compute_moments: orders above 2 are unsupported");
    const std::ptrdiff_t n = grid.size();
    const int zdim = grid.naxes();
    const int ncomp = order == 0 ? 1 : (order == 1 ? zdim : zdim * zdim);
    const double factorial = order == 2 ? 2.0 : 1.0;

    MomentTensor tensor;
    tensor.order = order;
    tensor.zdim = zdim;
    tensor.comps.assign(n, {});
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        std::vector<Matrix> comps;
        const Eigen::VectorXd zj = grid.point(j).coords();
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const Matrix w = amplitudes(grid.point(i), grid.point(j));
            if (comps.empty()) comps.assign(ncomp, Matrix::Zero(w.rows(), w.cols()));
            const Eigen::VectorXd disp = grid.point(i).coords() - zj;
            if (order == 0) {
                comps[0] += w * grid.cell_volume();
            } else if (order == 1) {
                for (int a = 0; a < zdim; ++a) comps[a] += disp[a] * grid.cell_volume() * w;
            } else {
                for (int a = 0; a < zdim; ++a)
                    for (int b = 0; b < zdim; ++b)
                        comps[a * zdim + b] +=
                            disp[a] * disp[b] / factorial * grid.cell_volume() * w;
            }
        }
        tensor.comps[j] = std::move(comps);
    }
    return tensor;
}

namespace {

// Sum over basis index pairs; mu_min/nu_min restrict to traceless indices
// where a sum starts at alpha or beta rather than mu.
ops::Complex contract(const Matrix& coeff, const Matrix& rho, const OperatorBasis& basis,
                      int mu_min, int nu_min) {
    ops::Complex sum = 0.0;
    for (int mu = mu_min; mu < basis.size(); ++mu)
        for (int nu = nu_min; nu < basis.size(); ++nu) {
            const ops::Complex c = coeff(mu, nu);
            if (c == 0.0) continue;
            sum += c * (basis.ops[mu] * rho * basis.ops[nu].adjoint()).trace();
        }
    return sum;
}

}  // namespace

BackreactionSummary backreaction_summary(const HybridStateGrid& rho, const MomentTensor& m0,
                                         const MomentTensor& m1, const MomentTensor& m2,
                                         const OperatorBasis& basis) {
    const std::ptrdiff_t n = rho.grid->size();
    const double vol = rho.grid->cell_volume();
    const int zdim = m1.zdim;

    ops::Complex d0 = 0.0;
    Eigen::VectorXcd d1 = Eigen::VectorXcd::Zero(zdim);
    Eigen::MatrixXcd d2 = Eigen::MatrixXcd::Zero(zdim, zdim);
    for (std::ptrdiff_t cell = 0; cell < n; ++cell) {
        const Matrix& block = rho.blocks[cell];
        d0 += vol * contract(m0.at(cell), block, basis, 1, 1);
        for (int i = 0; i < zdim; ++i) {
            d1[i] += vol * contract(m1.at(cell, i), block, basis, 0, 1);
            for (int j = 0; j < zdim; ++j)
                d2(i, j) += vol * contract(m2.at(cell, i, j), block, basis, 0, 0);
        }
    }
    const double scale = std::max({1.0, std::abs(d0), d1.cwiseAbs().maxCoeff(),
                                   d2.cwiseAbs().maxCoeff()});
    if (std::max({std::abs(d0.imag()), d1.imag().cwiseAbs().maxCoeff(),
                  d2.imag().cwiseAbs().maxCoeff()}) > 1e-10 * scale)
        throw std::runtime_error("backreaction_summary: non-real expectation value");

    BackreactionSummary summary;
    summary.d0 = d0.real();
    summary.d1 = d1.real();
    summary.d2 = d2.real();
    return summary;
}

DdVerdict check_diffusion_decoherence(const BackreactionSummary& summary) {
    const int zdim = static_cast<int>(summary.d1.size());
    const Eigen::MatrixXd m =
        2.0 * summary.d0 * summary.d2 - summary.d1 * summary.d1.transpose();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());

    DdVerdict verdict;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver((m + m.transpose()) / 2.0);
    verdict.min_eigenvalue = solver.eigenvalues().minCoeff();
    verdict.pass = verdict.min_eigenvalue >= -1e-10 * scale;

    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < zdim; ++i)
        for (int j = 0; j < zdim; ++j) {
            const double margin = 2.0 * summary.d2(i, j) * summary.d0 -
                                  summary.d1[i] * summary.d1[j];
            if (margin < worst) {
                worst = margin;
                verdict.worst_i = i;
                verdict.worst_j = j;
            }
        }
    verdict.worst_margin = worst;
    verdict.pass_componentwise = worst >= -1e-10 * scale;
    verdict.verdicts_agree = verdict.pass == verdict.pass_componentwise;
    return verdict;
}

}  // namespace cqdyn::gen
