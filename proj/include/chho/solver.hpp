#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "assembly.hpp"
#include "basis.hpp"
#include "discretization.hpp"
#include "quadrature.hpp"

namespace chho {

/// Double-well free energy Phi(c) = (1 - c^2)^2 / 4 and its derivatives.
inline double potential(double c)
{
    const double s = 1.0 - c * c;
    return 0.25 * s * s;
}
inline double potential_derivative(double c) { return c * c * c - c; }
inline double potential_second_derivative(double c) { return 3.0 * c * c - 1.0; }

struct ModelParameters {
    double gamma = 5e-2;   ///< interface parameter
    double peclet = 1.0;
    double tau = 2.5e-3;   ///< time step

    void validate() const
    {
        if (!(gamma > 0.0))
            throw std::invalid_argument("gamma must be positive");
        if (!(peclet > 0.0))
            throw std::invalid_argument("Pe must be positive");
        if (!(tau > 0.0))
            throw std::invalid_argument("tau must be positive");
    }
};

struct NewtonConfig {
    double tolerance = 1e-10;    ///< stop when |F|_inf <= tolerance * (1 + |F_0|_inf)
    int max_iterations = 25;
    bool condense = true;        ///< static condensation of the cell unknowns

    void validate() const
    {
        if (!(tolerance > 0.0))
            throw std::invalid_argument("newton tolerance must be positive");
        if (max_iterations < 1)
            throw std::invalid_argument("newton max_iterations must be at least 1");
    }
};

/// Right-hand sides for manufactured solutions. The homogeneous problem has
/// none; every member is optional.
struct ManufacturedSources {
    std::function<double(const Point&, double)> c_source;     ///< added to the order-parameter equation
    std::function<double(const Point&, double)> w_source;     ///< added to the chemical-potential equation
    std::function<Point(const Point&, double)> c_gradient;    ///< Neumann data on the boundary
    std::function<Point(const Point&, double)> w_gradient;
    std::function<double(double)> mass;                       ///< target integral of c at time t
    int exactness_bump = 4;
};

struct SolverState {
    int step = 0;
    double time = 0.0;
    Eigen::VectorXd c;
    Eigen::VectorXd w;
    double lambda = 0.0;
    std::vector<double> residual_history;   ///< Newton residual norms of the last step

    int newton_iterations() const
    {
        return residual_history.empty() ? 0 : static_cast<int>(residual_history.size()) - 1;
    }
};

class NewtonFailure : public std::runtime_error {
public:
    NewtonFailure(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

class LinearSolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Eigen::VectorXd sparse_solve(const SparseMatrix& a, const Eigen::VectorXd& b, const char* what)
{
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        throw LinearSolveError(std::string(what) + ": sparse factorization failed (" + lu.lastErrorMessage() + ")");
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw LinearSolveError(std::string(what) + ": sparse solve failed");
    return x;
}

} // namespace detail

/// Backward-Euler / Newton solver for the coupled (c, w) system with the
/// mass constraint carried by a Lagrange multiplier. The unknown vector is
/// packed as [c (N), w (N), lambda] with N = dofs().size().
///
/// Residual, for all test functions phi, psi:
///   F_c = (c_T - c_T^{old}, phi_T)/tau + a_h(w, phi)/Pe + b_h(c, phi) + lambda (1, phi_T) - sources
///   F_w = (w_T, psi_T) - (Phi'(c_T), psi_T) - gamma^2 a_h(c, psi) - sources
///   F_l = (c_h, 1) - target mass
class CahnHilliardSolver {
public:
    CahnHilliardSolver(const Discretization& disc, ModelParameters params)
        : disc_(&disc), params_(params)
    {
        params_.validate();
    }

    const Discretization& discretization() const { return *disc_; }
    const ModelParameters& parameters() const { return params_; }
    std::size_t field_size() const { return disc_->dofs().size(); }
    std::size_t system_size() const { return 2 * field_size() + 1; }

    void set_sources(ManufacturedSources sources) { sources_ = std::move(sources); }
    const std::optional<ManufacturedSources>& sources() const { return sources_; }
    void set_mass_target(double m) { mass_target_ = m; }

    double mass_target(double time) const
    {
        if (sources_ && sources_->mass)
            return sources_->mass(time);
        return mass_target_;
    }

    Eigen::VectorXd pack(const Eigen::VectorXd& c, const Eigen::VectorXd& w, double lambda) const
    {
        const auto n = static_cast<Eigen::Index>(field_size());
        Eigen::VectorXd x(2 * n + 1);
        x.head(n) = c;
        x.segment(n, n) = w;
        x[2 * n] = lambda;
        return x;
    }
    Eigen::VectorXd pack(const SolverState& s) const { return pack(s.c, s.w, s.lambda); }

    void unpack(const Eigen::VectorXd& x, SolverState& s) const
    {
        const auto n = static_cast<Eigen::Index>(field_size());
        s.c = x.head(n);
        s.w = x.segment(n, n);
        s.lambda = x[2 * n];
    }

    /// Source load vectors (c-equation, w-equation) at time t.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> loads(double time) const
    {
        const auto n = static_cast<Eigen::Index>(field_size());
        Eigen::VectorXd lc = Eigen::VectorXd::Zero(n), lw = Eigen::VectorXd::Zero(n);
        if (!sources_)
            return {lc, lw};
        const auto& src = *sources_;
        const Discretization& d = *disc_;
        const GeometryCache& geo = d.geometry();
        const int k = d.k();
        const int ex = d.nonlinear_exactness() + src.exactness_bump;
        for (std::size_t t = 0; t < d.num_elements(); ++t) {
            const auto& basis = d.cell_basis(t);
            const QuadRule rule = element_quadrature(geo, t, ex);
            const auto off = static_cast<Eigen::Index>(d.dofs().cell_offset(t));
            const auto nc = static_cast<Eigen::Index>(basis.size());
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const Eigen::VectorXd phi = basis.eval(rule.points[q]);
                if (src.c_source)
                    lc.segment(off, nc) += rule.weights[q] * src.c_source(rule.points[q], time) * phi;
                if (src.w_source)
                    lw.segment(off, nc) += rule.weights[q] * src.w_source(rule.points[q], time) * phi;
            }
        }
        if (src.c_gradient || src.w_gradient) {
            for (std::size_t f = 0; f < geo.num_faces(); ++f) {
                const FaceGeometry& fg = geo.face(f);
                if (!fg.is_boundary())
                    continue;
                const FaceBasis fb = make_face_basis(geo, f, k, d.options().basis);
                const QuadRule rule = face_quadrature(geo, f, ex);
                const auto off = static_cast<Eigen::Index>(d.dofs().face_offset(f));
                const auto nf = static_cast<Eigen::Index>(fb.size());
                for (std::size_t q = 0; q < rule.size(); ++q) {
                    const Eigen::VectorXd psi = fb.eval(rule.points[q]);
                    if (src.w_gradient)
                        lc.segment(off, nf) += (rule.weights[q] / params_.peclet) *
                                               src.w_gradient(rule.points[q], time).dot(fg.normal) * psi;
                    if (src.c_gradient)
                        lw.segment(off, nf) -= (rule.weights[q] * params_.gamma * params_.gamma) *
                                               src.c_gradient(rule.points[q], time).dot(fg.normal) * psi;
                }
            }
        }
        return {lc, lw};
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& c_old, double time) const
    {
        return residual(x, c_old, loads(time), mass_target(time));
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& c_old,
                             const std::pair<Eigen::VectorXd, Eigen::VectorXd>& load, double target) const
    {
        const auto n = static_cast<Eigen::Index>(field_size());
        Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * n + 1);
        for (std::size_t t = 0; t < disc_->num_elements(); ++t) {
            const LocalResidual r = local_residual(t, x, c_old);
            const auto& s = disc_->dofs().scatter(t);
            const std::size_t m = s.size();
            for (std::size_t i = 0; i < m; ++i) {
                f[static_cast<Eigen::Index>(s[i])] += r.values[static_cast<Eigen::Index>(i)];
                f[n + static_cast<Eigen::Index>(s[i])] += r.values[static_cast<Eigen::Index>(m + i)];
            }
            f[2 * n] += r.values[static_cast<Eigen::Index>(2 * m)];
        }
        f.head(n) -= load.first;
        f.segment(n, n) -= load.second;
        f[2 * n] -= target;
        return f;
    }

    /// Assembled Jacobian of the residual (full, uncondensed).
    SparseMatrix jacobian(const Eigen::VectorXd& x) const
    {
        const std::size_t n = field_size();
        std::vector<Triplet> triplets;
        for (std::size_t t = 0; t < disc_->num_elements(); ++t) {
            const Eigen::MatrixXd k = local_jacobian(t, x);
            const auto idx = system_indices(t);
            add_local_triplets(k, idx, idx, 1.0, 0, 0, triplets);
        }
        SparseMatrix j(static_cast<int>(2 * n + 1), static_cast<int>(2 * n + 1));
        j.setFromTriplets(triplets.begin(), triplets.end());
        return j;
    }

    /// Newton correction at x, either by a direct solve of the full system or
    /// through static condensation of the cell unknowns.
    Eigen::VectorXd newton_update(const Eigen::VectorXd& x, const Eigen::VectorXd& c_old, double time,
                                  bool condense) const
    {
        return newton_update(x, c_old, loads(time), mass_target(time), condense);
    }

    Eigen::VectorXd newton_update(const Eigen::VectorXd& x, const Eigen::VectorXd& c_old,
                                  const std::pair<Eigen::VectorXd, Eigen::VectorXd>& load, double target,
                                  bool condense) const
    {
        const Eigen::VectorXd f = residual(x, c_old, load, target);
        if (!condense)
            return detail::sparse_solve(jacobian(x), -f, "full Newton system");
        return condensed_update(x, f);
    }

    /// One Newton iteration in place; returns the new residual norm.
    double newton_step(SolverState& state, const Eigen::VectorXd& c_old, bool condense = true) const
    {
        Eigen::VectorXd x = pack(state);
        const auto load = loads(state.time);
        const double target = mass_target(state.time);
        x += newton_update(x, c_old, load, target, condense);
        unpack(x, state);
        const double r = residual(x, c_old, load, target).lpNorm<Eigen::Infinity>();
        state.residual_history.push_back(r);
        return r;
    }

    /// Advances one time step from `previous`, using it as initial guess.
    /// Throws NewtonFailure (carrying the residual history) if the iteration
    /// does not converge.
    SolverState advance(const SolverState& previous, const NewtonConfig& cfg) const
    {
        cfg.validate();
        SolverState s = previous;
        s.step = previous.step + 1;
        s.time = previous.time + params_.tau;
        s.residual_history.clear();

        const auto load = loads(s.time);
        const double target = mass_target(s.time);
        Eigen::VectorXd x = pack(previous);
        Eigen::VectorXd f = residual(x, previous.c, load, target);
        double r = f.lpNorm<Eigen::Infinity>();
        s.residual_history.push_back(r);
        const double tol = cfg.tolerance * (1.0 + r);
        int it = 0;
        while (!(r <= tol)) {
            if (it == cfg.max_iterations || !std::isfinite(r))
                throw NewtonFailure("Newton did not converge at step " + std::to_string(s.step) + " (t = " +
                                        std::to_string(s.time) + "), residual " + std::to_string(r),
                                    s.residual_history);
            x += condense_or_full(x, f, cfg.condense);
            f = residual(x, previous.c, load, target);
            r = f.lpNorm<Eigen::Infinity>();
            s.residual_history.push_back(r);
            ++it;
        }
        unpack(x, s);
        return s;
    }

    double discrete_mass(const Eigen::VectorXd& c) const { return disc_->cell_integrals().dot(c); }

private:
    struct LocalResidual {
        Eigen::VectorXd values;   ///< [c rows (n), w rows (n), constraint part]
    };

    Eigen::VectorXd condense_or_full(const Eigen::VectorXd& x, const Eigen::VectorXd& f, bool condense) const
    {
        if (!condense)
            return detail::sparse_solve(jacobian(x), -f, "full Newton system");
        return condensed_update(x, f);
    }

    std::vector<std::size_t> system_indices(std::size_t t) const
    {
        const std::size_t n = field_size();
        const auto& s = disc_->dofs().scatter(t);
        std::vector<std::size_t> idx;
        idx.reserve(2 * s.size() + 1);
        for (auto g : s)
            idx.push_back(g);
        for (auto g : s)
            idx.push_back(n + g);
        idx.push_back(2 * n);
        return idx;
    }

    Eigen::VectorXd padded_cell_integrals(std::size_t t, std::size_t m) const
    {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
        const auto nc = static_cast<Eigen::Index>(disc_->dofs().cell_block_size());
        g.head(nc) = disc_->cell_block(disc_->cell_integrals(), t);
        return g;
    }

    LocalResidual local_residual(std::size_t t, const Eigen::VectorXd& x, const Eigen::VectorXd& c_old) const
    {
        const auto n = static_cast<Eigen::Index>(field_size());
        const auto& dofs = disc_->dofs();
        const LocalOperatorSet& op = disc_->local(t);
        const Eigen::VectorXd c = dofs.gather(x.head(n), t);
        const Eigen::VectorXd w = dofs.gather(x.segment(n, n), t);
        const Eigen::VectorXd c0 = dofs.gather(c_old, t);
        const double lambda = x[2 * n];
        const auto m = c.size();
        const auto nc = static_cast<Eigen::Index>(dofs.cell_block_size());
        const Eigen::VectorXd g = padded_cell_integrals(t, static_cast<std::size_t>(m));

        const TabulatedRule& nl = disc_->nonlinear_rule(t);
        const Eigen::VectorXd cq = nl.values * c.head(nc);
        const Eigen::VectorXd dphi = nl.weights.cwiseProduct(cq.unaryExpr([](double v) { return potential_derivative(v); }));

        LocalResidual r;
        r.values.resize(2 * m + 1);
        r.values.head(m) = op.mass * (c - c0) / params_.tau + op.diffusion * w / params_.peclet +
                           op.convection * c + lambda * g;
        r.values.segment(m, m) = op.mass * w - params_.gamma * params_.gamma * (op.diffusion * c);
        r.values.segment(m, nc) -= nl.values.transpose() * dphi;
        r.values[2 * m] = g.dot(c);
        return r;
    }

    Eigen::MatrixXd local_jacobian(std::size_t t, const Eigen::VectorXd& x) const
    {
        const auto n = static_cast<Eigen::Index>(field_size());
        const auto& dofs = disc_->dofs();
        const LocalOperatorSet& op = disc_->local(t);
        const Eigen::VectorXd c = dofs.gather(x.head(n), t);
        const auto m = c.size();
        const auto nc = static_cast<Eigen::Index>(dofs.cell_block_size());
        const Eigen::VectorXd g = padded_cell_integrals(t, static_cast<std::size_t>(m));

        const TabulatedRule& nl = disc_->nonlinear_rule(t);
        const Eigen::VectorXd cq = nl.values * c.head(nc);
        const Eigen::VectorXd d2 =
            nl.weights.cwiseProduct(cq.unaryExpr([](double v) { return potential_second_derivative(v); }));

        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * m + 1, 2 * m + 1);
        k.topLeftCorner(m, m) = op.mass / params_.tau + op.convection;
        k.block(0, m, m, m) = op.diffusion / params_.peclet;
        k.block(0, 2 * m, m, 1) = g;
        k.block(m, 0, m, m) = -params_.gamma * params_.gamma * op.diffusion;
        k.block(m, 0, nc, nc) -= nl.values.transpose() * d2.asDiagonal() * nl.values;
        k.block(m, m, m, m) = op.mass;
        k.block(2 * m, 0, 1, m) = g.transpose();
        return k;
    }

    // Eliminates the cell unknowns of both fields element by element and
    // solves the face + multiplier system of size 2 * (face DOFs) + 1.
    Eigen::VectorXd condensed_update(const Eigen::VectorXd& x, const Eigen::VectorXd& f) const
    {
        const auto& dofs = disc_->dofs();
        const std::size_t n = field_size();
        const std::size_t ncell = dofs.num_cell_dofs();
        const std::size_t nface = dofs.num_face_dofs();
        const std::size_t nc = dofs.cell_block_size();
        const std::size_t reduced_size = 2 * nface + 1;

        struct Recovery {
            Eigen::PartialPivLU<Eigen::MatrixXd> lu;
            Eigen::MatrixXd k_is;
            Eigen::VectorXd f_i;
            std::vector<std::size_t> skeleton;   // reduced indices
        };
        std::vector<Recovery> rec(disc_->num_elements());

        std::vector<Triplet> triplets;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reduced_size));
        // Face and constraint residuals are already assembled in f.
        for (std::size_t i = 0; i < nface; ++i) {
            rhs[static_cast<Eigen::Index>(i)] = -f[static_cast<Eigen::Index>(ncell + i)];
            rhs[static_cast<Eigen::Index>(nface + i)] = -f[static_cast<Eigen::Index>(n + ncell + i)];
        }
        rhs[static_cast<Eigen::Index>(2 * nface)] = -f[static_cast<Eigen::Index>(2 * n)];

        for (std::size_t t = 0; t < disc_->num_elements(); ++t) {
            const Eigen::MatrixXd k = local_jacobian(t, x);
            const auto& s = dofs.scatter(t);
            const std::size_t m = s.size();

            std::vector<Eigen::Index> interior, skeleton;
            std::vector<std::size_t> reduced;
            for (std::size_t i = 0; i < nc; ++i)
                interior.push_back(static_cast<Eigen::Index>(i));
            for (std::size_t i = 0; i < nc; ++i)
                interior.push_back(static_cast<Eigen::Index>(m + i));
            for (std::size_t i = nc; i < m; ++i) {
                skeleton.push_back(static_cast<Eigen::Index>(i));
                reduced.push_back(s[i] - ncell);
            }
            for (std::size_t i = nc; i < m; ++i) {
                skeleton.push_back(static_cast<Eigen::Index>(m + i));
                reduced.push_back(nface + s[i] - ncell);
            }
            skeleton.push_back(static_cast<Eigen::Index>(2 * m));
            reduced.push_back(2 * nface);

            Eigen::VectorXd f_i(static_cast<Eigen::Index>(2 * nc));
            for (std::size_t i = 0; i < nc; ++i) {
                f_i[static_cast<Eigen::Index>(i)] = f[static_cast<Eigen::Index>(s[i])];
                f_i[static_cast<Eigen::Index>(nc + i)] = f[static_cast<Eigen::Index>(n + s[i])];
            }

            const Eigen::MatrixXd k_ii = k(interior, interior);
            const Eigen::MatrixXd k_is = k(interior, skeleton);
            const Eigen::MatrixXd k_si = k(skeleton, interior);
            const Eigen::MatrixXd k_ss = k(skeleton, skeleton);

            Eigen::PartialPivLU<Eigen::MatrixXd> lu(k_ii);
            if (!(lu.rcond() > 1e-14))
                throw LinearSolveError("element " + std::to_string(t) + ": singular cell block in static condensation");
            const Eigen::MatrixXd k_ss_red = k_ss - k_si * lu.solve(k_is);
            const Eigen::VectorXd f_s_red = k_si * lu.solve(f_i);   // moved to the right-hand side

            add_local_triplets(k_ss_red, reduced, reduced, 1.0, 0, 0, triplets);
            for (std::size_t i = 0; i < reduced.size(); ++i)
                rhs[static_cast<Eigen::Index>(reduced[i])] += f_s_red[static_cast<Eigen::Index>(i)];

            rec[t] = Recovery{std::move(lu), k_is, std::move(f_i), std::move(reduced)};
        }

        SparseMatrix kred(static_cast<int>(reduced_size), static_cast<int>(reduced_size));
        kred.setFromTriplets(triplets.begin(), triplets.end());
        const Eigen::VectorXd xs = detail::sparse_solve(kred, rhs, "condensed Newton system");

        Eigen::VectorXd dx = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * n + 1));
        for (std::size_t i = 0; i < nface; ++i) {
            dx[static_cast<Eigen::Index>(ncell + i)] = xs[static_cast<Eigen::Index>(i)];
            dx[static_cast<Eigen::Index>(n + ncell + i)] = xs[static_cast<Eigen::Index>(nface + i)];
        }
        dx[static_cast<Eigen::Index>(2 * n)] = xs[static_cast<Eigen::Index>(2 * nface)];

        for (std::size_t t = 0; t < disc_->num_elements(); ++t) {
            const Recovery& r = rec[t];
            Eigen::VectorXd x_s(static_cast<Eigen::Index>(r.skeleton.size()));
            for (std::size_t i = 0; i < r.skeleton.size(); ++i)
                x_s[static_cast<Eigen::Index>(i)] = xs[static_cast<Eigen::Index>(r.skeleton[i])];
            const Eigen::VectorXd x_i = r.lu.solve(-r.f_i - r.k_is * x_s);
            const auto& s = dofs.scatter(t);
            for (std::size_t i = 0; i < nc; ++i) {
                dx[static_cast<Eigen::Index>(s[i])] = x_i[static_cast<Eigen::Index>(i)];
                dx[static_cast<Eigen::Index>(n + s[i])] = x_i[static_cast<Eigen::Index>(nc + i)];
            }
        }
        return dx;
    }

    const Discretization* disc_;
    ModelParameters params_;
    std::optional<ManufacturedSources> sources_;
    double mass_target_ = 0.0;
};

/// Reduced (condensed) system dimension: two face fields plus the multiplier.
inline std::size_t condensed_system_size(const DofMap& dofs) { return 2 * dofs.num_face_dofs() + 1; }

} // namespace chho
