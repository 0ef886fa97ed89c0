#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include <Eigen/Dense>

#include "discretization.hpp"
#include "solver.hpp"

namespace chho {

/// Integral over the domain of the broken cell polynomial c_h.
inline double compute_discrete_mass(const Discretization& disc, const Eigen::VectorXd& c)
{
    return disc.cell_integrals().dot(c);
}

/// E_h = int Phi(c_h) + gamma^2 / 2 a_h(c, c).
inline double compute_free_energy(const Discretization& disc, const Eigen::VectorXd& c, double gamma)
{
    double bulk = 0.0;
    for (std::size_t t = 0; t < disc.num_elements(); ++t) {
        const TabulatedRule& nl = disc.nonlinear_rule(t);
        const Eigen::VectorXd cq = nl.values * disc.cell_block(c, t);
        for (Eigen::Index q = 0; q < cq.size(); ++q)
            bulk += nl.weights[q] * potential(cq[q]);
    }
    return bulk + 0.5 * gamma * gamma * c.dot(disc.diffusion() * c);
}

/// Global HHO interpolant of f: cell projections onto P^{k+1}, face
/// projections onto P^k.
template <class F>
Eigen::VectorXd interpolate_global(const Discretization& disc, F&& f, int exactness = -1)
{
    const GeometryCache& geo = disc.geometry();
    const DofMap& dofs = disc.dofs();
    const int k = disc.k();
    const int ex = exactness < 0 ? 2 * (k + 1) + 4 : exactness;
    Eigen::VectorXd v(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t t = 0; t < geo.num_elements(); ++t)
        v.segment(static_cast<Eigen::Index>(dofs.cell_offset(t)), static_cast<Eigen::Index>(dofs.cell_block_size())) =
            l2_project_cell(f, geo, t, k + 1, disc.options().basis, ex);
    for (std::size_t s = 0; s < geo.num_faces(); ++s)
        v.segment(static_cast<Eigen::Index>(dofs.face_offset(s)), static_cast<Eigen::Index>(dofs.face_block_size())) =
            l2_project_face(f, geo, s, k, disc.options().basis, ex);
    return v;
}

struct FieldErrors {
    double l2 = 0.0;   ///< || v_h - v ||_{L2} over the cell polynomials
    double h1 = 0.0;   ///< a_h-seminorm of (v_h - I_h v)
};

struct ErrorNorms {
    FieldErrors c, w;
};

template <class F>
FieldErrors compute_field_errors(const Discretization& disc, const Eigen::VectorXd& v, F&& exact, int exactness = -1)
{
    const GeometryCache& geo = disc.geometry();
    const int ex = exactness < 0 ? 2 * (disc.k() + 1) + 4 : exactness;
    double l2 = 0.0;
    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        const auto& basis = disc.cell_basis(t);
        const auto block = disc.cell_block(v, t);
        l2 += element_quadrature(geo, t, ex).integrate([&](const Point& x) {
            const double e = basis.eval(block, x) - exact(x);
            return e * e;
        });
    }
    const Eigen::VectorXd d = v - interpolate_global(disc, exact, ex);
    return {std::sqrt(std::max(l2, 0.0)), std::sqrt(std::max(d.dot(disc.diffusion() * d), 0.0))};
}

template <class Fc, class Fw>
ErrorNorms compute_errors(const Discretization& disc, const Eigen::VectorXd& c, const Eigen::VectorXd& w,
                          Fc&& exact_c, Fw&& exact_w)
{
    return {compute_field_errors(disc, c, exact_c), compute_field_errors(disc, w, exact_w)};
}

struct FieldRange {
    double min = 0.0;
    double max = 0.0;
};

/// Extremes of the cell polynomials sampled at the nonlinear quadrature nodes.
inline FieldRange field_range(const Discretization& disc, const Eigen::VectorXd& v)
{
    FieldRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t t = 0; t < disc.num_elements(); ++t) {
        const Eigen::VectorXd q = disc.nonlinear_rule(t).values * disc.cell_block(v, t);
        r.min = std::min(r.min, q.minCoeff());
        r.max = std::max(r.max, q.maxCoeff());
    }
    return r;
}

/// max over elements and quadrature nodes of |grad c_T|.
inline double max_gradient(const Discretization& disc, const Eigen::VectorXd& c)
{
    double g = 0.0;
    for (std::size_t t = 0; t < disc.num_elements(); ++t) {
        const auto& basis = disc.cell_basis(t);
        const auto block = disc.cell_block(c, t);
        for (const Point& x : disc.nonlinear_rule(t).points)
            g = std::max(g, (basis.grad(x).transpose() * block).norm());
    }
    return g;
}

/// Phase angle of the first circular moment of c_h - mean(c_h) about `center`:
/// arg of the integral of (c_h - mean) exp(i phi), phi the polar angle.
inline double circular_moment_angle(const Discretization& disc, const Eigen::VectorXd& c, const Point& center)
{
    const GeometryCache& geo = disc.geometry();
    const double mean = compute_discrete_mass(disc, c) / geo.domain_area();
    std::complex<double> z = 0.0;
    for (std::size_t t = 0; t < disc.num_elements(); ++t) {
        const TabulatedRule& nl = disc.nonlinear_rule(t);
        const Eigen::VectorXd cq = nl.values * disc.cell_block(c, t);
        for (std::size_t q = 0; q < nl.points.size(); ++q) {
            const Point d = nl.points[q] - center;
            if (d.norm() == 0.0)
                continue;
            z += nl.weights[static_cast<Eigen::Index>(q)] * (cq[static_cast<Eigen::Index>(q)] - mean) *
                 std::complex<double>(d.x(), d.y()) / d.norm();
        }
    }
    return std::arg(z);
}

/// Accumulates circular_moment_angle over a trajectory without 2 pi jumps.
class RotationTracker {
public:
    explicit RotationTracker(Point center = Point(0.5, 0.5)) : center_(std::move(center)) {}

    /// Records a new state; returns the unwrapped angle.
    double update(const Discretization& disc, const Eigen::VectorXd& c)
    {
        const double a = circular_moment_angle(disc, c, center_);
        if (!started_) {
            started_ = true;
            initial_ = unwrapped_ = a;
        } else {
            double d = a - last_;
            d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
            unwrapped_ += d;
        }
        last_ = a;
        return unwrapped_;
    }

    /// |theta(t) - theta(0)|.
    double displacement() const { return std::abs(unwrapped_ - initial_); }
    double angle() const { return unwrapped_; }

private:
    Point center_;
    bool started_ = false;
    double initial_ = 0.0, last_ = 0.0, unwrapped_ = 0.0;
};

} // namespace chho
