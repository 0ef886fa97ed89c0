#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "discretization.hpp"
#include "solver.hpp"

namespace chho {

/// Initial order parameter. `value` is always required for the smooth case;
/// with `laplacian` present the elliptic projection is used. Element-wise
/// data (random mixtures) is given through `element_values` instead.
struct InitialCondition {
    std::function<double(const Point&)> value;
    std::function<double(const Point&)> laplacian;
    std::vector<double> element_values;   ///< one constant per element; overrides `value`
    int quadrature_refinement = 3;        ///< extra subdivision for steep profiles

    bool elementwise() const { return !element_values.empty(); }
    bool has_laplacian() const { return static_cast<bool>(laplacian) && !elementwise(); }
};

enum class InitialMode { elliptic, interpolation };

struct InitialField {
    Eigen::VectorXd c;
    double mass = 0.0;
    InitialMode mode = InitialMode::elliptic;
};

/// Integral of the initial datum over the mesh.
inline double initial_mass(const Discretization& disc, const InitialCondition& ic)
{
    const GeometryCache& geo = disc.geometry();
    double m = 0.0;
    if (ic.elementwise()) {
        for (std::size_t t = 0; t < geo.num_elements(); ++t)
            m += ic.element_values[t] * geo.element(t).area;
        return m;
    }
    const int ex = 2 * (disc.k() + 1) + 4;
    for (std::size_t t = 0; t < geo.num_elements(); ++t)
        m += element_quadrature(geo, t, ex, ic.quadrature_refinement).integrate(ic.value);
    return m;
}

namespace detail {

// Cells: L2 projection onto P^{k+1}; faces: projection of the average of the
// incident cell traces (a single-valued sampling of a broken field).
inline Eigen::VectorXd interpolate_from_cells(const Discretization& disc, const Eigen::VectorXd& cells)
{
    const GeometryCache& geo = disc.geometry();
    const DofMap& dofs = disc.dofs();
    const int k = disc.k();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.size()));
    v.head(static_cast<Eigen::Index>(dofs.num_cell_dofs())) = cells;
    for (std::size_t f = 0; f < geo.num_faces(); ++f) {
        const FaceGeometry& fg = geo.face(f);
        auto trace = [&](const Point& x) {
            double s = 0.0;
            int n = 0;
            for (std::size_t e : fg.elements) {
                if (e == no_element)
                    continue;
                s += disc.cell_basis(e).eval(disc.cell_block(v, e), x);
                ++n;
            }
            return s / n;
        };
        v.segment(static_cast<Eigen::Index>(dofs.face_offset(f)), static_cast<Eigen::Index>(dofs.face_block_size())) =
            l2_project_face(trace, geo, f, k, disc.options().basis, 2 * (k + 1) + 2);
    }
    return v;
}

} // namespace detail

/// Cell-wise L2 projection with single-valued face data; preserves the mass.
inline Eigen::VectorXd interpolate_initial(const Discretization& disc, const InitialCondition& ic)
{
    const GeometryCache& geo = disc.geometry();
    const DofMap& dofs = disc.dofs();
    const int k = disc.k();
    Eigen::VectorXd cells(static_cast<Eigen::Index>(dofs.num_cell_dofs()));
    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        Eigen::VectorXd block;
        if (ic.elementwise()) {
            const double value = ic.element_values[t];
            block = l2_project_cell([value](const Point&) { return value; }, geo, t, k + 1, disc.options().basis);
        } else {
            block = l2_project_cell(ic.value, geo, t, k + 1, disc.options().basis, 2 * (k + 1) + 4,
                                    ic.quadrature_refinement);
        }
        cells.segment(static_cast<Eigen::Index>(dofs.cell_offset(t)), block.size()) = block;
    }
    return detail::interpolate_from_cells(disc, cells);
}

/// c_h^0: elliptic projection a_h(c, phi) = -(lap c0, phi_T) with the mean
/// fixed by a multiplier, or the interpolation fallback when no Laplacian is
/// available.
inline InitialField solve_initial_condition(const Discretization& disc, const InitialCondition& ic)
{
    if (!ic.elementwise() && !ic.value)
        throw std::invalid_argument("initial condition: no data");
    InitialField out;
    out.mass = initial_mass(disc, ic);
    if (!ic.has_laplacian()) {
        out.mode = InitialMode::interpolation;
        out.c = interpolate_initial(disc, ic);
        return out;
    }

    const GeometryCache& geo = disc.geometry();
    const DofMap& dofs = disc.dofs();
    const auto n = static_cast<Eigen::Index>(dofs.size());
    const int ex = 2 * (disc.k() + 1) + 4;

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        const QuadRule rule = element_quadrature(geo, t, ex, ic.quadrature_refinement);
        const auto off = static_cast<Eigen::Index>(dofs.cell_offset(t));
        const auto& basis = disc.cell_basis(t);
        for (std::size_t q = 0; q < rule.size(); ++q)
            rhs.segment(off, static_cast<Eigen::Index>(basis.size())) -=
                rule.weights[q] * ic.laplacian(rule.points[q]) * basis.eval(rule.points[q]);
    }
    rhs[n] = out.mass;

    std::vector<Triplet> triplets;
    const SparseMatrix& a = disc.diffusion();
    for (int j = 0; j < a.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(a, j); it; ++it)
            triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    const Eigen::VectorXd& g = disc.cell_integrals();
    for (Eigen::Index i = 0; i < n; ++i)
        if (g[i] != 0.0) {
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(n), g[i]);
            triplets.emplace_back(static_cast<int>(n), static_cast<int>(i), g[i]);
        }
    SparseMatrix k(static_cast<int>(n + 1), static_cast<int>(n + 1));
    k.setFromTriplets(triplets.begin(), triplets.end());
    const Eigen::VectorXd x = detail::sparse_solve(k, rhs, "initial elliptic projection");
    out.c = x.head(n);
    out.mode = InitialMode::elliptic;
    return out;
}

/// w_h^0 consistent with c: cell rows of the chemical-potential equation
/// solved exactly, faces by averaging the incident cell traces.
inline Eigen::VectorXd initial_chemical_potential(const Discretization& disc, const Eigen::VectorXd& c, double gamma)
{
    const DofMap& dofs = disc.dofs();
    const Eigen::VectorXd ac = disc.diffusion() * c;
    Eigen::VectorXd cells(static_cast<Eigen::Index>(dofs.num_cell_dofs()));
    const auto nc = static_cast<Eigen::Index>(dofs.cell_block_size());
    for (std::size_t t = 0; t < disc.num_elements(); ++t) {
        const TabulatedRule& nl = disc.nonlinear_rule(t);
        const Eigen::VectorXd cq = nl.values * disc.cell_block(c, t);
        const Eigen::VectorXd dphi = nl.weights.cwiseProduct(cq.unaryExpr([](double v) { return potential_derivative(v); }));
        const Eigen::VectorXd load = nl.values.transpose() * dphi + gamma * gamma * disc.cell_block(ac, t);
        const Eigen::MatrixXd m = disc.local(t).mass.topLeftCorner(nc, nc);
        cells.segment(static_cast<Eigen::Index>(dofs.cell_offset(t)), nc) = m.llt().solve(load);
    }
    return detail::interpolate_from_cells(disc, cells);
}

/// Solver state at t = 0 for `ic`, with the solver's mass target set.
inline SolverState initial_state(CahnHilliardSolver& solver, const InitialCondition& ic)
{
    const InitialField f = solve_initial_condition(solver.discretization(), ic);
    SolverState s;
    s.c = f.c;
    s.w = initial_chemical_potential(solver.discretization(), f.c, solver.parameters().gamma);
    solver.set_mass_target(solver.discrete_mass(f.c));
    return s;
}

} // namespace chho
