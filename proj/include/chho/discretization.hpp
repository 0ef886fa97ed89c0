#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "assembly.hpp"
#include "basis.hpp"
#include "geometry.hpp"
#include "hho_local.hpp"
#include "quadrature.hpp"

namespace chho {

/// Cell basis values at a fixed quadrature rule.
struct TabulatedRule {
    std::vector<Point> points;
    Eigen::VectorXd weights;
    Eigen::MatrixXd values;   ///< (num points) x (cell basis size)
};

inline TabulatedRule tabulate(const CellBasis& basis, const QuadRule& rule)
{
    TabulatedRule tab;
    tab.points = rule.points;
    tab.weights = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), static_cast<Eigen::Index>(rule.weights.size()));
    tab.values.resize(static_cast<Eigen::Index>(rule.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t q = 0; q < rule.size(); ++q)
        tab.values.row(static_cast<Eigen::Index>(q)) = basis.eval(rule.points[q]).transpose();
    return tab;
}

/// HHO space of degree k on a mesh together with every field-independent
/// operator: local operator sets, the global DOF map, assembled diffusion,
/// convection and mass matrices, and the cell-mean functional.
class Discretization {
public:
    Discretization(GeometryCache geometry, int k, VelocityField velocity = {}, HhoOptions options = {})
        : geo_(std::move(geometry)), k_(k), velocity_(std::move(velocity)), options_(options), dofs_(geo_, k)
    {
        const std::size_t ne = geo_.num_elements();
        locals_.reserve(ne);
        cell_bases_.reserve(ne);
        nonlinear_.reserve(ne);
        cell_integrals_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs_.size()));
        for (std::size_t t = 0; t < ne; ++t) {
            ElementContext ctx(geo_, t, k, options_);
            locals_.push_back(local_operators(ctx, velocity_));
            cell_bases_.push_back(ctx.cell_basis());
            nonlinear_.push_back(tabulate(ctx.cell_basis(), element_quadrature(geo_, t, nonlinear_exactness())));
            const Eigen::VectorXd integrals = nonlinear_.back().values.transpose() * nonlinear_.back().weights;
            cell_integrals_.segment(static_cast<Eigen::Index>(dofs_.cell_offset(t)), integrals.size()) = integrals;
        }
        diffusion_ = assemble_global(Form::diffusion, locals_, dofs_);
        convection_ = assemble_global(Form::convection, locals_, dofs_);
        mass_ = assemble_global(Form::mass, locals_, dofs_);
    }

    const GeometryCache& geometry() const { return geo_; }
    int k() const { return k_; }
    const HhoOptions& options() const { return options_; }
    const VelocityField& velocity() const { return velocity_; }
    const DofMap& dofs() const { return dofs_; }
    std::size_t num_elements() const { return geo_.num_elements(); }

    const LocalOperatorSet& local(std::size_t t) const { return locals_[t]; }
    const std::vector<LocalOperatorSet>& locals() const { return locals_; }
    const CellBasis& cell_basis(std::size_t t) const { return cell_bases_[t]; }
    /// Rule exact for Phi'(c) psi with c, psi in P^{k+1}: degree 4(k+1).
    int nonlinear_exactness() const { return 4 * (k_ + 1); }
    const TabulatedRule& nonlinear_rule(std::size_t t) const { return nonlinear_[t]; }

    const SparseMatrix& diffusion() const { return diffusion_; }
    const SparseMatrix& convection() const { return convection_; }
    const SparseMatrix& mass() const { return mass_; }
    /// g with g . v = integral over the domain of the broken cell polynomial v_h.
    const Eigen::VectorXd& cell_integrals() const { return cell_integrals_; }

    /// Cell block of element t inside a global field vector.
    auto cell_block(const Eigen::VectorXd& v, std::size_t t) const
    {
        return v.segment(static_cast<Eigen::Index>(dofs_.cell_offset(t)),
                         static_cast<Eigen::Index>(dofs_.cell_block_size()));
    }

private:
    GeometryCache geo_;
    int k_;
    VelocityField velocity_;
    HhoOptions options_;
    DofMap dofs_;
    std::vector<LocalOperatorSet> locals_;
    std::vector<CellBasis> cell_bases_;
    std::vector<TabulatedRule> nonlinear_;
    SparseMatrix diffusion_, convection_, mass_;
    Eigen::VectorXd cell_integrals_;
};

} // namespace chho
