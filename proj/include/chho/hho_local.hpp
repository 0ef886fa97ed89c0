#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "basis.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"

namespace chho {

/// Which side of a face the upwind penalty acts on, per (element, face) pair
/// with a = u . n_TF.
enum class UpwindWeight {
    outflow,   ///< (|a| + a) / 2; upwind when the convective term acts on the trial function
    inflow,    ///< (|a| - a) / 2
};

enum class UpwindIntegration {
    exact,       ///< integrate (u_F - u_T)(v_F - v_T) as is
    projected,   ///< project both differences onto P^k(F) first
};

struct HhoOptions {
    BasisKind basis = BasisKind::scaled_monomial;
    UpwindWeight upwind_weight = UpwindWeight::outflow;
    UpwindIntegration upwind_integration = UpwindIntegration::exact;
};

inline double upwind_factor(double a, UpwindWeight weight)
{
    return weight == UpwindWeight::inflow ? 0.5 * (std::abs(a) - a) : 0.5 * (std::abs(a) + a);
}

/// Advection field u. For polynomial fields `quadrature_degree` is the
/// polynomial degree; otherwise it is the extra exactness used to integrate it.
struct VelocityField {
    std::function<Point(const Point&)> value;
    bool divergence_free = true;
    bool tangential_on_boundary = true;
    bool polynomial = true;
    int quadrature_degree = 0;

    bool is_zero() const { return !value; }
    Point operator()(const Point& x) const { return value ? value(x) : Point::Zero(); }

    static VelocityField zero() { return {}; }

    static VelocityField constant(const Point& u)
    {
        VelocityField f;
        f.value = [u](const Point&) { return u; };
        f.tangential_on_boundary = false;
        return f;
    }
};

/// Bases and layout of one element at polynomial degree k.
class ElementContext {
public:
    ElementContext(const GeometryCache& geo, std::size_t t, int k, HhoOptions options = {})
        : geo_(&geo), t_(t), k_(k), options_(options), layout_(local_layout(geo, t, k)),
          cell_(make_cell_basis(geo, t, k + 1, options.basis))
    {
        if (k < 0)
            throw std::invalid_argument("polynomial degree k must be non-negative");
        for (const auto& lf : geo.element(t).faces)
            faces_.push_back(make_face_basis(geo, lf.face, k, options.basis));
    }

    const GeometryCache& geometry() const { return *geo_; }
    const ElementGeometry& element() const { return geo_->element(t_); }
    std::size_t id() const { return t_; }
    int k() const { return k_; }
    const HhoOptions& options() const { return options_; }
    const LocalLayout& layout() const { return layout_; }
    const CellBasis& cell_basis() const { return cell_; }
    const FaceBasis& face_basis(std::size_t i) const { return faces_[i]; }
    std::size_t num_faces() const { return faces_.size(); }
    const LocalFace& local_face(std::size_t i) const { return element().faces[i]; }
    const FaceGeometry& face_geometry(std::size_t i) const { return geo_->face(local_face(i).face); }

    QuadRule cell_rule(int exactness) const { return element_quadrature(*geo_, t_, exactness); }
    QuadRule face_rule(std::size_t i, int exactness) const
    {
        return face_quadrature(*geo_, local_face(i).face, exactness);
    }

private:
    const GeometryCache* geo_;
    std::size_t t_;
    int k_;
    HhoOptions options_;
    LocalLayout layout_;
    CellBasis cell_;
    std::vector<FaceBasis> faces_;
};

/// Potential reconstruction: `op` maps local DOFs to the coefficients of
/// p_T^{k+1} in the cell basis; `stiffness` is the P^{k+1}(T) stiffness matrix.
struct Reconstruction {
    Eigen::MatrixXd op;
    Eigen::MatrixXd stiffness;
};

inline Reconstruction potential_reconstruction_matrix(const ElementContext& ctx)
{
    const auto& layout = ctx.layout();
    const auto& basis = ctx.cell_basis();
    const std::size_t nc = layout.cell_size();
    const int k = ctx.k();

    Eigen::MatrixXd stiffness = Eigen::MatrixXd::Zero(nc, nc);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(nc);
    const QuadRule cq = ctx.cell_rule(2 * (k + 1));
    for (std::size_t q = 0; q < cq.size(); ++q) {
        const Gradients g = basis.grad(cq.points[q]);
        stiffness.noalias() += cq.weights[q] * g * g.transpose();
        mean += cq.weights[q] * basis.eval(cq.points[q]);
    }

    // (grad p, grad z) = (grad v_T, grad z) - sum_F (v_T, grad z . n)_F + sum_F (v_F, grad z . n)_F
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nc, layout.size());
    rhs.leftCols(nc) = stiffness;
    for (std::size_t i = 0; i < ctx.num_faces(); ++i) {
        const Point& n = ctx.local_face(i).normal;
        const FaceBasis& fb = ctx.face_basis(i);
        const QuadRule fq = ctx.face_rule(i, 2 * k + 2);
        for (std::size_t q = 0; q < fq.size(); ++q) {
            const Eigen::VectorXd dn = basis.grad(fq.points[q]) * n;
            const Eigen::VectorXd phi = basis.eval(fq.points[q]);
            const Eigen::VectorXd psi = fb.eval(fq.points[q]);
            rhs.leftCols(nc).noalias() -= fq.weights[q] * dn * phi.transpose();
            rhs.middleCols(layout.face_offset(i), layout.face_size()).noalias() +=
                fq.weights[q] * dn * psi.transpose();
        }
    }

    // The row of the constant test function is trivial; it carries the
    // closure condition (mean of p equals mean of v_T) instead.
    Eigen::MatrixXd lhs = stiffness;
    lhs.row(0) = mean.transpose();
    rhs.row(0).setZero();
    rhs.row(0).head(nc) = mean.transpose();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
    if (!lu.isInvertible())
        throw std::runtime_error("element " + std::to_string(ctx.id()) +
                                 ": singular reconstruction system (degenerate element)");
    return {lu.solve(rhs), std::move(stiffness)};
}

namespace detail {

// For face i: face mass matrix M_F and the operator D_F with
// D_F v = pi_F^k (v_F - v_T|_F) in face basis coefficients.
struct FaceDifference {
    Eigen::MatrixXd mass;
    Eigen::MatrixXd diff;
};

inline FaceDifference face_difference(const ElementContext& ctx, std::size_t i)
{
    const auto& layout = ctx.layout();
    const std::size_t nc = layout.cell_size();
    const std::size_t nf = layout.face_size();
    const FaceBasis& fb = ctx.face_basis(i);
    const QuadRule fq = ctx.face_rule(i, 2 * ctx.k() + 2);

    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(nf, nf);
    Eigen::MatrixXd trace = Eigen::MatrixXd::Zero(nf, nc);
    for (std::size_t q = 0; q < fq.size(); ++q) {
        const Eigen::VectorXd psi = fb.eval(fq.points[q]);
        const Eigen::VectorXd phi = ctx.cell_basis().eval(fq.points[q]);
        mass.noalias() += fq.weights[q] * psi * psi.transpose();
        trace.noalias() += fq.weights[q] * psi * phi.transpose();
    }
    Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(nf, layout.size());
    diff.leftCols(nc) = -mass.llt().solve(trace);
    diff.middleCols(layout.face_offset(i), nf).setIdentity();
    return {std::move(mass), std::move(diff)};
}

} // namespace detail

/// s_T(u, v) = sum_F h_F^{-1} (pi_F^k(u_F - u_T), pi_F^k(v_F - v_T))_F.
inline Eigen::MatrixXd diffusive_stabilization_matrix(const ElementContext& ctx)
{
    const std::size_t n = ctx.layout().size();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < ctx.num_faces(); ++i) {
        const auto fd = detail::face_difference(ctx, i);
        s.noalias() += (1.0 / ctx.face_geometry(i).diameter) * fd.diff.transpose() * fd.mass * fd.diff;
    }
    return s;
}

/// A_T = P_T^T K P_T + S_T.
inline Eigen::MatrixXd local_diffusion_matrix(const ElementContext& /*ctx*/, const Reconstruction& rec,
                                              const Eigen::MatrixXd& stabilization)
{
    Eigen::MatrixXd a = rec.op.transpose() * rec.stiffness * rec.op + stabilization;
    return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd local_diffusion_matrix(const ElementContext& ctx)
{
    return local_diffusion_matrix(ctx, potential_reconstruction_matrix(ctx), diffusive_stabilization_matrix(ctx));
}

/// Quadrature exactness used for terms involving u at degree k.
inline int convection_exactness(int k, const VelocityField& u)
{
    return 2 * (k + 1) + u.quadrature_degree;
}

/// Consistency part of b_{u,T}: row i is the test function, column j the trial,
///   -(v_T, u . grad w)_T + sum_F (v_F, (u . n_TF) w)_F   with w the cell test function.
inline Eigen::MatrixXd convection_consistency_matrix(const ElementContext& ctx, const VelocityField& u)
{
    const auto& layout = ctx.layout();
    const std::size_t nc = layout.cell_size();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(layout.size(), layout.size());
    if (u.is_zero())
        return b;
    const auto& basis = ctx.cell_basis();
    const int ex = convection_exactness(ctx.k(), u);

    const QuadRule cq = ctx.cell_rule(ex);
    for (std::size_t q = 0; q < cq.size(); ++q) {
        const Eigen::VectorXd ugrad = basis.grad(cq.points[q]) * u(cq.points[q]);
        const Eigen::VectorXd phi = basis.eval(cq.points[q]);
        b.topLeftCorner(nc, nc).noalias() -= cq.weights[q] * ugrad * phi.transpose();
    }
    for (std::size_t i = 0; i < ctx.num_faces(); ++i) {
        const Point& n = ctx.local_face(i).normal;
        const FaceBasis& fb = ctx.face_basis(i);
        const QuadRule fq = ctx.face_rule(i, ex);
        for (std::size_t q = 0; q < fq.size(); ++q) {
            const double un = u(fq.points[q]).dot(n);
            const Eigen::VectorXd phi = basis.eval(fq.points[q]);
            const Eigen::VectorXd psi = fb.eval(fq.points[q]);
            b.block(0, layout.face_offset(i), nc, layout.face_size()).noalias() +=
                (fq.weights[q] * un) * phi * psi.transpose();
        }
    }
    return b;
}

/// s_{u,T}(u, v) = sum_F (weight(u . n_TF) (u_F - u_T), v_F - v_T)_F.
inline Eigen::MatrixXd upwind_stabilization_matrix(const ElementContext& ctx, const VelocityField& u)
{
    const auto& layout = ctx.layout();
    const std::size_t nc = layout.cell_size();
    const std::size_t n = layout.size();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    if (u.is_zero())
        return s;
    const auto& opts = ctx.options();
    const int ex = convection_exactness(ctx.k(), u);

    for (std::size_t i = 0; i < ctx.num_faces(); ++i) {
        const Point& nrm = ctx.local_face(i).normal;
        const FaceBasis& fb = ctx.face_basis(i);
        const QuadRule fq = ctx.face_rule(i, ex);
        if (opts.upwind_integration == UpwindIntegration::exact) {
            Eigen::VectorXd d(n);
            for (std::size_t q = 0; q < fq.size(); ++q) {
                const double alpha = upwind_factor(u(fq.points[q]).dot(nrm), opts.upwind_weight);
                if (alpha == 0.0)
                    continue;
                d.setZero();
                d.head(nc) = -ctx.cell_basis().eval(fq.points[q]);
                d.segment(layout.face_offset(i), layout.face_size()) = fb.eval(fq.points[q]);
                s.noalias() += (fq.weights[q] * alpha) * d * d.transpose();
            }
        } else {
            const auto fd = detail::face_difference(ctx, i);
            Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(layout.face_size(), layout.face_size());
            for (std::size_t q = 0; q < fq.size(); ++q) {
                const double alpha = upwind_factor(u(fq.points[q]).dot(nrm), opts.upwind_weight);
                const Eigen::VectorXd psi = fb.eval(fq.points[q]);
                weighted.noalias() += (fq.weights[q] * alpha) * psi * psi.transpose();
            }
            s.noalias() += fd.diff.transpose() * weighted * fd.diff;
        }
    }
    return s;
}

/// B_T: consistency plus upwind stabilization.
inline Eigen::MatrixXd local_convection_matrix(const ElementContext& ctx, const VelocityField& u)
{
    return convection_consistency_matrix(ctx, u) + upwind_stabilization_matrix(ctx, u);
}

/// Gram matrix of the cell basis, embedded in the local DOF space.
inline Eigen::MatrixXd local_mass_matrix(const ElementContext& ctx)
{
    const auto& layout = ctx.layout();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(layout.size(), layout.size());
    m.topLeftCorner(layout.cell_size(), layout.cell_size()) =
        mass_matrix(ctx.cell_basis(), ctx.cell_rule(2 * (ctx.k() + 1)));
    return m;
}

struct LocalOperatorSet {
    Eigen::MatrixXd reconstruction;   ///< P_T
    Eigen::MatrixXd stiffness;        ///< stiffness of P^{k+1}(T)
    Eigen::MatrixXd stabilization;    ///< S_T
    Eigen::MatrixXd diffusion;        ///< A_T
    Eigen::MatrixXd convection;       ///< B_T
    Eigen::MatrixXd mass;             ///< M_T
};

inline LocalOperatorSet local_operators(const ElementContext& ctx, const VelocityField& u)
{
    LocalOperatorSet ops;
    Reconstruction rec = potential_reconstruction_matrix(ctx);
    ops.stabilization = diffusive_stabilization_matrix(ctx);
    ops.diffusion = local_diffusion_matrix(ctx, rec, ops.stabilization);
    ops.reconstruction = std::move(rec.op);
    ops.stiffness = std::move(rec.stiffness);
    ops.convection = local_convection_matrix(ctx, u);
    ops.mass = local_mass_matrix(ctx);
    return ops;
}

inline LocalOperatorSet local_operators(const GeometryCache& geo, std::size_t t, int k, const VelocityField& u,
                                        HhoOptions options = {})
{
    return local_operators(ElementContext(geo, t, k, options), u);
}

/// Net flux of u through the boundary of element t (zero for divergence-free u).
inline double element_net_flux(const GeometryCache& geo, std::size_t t, const VelocityField& u, int exactness)
{
    double flux = 0.0;
    for (const auto& lf : geo.element(t).faces) {
        const QuadRule fq = face_quadrature(geo, lf.face, exactness);
        flux += fq.integrate([&](const Point& x) { return u(x).dot(lf.normal); });
    }
    return flux;
}

} // namespace chho
