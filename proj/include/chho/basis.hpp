#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geometry.hpp"
#include "quadrature.hpp"

namespace chho {

/// Dimension of P^l in two variables.
constexpr std::size_t poly_dim_2d(int l) { return l < 0 ? 0 : static_cast<std::size_t>((l + 1) * (l + 2) / 2); }
/// Dimension of P^l in one variable.
constexpr std::size_t poly_dim_1d(int l) { return l < 0 ? 0 : static_cast<std::size_t>(l + 1); }

enum class BasisKind {
    scaled_monomial,   ///< ((x - x_T)/h_T)^alpha; the default
    orthonormal,       ///< L2-orthonormalized scaled monomials (Cholesky of the Gram matrix)
};

using Gradients = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Basis of P^l(T): scaled monomials ordered by total degree, optionally
/// combined through a lower-triangular transform. The first poly_dim_2d(m)
/// functions span P^m(T) for every m <= l.
class CellBasis {
public:
    CellBasis() = default;
    CellBasis(Point center, double scale, int degree)
        : center_(std::move(center)), scale_(scale), degree_(degree)
    {
        if (degree < 0)
            throw std::invalid_argument("cell basis degree must be non-negative");
        for (int d = 0; d <= degree; ++d)
            for (int i = d; i >= 0; --i)
                exponents_.push_back({i, d - i});
    }

    int degree() const { return degree_; }
    std::size_t size() const { return exponents_.size(); }
    const Point& center() const { return center_; }
    double scale() const { return scale_; }
    const std::vector<std::array<int, 2>>& exponents() const { return exponents_; }
    bool has_transform() const { return transform_.size() > 0; }
    const Eigen::MatrixXd& transform() const { return transform_; }

    /// Replaces the basis phi by transform * phi (transform lower triangular).
    void set_transform(Eigen::MatrixXd transform) { transform_ = std::move(transform); }

    Eigen::VectorXd eval(const Point& x) const
    {
        Eigen::VectorXd v(size());
        const auto px = powers((x.x() - center_.x()) / scale_);
        const auto py = powers((x.y() - center_.y()) / scale_);
        for (std::size_t i = 0; i < size(); ++i)
            v[i] = px[exponents_[i][0]] * py[exponents_[i][1]];
        if (has_transform())
            return transform_ * v;
        return v;
    }

    Gradients grad(const Point& x) const
    {
        Gradients g(size(), 2);
        const auto px = powers((x.x() - center_.x()) / scale_);
        const auto py = powers((x.y() - center_.y()) / scale_);
        for (std::size_t i = 0; i < size(); ++i) {
            const int a = exponents_[i][0], b = exponents_[i][1];
            g(i, 0) = a == 0 ? 0.0 : a * px[a - 1] * py[b] / scale_;
            g(i, 1) = b == 0 ? 0.0 : b * px[a] * py[b - 1] / scale_;
        }
        if (has_transform())
            return transform_ * g;
        return g;
    }

    /// Value of the polynomial with coefficients `coef` at `x`.
    double eval(const Eigen::Ref<const Eigen::VectorXd>& coef, const Point& x) const { return coef.dot(eval(x)); }

private:
    std::vector<double> powers(double z) const
    {
        std::vector<double> p(static_cast<std::size_t>(degree_) + 1, 1.0);
        for (int i = 1; i <= degree_; ++i)
            p[i] = p[i - 1] * z;
        return p;
    }

    Point center_ = Point::Zero();
    double scale_ = 1.0;
    int degree_ = 0;
    std::vector<std::array<int, 2>> exponents_;
    Eigen::MatrixXd transform_;
};

/// Basis of P^k(F): ((s - s_F)/h_F)^j where s is the arc length from the
/// lower-indexed vertex and s_F the midpoint coordinate.
class FaceBasis {
public:
    FaceBasis() = default;
    FaceBasis(Point origin, Point tangent, double length, int degree)
        : origin_(std::move(origin)), tangent_(std::move(tangent)), length_(length), degree_(degree)
    {
        if (degree < 0)
            throw std::invalid_argument("face basis degree must be non-negative");
    }

    int degree() const { return degree_; }
    std::size_t size() const { return poly_dim_1d(degree_); }
    bool has_transform() const { return transform_.size() > 0; }
    void set_transform(Eigen::MatrixXd transform) { transform_ = std::move(transform); }

    Eigen::VectorXd eval(const Point& x) const
    {
        Eigen::VectorXd v(size());
        const double z = ((x - origin_).dot(tangent_) - 0.5 * length_) / length_;
        double p = 1.0;
        for (std::size_t j = 0; j < size(); ++j) {
            v[j] = p;
            p *= z;
        }
        if (has_transform())
            return transform_ * v;
        return v;
    }

    double eval(const Eigen::Ref<const Eigen::VectorXd>& coef, const Point& x) const { return coef.dot(eval(x)); }

private:
    Point origin_ = Point::Zero();
    Point tangent_ = Point::UnitX();
    double length_ = 1.0;
    int degree_ = 0;
    Eigen::MatrixXd transform_;
};

namespace detail {

// Lower-triangular L^{-1} from the Gram matrix G = L L^T of the raw basis.
inline Eigen::MatrixXd orthonormalizing_transform(const Eigen::MatrixXd& gram, const std::string& where)
{
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(where + ": Gram matrix is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    return L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
}

} // namespace detail

inline CellBasis make_cell_basis(const GeometryCache& geo, std::size_t t, int degree,
                                 BasisKind kind = BasisKind::scaled_monomial)
{
    const ElementGeometry& g = geo.element(t);
    CellBasis basis(g.centroid, g.diameter, degree);
    if (kind == BasisKind::orthonormal) {
        const QuadRule q = element_quadrature(geo, t, 2 * degree);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(basis.size(), basis.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            const Eigen::VectorXd phi = basis.eval(q.points[i]);
            gram.noalias() += q.weights[i] * phi * phi.transpose();
        }
        basis.set_transform(detail::orthonormalizing_transform(gram, "element " + std::to_string(t)));
    }
    return basis;
}

inline FaceBasis make_face_basis(const GeometryCache& geo, std::size_t f, int degree,
                                 BasisKind kind = BasisKind::scaled_monomial)
{
    const FaceGeometry& g = geo.face(f);
    FaceBasis basis(g.origin, g.tangent, g.length, degree);
    if (kind == BasisKind::orthonormal) {
        const QuadRule q = face_quadrature(geo, f, 2 * degree);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(basis.size(), basis.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            const Eigen::VectorXd phi = basis.eval(q.points[i]);
            gram.noalias() += q.weights[i] * phi * phi.transpose();
        }
        basis.set_transform(detail::orthonormalizing_transform(gram, "face " + std::to_string(f)));
    }
    return basis;
}

/// Gram matrix of `basis` under `rule`.
template <class Basis>
Eigen::MatrixXd mass_matrix(const Basis& basis, const QuadRule& rule)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const Eigen::VectorXd phi = basis.eval(rule.points[i]);
        m.noalias() += rule.weights[i] * phi * phi.transpose();
    }
    return m;
}

namespace detail {

template <class Basis, class F>
Eigen::VectorXd project(const Basis& basis, const QuadRule& rule, F&& f, const std::string& where)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(basis.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const Eigen::VectorXd phi = basis.eval(rule.points[i]);
        m.noalias() += rule.weights[i] * phi * phi.transpose();
        rhs += rule.weights[i] * f(rule.points[i]) * phi;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(where + ": singular local mass matrix");
    return llt.solve(rhs);
}

} // namespace detail

/// L2(T) projection of `f` onto P^degree(T). `exactness` < 0 selects 2*degree + 4.
template <class F>
Eigen::VectorXd l2_project_cell(F&& f, const GeometryCache& geo, std::size_t t, int degree,
                                BasisKind kind = BasisKind::scaled_monomial, int exactness = -1,
                                int refinement = 0)
{
    const CellBasis basis = make_cell_basis(geo, t, degree, kind);
    const QuadRule rule = element_quadrature(geo, t, exactness < 0 ? 2 * degree + 4 : exactness, refinement);
    return detail::project(basis, rule, f, "element " + std::to_string(t));
}

/// L2(F) projection of `f` onto P^degree(F), i.e. pi_F^degree.
template <class F>
Eigen::VectorXd l2_project_face(F&& f, const GeometryCache& geo, std::size_t face, int degree,
                                BasisKind kind = BasisKind::scaled_monomial, int exactness = -1)
{
    const FaceBasis basis = make_face_basis(geo, face, degree, kind);
    const QuadRule rule = face_quadrature(geo, face, exactness < 0 ? 2 * degree + 4 : exactness);
    return detail::project(basis, rule, f, "face " + std::to_string(face));
}

/// Coefficients of (v_T, (v_F)_{F in F_T}): a P^{k+1} cell block followed by
/// one P^k block per face, in element face order.
using LocalDofVector = Eigen::VectorXd;

/// Local DOF layout of an element for polynomial degree k.
struct LocalLayout {
    int k = 0;
    std::size_t num_faces = 0;

    std::size_t cell_size() const { return poly_dim_2d(k + 1); }
    std::size_t face_size() const { return poly_dim_1d(k); }
    std::size_t face_offset(std::size_t i) const { return cell_size() + i * face_size(); }
    std::size_t size() const { return cell_size() + num_faces * face_size(); }
};

inline LocalLayout local_layout(const GeometryCache& geo, std::size_t t, int k)
{
    return LocalLayout{k, geo.element(t).faces.size()};
}

/// HHO interpolant: cell L2 projection onto P^{k+1}(T) and face L2
/// projections onto P^k(F).
template <class F>
LocalDofVector interpolate(F&& f, const GeometryCache& geo, std::size_t t, int k,
                           BasisKind kind = BasisKind::scaled_monomial, int exactness = -1)
{
    const LocalLayout layout = local_layout(geo, t, k);
    LocalDofVector v(layout.size());
    v.head(layout.cell_size()) = l2_project_cell(f, geo, t, k + 1, kind, exactness);
    const auto& faces = geo.element(t).faces;
    for (std::size_t i = 0; i < faces.size(); ++i)
        v.segment(layout.face_offset(i), layout.face_size()) =
            l2_project_face(f, geo, faces[i].face, k, kind, exactness);
    return v;
}

} // namespace chho
