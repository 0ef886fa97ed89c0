#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace chho {

/// Highest polynomial exactness the quadrature factory accepts.
inline constexpr int max_quadrature_exactness = 64;

struct QuadRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int exactness = 0;

    std::size_t size() const { return points.size(); }

    double total_weight() const
    {
        double s = 0.0;
        for (double w : weights)
            s += w;
        return s;
    }

    template <class F>
    double integrate(F&& f) const
    {
        double s = 0.0;
        for (std::size_t q = 0; q < points.size(); ++q)
            s += weights[q] * f(points[q]);
        return s;
    }
};

namespace detail {

inline void check_exactness(int exactness)
{
    if (exactness < 0 || exactness > max_quadrature_exactness)
        throw std::invalid_argument("quadrature exactness " + std::to_string(exactness) +
                                    " outside [0, " + std::to_string(max_quadrature_exactness) + "]");
}

} // namespace detail

/// n-point Gauss-Legendre rule on [0, 1] (exact up to degree 2n - 1).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n)
{
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1)
                p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        // Recompute the derivative at the converged root.
        double p0 = 1.0, p1 = z;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n == 1 ? 1.0 : n * (z * p1 - p0) / (z * z - 1.0);
        const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(n - 1 - i);
        x[a] = 0.5 * (1.0 - z);
        x[b] = 0.5 * (1.0 + z);
        w[a] = 0.5 * wi;
        w[b] = 0.5 * wi;
    }
    return {x, w};
}

/// Gauss rule on the segment [a, b]; weights sum to |b - a|.
inline QuadRule segment_quadrature(const Point& a, const Point& b, int exactness)
{
    detail::check_exactness(exactness);
    const int n = exactness / 2 + 1;
    auto [x, w] = gauss_legendre(n);
    const double len = (b - a).norm();
    QuadRule rule;
    rule.exactness = exactness;
    rule.points.reserve(x.size());
    rule.weights.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        rule.points.push_back(a + x[i] * (b - a));
        rule.weights.push_back(w[i] * len);
    }
    return rule;
}

namespace detail {

// Collapsed (Duffy) tensor Gauss rule on a triangle, appended to `rule`.
inline void append_triangle_rule(const Triangle& tri, int exactness, QuadRule& rule)
{
    const int nu = (exactness + 1) / 2 + 1;   // integrand degree + 1 from the Jacobian
    const int nv = exactness / 2 + 1;
    auto [xu, wu] = gauss_legendre(nu);
    auto [xv, wv] = gauss_legendre(nv);
    const double twice_area = 2.0 * triangle_area(tri);
    const Point e1 = tri[1] - tri[0];
    const Point e2 = tri[2] - tri[1];
    for (std::size_t i = 0; i < xu.size(); ++i)
        for (std::size_t j = 0; j < xv.size(); ++j) {
            const double u = xu[i], v = xv[j];
            rule.points.push_back(tri[0] + u * e1 + u * v * e2);
            rule.weights.push_back(wu[i] * wv[j] * u * twice_area);
        }
}

inline void append_refined(const Triangle& tri, int exactness, int levels, QuadRule& rule)
{
    if (levels <= 0) {
        append_triangle_rule(tri, exactness, rule);
        return;
    }
    const Point m01 = 0.5 * (tri[0] + tri[1]);
    const Point m12 = 0.5 * (tri[1] + tri[2]);
    const Point m20 = 0.5 * (tri[2] + tri[0]);
    append_refined({tri[0], m01, m20}, exactness, levels - 1, rule);
    append_refined({m01, tri[1], m12}, exactness, levels - 1, rule);
    append_refined({m20, m12, tri[2]}, exactness, levels - 1, rule);
    append_refined({m01, m12, m20}, exactness, levels - 1, rule);
}

} // namespace detail

/// Rule on a single triangle. `refinement` > 0 subdivides it 4^refinement
/// times, which helps for integrands with sharp layers.
inline QuadRule triangle_quadrature(const Triangle& tri, int exactness, int refinement = 0)
{
    detail::check_exactness(exactness);
    QuadRule rule;
    rule.exactness = exactness;
    detail::append_refined(tri, exactness, refinement, rule);
    return rule;
}

/// Rule on element `t`, assembled from its centroid fan.
inline QuadRule element_quadrature(const GeometryCache& geo, std::size_t t, int exactness, int refinement = 0)
{
    detail::check_exactness(exactness);
    QuadRule rule;
    rule.exactness = exactness;
    for (const auto& tri : geo.element(t).triangles)
        detail::append_refined(tri, exactness, refinement, rule);
    return rule;
}

inline QuadRule face_quadrature(const GeometryCache& geo, std::size_t f, int exactness)
{
    const FaceGeometry& g = geo.face(f);
    return segment_quadrature(g.origin, g.origin + g.length * g.tangent, exactness);
}

} // namespace chho
