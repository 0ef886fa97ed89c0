#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chho/geometry.hpp"
#include "chho/mesh.hpp"
#include "chho/mesh_io.hpp"

namespace testing_support {

using chho::Point;

inline std::string data_path(const std::string& rel) { return std::string(CHHO_DATA_DIR) + "/" + rel; }

inline chho::Mesh single_polygon(std::vector<Point> vertices)
{
    std::vector<std::size_t> loop(vertices.size());
    for (std::size_t i = 0; i < loop.size(); ++i)
        loop[i] = i;
    return chho::build_mesh(std::move(vertices), {loop});
}

inline chho::Mesh unit_square() { return single_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }
inline chho::Mesh unit_triangle() { return single_polygon({{0, 0}, {1, 0}, {0, 1}}); }

inline chho::Mesh regular_polygon(int n, double radius = 1.0, Point center = Point::Zero())
{
    std::vector<Point> v;
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * M_PI * i / n;
        v.push_back(center + radius * Point(std::cos(a), std::sin(a)));
    }
    return single_polygon(std::move(v));
}

inline chho::Mesh hexagon() { return regular_polygon(6); }

/// Named single-element fixtures used across suites.
struct Fixture {
    std::string name;
    chho::Mesh mesh;
};

inline std::vector<Fixture> element_fixtures()
{
    return {{"square", unit_square()}, {"triangle", unit_triangle()}, {"hexagon", hexagon()}};
}

inline Eigen::VectorXd random_vector(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = d(rng);
    return v;
}

/// All monomials x^a y^b with a + b <= degree, as (a, b) pairs.
inline std::vector<std::pair<int, int>> monomials(int degree)
{
    std::vector<std::pair<int, int>> m;
    for (int d = 0; d <= degree; ++d)
        for (int a = d; a >= 0; --a)
            m.emplace_back(a, d - a);
    return m;
}

inline double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

/// Integral of x^a y^b over a counterclockwise polygon by the divergence
/// theorem, int x^a y^b = 1/(a+1) sum_edges int x^{a+1} y^b n_x ds, with each
/// edge integral expanded in closed form.
inline double polygon_monomial_integral(const std::vector<Point>& poly, int a, int b)
{
    double total = 0.0;
    for (std::size_t e = 0; e < poly.size(); ++e) {
        const Point p = poly[e];
        const Point q = poly[(e + 1) % poly.size()];
        const double dx = q.x() - p.x(), dy = q.y() - p.y();
        // n_x ds = dy dt for a counterclockwise boundary.
        double s = 0.0;
        for (int i = 0; i <= a + 1; ++i)
            for (int j = 0; j <= b; ++j)
                s += binomial(a + 1, i) * binomial(b, j) * std::pow(p.x(), a + 1 - i) * std::pow(dx, i) *
                     std::pow(p.y(), b - j) * std::pow(dy, j) / (i + j + 1);
        total += s * dy;
    }
    return total / (a + 1);
}

inline std::vector<Point> element_polygon(const chho::Mesh& mesh, std::size_t t)
{
    std::vector<Point> p;
    for (auto v : mesh.element(t))
        p.push_back(mesh.vertex(v));
    return p;
}

} // namespace testing_support
