#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mesh.hpp"

namespace chho {

using Triangle = std::array<Point, 3>;

/// Face of an element seen from that element.
struct LocalFace {
    std::size_t face = 0;
    Point normal;   ///< unit normal pointing out of the element
};

struct ElementGeometry {
    double area = 0.0;
    Point centroid = Point::Zero();
    double diameter = 0.0;
    std::vector<Triangle> triangles;   ///< fan from the centroid, counterclockwise
    std::vector<LocalFace> faces;      ///< same order as Mesh::element_faces
};

struct FaceGeometry {
    double length = 0.0;
    Point midpoint = Point::Zero();
    double diameter = 0.0;
    Point normal = Point::Zero();      ///< outward for elements[0]
    Point origin = Point::Zero();      ///< lower-indexed endpoint, origin of the arc-length coordinate
    Point tangent = Point::Zero();     ///< unit tangent pointing away from `origin`
    std::array<std::size_t, 2> elements{no_element, no_element};

    bool is_boundary() const { return elements[1] == no_element; }
    /// Arc-length coordinate of `x` (assumed on the face).
    double coordinate(const Point& x) const { return (x - origin).dot(tangent); }
};

/// Precomputed geometric quantities of a mesh. Immutable once built and
/// self-contained: numerical kernels only need this object.
class GeometryCache {
public:
    GeometryCache() = default;
    GeometryCache(std::vector<ElementGeometry> elements, std::vector<FaceGeometry> faces)
        : elements_(std::move(elements)), faces_(std::move(faces))
    {
        for (const auto& e : elements_)
            h_ = std::max(h_, e.diameter);
    }

    std::size_t num_elements() const { return elements_.size(); }
    std::size_t num_faces() const { return faces_.size(); }
    const ElementGeometry& element(std::size_t t) const { return elements_[t]; }
    const FaceGeometry& face(std::size_t f) const { return faces_[f]; }
    double h() const { return h_; }

    double domain_area() const
    {
        double a = 0.0;
        for (const auto& e : elements_)
            a += e.area;
        return a;
    }

private:
    std::vector<ElementGeometry> elements_;
    std::vector<FaceGeometry> faces_;
    double h_ = 0.0;
};

inline double triangle_area(const Triangle& t)
{
    const Point a = t[1] - t[0];
    const Point b = t[2] - t[0];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

/// Throws MeshError on zero-area elements or zero-length faces.
inline GeometryCache compute_geometry(const Mesh& mesh)
{
    const auto& V = mesh.vertices();

    std::vector<FaceGeometry> faces(mesh.num_faces());
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        const Point& a = V[face.vertices[0]];
        const Point& b = V[face.vertices[1]];
        FaceGeometry& g = faces[f];
        g.length = (b - a).norm();
        if (!(g.length > 0.0))
            throw MeshError("face " + std::to_string(f) + ": zero length");
        g.diameter = g.length;
        g.midpoint = 0.5 * (a + b);
        const Point t = (b - a) / g.length;
        g.normal = Point(t.y(), -t.x());
        const bool a_first = face.vertices[0] < face.vertices[1];
        g.origin = a_first ? a : b;
        g.tangent = a_first ? t : Point(-t);
        g.elements = face.elements;
    }

    std::vector<ElementGeometry> elements(mesh.num_elements());
    for (std::size_t t = 0; t < mesh.num_elements(); ++t) {
        const auto& loop = mesh.element(t);
        ElementGeometry& g = elements[t];
        const double area = signed_area(V, loop);
        if (!(area > 0.0))
            throw MeshError("element " + std::to_string(t) + ": non-positive area");
        g.area = area;

        // Polygon centroid; relative to the first vertex to limit cancellation.
        const Point& p0 = V[loop[0]];
        Point c = Point::Zero();
        for (std::size_t i = 0; i < loop.size(); ++i) {
            const Point p = V[loop[i]] - p0;
            const Point q = V[loop[(i + 1) % loop.size()]] - p0;
            const double cross = p.x() * q.y() - q.x() * p.y();
            c += cross * (p + q);
        }
        g.centroid = p0 + c / (6.0 * area);

        for (std::size_t i = 0; i < loop.size(); ++i)
            for (std::size_t j = i + 1; j < loop.size(); ++j)
                g.diameter = std::max(g.diameter, (V[loop[i]] - V[loop[j]]).norm());

        g.triangles.reserve(loop.size());
        for (std::size_t i = 0; i < loop.size(); ++i)
            g.triangles.push_back({g.centroid, V[loop[i]], V[loop[(i + 1) % loop.size()]]});

        for (const auto& ef : mesh.element_faces(t)) {
            const Point& n = faces[ef.face].normal;
            g.faces.push_back({ef.face, ef.aligned ? n : Point(-n)});
        }
    }
    return GeometryCache(std::move(elements), std::move(faces));
}

} // namespace chho
