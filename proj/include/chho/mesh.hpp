#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace chho {

using Point = Eigen::Vector2d;

/// Marker for the missing neighbour of a boundary face.
inline constexpr std::size_t no_element = std::numeric_limits<std::size_t>::max();

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rectangle {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
};

/// A straight face. `vertices` are listed in the order in which `elements[0]`
/// traverses them, so the face normal (rotated tangent) points out of
/// `elements[0]`. `elements[1]` is `no_element` on the boundary.
struct Face {
    std::array<std::size_t, 2> vertices{};
    std::array<std::size_t, 2> elements{no_element, no_element};

    bool is_boundary() const { return elements[1] == no_element; }
};

/// Reference from an element to one of its faces. `aligned` is true when the
/// element is `elements[0]` of the face (its outward normal is the face normal).
struct ElementFace {
    std::size_t face = 0;
    bool aligned = true;
};

/// Two-dimensional polygonal mesh. Elements are counterclockwise vertex loops;
/// the boundary of each element is split into faces following its loop.
/// A hanging vertex in a loop simply produces an extra face, which is how
/// nonmatching interfaces are represented.
class Mesh {
public:
    Mesh() = default;

    /// Raw constructor; performs no checks (see validate_mesh).
    Mesh(std::vector<Point> vertices,
         std::vector<std::vector<std::size_t>> elements,
         std::vector<Face> faces,
         std::vector<std::vector<ElementFace>> element_faces)
        : vertices_(std::move(vertices)), elements_(std::move(elements)),
          faces_(std::move(faces)), element_faces_(std::move(element_faces)) {}

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_elements() const { return elements_.size(); }
    std::size_t num_faces() const { return faces_.size(); }

    const std::vector<Point>& vertices() const { return vertices_; }
    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    const std::vector<std::vector<std::size_t>>& elements() const { return elements_; }
    const std::vector<std::size_t>& element(std::size_t t) const { return elements_[t]; }
    const std::vector<Face>& faces() const { return faces_; }
    const Face& face(std::size_t f) const { return faces_[f]; }
    const std::vector<ElementFace>& element_faces(std::size_t t) const { return element_faces_[t]; }
    const std::vector<std::vector<ElementFace>>& all_element_faces() const { return element_faces_; }

    std::size_t num_boundary_faces() const
    {
        return static_cast<std::size_t>(std::count_if(
            faces_.begin(), faces_.end(), [](const Face& f) { return f.is_boundary(); }));
    }
    std::size_t num_interfaces() const { return num_faces() - num_boundary_faces(); }

private:
    std::vector<Point> vertices_;
    std::vector<std::vector<std::size_t>> elements_;
    std::vector<Face> faces_;
    std::vector<std::vector<ElementFace>> element_faces_;
};

/// Twice the signed area of a closed polygon given as a vertex loop.
inline double signed_area(const std::vector<Point>& vertices, const std::vector<std::size_t>& loop)
{
    double a = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Point& p = vertices[loop[i]];
        const Point& q = vertices[loop[(i + 1) % loop.size()]];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> edge_key(std::size_t a, std::size_t b)
{
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

} // namespace detail

/// Builds connectivity from vertex loops. Faces are numbered in order of first
/// appearance unless `face_list` (vertex pairs, any orientation) fixes the
/// numbering; in that case it must match the element edges exactly.
/// Throws MeshError naming the offending element on topological errors.
inline Mesh build_mesh(std::vector<Point> vertices,
                       std::vector<std::vector<std::size_t>> loops,
                       const std::optional<std::vector<std::array<std::size_t, 2>>>& face_list = std::nullopt)
{
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
    std::vector<Face> faces;

    if (face_list) {
        for (const auto& fv : *face_list) {
            if (fv[0] >= vertices.size() || fv[1] >= vertices.size())
                throw MeshError("face " + std::to_string(faces.size()) + ": vertex index out of range");
            if (fv[0] == fv[1])
                throw MeshError("face " + std::to_string(faces.size()) + ": repeated vertex");
            auto [it, inserted] = index.emplace(detail::edge_key(fv[0], fv[1]), faces.size());
            if (!inserted)
                throw MeshError("face " + std::to_string(faces.size()) + ": duplicate of face " +
                                std::to_string(it->second));
            Face f;
            f.vertices = fv;
            f.elements = {no_element, no_element};
            faces.push_back(f);
        }
    }

    // Per face: first traversing element and its direction.
    std::vector<std::vector<ElementFace>> element_faces(loops.size());
    std::vector<int> claimed(faces.size(), 0);

    for (std::size_t t = 0; t < loops.size(); ++t) {
        const auto& loop = loops[t];
        const std::string name = "element " + std::to_string(t);
        if (loop.size() < 3)
            throw MeshError(name + ": fewer than 3 vertices");
        for (auto v : loop)
            if (v >= vertices.size())
                throw MeshError(name + ": vertex index out of range");

        for (std::size_t i = 0; i < loop.size(); ++i) {
            const std::size_t a = loop[i];
            const std::size_t b = loop[(i + 1) % loop.size()];
            if (a == b)
                throw MeshError(name + ": repeated consecutive vertex");
            const auto key = detail::edge_key(a, b);
            auto it = index.find(key);
            if (it == index.end()) {
                if (face_list)
                    throw MeshError(name + ": edge (" + std::to_string(a) + "," + std::to_string(b) +
                                    ") missing from face list");
                it = index.emplace(key, faces.size()).first;
                faces.push_back(Face{{a, b}, {no_element, no_element}});
                claimed.push_back(0);
            }
            Face& f = faces[it->second];
            int& count = claimed[it->second];
            if (count == 0) {
                f.vertices = {a, b};
                f.elements[0] = t;
                element_faces[t].push_back({it->second, true});
            } else if (count == 1) {
                if (f.vertices[0] != b || f.vertices[1] != a)
                    throw MeshError(name + ": shares face " + std::to_string(it->second) +
                                    " with element " + std::to_string(f.elements[0]) +
                                    " with the same orientation");
                f.elements[1] = t;
                element_faces[t].push_back({it->second, false});
            } else {
                throw MeshError(name + ": face " + std::to_string(it->second) +
                                " already has two incident elements");
            }
            ++count;
        }
    }

    for (std::size_t fi = 0; fi < faces.size(); ++fi)
        if (claimed[fi] == 0)
            throw MeshError("face " + std::to_string(fi) + ": dangling (no incident element)");

    return Mesh(std::move(vertices), std::move(loops), std::move(faces), std::move(element_faces));
}

namespace detail {

inline void check_rectangle(int nx, int ny, const Rectangle& r)
{
    if (nx < 1 || ny < 1)
        throw MeshError("mesh generator: nx and ny must be at least 1");
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0))
        throw MeshError("mesh generator: degenerate rectangle");
}

inline std::vector<Point> lattice(int nx, int ny, const Rectangle& r)
{
    std::vector<Point> v;
    v.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            // Endpoints are set exactly so the boundary is not perturbed by rounding.
            const double x = i == nx ? r.x1 : r.x0 + (r.x1 - r.x0) * i / nx;
            const double y = j == ny ? r.y1 : r.y0 + (r.y1 - r.y0) * j / ny;
            v.emplace_back(x, y);
        }
    return v;
}

} // namespace detail

/// nx * ny quadrilaterals covering `domain`.
inline Mesh generate_cartesian_mesh(int nx, int ny, const Rectangle& domain = {})
{
    detail::check_rectangle(nx, ny, domain);
    auto id = [nx](int i, int j) { return static_cast<std::size_t>(j * (nx + 1) + i); };
    std::vector<std::vector<std::size_t>> loops;
    loops.reserve(static_cast<std::size_t>(nx * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            loops.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return build_mesh(detail::lattice(nx, ny, domain), std::move(loops));
}

/// Cartesian grid with every cell split along its (i,j)-(i+1,j+1) diagonal.
inline Mesh generate_triangular_mesh(int nx, int ny, const Rectangle& domain = {})
{
    detail::check_rectangle(nx, ny, domain);
    auto id = [nx](int i, int j) { return static_cast<std::size_t>(j * (nx + 1) + i); };
    std::vector<std::vector<std::size_t>> loops;
    loops.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            loops.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            loops.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return build_mesh(detail::lattice(nx, ny, domain), std::move(loops));
}

} // namespace chho
