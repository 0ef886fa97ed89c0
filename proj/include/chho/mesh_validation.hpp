#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "mesh.hpp"

namespace chho {

struct MeshReport {
    std::vector<std::string> issues;

    bool ok() const { return issues.empty(); }
};

struct ValidationLimits {
    std::size_t max_faces_per_element = 64;
    double area_tolerance = 1e-12;     ///< relative, for the area partition
    double closure_tolerance = 1e-12;  ///< absolute, per component of sum |F| n_TF
};

/// Lists every violated admissibility condition. Never throws; an empty
/// report means the mesh can be handed to compute_geometry and the solver.
inline MeshReport validate_mesh(const Mesh& mesh, const ValidationLimits& limits = {})
{
    MeshReport report;
    auto issue = [&report](std::string s) { report.issues.push_back(std::move(s)); };
    const auto& V = mesh.vertices();
    const std::size_t nv = V.size();
    const std::size_t nf = mesh.num_faces();

    if (mesh.all_element_faces().size() != mesh.num_elements())
        issue("mesh: element-face table size does not match element count");

    std::vector<int> incidence(nf, 0);
    for (std::size_t f = 0; f < nf; ++f) {
        const Face& face = mesh.face(f);
        const std::string name = "face " + std::to_string(f);
        if (face.vertices[0] >= nv || face.vertices[1] >= nv) {
            issue(name + ": vertex index out of range");
            continue;
        }
        if (face.elements[0] == no_element)
            issue(name + ": dangling (no incident element)");
        for (auto e : face.elements)
            if (e != no_element && e >= mesh.num_elements())
                issue(name + ": incident element index out of range");
        if ((V[face.vertices[1]] - V[face.vertices[0]]).norm() == 0.0)
            issue(name + ": zero length");
    }

    double element_area_sum = 0.0;
    for (std::size_t t = 0; t < mesh.num_elements(); ++t) {
        const std::string name = "element " + std::to_string(t);
        const auto& loop = mesh.element(t);
        bool indices_ok = loop.size() >= 3;
        if (loop.size() < 3)
            issue(name + ": fewer than 3 vertices");
        for (auto v : loop)
            if (v >= nv) {
                issue(name + ": vertex index out of range");
                indices_ok = false;
                break;
            }
        if (!indices_ok)
            continue;

        const double area = signed_area(V, loop);
        element_area_sum += area;
        if (area < 0.0)
            issue(name + ": negative area (clockwise vertex loop)");
        else if (area == 0.0)
            issue(name + ": zero area");

        if (area > 0.0) {
            Point c = Point::Zero();
            const Point& p0 = V[loop[0]];
            for (std::size_t i = 0; i < loop.size(); ++i) {
                const Point p = V[loop[i]] - p0;
                const Point q = V[loop[(i + 1) % loop.size()]] - p0;
                c += (p.x() * q.y() - q.x() * p.y()) * (p + q);
            }
            c = p0 + c / (6.0 * area);
            for (std::size_t i = 0; i < loop.size(); ++i) {
                const Triangle tri{c, V[loop[i]], V[loop[(i + 1) % loop.size()]]};
                if (!(triangle_area(tri) > 0.0)) {
                    issue(name + ": not star-shaped with respect to its centroid");
                    break;
                }
            }
        }

        if (t >= mesh.all_element_faces().size())
            continue;
        const auto& efs = mesh.element_faces(t);
        if (efs.size() > limits.max_faces_per_element)
            issue(name + ": too many faces (" + std::to_string(efs.size()) + ")");
        if (efs.size() != loop.size()) {
            issue(name + ": face list does not follow the vertex loop");
            continue;
        }

        Point closure = Point::Zero();
        double perimeter = 0.0;
        for (std::size_t i = 0; i < efs.size(); ++i) {
            const auto& ef = efs[i];
            if (ef.face >= nf) {
                issue(name + ": face index out of range");
                continue;
            }
            ++incidence[ef.face];
            const Face& face = mesh.face(ef.face);
            const std::size_t a = loop[i];
            const std::size_t b = loop[(i + 1) % loop.size()];
            const std::size_t slot = ef.aligned ? 0 : 1;
            if (face.elements[slot] != t)
                issue(name + ": face " + std::to_string(ef.face) + " does not list the element as incident");
            const bool traversal_ok = ef.aligned
                ? (face.vertices[0] == a && face.vertices[1] == b)
                : (face.vertices[0] == b && face.vertices[1] == a);
            if (!traversal_ok)
                issue(name + ": face " + std::to_string(ef.face) + " orientation does not match the vertex loop");
            const Point e = V[b] - V[a];
            // |F| n_TF for a counterclockwise traversal a -> b.
            closure += Point(e.y(), -e.x());
            perimeter += e.norm();
        }
        if (closure.cwiseAbs().maxCoeff() > limits.closure_tolerance * std::max(1.0, perimeter))
            issue(name + ": face normals do not close (sum |F| n_TF != 0)");
    }

    for (std::size_t f = 0; f < nf; ++f) {
        const Face& face = mesh.face(f);
        const int expected = face.elements[0] == no_element ? 0 : (face.is_boundary() ? 1 : 2);
        if (face.elements[0] != no_element && incidence[f] != expected)
            issue("face " + std::to_string(f) + ": referenced by " + std::to_string(incidence[f]) +
                  " elements, expected " + std::to_string(expected));
    }

    // Domain area from the boundary faces (divergence theorem with x).
    double boundary_area = 0.0;
    for (std::size_t f = 0; f < nf; ++f) {
        const Face& face = mesh.face(f);
        if (!face.is_boundary() || face.elements[0] == no_element)
            continue;
        if (face.vertices[0] >= nv || face.vertices[1] >= nv)
            continue;
        const Point& a = V[face.vertices[0]];
        const Point& b = V[face.vertices[1]];
        // Integral of x * n_x over the segment; n_x |F| = (b - a).y
        boundary_area += 0.5 * (a.x() + b.x()) * (b.y() - a.y());
    }
    if (std::abs(element_area_sum - boundary_area) >
        limits.area_tolerance * std::max(std::abs(boundary_area), 1e-300))
        issue("mesh: element areas do not sum to the domain area");

    return report;
}

} // namespace chho
