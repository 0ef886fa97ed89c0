#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "chho/geometry.hpp"
#include "chho/mesh.hpp"
#include "chho/mesh_io.hpp"
#include "chho/mesh_validation.hpp"
#include "support.hpp"

using namespace chho;
namespace ts = testing_support;

namespace {

bool has_issue(const MeshReport& r, const std::string& needle)
{
    for (const auto& s : r.issues)
        if (s.find(needle) != std::string::npos)
            return true;
    return false;
}

// Closure, normal antisymmetry and area partition on any admissible mesh.
void check_invariants(const Mesh& mesh, double domain_area)
{
    const GeometryCache geo = compute_geometry(mesh);
    double area = 0.0;
    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        const auto& el = geo.element(t);
        Point closure = Point::Zero();
        for (const auto& lf : el.faces)
            closure += geo.face(lf.face).length * lf.normal;
        EXPECT_LT(closure.norm(), 1e-12) << "element " << t;
        EXPECT_GT(el.area, 0.0);
        area += el.area;
    }
    EXPECT_NEAR(area, domain_area, 1e-12 * domain_area);

    for (std::size_t f = 0; f < geo.num_faces(); ++f) {
        const auto& fg = geo.face(f);
        if (fg.is_boundary())
            continue;
        Point n0, n1;
        for (int side = 0; side < 2; ++side)
            for (const auto& lf : geo.element(fg.elements[side]).faces)
                if (lf.face == f)
                    (side == 0 ? n0 : n1) = lf.normal;
        EXPECT_LT((n0 + n1).norm(), 1e-14) << "face " << f;
        EXPECT_LT((n0 - fg.normal).norm(), 1e-14) << "face " << f;
    }
}

} // namespace

TEST(CartesianMesh, SingleCellCounts)
{
    const Mesh m = generate_cartesian_mesh(1, 1);
    EXPECT_EQ(m.num_elements(), 1u);
    EXPECT_EQ(m.num_faces(), 4u);
    EXPECT_EQ(m.num_boundary_faces(), 4u);
}

TEST(CartesianMesh, TwoByTwoCounts)
{
    const Mesh m = generate_cartesian_mesh(2, 2);
    EXPECT_EQ(m.num_elements(), 4u);
    EXPECT_EQ(m.num_faces(), 12u);
    EXPECT_EQ(m.num_interfaces(), 4u);
    EXPECT_TRUE(validate_mesh(m).ok());
}

TEST(CartesianMesh, MeshSizeAtFineResolution)
{
    const GeometryCache geo = compute_geometry(generate_cartesian_mesh(512, 512));
    EXPECT_NEAR(geo.h(), std::sqrt(2.0) / 512, 1e-15);
}

TEST(CartesianMesh, RejectsBadArguments)
{
    EXPECT_THROW(generate_cartesian_mesh(0, 3), std::exception);
    EXPECT_THROW(generate_cartesian_mesh(2, 2, Rectangle{1, 0, 0, 1}), std::exception);
}

TEST(TriangularMesh, SingleSquareSplitsInTwo)
{
    const Mesh m = generate_triangular_mesh(1, 1);
    EXPECT_EQ(m.num_elements(), 2u);
    EXPECT_EQ(m.num_interfaces(), 1u);
    EXPECT_EQ(m.num_faces(), 5u);
    for (std::size_t t = 0; t < 2; ++t)
        EXPECT_EQ(m.element(t).size(), 3u);
}

TEST(TriangularMesh, TwoByTwoCoversUnitSquare)
{
    const Mesh m = generate_triangular_mesh(2, 2);
    EXPECT_EQ(m.num_elements(), 8u);
    const GeometryCache geo = compute_geometry(m);
    EXPECT_NEAR(geo.domain_area(), 1.0, 1e-14);
    EXPECT_NEAR(geo.h(), std::sqrt(2.0) / 2, 1e-15);
}

TEST(Geometry, UnitSquare)
{
    const GeometryCache geo = compute_geometry(ts::unit_square());
    const auto& el = geo.element(0);
    EXPECT_DOUBLE_EQ(el.area, 1.0);
    EXPECT_NEAR(el.centroid.x(), 0.5, 1e-15);
    EXPECT_NEAR(el.centroid.y(), 0.5, 1e-15);
    EXPECT_NEAR(el.diameter, std::sqrt(2.0), 1e-15);
    ASSERT_EQ(el.faces.size(), 4u);
    // Bottom face first, outward normal (0, -1).
    EXPECT_NEAR(el.faces[0].normal.y(), -1.0, 1e-15);
}

TEST(Geometry, UnitTriangle)
{
    const GeometryCache geo = compute_geometry(ts::unit_triangle());
    const auto& el = geo.element(0);
    EXPECT_NEAR(el.area, 0.5, 1e-15);
    EXPECT_NEAR(el.centroid.x(), 1.0 / 3, 1e-15);
    EXPECT_NEAR(el.centroid.y(), 1.0 / 3, 1e-15);
    EXPECT_NEAR(el.diameter, std::sqrt(2.0), 1e-15);
    // Hypotenuse normal is (1, 1)/sqrt(2).
    EXPECT_NEAR(el.faces[1].normal.x(), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(el.faces[1].normal.y(), std::sqrt(0.5), 1e-15);
}

TEST(Geometry, RegularHexagon)
{
    const GeometryCache geo = compute_geometry(ts::hexagon());
    EXPECT_NEAR(geo.element(0).area, 1.5 * std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(geo.element(0).centroid.norm(), 0.0, 1e-15);
    EXPECT_NEAR(geo.element(0).diameter, 2.0, 1e-15);
}

TEST(Geometry, CentroidMatchesMomentOracle)
{
    const std::vector<Point> poly{{0, 0}, {2, 0}, {2.5, 1}, {1, 2}, {-0.5, 1}};
    const GeometryCache geo = compute_geometry(ts::single_polygon(poly));
    const double a = ts::polygon_monomial_integral(poly, 0, 0);
    EXPECT_NEAR(geo.element(0).area, a, 1e-14);
    EXPECT_NEAR(geo.element(0).centroid.x(), ts::polygon_monomial_integral(poly, 1, 0) / a, 1e-14);
    EXPECT_NEAR(geo.element(0).centroid.y(), ts::polygon_monomial_integral(poly, 0, 1) / a, 1e-14);
}

TEST(Invariants, HoldOnGeneratedAndFileMeshes)
{
    check_invariants(generate_cartesian_mesh(5, 3, Rectangle{0, 0, 2, 1}), 2.0);
    check_invariants(generate_triangular_mesh(7, 4), 1.0);
    check_invariants(read_polygonal_mesh(ts::data_path("meshes/voronoi_110.fvca")), 1.0);
    check_invariants(read_polygonal_mesh(ts::data_path("meshes/nonmatching.fvca")), 2.0);
}

TEST(Validation, FlippedElementReportsNegativeArea)
{
    const Mesh m = ts::single_polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
    const MeshReport r = validate_mesh(m);
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(has_issue(r, "negative area")) << r.issues.front();
}

TEST(Validation, NonStarShapedElementIsReported)
{
    // A thin crescent whose centroid lies outside the polygon.
    const Mesh m = ts::single_polygon({{0, 0}, {4, 0}, {4, 4}, {3.9, 4}, {3.9, 0.1}, {0, 0.1}});
    EXPECT_TRUE(has_issue(validate_mesh(m), "star-shaped"));
}

TEST(Validation, DanglingFaceIsNamed)
{
    std::vector<Point> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {2, 2}};
    std::vector<std::array<std::size_t, 2>> faces{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {2, 4}};
    try {
        build_mesh(v, {{0, 1, 2, 3}}, faces);
        FAIL() << "dangling face accepted";
    } catch (const MeshError& e) {
        EXPECT_NE(std::string(e.what()).find("face 4"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("dangling"), std::string::npos) << e.what();
    }
}

TEST(Validation, OverlappingElementsRejected)
{
    std::vector<Point> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    EXPECT_THROW(build_mesh(v, {{0, 1, 2, 3}, {0, 1, 2, 3}}), MeshError);
}

TEST(MeshIo, TwoSquaresFile)
{
    const Mesh m = read_polygonal_mesh(ts::data_path("meshes/two_squares.fvca"));
    EXPECT_EQ(m.num_elements(), 2u);
    EXPECT_EQ(m.num_faces(), 7u);
    EXPECT_EQ(m.num_interfaces(), 1u);
}

TEST(MeshIo, NonmatchingInterfaceLoads)
{
    const Mesh m = read_polygonal_mesh(ts::data_path("meshes/nonmatching.fvca"));
    EXPECT_EQ(m.num_elements(), 3u);
    EXPECT_EQ(m.num_faces(), 10u);
    EXPECT_TRUE(validate_mesh(m).ok());
    // The left square sees the hanging vertex as an extra face.
    std::size_t five = 0;
    for (std::size_t t = 0; t < m.num_elements(); ++t)
        five += m.element(t).size() == 5;
    EXPECT_EQ(five, 1u);
}

TEST(MeshIo, HexagonFixtureArea)
{
    const GeometryCache geo = compute_geometry(read_polygonal_mesh(ts::data_path("meshes/hexagon.fvca")));
    EXPECT_NEAR(geo.domain_area(), 1.5 * std::sqrt(3.0), 1e-12);
}

TEST(MeshIo, VoronoiFixturesAreAdmissible)
{
    const Mesh m = read_polygonal_mesh(ts::data_path("meshes/voronoi_110.fvca"));
    EXPECT_EQ(m.num_elements(), 110u);
    EXPECT_TRUE(validate_mesh(m).ok());
}

TEST(MeshIo, WriteReadIsIdempotent)
{
    const Mesh m = read_polygonal_mesh(ts::data_path("meshes/voronoi_110.fvca"));
    std::stringstream a, b;
    write_polygonal_mesh_stream(m, a);
    const Mesh m2 = read_polygonal_mesh_stream(a, "a");
    write_polygonal_mesh_stream(m2, b);
    std::stringstream a2;
    write_polygonal_mesh_stream(m, a2);
    EXPECT_EQ(a2.str(), b.str());
    ASSERT_EQ(m2.num_vertices(), m.num_vertices());
    for (std::size_t i = 0; i < m.num_vertices(); ++i)
        EXPECT_EQ(m2.vertex(i), m.vertex(i));
    EXPECT_EQ(m2.elements(), m.elements());
}

TEST(MeshIo, ReadsWithoutFaceSection)
{
    std::stringstream s("VERTICES 3\n0 0\n1 0\n0 1\nELEMENTS 1\n3 1 2 3\n");
    const Mesh m = read_polygonal_mesh_stream(s);
    EXPECT_EQ(m.num_faces(), 3u);
}

TEST(MeshIo, ParseErrorsCarryLineNumbers)
{
    std::stringstream bad_index("VERTICES 3\n0 0\n1 0\n0 1\nELEMENTS 1\n3 1 2 7\n");
    try {
        read_polygonal_mesh_stream(bad_index, "bad.fvca");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 6u);
        EXPECT_NE(std::string(e.what()).find("bad.fvca:6"), std::string::npos) << e.what();
    }
    std::stringstream bad_number("VERTICES 2\n0 0\n1 x\n");
    try {
        read_polygonal_mesh_stream(bad_number);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::stringstream truncated("VERTICES 3\n0 0\n1 0\n");
    EXPECT_THROW(read_polygonal_mesh_stream(truncated), ParseError);
}

TEST(MeshIo, FormatDoubleRoundTrips)
{
    for (double x : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, 0.0})
        EXPECT_EQ(std::stod(format_double(x)), x);
    EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(MeshIo, FileHashIsStableAndSensitive)
{
    const auto a = file_hash(ts::data_path("meshes/voronoi_110.fvca"));
    EXPECT_EQ(a, file_hash(ts::data_path("meshes/voronoi_110.fvca")));
    EXPECT_NE(a, file_hash(ts::data_path("meshes/voronoi_256.fvca")));
}
