#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "spectra_shape/error.hpp"
#include "spectra_shape/mesh.hpp"

using namespace spectra_shape;
using std::numbers::pi;

namespace {

std::shared_ptr<const RefMesh> disk(double h) { return std::make_shared<const RefMesh>(build_disk_mesh(h)); }

// Closed-form integral of x^i y^j over the reference triangle: i! j! / (i + j + 2)!
double monomial_integral(int i, int j) {
    return std::tgamma(i + 1) * std::tgamma(j + 1) / std::tgamma(i + j + 3);
}

}  // namespace

TEST(DiskMesh, TopologyAndQuality) {
    for (double h : {0.5, 0.25, 0.1, 0.05}) {
        const RefMesh m = build_disk_mesh(h);
        EXPECT_EQ(m.euler_characteristic(), 1);
        EXPECT_GE(m.min_angle_degrees(), 20.0) << h;
        for (const auto& b : m.boundary_edges) {
            EXPECT_NEAR(m.vertices[b.v0].norm(), 1.0, 1e-12);
            EXPECT_LT(b.theta0, b.theta1);
        }
        for (const auto& e : m.edges) EXPECT_TRUE(e.boundary() || e.t1 >= 0);
        const int n = static_cast<int>(std::floor(1 / h + 0.5));
        EXPECT_EQ(m.vertices.size(), static_cast<std::size_t>(1 + 3 * n * (n + 1)));
        EXPECT_EQ(m.triangles.size(), static_cast<std::size_t>(6 * n * n));
        EXPECT_EQ(m.boundary_edges.size(), static_cast<std::size_t>(6 * n));
    }
}

TEST(DiskMesh, VertexCountMatchesDocumentedDensity) {
    for (double h : {0.25, 0.2, 0.1, 0.07, 0.05, 0.02}) {
        const double expected = kDiskMeshDensity * pi / (h * h);
        const double got = static_cast<double>(build_disk_mesh(h).vertices.size());
        EXPECT_NEAR(got / expected, 1.0, 0.2) << h;
    }
}

TEST(DiskMesh, DeterministicAndRejectsRange) {
    const RefMesh a = build_disk_mesh(0.1), b = build_disk_mesh(0.1);
    ASSERT_EQ(a.vertices.size(), b.vertices.size());
    for (std::size_t i = 0; i < a.vertices.size(); ++i) EXPECT_EQ(a.vertices[i], b.vertices[i]);
    EXPECT_EQ(a.triangles, b.triangles);
    EXPECT_THROW(build_disk_mesh(0.004), Rejection);
    EXPECT_THROW(build_disk_mesh(0.6), Rejection);
}

TEST(DiskMesh, SixfoldRotationMapsMeshOntoItself) {
    const RefMesh m = build_disk_mesh(0.1);
    const double c = std::cos(pi / 3), s = std::sin(pi / 3);
    // Every rotated triangle centroid must coincide with some centroid.
    std::vector<Vec2> cents;
    for (const auto& t : m.triangles) cents.push_back((m.vertices[t[0]] + m.vertices[t[1]] + m.vertices[t[2]]) / 3.0);
    for (const Vec2& p : cents) {
        const Vec2 q(c * p.x() - s * p.y(), s * p.x() + c * p.y());
        double best = 1e9;
        for (const Vec2& r : cents) best = std::min(best, (r - q).norm());
        EXPECT_LT(best, 1e-12);
    }
}

TEST(MappedMesh, AreaOfDiskAndConvergence) {
    for (int k : {2, 3}) {
        const MappedMesh m = map_mesh(disk(0.1), MapExpr::identity(), k);
        EXPECT_NEAR(m.area(), pi, 1e-3 * pi);
    }
    // Polygonal and quadratic isoparametric area errors both drop by >= 3 under h -> h/2.
    const double e1 = std::abs(build_disk_mesh(0.1).polygon_area() - pi);
    const double e2 = std::abs(build_disk_mesh(0.05).polygon_area() - pi);
    EXPECT_GE(e1 / e2, 3.0);
    const double i1 = std::abs(map_mesh(disk(0.2), MapExpr::identity(), 2).area() - pi);
    const double i2 = std::abs(map_mesh(disk(0.1), MapExpr::identity(), 2).area() - pi);
    EXPECT_GE(i1 / i2, 3.0);
}

TEST(MappedMesh, IdentityReproducesReferenceVertices) {
    const auto ref = disk(0.1);
    const MappedMesh m = map_mesh(ref, MapExpr::identity(), 3);
    for (std::size_t v = 0; v < ref->vertices.size(); ++v) EXPECT_EQ(m.node_position(static_cast<int>(v)), ref->vertices[v]);
    for (int n = 0; n < m.num_nodes(); ++n)
        if (m.node_on_boundary(n)) EXPECT_NEAR(m.node_disk(n).norm(), 1.0, 1e-14);
}

TEST(MappedMesh, DilationAndEllipseAreas) {
    const auto ref = disk(0.1);
    EXPECT_NEAR(map_mesh(ref, MapExpr::dilation(2.0), 3).area(), 4 * pi, 4e-3 * pi);
    EXPECT_NEAR(map_mesh(ref, MapExpr::ellipse(1.2, 1 / 1.2), 3).area(), pi, 1e-3 * pi);
    // Dilation acts exactly on the isoparametric geometry.
    const double a1 = map_mesh(ref, MapExpr::identity(), 3).area();
    EXPECT_NEAR(map_mesh(ref, MapExpr::dilation(2.0), 3).area(), 4 * a1, 1e-12);
}

TEST(MappedMesh, RemapSharesConnectivity) {
    const auto ref = disk(0.2);
    const MappedMesh a = map_mesh(ref, MapExpr::identity(), 3);
    const MappedMesh b = a.remap(MapExpr::identity() + 0.01 * MapExpr::radial_bump(2, 1.0));
    ASSERT_EQ(a.num_nodes(), b.num_nodes());
    for (int e = 0; e < a.num_elements(); ++e)
        for (int i = 0; i < a.nodes_per_element(); ++i) EXPECT_EQ(a.element_nodes(e)[i], b.element_nodes(e)[i]);
    EXPECT_EQ(&a.ref(), &b.ref());
}

TEST(MappedMesh, AffineFunctionsInterpolatedExactly) {
    // Element maps interpolate phi at nodes: x is in the isoparametric space.
    const MappedMesh m = map_mesh(disk(0.2), MapExpr::ellipse(1.3, 0.8) + MapExpr::radial_bump(3, 0.05), 3);
    for (int e = 0; e < m.num_elements(); ++e) {
        const ElementPoint p = m.geometry(e, Vec2(0.2, 0.3));
        EXPECT_LT((p.x - m.element_point(e, Vec2(0.2, 0.3))).norm(), 1e-14);
    }
    // Curved boundary edge nodes sit on the mapped boundary.
    for (int n = 0; n < m.num_nodes(); ++n)
        if (m.node_on_boundary(n)) EXPECT_LT((m.node_position(n) - m.map()(m.node_disk(n))).norm(), 1e-15);
}

TEST(MappedMesh, RejectsFoldingMapNamingElement) {
    const auto ref = disk(0.2);
    Mat2 flip;
    flip << 1, 0, 0, -1;
    try {
        map_mesh(ref, MapExpr::linear(flip), 2);
        FAIL() << "expected rejection";
    } catch (const Rejection& r) {
        EXPECT_NE(std::string(r.what()).find("element"), std::string::npos);
    }
}

TEST(Quadrature, TriangleRuleExactness) {
    const QuadratureRule& q = triangle_rule(5);
    for (int d = 0; d <= 8; ++d)
        for (int j = 0; j <= d; ++j) {
            double s = 0;
            for (std::size_t i = 0; i < q.points.size(); ++i)
                s += q.weights[i] * std::pow(q.points[i].x(), d - j) * std::pow(q.points[i].y(), j);
            EXPECT_NEAR(s, monomial_integral(d - j, j), 1e-15) << d - j << "," << j;
        }
}

TEST(Quadrature, StraightElementPolynomialsOnSquarePatch) {
    // Degree <= 2 * FE degree integrated exactly on straight mapped patches.
    const auto sq = std::make_shared<const RefMesh>(build_square_mesh(3, 2.0, Vec2(-1, -1)));
    const MappedMesh m = map_mesh(sq, MapExpr::identity(), 3);
    const QuadratureRule& q = triangle_rule(5);
    double s = 0;
    for (int e = 0; e < m.num_elements(); ++e)
        for (std::size_t i = 0; i < q.points.size(); ++i) {
            const ElementPoint p = m.geometry(e, q.points[i]);
            s += q.weights[i] * p.det * std::pow(p.x.x(), 4) * std::pow(p.x.y(), 2);
        }
    // int_{-1}^{1} x^4 dx * int y^2 dy = (2/5)(2/3)
    EXPECT_NEAR(s, 4.0 / 15.0, 1e-14);
}

TEST(LagrangeBasis, KroneckerAndPartitionOfUnity) {
    for (int k : {1, 2, 3}) {
        const LagrangeBasis& b = LagrangeBasis::get(k);
        std::vector<double> v(b.size());
        for (int i = 0; i < b.size(); ++i) {
            b.eval(b.nodes()[i], v.data());
            for (int j = 0; j < b.size(); ++j) EXPECT_NEAR(v[j], i == j ? 1.0 : 0.0, 1e-13);
        }
        std::vector<std::array<double, 2>> g(b.size());
        b.eval(Vec2(0.21, 0.37), v.data(), g.data());
        double sum = 0, gx = 0;
        for (int i = 0; i < b.size(); ++i) {
            sum += v[i];
            gx += g[i][0];
        }
        EXPECT_NEAR(sum, 1.0, 1e-13);
        EXPECT_NEAR(gx, 0.0, 1e-12);
    }
}

TEST(MeshDump, Format) {
    const MappedMesh m = map_mesh(disk(0.5), MapExpr::dilation(2.0), 2);
    std::ostringstream os;
    write_mesh(os, m);
    std::istringstream is(os.str());
    std::string header, version;
    is >> header >> version;
    EXPECT_EQ(header, "MESH");
    EXPECT_EQ(version, "v1");
    std::size_t nv;
    is >> nv;
    EXPECT_EQ(nv, m.ref().vertices.size());
    double x, y;
    is >> x >> y;
    EXPECT_EQ(x, 0.0);
}
