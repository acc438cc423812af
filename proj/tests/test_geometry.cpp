#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spectra_shape/error.hpp"
#include "spectra_shape/geometry.hpp"

using namespace spectra_shape;
using std::numbers::pi;

namespace {

std::vector<MapExpr> catalog() {
    Mat2 shear;
    shear << 1.0, 0.25, 0.0, 1.0;
    return {
        MapExpr::identity(),
        MapExpr::dilation(2.0),
        MapExpr::ellipse(1.3, 1.0 / 1.3),
        MapExpr::affine(shear, Vec2(0.2, -0.1)),
        MapExpr::identity() + MapExpr::radial_bump(2, 0.08),
        MapExpr::identity() + MapExpr::radial_bump(3, 0.05, 0.4),
        MapExpr::ellipse(1.15, 1.0 / 1.15) + MapExpr::radial_bump(2, 0.05),
        MapExpr::rotation(0.3).compose(MapExpr::identity() + MapExpr::radial_bump(4, 0.03)),
    };
}

// Shoelace area of a dense boundary polygon; an independent area oracle.
double polygon_area(const MapExpr& map, int n) {
    double a = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t0 = 2 * pi * i / n, t1 = 2 * pi * (i + 1) / n;
        const Vec2 p = map(Vec2(std::cos(t0), std::sin(t0))), q = map(Vec2(std::cos(t1), std::sin(t1)));
        a += p.x() * q.y() - p.y() * q.x();
    }
    return 0.5 * a;
}

}  // namespace

TEST(MapExpr, DerivativesAgreeWithCentralDifferences) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    const double h = 1e-4;
    for (const MapExpr& m : catalog()) {
        for (int trial = 0; trial < 20; ++trial) {
            const Vec2 p(u(rng), u(rng));
            const JetPoint jp = m.eval_at(p);
            for (int c = 0; c < 2; ++c) {
                // First derivatives vs differences of values.
                const double dx = (m(p + Vec2(h, 0))[c] - m(p - Vec2(h, 0))[c]) / (2 * h);
                const double dy = (m(p + Vec2(0, h))[c] - m(p - Vec2(0, h))[c]) / (2 * h);
                EXPECT_NEAR(jp[c].derivative(1, 0), dx, 1e-6 * std::max(1.0, std::abs(dx)));
                EXPECT_NEAR(jp[c].derivative(0, 1), dy, 1e-6 * std::max(1.0, std::abs(dy)));
                // Second and third derivatives vs Richardson-extrapolated
                // differences of the jet's lower orders.
                auto diff = [&](double step, int i, int j) {
                    const JetPoint px = m.eval_at(p + Vec2(step, 0)), mx = m.eval_at(p - Vec2(step, 0));
                    return (px[c].derivative(i, j) - mx[c].derivative(i, j)) / (2 * step);
                };
                for (auto [i, j] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{1, 1}, std::pair{2, 0}, std::pair{0, 2}}) {
                    const double r = (4 * diff(h / 2, i, j) - diff(h, i, j)) / 3;
                    EXPECT_NEAR(jp[c].derivative(i + 1, j), r, 1e-6 * std::max(1.0, std::abs(r)));
                }
            }
        }
    }
}

TEST(MapExpr, NewtonInverseRoundTrips) {
    const MapExpr m = MapExpr::identity() + MapExpr::radial_bump(3, 0.06);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    for (int i = 0; i < 20; ++i) {
        const Vec2 x(u(rng), u(rng));
        const Vec2 back = m.inverse(m(x), x + Vec2(0.01, -0.02));
        EXPECT_LT((back - x).norm(), 1e-11);
    }
    EXPECT_LT((MapExpr::ellipse(2, 1).inverse(Vec2(2, 1), Vec2::Zero()) - Vec2(1, 1)).norm(), 1e-15);
}

TEST(BuildBoundary, UnitCircle) {
    const BoundaryGeom g = build_boundary(MapExpr::identity(), 256);
    ASSERT_EQ(g.size(), 256u);
    for (const auto& s : g.samples()) {
        EXPECT_NEAR(s.curvature, 1.0, 1e-13);
        EXPECT_NEAR(s.normal.x(), std::cos(s.theta), 1e-14);
        EXPECT_NEAR(s.normal.y(), std::sin(s.theta), 1e-14);
        EXPECT_NEAR(s.normal.norm(), 1.0, 1e-14);
    }
    EXPECT_NEAR(g.length(), 2 * pi, 2 * pi * 1e-8);
}

TEST(BuildBoundary, DilationHalvesCurvature) {
    const BoundaryGeom g = build_boundary(MapExpr::dilation(2.0), 64);
    for (const auto& s : g.samples()) EXPECT_NEAR(s.curvature, 0.5, 1e-13);
}

TEST(BuildBoundary, EllipseCurvatureClosedForm) {
    const double a = 2.0, b = 1.0;
    const BoundaryGeom g = build_boundary(MapExpr::ellipse(a, b), 64);
    EXPECT_NEAR(g[0].position.x(), 2.0, 1e-15);
    EXPECT_NEAR(g[0].curvature, a / (b * b), 1e-12);
    for (const auto& s : g.samples()) {
        const double t = s.theta;
        const double k = a * b / std::pow(a * a * std::sin(t) * std::sin(t) + b * b * std::cos(t) * std::cos(t), 1.5);
        EXPECT_NEAR(s.curvature, k, 1e-12);
    }
}

TEST(BuildBoundary, InvariantsOnCatalog) {
    for (const MapExpr& m : catalog()) {
        const BoundaryGeom g = build_boundary(m, 128);
        double turning = 0.0;
        for (const auto& s : g.samples()) {
            EXPECT_NEAR(s.normal.norm(), 1.0, 1e-14);
            turning += s.curvature * s.weight;
        }
        EXPECT_NEAR(turning, 2 * pi, 1e-8);
        EXPECT_NEAR(g.enclosed_area(), polygon_area(m, 20000), 1e-6);
    }
}

TEST(BuildBoundary, RejectsFoldedMapAndTooFewSamples) {
    EXPECT_THROW(build_boundary(MapExpr::identity(), 8), Rejection);
    // A large p = 5 bump folds the boundary.
    EXPECT_THROW(build_boundary(MapExpr::identity() + MapExpr::radial_bump(5, 0.9), 256), Rejection);
    // Reflection: orientation reversing.
    EXPECT_THROW(build_boundary(MapExpr::ellipse(1.0, -1.0), 64), Rejection);
}

TEST(TangentialDivergence, Examples) {
    const BoundaryGeom g = build_boundary(MapExpr::identity(), 64);
    std::vector<Vec2> nu, cst, x;
    std::vector<Mat2> jnu, jzero, jid;
    for (const auto& s : g.samples()) {
        // nu extended as x / |x| has Jacobian (I - nu nu^T) on the circle.
        nu.push_back(s.normal);
        jnu.push_back(Mat2::Identity() - s.normal * s.normal.transpose());
        cst.push_back(Vec2(1.0, 2.0));
        jzero.push_back(Mat2::Zero());
        x.push_back(s.position);
        jid.push_back(Mat2::Identity());
    }
    const auto dn = tangential_divergence(g, nu, jnu);
    const auto dc = tangential_divergence(g, cst, jzero);
    const auto dx = tangential_divergence(g, x, jid);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_NEAR(dn[i], g[i].curvature, 1e-14);
        EXPECT_NEAR(dc[i], 0.0, 1e-15);
        EXPECT_NEAR(dx[i], 1.0, 1e-14);
    }
    EXPECT_THROW(tangential_divergence(g, nu, {}), Rejection);
}

TEST(TangentialLaplacian, CircleHarmonics) {
    const BoundaryGeom g = build_boundary(MapExpr::identity(), 64);
    std::vector<double> u, one(g.size(), 3.0);
    for (const auto& s : g.samples()) u.push_back(std::cos(2 * s.theta));
    const auto lu = tangential_laplacian(g, u);
    const auto lc = tangential_laplacian(g, one);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_NEAR(lu[i], -4.0 * u[i], 1e-11);
        EXPECT_NEAR(lc[i], 0.0, 1e-10);
    }
}

TEST(TangentialLaplacian, RadiusTwoMatchesThetaDifferences) {
    const BoundaryGeom g = build_boundary(MapExpr::dilation(2.0), 96);
    std::vector<double> u;
    for (const auto& s : g.samples()) u.push_back(std::cos(3 * s.theta));
    const auto lu = tangential_laplacian(g, u);
    const double dt = 2 * pi / 96;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = g[i].theta;
        // Ordinary second difference in theta divided by R^2.
        const double fd = (std::cos(3 * (t + 1e-3)) - 2 * std::cos(3 * t) + std::cos(3 * (t - 1e-3))) / 1e-6 / 4.0;
        EXPECT_NEAR(lu[i], fd, 1e-5);
        EXPECT_NEAR(lu[i], -2.25 * u[i], 1e-11);
    }
    (void)dt;
}

TEST(TangentialLaplacian, IntegratesToZero) {
    const BoundaryGeom circle = build_boundary(MapExpr::identity(), 128);
    const BoundaryGeom general = build_boundary(MapExpr::ellipse(1.3, 0.8) + MapExpr::radial_bump(3, 0.04), 128);
    for (const BoundaryGeom* g : {&circle, &general}) {
        std::vector<double> u;
        for (const auto& s : g->samples()) u.push_back(std::exp(std::sin(s.theta)) + s.position.x() * s.position.y());
        const auto lu = tangential_laplacian(*g, u);
        EXPECT_NEAR(g->integrate(lu), 0.0, g == &circle ? 1e-8 : 1e-6);
    }
}

TEST(TangentialLaplacian, RejectsNonUniformSamples) {
    const BoundaryGeom g = build_boundary(MapExpr::identity(), 32);
    auto samples = g.samples();
    samples[3].theta += 1e-3;
    const BoundaryGeom bad(samples);
    EXPECT_THROW(tangential_laplacian(bad, std::vector<double>(32, 0.0)), Rejection);
}

TEST(TangentialOperators, RotationPermutesOutputs) {
    // Rotating the grid by whole samples permutes every operator's output.
    const int n = 64, shift = 5;
    const double rot = 2 * pi * shift / n;
    const BoundaryGeom g0 = build_boundary(MapExpr::identity(), n);
    const BoundaryGeom g1 = build_boundary(MapExpr::identity(), n, rot);
    auto field = [](double t) { return std::cos(3 * t) + 0.5 * std::sin(t); };
    std::vector<double> u0, u1;
    std::vector<Vec2> f0, f1;
    std::vector<Mat2> j0, j1;
    for (int i = 0; i < n; ++i) {
        u0.push_back(field(g0[i].theta));
        u1.push_back(field(g1[i].theta));
        f0.push_back(field(g0[i].theta) * g0[i].normal);
        f1.push_back(field(g1[i].theta) * g1[i].normal);
        j0.push_back(field(g0[i].theta) * (Mat2::Identity() - g0[i].normal * g0[i].normal.transpose()));
        j1.push_back(field(g1[i].theta) * (Mat2::Identity() - g1[i].normal * g1[i].normal.transpose()));
    }
    const auto l0 = tangential_laplacian(g0, u0), l1 = tangential_laplacian(g1, u1);
    const auto d0 = tangential_divergence(g0, f0, j0), d1 = tangential_divergence(g1, f1, j1);
    std::vector<Vec2> gr0, gr1;
    for (int i = 0; i < n; ++i) {
        gr0.push_back(Vec2(u0[i], -u0[i]));
        gr1.push_back(Vec2(u1[i], -u1[i]));
    }
    for (int i = 0; i < n; ++i) {
        EXPECT_NEAR(l1[i], l0[(i + shift) % n], 1e-11);
        EXPECT_NEAR(d1[i], d0[(i + shift) % n], 1e-13);
    }
}

TEST(VolumeDerivative, DiskExamples) {
    const BoundaryGeom g = build_boundary(MapExpr::identity(), 128);
    EXPECT_NEAR(volume_derivative(MapExpr::identity(), g), 2 * pi, 1e-12);
    EXPECT_NEAR(volume_derivative(MapExpr::constant(Vec2(0.3, 1.0)), g), 0.0, 1e-13);
    EXPECT_NEAR(volume_derivative(MapExpr::radial_bump(2, 1.0), g), 0.0, 1e-13);
}

TEST(VolumeDerivative, MatchesFiniteDifferenceOnCatalog) {
    const std::vector<MapExpr> fields = {MapExpr::identity(), MapExpr::radial_bump(0, 1.0),
                                         MapExpr::radial_bump(2, 1.0, 0.3), MapExpr::constant(Vec2(1, 0))};
    const double eps = 1e-5;
    for (const MapExpr& phi : catalog()) {
        const BoundaryGeom g = build_boundary(phi, 256);
        for (const MapExpr& psi : fields) {
            const double vp = build_boundary(phi + eps * psi, 256).enclosed_area();
            const double vm = build_boundary(phi + (-eps) * psi, 256).enclosed_area();
            const double fd = (vp - vm) / (2 * eps);
            const double an = volume_derivative(psi, g);
            EXPECT_NEAR(an, fd, 2e-3 * std::max(1.0, std::abs(an)));
        }
    }
}
