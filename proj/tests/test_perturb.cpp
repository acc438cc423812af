#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "spectra_shape/error.hpp"
#include "spectra_shape/perturb.hpp"

using namespace spectra_shape;

namespace {

std::vector<double> eval(const std::vector<double>& eps, double (*f)(double)) {
    std::vector<double> g;
    for (double e : eps) g.push_back(f(e));
    return g;
}

const MapExpr kZero = MapExpr::constant(Vec2(0.0, 0.0));

}  // namespace

TEST(FdDerivative, QuadraticIsExact) {
    const auto eps = symmetric_grid(1e-2, false);
    const auto g = eval(eps, [](double e) { return 3.0 + 5.0 * e + 7.0 * e * e; });
    EXPECT_NEAR(fd_derivative(eps, g, 1e-2), 5.0, 1e-9);
    const auto er = symmetric_grid(1e-2, true);
    EXPECT_NEAR(fd_derivative(er, eval(er, [](double e) { return 3.0 + 5.0 * e + 7.0 * e * e; }), 1e-2, true), 5.0, 1e-9);
}

TEST(FdDerivative, RichardsonRemovesSecondOrderError) {
    const auto eps = symmetric_grid(0.1, true);
    const auto g = eval(eps, [](double e) { return e * e * e + e; });
    const double plain = fd_derivative(eps, g, 0.1), rich = fd_derivative(eps, g, 0.1, true);
    EXPECT_NEAR(plain, 1.01, 1e-12);  // 1 + eps0^2
    EXPECT_NEAR(rich, 1.0, 1e-12);
    EXPECT_LT(std::abs(rich - 1.0), std::abs(plain - 1.0));
}

TEST(FdDerivative, RejectsBadGrids) {
    const std::vector<double> eps = {-1e-3, 0.0, 2e-3}, g = {0.0, 0.0, 0.0};
    EXPECT_THROW(fd_derivative(eps, g, 1e-3), Rejection);
    EXPECT_THROW(fd_derivative(eps, g, 2e-3), Rejection);
    EXPECT_THROW(fd_derivative(eps, g, 0.0), Rejection);
    EXPECT_THROW(fd_derivative(eps, {0.0, 0.0}, 1e-3), Rejection);
    // The Richardson half step must be present too.
    const auto plain = symmetric_grid(1e-3, false);
    EXPECT_THROW(fd_derivative(plain, {1.0, 1.0, 1.0}, 1e-3, true), Rejection);
}

TEST(EigenPath, ZeroFieldGivesConstantBranches) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.2, 4);
    const EigenPath p = eigen_path(setup, MapExpr::ellipse(1.1, 0.9), kZero, symmetric_grid(1e-2, false));
    for (int b = 0; b < 4; ++b) {
        const auto v = p.branch(b);
        for (double x : v) EXPECT_EQ(x, v[0]);
    }
    EXPECT_FALSE(p.flagged);
}

TEST(EigenPath, DilationFollowsScalingLaw) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P20), 0.2, 4);
    const std::vector<double> eps = {-0.05, -0.025, 0.0, 0.025, 0.05};
    const EigenPath p = eigen_path(setup, MapExpr::identity(), MapExpr::identity(), eps);
    const int z = p.index_of(0.0);
    for (int b = 0; b < 4; ++b) {
        const auto v = p.branch(b);
        for (std::size_t e = 0; e < eps.size(); ++e)
            EXPECT_NEAR(v[e], v[z] * std::pow(1.0 + eps[e], -4.0), 1e-9 * v[z]) << b << " " << eps[e];
    }
}

TEST(EigenPath, GridOrderDoesNotMatter) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.2, 4);
    const MapExpr phi = MapExpr::ellipse(1.15, 1 / 1.15), psi = MapExpr::radial_bump(2, 1.0, 0.3);
    std::vector<double> eps = symmetric_grid(1e-2, true);
    const EigenPath a = eigen_path(setup, phi, psi, eps);
    std::mt19937 rng(3);
    std::shuffle(eps.begin(), eps.end(), rng);
    const EigenPath b = eigen_path(setup, phi, psi, eps, 2);
    EXPECT_EQ(a.eps, b.eps);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(a.branch(k), b.branch(k));
}

// The three affine kernel modes mix freely; they must be tracked as one space.
TEST(EigenPath, NeumannKernelIsTrackedAsOneSubspace) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::NeumannBiharmonic), 0.1, 6);
    const EigenPath p = eigen_path(setup, MapExpr::identity(), MapExpr::constant({1.0, 0.3}),
                                   {-1e-3, -5e-4, 5e-4, 1e-3});
    EXPECT_FALSE(p.flagged) << p.note;
    for (std::size_t e = 0; e < p.eps.size(); ++e) {
        std::vector<int> row = p.order[e];
        std::sort(row.begin(), row.begin() + 3);
        EXPECT_EQ(row[0], 0);
        EXPECT_EQ(row[2], 2);
    }
}

TEST(EigenPath, CentralDifferenceIsSecondOrder) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.15, 3);
    const MapExpr phi = MapExpr::ellipse(1.15, 1 / 1.15), psi = MapExpr::radial_bump(2, 1.0, 0.3);
    const std::vector<double> eps = {-0.08, -0.04, -0.02, 0.0, 0.02, 0.04, 0.08};
    const EigenPath p = eigen_path(setup, phi, psi, eps);
    const auto g = p.branch(0);
    // Reference from two Richardson levels.
    const double r1 = fd_derivative(eps, g, 0.04, true), r2 = fd_derivative(eps, g, 0.08, true);
    const double ref = (16.0 * r1 - r2) / 15.0;
    const double e1 = std::abs(fd_derivative(eps, g, 0.08) - ref), e2 = std::abs(fd_derivative(eps, g, 0.04) - ref);
    const double order = std::log2(e1 / e2);
    EXPECT_GE(order, 1.7);
    EXPECT_LE(order, 2.3);
}

TEST(NagyCheck, DiskDoubleEigenvalueSplitting) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.1, 6);
    const NagyReport r = nagy_check(setup, MapExpr::identity(), MapExpr::radial_bump(2, 1.0), {1, 2});
    ASSERT_FALSE(r.inconclusive) << r.note;
    ASSERT_EQ(r.predicted.size(), 2u);
    EXPECT_NEAR(r.predicted[0], -r.predicted[1], 1e-3 * std::abs(r.predicted[1]));
    EXPECT_GT(r.predicted[1], 1.0);
    // Coarse mesh; the acceptance run checks the fine mesh.
    EXPECT_LE(r.max_rel_dev, 5e-2);
}

TEST(NagyCheck, IncompleteClusterIsInconclusive) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.2, 6);
    const NagyReport r = nagy_check(setup, MapExpr::identity(), MapExpr::radial_bump(2, 1.0), {1});
    EXPECT_TRUE(r.inconclusive);
}

TEST(Crossing, ToyPasses) {
    const CrossingReport r = crossing_probe_toy();
    EXPECT_EQ(r.status, "pass");
    EXPECT_NEAR(r.eps_cross, 0.0, 1e-12);
    EXPECT_LE(r.gamma_discrepancy, 1e-10);
    EXPECT_NEAR(r.sorted_jump, 3.0, 1e-9);
}

TEST(Crossing, NoCrossingIsInconclusive) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.2, 4);
    CrossingOptions o;
    o.scan_points = 3;
    const CrossingReport r = crossing_probe(setup, MapExpr::identity(), MapExpr::identity(), 0, o);
    EXPECT_EQ(r.status, "inconclusive");
    EXPECT_THROW(crossing_probe(setup, MapExpr::identity(), MapExpr::identity(), 3, o), Rejection);
}

TEST(Flow, ZeroStepLeavesStateUnchanged) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.2, 3);
    FlowOptions o;
    const FlowState s0 = flow_start(MapExpr::ellipse(1.2, 1 / 1.2), o);
    const FlowState s1 = constrained_gradient_step(s0, setup, o, 0.0);
    EXPECT_EQ(s1.step_count, s0.step_count);
    EXPECT_EQ(s1.cos_coeffs, s0.cos_coeffs);
    EXPECT_EQ(s1.scale, s0.scale);
}

TEST(Flow, DiskIsStationary) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.1, 3);
    FlowOptions o;
    o.steps = 3;
    const FlowState s = run_flow(MapExpr::identity(), setup, o);
    EXPECT_EQ(s.status, "stationary");
    EXPECT_EQ(s.step_count, 0);
    ASSERT_FALSE(s.residual_history.empty());
    EXPECT_LE(s.residual_history[0], 1e-3);
}

TEST(Flow, EllipseDescendsAtFixedVolume) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.15, 3);
    FlowOptions o;
    o.steps = 3;
    o.boundary_samples = 128;
    const FlowState s = run_flow(MapExpr::ellipse(1.2, 1 / 1.2), setup, o);
    ASSERT_GE(s.gamma_history.size(), 2u);
    for (std::size_t i = 1; i < s.gamma_history.size(); ++i) EXPECT_LT(s.gamma_history[i], s.gamma_history[i - 1]);
    for (double v : s.volume_history) EXPECT_NEAR(v, s.volume0, 1e-8 * s.volume0);
    EXPECT_LT(s.residual_history.back(), s.residual_history.front());
}

TEST(Flow, RejectsBadClusters) {
    const SolveSetup setup = make_setup(ProblemSpec::of(ProblemKind::P10), 0.2, 4);
    FlowOptions o;
    o.cluster = {1};  // half of a double eigenvalue on the disk
    const FlowState s0 = flow_start(MapExpr::identity(), o);
    EXPECT_THROW(constrained_gradient_step(s0, setup, o, 1.0), Rejection);
    o.cluster = {0};
    o.h = 2;
    EXPECT_THROW(constrained_gradient_step(flow_start(MapExpr::identity(), o), setup, o, 1.0), Rejection);
}
