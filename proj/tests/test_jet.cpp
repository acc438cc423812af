#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spectra_shape/jet.hpp"

using namespace spectra_shape;

namespace {

// Central differences of order 1..3 for f(x, y) at a point.
template <class F>
double fd(F f, double x, double y, int i, int j, double h = 1e-3) {
    if (i == 0 && j == 0) return f(x, y);
    if (i > 0) {
        return (fd(f, x + h, y, i - 1, j, h) - fd(f, x - h, y, i - 1, j, h)) / (2 * h);
    }
    return (fd(f, x, y + h, i, j - 1, h) - fd(f, x, y - h, i, j - 1, h)) / (2 * h);
}

}  // namespace

TEST(Jet, ProductAndQuotientMatchFiniteDifferences) {
    auto f = [](const Jet3& x, const Jet3& y) { return (x * x * y + sin(x) * exp(y)) / (Jet3(2.0) + cos(x * y)); };
    const double x0 = 0.3, y0 = -0.7;
    const Jet3 r = f(Jet3::variable(x0, 0), Jet3::variable(y0, 1));
    auto fv = [&](double x, double y) { return f(Jet3(x), Jet3(y)).value(); };
    for (int d = 0; d <= 3; ++d)
        for (int j = 0; j <= d; ++j) {
            const double ref = fd(fv, x0, y0, d - j, j);
            EXPECT_NEAR(r.derivative(d - j, j), ref, 1e-5 * std::max(1.0, std::abs(ref))) << d - j << "," << j;
        }
}

TEST(Jet, SqrtLiftAgreesWithClosedForm) {
    const double x0 = 0.6, y0 = 0.8;
    const Jet3 r = sqrt(Jet3::variable(x0, 0) * Jet3::variable(x0, 0) + Jet3::variable(y0, 1) * Jet3::variable(y0, 1));
    EXPECT_NEAR(r.value(), 1.0, 1e-15);
    EXPECT_NEAR(r.derivative(1, 0), x0, 1e-15);
    // d2r/dx2 = y^2 / r^3
    EXPECT_NEAR(r.derivative(2, 0), y0 * y0, 1e-14);
    // d2r/dxdy = -x y / r^3
    EXPECT_NEAR(r.derivative(1, 1), -x0 * y0, 1e-14);
}

TEST(Jet, InverseComposesToIdentity) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int trial = 0; trial < 10; ++trial) {
        const double x0 = u(rng), y0 = u(rng);
        const Jet3 x = Jet3::variable(x0, 0), y = Jet3::variable(y0, 1);
        const Jet3 fx = x + 0.3 * x * y + 0.1 * sin(y);
        const Jet3 fy = y - 0.2 * x * x + 0.05 * exp(x);
        const auto g = invert(fx, fy, x0, y0);
        const Jet3 gx = g[0].infinitesimal(), gy = g[1].infinitesimal();
        const Jet3 bx = compose(fx.infinitesimal(), gx, gy), by = compose(fy.infinitesimal(), gx, gy);
        for (int d = 0; d <= 3; ++d)
            for (int j = 0; j <= d; ++j) {
                EXPECT_NEAR(bx.coeff(d - j, j), (d == 1 && j == 0) ? 1.0 : 0.0, 1e-12);
                EXPECT_NEAR(by.coeff(d - j, j), (d == 1 && j == 1) ? 1.0 : 0.0, 1e-12);
            }
    }
}

TEST(Jet, ComposeMatchesDirectEvaluation) {
    // outer(a, b) = a^2 b + a, with a, b jets in (s, t)
    const Jet3 s = Jet3::variable(0.0, 0), t = Jet3::variable(0.0, 1);
    const Jet3 a = 2.0 * s + t * t, b = s - t;
    Jet3 outer;
    outer.coeff(2, 1) = 1.0;
    outer.coeff(1, 0) = 1.0;
    const Jet3 direct = a * a * b + a;
    const Jet3 via = compose(outer, a, b);
    for (int i = 0; i < Jet3::kSize; ++i) {
        const int d = static_cast<int>((std::sqrt(8.0 * i + 1) - 1) / 2);
        const int j = i - d * (d + 1) / 2;
        EXPECT_NEAR(via.coeff(d - j, j), direct.coeff(d - j, j), 1e-15);
    }
}
