#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spectra_shape/error.hpp"
#include "spectra_shape/special.hpp"

using namespace spectra_shape;
using std::numbers::pi;

namespace {

// Test-side oracle: plain power series for J_p, summed in long double, and
// pure bisection.  Independent of the library's recurrences.
long double series_j(int p, long double x) {
    long double term = 1.0L;
    for (int k = 1; k <= p; ++k) term *= x / (2.0L * k);
    long double sum = term;
    for (int k = 1; k < 300; ++k) {
        term *= -(x * x / 4.0L) / (static_cast<long double>(k) * (k + p));
        sum += term;
        if (std::fabs(term) < 1e-30L) break;
    }
    return sum;
}

double bisect(const std::function<double(double)>& f, double a, double b) {
    double fa = f(a);
    for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
        const double m = 0.5 * (a + b), fm = f(m);
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

double pde_residual_p10(const DiskEigenpair& e, double x, double y) {
    using J = Jet<2>;
    const J u = e.evaluate(J::variable(x, 0), J::variable(y, 1));
    return u.derivative(2, 0) + u.derivative(0, 2) + e.eigenvalue * u.value();
}

}  // namespace

TEST(Bessel, ValuesAtZero) {
    const auto j0 = bessel(BesselKind::J, 0, 0.0);
    EXPECT_EQ(j0[0], 1.0);
    EXPECT_EQ(j0[1], 0.0);
    EXPECT_NEAR(j0[2], -0.5, 1e-16);
    const auto i0 = bessel(BesselKind::I, 0, 0.0);
    EXPECT_EQ(i0[0], 1.0);
    EXPECT_NEAR(i0[2], 0.5, 1e-16);
    EXPECT_EQ(bessel(BesselKind::J, 3, 0.0)[0], 0.0);
}

TEST(Bessel, AgreesWithStandardLibrary) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 60.0);
    for (int t = 0; t < 300; ++t) {
        const double x = u(rng);
        for (int p = 0; p <= 12; ++p) {
            const double ref = std::cyl_bessel_j(static_cast<double>(p), x);
            const double got = bessel(BesselKind::J, p, x)[0];
            // J has zeros; compare relative to the envelope sqrt(2/(pi x)).
            const double scale = std::max(std::abs(ref), std::min(1.0, std::sqrt(2.0 / (pi * x))));
            EXPECT_NEAR(got, ref, 1e-12 * scale) << "p=" << p << " x=" << x;
            const double iref = std::cyl_bessel_i(static_cast<double>(p), x);
            EXPECT_NEAR(bessel(BesselKind::I, p, x)[0], iref, 1e-12 * iref + 1e-300) << "p=" << p << " x=" << x;
        }
    }
}

TEST(Bessel, DerivativesMatchFiniteDifferences) {
    for (BesselKind k : {BesselKind::J, BesselKind::I})
        for (int p : {0, 1, 4, 12})
            for (double x : {0.7, 3.3, 9.0, 25.0}) {
                const auto v = bessel(k, p, x);
                const double h = 1e-4;
                const auto vp = bessel(k, p, x + h), vm = bessel(k, p, x - h);
                for (int d = 0; d < 3; ++d) {
                    const double fd = (vp[d] - vm[d]) / (2 * h);
                    EXPECT_NEAR(v[d + 1], fd, 1e-6 * std::max(1.0, std::abs(v[0]) + std::abs(v[d + 1])));
                }
            }
}

TEST(Bessel, ThreeTermRecurrence) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.1, 60.0);
    for (int t = 0; t < 200; ++t) {
        const double x = u(rng);
        for (int p = 1; p <= 11; ++p) {
            const double jm = bessel(BesselKind::J, p - 1, x)[0], j = bessel(BesselKind::J, p, x)[0];
            const double jp = bessel(BesselKind::J, p + 1, x)[0];
            EXPECT_LE(std::abs(jm + jp - (2.0 * p / x) * j), 1e-12 * std::max(1.0, std::abs(j)));
            const double im = bessel(BesselKind::I, p - 1, x)[0], i = bessel(BesselKind::I, p, x)[0];
            const double ip = bessel(BesselKind::I, p + 1, x)[0];
            EXPECT_LE(std::abs(im - ip - (2.0 * p / x) * i), 1e-12 * std::max(1.0, i));
        }
    }
}

TEST(Bessel, MatchesLongDoubleSeries) {
    for (int p = 0; p <= 12; ++p)
        for (double x : {0.3, 1.7, 4.2, 5.9, 6.1, 8.5, 11.0}) {
            const double ref = static_cast<double>(series_j(p, x));
            EXPECT_NEAR(bessel(BesselKind::J, p, x)[0], ref, 1e-12 * std::max(1e-3, std::abs(ref)));
        }
}

TEST(Bessel, RejectsOutOfRange) {
    EXPECT_THROW(bessel(BesselKind::J, 13, 1.0), Rejection);
    EXPECT_THROW(bessel(BesselKind::J, -1, 1.0), Rejection);
    EXPECT_THROW(bessel(BesselKind::I, 0, 60.5), Rejection);
    EXPECT_THROW(bessel(BesselKind::I, 0, -0.1), Rejection);
}

TEST(FindRoot, BesselZeros) {
    const auto j0 = [](double x) { return static_cast<double>(series_j(0, x)); };
    const auto j1 = [](double x) { return static_cast<double>(series_j(1, x)); };
    const double j01 = bisect(j0, 2.0, 3.0), j11 = bisect(j1, 3.0, 4.0);
    EXPECT_NEAR(j01, 2.40482555769577, 1e-13);
    EXPECT_NEAR(j11, 3.83170597020751, 1e-13);
    const auto lib_j0 = [](double x) { return bessel(BesselKind::J, 0, x)[0]; };
    const auto lib_j1 = [](double x) { return bessel(BesselKind::J, 1, x)[0]; };
    EXPECT_NEAR(find_root(lib_j0, 2.0, 3.0), j01, 1e-13);
    EXPECT_NEAR(find_root(lib_j1, 3.0, 4.0), j11, 1e-13);
    EXPECT_NEAR(bessel(BesselKind::J, 0, find_root(lib_j0, 2.0, 3.0))[0], 0.0, 1e-13);
}

TEST(FindRoot, ClampedPlateFrequency) {
    const auto f = [](double k) { return clamped_plate_frequency_function(0, k); };
    const double k = find_root(f, 3.0, 3.5);
    // Oracle: bisect the same determinant written with long-double series
    // and J' = -J_1, I' = I_1 for p = 0.
    const auto g = [](double x) {
        long double i0 = 1, i1 = 0, term = 1;
        for (int m = 1; m < 200; ++m) {
            term *= (x * x / 4.0L) / (static_cast<long double>(m) * m);
            i0 += term;
        }
        term = x / 2.0L;
        i1 = term;
        for (int m = 1; m < 200; ++m) {
            term *= (x * x / 4.0L) / (static_cast<long double>(m) * (m + 1));
            i1 += term;
        }
        return static_cast<double>(series_j(0, x) * i1 + series_j(1, x) * i0);
    };
    EXPECT_NEAR(k, bisect(g, 3.0, 3.5), 1e-12);
    EXPECT_NEAR(k, 3.1962, 1e-4);
    EXPECT_NEAR(std::pow(k, 4), 104.36, 0.01);
}

TEST(FindRoot, RejectsMissingSignChange) {
    EXPECT_THROW(find_root([](double x) { return x * x + 1; }, -1, 1), Rejection);
    EXPECT_NEAR(find_root([](double x) { return x * x * x - 2; }, 0, 2), std::cbrt(2.0), 1e-13);
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
    std::vector<double> x, w;
    gauss_legendre(7, x, w);
    for (int d = 0; d <= 13; ++d) {
        double s = 0;
        for (int i = 0; i < 7; ++i) s += w[i] * std::pow(x[i], d);
        EXPECT_NEAR(s, d % 2 ? 0.0 : 2.0 / (d + 1), 1e-14) << d;
    }
}

TEST(DiskEigenpairs, P10FirstFourFromRootOracle) {
    const auto e = disk_eigenpairs(DiskKind::P10, 6);
    const auto jz = [](int p, double a, double b) { return bisect([p](double x) { return (double)series_j(p, x); }, a, b); };
    const double j01 = jz(0, 2, 3), j11 = jz(1, 3, 4), j21 = jz(2, 5, 5.5);
    EXPECT_NEAR(e[0].eigenvalue, j01 * j01, 1e-11);
    EXPECT_NEAR(e[1].eigenvalue, j11 * j11, 1e-11);
    EXPECT_NEAR(e[2].eigenvalue, j11 * j11, 1e-11);
    EXPECT_NEAR(e[3].eigenvalue, j21 * j21, 1e-11);
    EXPECT_FALSE(e[1].sine);
    EXPECT_TRUE(e[2].sine);
    for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LE(e[i - 1].eigenvalue, e[i].eigenvalue);
}

TEST(DiskEigenpairs, P20GroundStateSimple) {
    const auto e = disk_eigenpairs(DiskKind::P20, 4);
    const double k = find_root([](double x) { return clamped_plate_frequency_function(0, x); }, 3.0, 3.5);
    EXPECT_NEAR(e[0].eigenvalue, std::pow(k, 4), 1e-9);
    EXPECT_EQ(e[0].p, 0);
    EXPECT_GT(e[1].eigenvalue, e[0].eigenvalue * 1.5);
}

TEST(DiskEigenpairs, BoundaryConditionsAndPdeResidual) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& e : disk_eigenpairs(DiskKind::P10, 8)) {
        for (double t : {0.0, 0.7, 2.1, 4.0}) {
            EXPECT_LE(std::abs(e.evaluate(Jet<0>(std::cos(t)), Jet<0>(std::sin(t))).value()), 1e-10);
        }
        int tested = 0;
        while (tested < 50) {
            const double x = u(rng), y = u(rng);
            if (x * x + y * y > 0.95 || x * x + y * y < 1e-4) continue;
            ++tested;
            EXPECT_LE(std::abs(pde_residual_p10(e, x, y)), 1e-9 * std::max(1.0, e.eigenvalue));
        }
    }
    for (const auto& e : disk_eigenpairs(DiskKind::P20, 6)) {
        const auto rd = e.radial(1.0, 1);
        EXPECT_LE(std::abs(rd[0]), 1e-10);
        EXPECT_LE(std::abs(rd[1]), 1e-10);
        // Bilaplacian residual via the radial ODE: (J - c I) splits into
        // Helmholtz pieces with eigenvalues +k^2 and -k^2.
        int tested = 0;
        while (tested < 50) {
            const double x = u(rng), y = u(rng);
            if (x * x + y * y > 0.95 || x * x + y * y < 1e-4) continue;
            ++tested;
            const double h = 1e-3;
            auto lap = [&](double px, double py) {
                using J = Jet<2>;
                const J v = e.evaluate(J::variable(px, 0), J::variable(py, 1));
                return v.derivative(2, 0) + v.derivative(0, 2);
            };
            const double bil = (lap(x + h, y) + lap(x - h, y) + lap(x, y + h) + lap(x, y - h) - 4 * lap(x, y)) / (h * h);
            const double val = e.evaluate(Jet<0>(x), Jet<0>(y)).value();
            EXPECT_NEAR(bil, e.eigenvalue * val, 1e-4 * e.eigenvalue);
        }
    }
}

TEST(DiskEigenpairs, GroundStateTracesRadial) {
    const auto e = disk_eigenpairs(DiskKind::P10, 1)[0];
    const DiskEigenpair& g = e;
    std::vector<double> un;
    for (int i = 0; i < 16; ++i) {
        const double t = 2 * pi * i / 16;
        const Jet3 r = Jet3::variable(1.0, 0);
        (void)r;
        const auto d = g.evaluate(Jet<1>::variable(std::cos(t), 0), Jet<1>::variable(std::sin(t), 1));
        un.push_back(d.derivative(1, 0) * std::cos(t) + d.derivative(0, 1) * std::sin(t));
    }
    const double expected = g.norm * g.frequency * bessel(BesselKind::J, 0, g.frequency)[1];
    for (double v : un) EXPECT_NEAR(v, expected, 1e-12);
}

TEST(DiskEigenpairs, Orthonormality) {
    for (DiskKind k : {DiskKind::P10, DiskKind::P20}) {
        const auto e = disk_eigenpairs(k, 8);
        std::vector<double> rx, rw;
        gauss_legendre(60, rx, rw);
        const int nt = 64;
        for (std::size_t a = 0; a < e.size(); ++a)
            for (std::size_t b = a; b < e.size(); ++b) {
                double acc = 0;
                for (std::size_t i = 0; i < rx.size(); ++i) {
                    const double r = 0.5 * (rx[i] + 1);
                    for (int j = 0; j < nt; ++j) {
                        const double t = 2 * pi * j / nt;
                        const double x = r * std::cos(t), y = r * std::sin(t);
                        acc += 0.5 * rw[i] * r * (2 * pi / nt) * e[a].evaluate(Jet<0>(x), Jet<0>(y)).value() *
                               e[b].evaluate(Jet<0>(x), Jet<0>(y)).value();
                    }
                }
                EXPECT_NEAR(acc, a == b ? 1.0 : 0.0, 1e-9) << a << "," << b;
            }
    }
}

TEST(DiskEigenpairs, P20RayleighIdentity) {
    // Integrated D^2u : D^2u equals the eigenvalue.
    const auto e = disk_eigenpairs(DiskKind::P20, 3);
    std::vector<double> rx, rw;
    gauss_legendre(60, rx, rw);
    const int nt = 48;
    for (const auto& ep : e) {
        double acc = 0;
        for (std::size_t i = 0; i < rx.size(); ++i) {
            const double r = 0.5 * (rx[i] + 1);
            for (int j = 0; j < nt; ++j) {
                const double t = 2 * pi * j / nt + 0.1;
                using J = Jet<2>;
                const J v = ep.evaluate(J::variable(r * std::cos(t), 0), J::variable(r * std::sin(t), 1));
                const double hxx = v.derivative(2, 0), hxy = v.derivative(1, 1), hyy = v.derivative(0, 2);
                acc += 0.5 * rw[i] * r * (2 * pi / nt) * (hxx * hxx + 2 * hxy * hxy + hyy * hyy);
            }
        }
        EXPECT_NEAR(acc, ep.eigenvalue, 1e-8 * ep.eigenvalue);
    }
}
