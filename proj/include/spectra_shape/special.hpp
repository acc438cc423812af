#pragma once

#include <array>
#include <functional>
#include <vector>

#include "spectra_shape/jet.hpp"

namespace spectra_shape {

enum class BesselKind { J, I };

// Value and first three derivatives of J_p(x) or I_p(x); 0 <= x <= 60, 0 <= p <= 12.
std::array<double, 4> bessel(BesselKind kind, int p, double x);

// Derivatives 0..max_order without range checks on the derivative order.
std::vector<double> bessel_derivatives(BesselKind kind, int p, double x, int max_order);

// Root of f in [a, b] by bisection followed by safeguarded secant, to 1e-13.
double find_root(const std::function<double(double)>& f, double a, double b, double tol = 1e-13);

// Clamped-plate frequency function J_p(k) I_p'(k) - J_p'(k) I_p(k).
double clamped_plate_frequency_function(int p, double k);

enum class DiskKind { P10, P20 };

// Closed-form eigenfunction R(r) cos(p theta) or R(r) sin(p theta) on the
// unit disk, normalized in L2(disk).
struct DiskEigenpair {
    DiskKind kind = DiskKind::P10;
    int p = 0;              // angular order
    int q = 1;              // radial index
    bool sine = false;      // angular factor sin(p theta) instead of cos
    double frequency = 0.0; // kappa_{p,q}
    double eigenvalue = 0.0;
    double norm = 1.0;      // L2 normalization factor
    double i_ratio = 0.0;   // P20: R = J_p(k r) - i_ratio I_p(k r)

    // Radial profile and derivatives d^k R / dr^k, k = 0..max_order.
    std::vector<double> radial(double r, int max_order = 3) const;

    template <int N>
    Jet<N> evaluate(const Jet<N>& x, const Jet<N>& y) const;
};

// Lowest `count` eigenpairs, ascending, each p >= 1 level emitted as a cos/sin pair.
std::vector<DiskEigenpair> disk_eigenpairs(DiskKind kind, int count);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

template <int N>
Jet<N> DiskEigenpair::evaluate(const Jet<N>& x, const Jet<N>& y) const {
    const Jet<N> r = sqrt(x * x + y * y);
    const std::vector<double> rd = radial(r.value(), N);
    std::array<double, N + 1> d{};
    for (int k = 0; k <= N; ++k) d[k] = rd[static_cast<std::size_t>(k)];
    const Jet<N> radial_part = r.lift(d);
    const Jet<N> c = x / r, s = y / r;
    Jet<N> cm(1.0), sm(0.0);
    for (int m = 1; m <= p; ++m) {
        const Jet<N> nc = cm * c - sm * s;
        sm = sm * c + cm * s;
        cm = nc;
    }
    return radial_part * (sine ? sm : cm);
}

}  // namespace spectra_shape
