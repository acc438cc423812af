#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace spectra_shape {

// Truncated bivariate Taylor series about a point.
//
// A Jet<N> stores the coefficients c_ij = (d^i/dx^i d^j/dy^j f) / (i! j!) of
// all monomials x^i y^j with i + j <= N.  Arithmetic is exact on truncated
// series, so evaluating any expression on Jet inputs yields its derivatives up
// to order N without finite differencing.
template <int N>
class Jet {
  public:
    static constexpr int kOrder = N;
    static constexpr int kSize = (N + 1) * (N + 2) / 2;

    constexpr Jet() : c_{} {}
    constexpr Jet(double value) : c_{} { c_[0] = value; }  // NOLINT: implicit constants are convenient

    static Jet variable(double value, int which) {
        Jet j(value);
        if constexpr (N >= 1) j.c_[which == 0 ? 1 : 2] = 1.0;
        return j;
    }

    static constexpr int index(int i, int j) {
        const int d = i + j;
        return d * (d + 1) / 2 + j;
    }

    double value() const { return c_[0]; }
    double coeff(int i, int j) const { return c_[index(i, j)]; }
    double& coeff(int i, int j) { return c_[index(i, j)]; }

    // Partial derivative d^{i+j} f / dx^i dy^j at the expansion point.
    double derivative(int i, int j) const { return coeff(i, j) * factorial(i) * factorial(j); }

    const std::array<double, kSize>& coefficients() const { return c_; }

    Jet& operator+=(const Jet& o) {
        for (int k = 0; k < kSize; ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator*=(double s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }
    Jet& operator/=(const Jet& o) { return *this = *this / o; }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) {
        for (auto& v : a.c_) v = -v;
        return a;
    }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (int d1 = 0; d1 <= N; ++d1)
            for (int j1 = 0; j1 <= d1; ++j1) {
                const double av = a.c_[index(d1 - j1, j1)];
                if (av == 0.0) continue;
                for (int d2 = 0; d1 + d2 <= N; ++d2)
                    for (int j2 = 0; j2 <= d2; ++j2)
                        r.c_[index(d1 - j1 + d2 - j2, j1 + j2)] += av * b.c_[index(d2 - j2, j2)];
            }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
    friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

    // Nilpotent part (the series with its constant term removed).
    Jet infinitesimal() const {
        Jet r = *this;
        r.c_[0] = 0.0;
        return r;
    }

    // f(*this) given f and its derivatives f^(k)(value()) for k = 0..N.
    Jet lift(const std::array<double, N + 1>& derivs) const {
        const Jet d = infinitesimal();
        Jet r(derivs[0]);
        Jet power(1.0);
        double fact = 1.0;
        for (int k = 1; k <= N; ++k) {
            power = power * d;
            fact *= k;
            r += power * (derivs[k] / fact);
        }
        return r;
    }

    static constexpr double factorial(int n) {
        double f = 1.0;
        for (int k = 2; k <= n; ++k) f *= k;
        return f;
    }

  private:
    std::array<double, kSize> c_;
};

template <int N>
Jet<N> reciprocal(const Jet<N>& x) {
    std::array<double, N + 1> d{};
    const double a = x.value();
    double p = 1.0 / a;
    for (int k = 0; k <= N; ++k) {
        d[k] = p;
        p *= -(k + 1) / a;
    }
    return x.lift(d);
}

template <int N>
Jet<N> sqrt(const Jet<N>& x) {
    std::array<double, N + 1> d{};
    const double a = x.value();
    double coef = 1.0;
    for (int k = 0; k <= N; ++k) {
        d[k] = coef * std::pow(a, 0.5 - k);
        coef *= 0.5 - k;
    }
    return x.lift(d);
}

template <int N>
Jet<N> exp(const Jet<N>& x) {
    std::array<double, N + 1> d{};
    d.fill(std::exp(x.value()));
    return x.lift(d);
}

template <int N>
Jet<N> sin(const Jet<N>& x) {
    std::array<double, N + 1> d{};
    const double s = std::sin(x.value()), c = std::cos(x.value());
    const double cyc[4] = {s, c, -s, -c};
    for (int k = 0; k <= N; ++k) d[k] = cyc[k % 4];
    return x.lift(d);
}

template <int N>
Jet<N> cos(const Jet<N>& x) {
    std::array<double, N + 1> d{};
    const double s = std::sin(x.value()), c = std::cos(x.value());
    const double cyc[4] = {c, -s, -c, s};
    for (int k = 0; k <= N; ++k) d[k] = cyc[k % 4];
    return x.lift(d);
}

inline double sqrt(double x) { return std::sqrt(x); }
inline double exp(double x) { return std::exp(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }

template <class T>
inline double value_of(const T& x) {
    if constexpr (std::is_arithmetic_v<T>) return static_cast<double>(x);
    else return x.value();
}

template <int N>
Jet<N> pow_int(const Jet<N>& x, int n) {
    Jet<N> r(1.0);
    for (int k = 0; k < n; ++k) r = r * x;
    return r;
}

// Evaluates the polynomial `outer` (its coefficients read as a polynomial in
// two nilpotent variables) at (a, b).  Both arguments must have zero constant
// term; the result is the Taylor series of the composition.
template <int N>
Jet<N> compose(const Jet<N>& outer, const Jet<N>& a, const Jet<N>& b) {
    std::array<Jet<N>, N + 1> apow, bpow;
    apow[0] = Jet<N>(1.0);
    bpow[0] = Jet<N>(1.0);
    for (int k = 1; k <= N; ++k) {
        apow[k] = apow[k - 1] * a;
        bpow[k] = bpow[k - 1] * b;
    }
    Jet<N> r;
    for (int d = 0; d <= N; ++d)
        for (int j = 0; j <= d; ++j) {
            const double c = outer.coeff(d - j, j);
            if (c != 0.0) r += apow[d - j] * bpow[j] * c;
        }
    return r;
}

// Local inverse of the map (fx, fy): returns jets (gx, gy) in the target
// variables, expanded about (fx.value(), fy.value()), with f(g(y)) = y to
// order N.  The result's constant terms are the source point (x0, y0).
template <int N>
std::array<Jet<N>, 2> invert(const Jet<N>& fx, const Jet<N>& fy, double x0, double y0) {
    const double a = fx.coeff(1, 0), b = fx.coeff(0, 1);
    const double c = fy.coeff(1, 0), d = fy.coeff(0, 1);
    const double det = a * d - b * c;
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    // Nonlinear remainder of f, expressed in source increments.
    Jet<N> nx = fx.infinitesimal(), ny = fy.infinitesimal();
    nx.coeff(1, 0) = 0.0;
    nx.coeff(0, 1) = 0.0;
    ny.coeff(1, 0) = 0.0;
    ny.coeff(0, 1) = 0.0;
    const Jet<N> tx = Jet<N>::variable(0.0, 0), ty = Jet<N>::variable(0.0, 1);
    Jet<N> gx = ia * tx + ib * ty, gy = ic * tx + id * ty;
    for (int it = 1; it < N; ++it) {
        const Jet<N> rx = tx - compose(nx, gx, gy);
        const Jet<N> ry = ty - compose(ny, gx, gy);
        gx = ia * rx + ib * ry;
        gy = ic * rx + id * ry;
    }
    gx += Jet<N>(x0);
    gy += Jet<N>(y0);
    return {gx, gy};
}

using Jet3 = Jet<3>;

}  // namespace spectra_shape
