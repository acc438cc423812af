#include "spectra_shape/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

constexpr int kMaxInternalOrder = 20;

// J_0..J_nmax at x by power series (small x) or normalized Miller recurrence.
std::vector<double> bessel_j_table(double x, int nmax) {
    std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    if (x <= 6.0) {
        const double h = 0.5 * x, h2 = h * h;
        double lead = 1.0;  // (x/2)^n / n!
        for (int n = 0; n <= nmax; ++n) {
            if (n > 0) lead *= h / n;
            double term = lead, sum = lead;
            for (int k = 1; k < 200; ++k) {
                term *= -h2 / (static_cast<double>(k) * (k + n));
                sum += term;
                if (std::abs(term) < 1e-18 * std::abs(sum) && k > h) break;
            }
            out[static_cast<std::size_t>(n)] = sum;
        }
        return out;
    }
    const int base = std::max(nmax, static_cast<int>(x));
    int start = base + 20 + static_cast<int>(std::sqrt(40.0 * base));
    start += start % 2;
    double jp1 = 0.0, j = 1e-30, norm = 0.0;
    std::vector<double> tmp(static_cast<std::size_t>(start) + 1, 0.0);
    tmp[static_cast<std::size_t>(start)] = j;
    for (int k = start; k >= 1; --k) {
        const double jm1 = (2.0 * k / x) * j - jp1;
        jp1 = j;
        j = jm1;
        tmp[static_cast<std::size_t>(k - 1)] = j;
        if (std::abs(j) > 1e250) {
            for (int m = k - 1; m <= start; ++m) tmp[static_cast<std::size_t>(m)] *= 1e-250;
            j *= 1e-250;
            jp1 *= 1e-250;
        }
    }
    norm = tmp[0];
    for (int k = 2; k <= start; k += 2) norm += 2.0 * tmp[static_cast<std::size_t>(k)];
    for (int n = 0; n <= nmax; ++n) out[static_cast<std::size_t>(n)] = tmp[static_cast<std::size_t>(n)] / norm;
    return out;
}

// I_0..I_nmax by power series; all terms positive, so no cancellation.
std::vector<double> bessel_i_table(double x, int nmax) {
    std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
    const double h = 0.5 * x, h2 = h * h;
    double lead = 1.0;
    for (int n = 0; n <= nmax; ++n) {
        if (n > 0) lead *= h / n;
        double term = lead, sum = lead;
        for (int k = 1; k < 400; ++k) {
            term *= h2 / (static_cast<double>(k) * (k + n));
            sum += term;
            if (term < 1e-18 * sum && k > h) break;
        }
        out[static_cast<std::size_t>(n)] = sum;
    }
    return out;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::vector<double> bessel_derivatives(BesselKind kind, int p, double x, int max_order) {
    if (p < 0 || p + max_order > kMaxInternalOrder) reject("special", "Bessel order out of supported range");
    if (!(x >= 0.0 && x <= 60.0)) reject("special", "Bessel argument must lie in [0, 60]");
    const int nmax = p + max_order;
    const std::vector<double> tab = kind == BesselKind::J ? bessel_j_table(x, nmax) : bessel_i_table(x, nmax);
    auto at = [&](int n) {
        if (n >= 0) return tab[static_cast<std::size_t>(n)];
        const double v = tab[static_cast<std::size_t>(-n)];
        return (kind == BesselKind::J && (-n) % 2 == 1) ? -v : v;
    };
    std::vector<double> d(static_cast<std::size_t>(max_order) + 1);
    for (int k = 0; k <= max_order; ++k) {
        double acc = 0.0;
        for (int j = 0; j <= k; ++j) {
            const double sign = (kind == BesselKind::J && j % 2 == 1) ? -1.0 : 1.0;
            acc += sign * binomial(k, j) * at(p - k + 2 * j);
        }
        d[static_cast<std::size_t>(k)] = acc / std::ldexp(1.0, k);
    }
    return d;
}

std::array<double, 4> bessel(BesselKind kind, int p, double x) {
    if (p < 0 || p > 12) reject("special", "Bessel order must lie in [0, 12]");
    if (!(x >= 0.0 && x <= 60.0)) reject("special", "Bessel argument must lie in [0, 60]");
    const auto d = bessel_derivatives(kind, p, x, 3);
    return {d[0], d[1], d[2], d[3]};
}

double find_root(const std::function<double(double)>& f, double a, double b, double tol) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) {
        std::ostringstream os;
        os << "no sign change on [" << a << ", " << b << "]";
        reject("special", os.str());
    }
    const double width0 = b - a;
    // Bisection until the bracket is small, then Illinois-safeguarded secant.
    while (b - a > 1e-3 * std::abs(width0) && b - a > tol) {
        const double m = 0.5 * (a + b), fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    int side = 0;
    double c = 0.5 * (a + b);
    for (int it = 0; it < 200 && b - a > tol; ++it) {
        c = b - fb * (b - a) / (fb - fa);
        if (!(c > a && c < b)) c = 0.5 * (a + b);
        const double fc = f(c);
        if (fc == 0.0) return c;
        if ((fc > 0) == (fa > 0)) {
            a = c;
            fa = fc;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = c;
            fb = fc;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
    }
    return c;
}

double clamped_plate_frequency_function(int p, double k) {
    const auto j = bessel_derivatives(BesselKind::J, p, k, 1);
    const auto i = bessel_derivatives(BesselKind::I, p, k, 1);
    return j[0] * i[1] - j[1] * i[0];
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        weights[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

std::vector<double> DiskEigenpair::radial(double r, int max_order) const {
    const double x = frequency * r;
    const auto j = bessel_derivatives(BesselKind::J, p, x, max_order);
    std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
    std::vector<double> i;
    if (kind == DiskKind::P20) i = bessel_derivatives(BesselKind::I, p, x, max_order);
    double kp = 1.0;
    for (int k = 0; k <= max_order; ++k) {
        double v = j[static_cast<std::size_t>(k)];
        if (kind == DiskKind::P20) v -= i_ratio * i[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(k)] = norm * kp * v;
        kp *= frequency;
    }
    return out;
}

std::vector<DiskEigenpair> disk_eigenpairs(DiskKind kind, int count) {
    if (count < 1 || count > 40) reject("special", "disk_eigenpairs supports 1..40 eigenpairs");
    struct Level {
        int p, q;
        double k;
    };
    std::vector<Level> levels;
    const double kmax = 17.5;
    for (int p = 0; p <= 12; ++p) {
        auto f = [&](double k) {
            if (kind == DiskKind::P10) return bessel_derivatives(BesselKind::J, p, k, 0)[0];
            return clamped_plate_frequency_function(p, k);
        };
        int q = 0;
        const double step = 0.05;
        double a = 0.5, fa = f(a);
        for (double b = a + step; b <= kmax; b += step) {
            const double fb = f(b);
            if ((fa > 0) != (fb > 0)) levels.push_back({p, ++q, find_root(f, a, b)});
            a = b;
            fa = fb;
        }
    }
    std::sort(levels.begin(), levels.end(), [](const Level& l, const Level& r) {
        if (l.k != r.k) return l.k < r.k;
        return l.p < r.p;
    });

    std::vector<double> gx, gw;
    gauss_legendre(64, gx, gw);
    std::vector<DiskEigenpair> out;
    for (const Level& lv : levels) {
        for (int s = 0; s < (lv.p == 0 ? 1 : 2); ++s) {
            if (static_cast<int>(out.size()) >= count) break;
            DiskEigenpair e;
            e.kind = kind;
            e.p = lv.p;
            e.q = lv.q;
            e.sine = s == 1;
            e.frequency = lv.k;
            e.eigenvalue = kind == DiskKind::P10 ? lv.k * lv.k : lv.k * lv.k * lv.k * lv.k;
            if (kind == DiskKind::P20) {
                e.i_ratio = bessel_derivatives(BesselKind::J, lv.p, lv.k, 0)[0] /
                            bessel_derivatives(BesselKind::I, lv.p, lv.k, 0)[0];
            }
            e.norm = 1.0;
            double acc = 0.0;
            for (std::size_t g = 0; g < gx.size(); ++g) {
                const double r = 0.5 * (gx[g] + 1.0);
                const double v = e.radial(r, 0)[0];
                acc += 0.5 * gw[g] * v * v * r;
            }
            acc *= lv.p == 0 ? 2.0 * std::numbers::pi : std::numbers::pi;
            e.norm = 1.0 / std::sqrt(acc);
            out.push_back(e);
        }
    }
    if (static_cast<int>(out.size()) < count || out.back().frequency > 16.5)
        reject("special", "requested more disk eigenpairs than the root table covers");
    return out;
}

}  // namespace spectra_shape
