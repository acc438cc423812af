#include "spectra_shape/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    const double d1 = cross(p2 - p1, q1 - p1), d2 = cross(p2 - p1, q2 - p1);
    const double d3 = cross(q2 - q1, p1 - q1), d4 = cross(q2 - q1, p2 - q1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

}  // namespace

double BoundaryGeom::length() const {
    double l = 0.0;
    for (const auto& s : samples_) l += s.weight;
    return l;
}

double BoundaryGeom::integrate(const std::vector<double>& f) const {
    if (f.size() != samples_.size()) reject("geometry", "sample count mismatch in boundary integral");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += samples_[i].weight * f[i];
    return acc;
}

double BoundaryGeom::mean(const std::vector<double>& f) const { return integrate(f) / length(); }

double BoundaryGeom::l2_norm(const std::vector<double>& f) const {
    std::vector<double> sq(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) sq[i] = f[i] * f[i];
    return std::sqrt(integrate(sq));
}

double BoundaryGeom::enclosed_area() const {
    double acc = 0.0;
    for (const auto& s : samples_) acc += s.weight * s.position.dot(s.normal);
    return 0.5 * acc;
}

bool BoundaryGeom::uniform() const {
    const std::size_t n = samples_.size();
    if (n < 3) return false;
    const double step = kTwoPi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double expected = samples_[0].theta + step * static_cast<double>(i);
        if (std::abs(samples_[i].theta - expected) > 1e-10) return false;
    }
    return true;
}

BoundaryGeom build_boundary(const MapExpr& map, int n_samples, double theta0) {
    if (n_samples < 16) reject("geometry", "build_boundary needs at least 16 samples");
    std::vector<BoundarySample> out(static_cast<std::size_t>(n_samples));
    const double w = kTwoPi / n_samples;
    for (int i = 0; i < n_samples; ++i) {
        BoundarySample& s = out[static_cast<std::size_t>(i)];
        s.theta = theta0 + w * i;
        const Jet3 t = Jet3::variable(s.theta, 0);
        const JetPoint p = map.eval(cos(t), sin(t));
        s.reference = {std::cos(s.theta), std::sin(s.theta)};
        s.position = {p[0].value(), p[1].value()};
        const Vec2 d1(p[0].derivative(1, 0), p[1].derivative(1, 0));
        const Vec2 d2(p[0].derivative(2, 0), p[1].derivative(2, 0));
        s.speed = d1.norm();
        if (!(s.speed > 0.0)) reject("geometry", "degenerate boundary parametrization");
        s.tangent = d1 / s.speed;
        s.normal = {s.tangent.y(), -s.tangent.x()};
        s.curvature = cross(d1, d2) / (s.speed * s.speed * s.speed);
        s.weight = w * s.speed;
        const double det = map.jacobian(s.reference).determinant();
        if (!(det > 0.0)) {
            std::ostringstream os;
            os << "map is not orientation preserving at theta = " << s.theta << " (det = " << det << ")";
            reject("geometry", os.str());
        }
    }
    BoundaryGeom geom(std::move(out));

    double turning = 0.0;
    for (const auto& s : geom.samples()) turning += s.curvature * s.weight;
    if (std::abs(turning - kTwoPi) > 1e-3 * kTwoPi) {
        std::ostringstream os;
        os << "boundary winding check failed: total turning " << turning << " != 2 pi";
        reject("geometry", os.str());
    }
    const auto& ss = geom.samples();
    const std::size_t n = ss.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_cross(ss[i].position, ss[(i + 1) % n].position, ss[j].position, ss[(j + 1) % n].position)) {
                std::ostringstream os;
                os << "boundary self-intersection between samples " << i << " and " << j;
                reject("geometry", os.str());
            }
        }
    return geom;
}

std::vector<double> tangential_divergence(const BoundaryGeom& boundary, const std::vector<Vec2>& field,
                                          const std::vector<Mat2>& jacobians) {
    if (field.size() != boundary.size()) reject("geometry", "field sample count does not match the boundary");
    if (jacobians.size() != boundary.size()) reject("geometry", "tangential divergence needs the full Jacobian at every sample");
    std::vector<double> out(boundary.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Vec2& nu = boundary[i].normal;
        out[i] = jacobians[i].trace() - nu.dot(jacobians[i] * nu);
    }
    return out;
}

std::vector<Vec2> tangential_gradient(const BoundaryGeom& boundary, const std::vector<Vec2>& gradients) {
    if (gradients.size() != boundary.size()) reject("geometry", "gradient sample count does not match the boundary");
    std::vector<Vec2> out(gradients.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Vec2& nu = boundary[i].normal;
        out[i] = gradients[i] - gradients[i].dot(nu) * nu;
    }
    return out;
}

std::vector<double> periodic_derivative(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> ct(n), st(n);
    for (std::size_t k = 0; k < n; ++k) {
        ct[k] = std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n));
        st[k] = std::sin(kTwoPi * static_cast<double>(k) / static_cast<double>(n));
    }
    // Real DFT; the Nyquist mode (even n) carries no derivative.
    const std::size_t kmax = (n - 1) / 2;
    std::vector<double> a(kmax + 1, 0.0), b(kmax + 1, 0.0);
    for (std::size_t k = 1; k <= kmax; ++k) {
        double ak = 0.0, bk = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t idx = (j * k) % n;
            ak += v[j] * ct[idx];
            bk += v[j] * st[idx];
        }
        a[k] = 2.0 * ak / static_cast<double>(n);
        b[k] = 2.0 * bk / static_cast<double>(n);
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 1; k <= kmax; ++k) {
            const std::size_t idx = (j * k) % n;
            acc += static_cast<double>(k) * (b[k] * ct[idx] - a[k] * st[idx]);
        }
        out[j] = acc;
    }
    return out;
}

std::vector<double> tangential_laplacian(const BoundaryGeom& boundary, const std::vector<double>& values) {
    if (values.size() != boundary.size()) reject("geometry", "sample count does not match the boundary");
    if (!boundary.uniform()) reject("geometry", "tangential Laplacian requires samples uniform in the parameter");
    std::vector<double> d = periodic_derivative(values);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] /= boundary[i].speed;
    std::vector<double> dd = periodic_derivative(d);
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] /= boundary[i].speed;
    return dd;
}

double volume_derivative(const MapExpr& psi, const BoundaryGeom& boundary) {
    double acc = 0.0;
    for (const auto& s : boundary.samples()) acc += s.weight * psi(s.reference).dot(s.normal);
    return acc;
}

Vec2 pushforward_field(const MapExpr& psi, const MapExpr& phi, const Vec2& y, const Vec2& guess) {
    return psi(phi.inverse(y, guess));
}

}  // namespace spectra_shape
