#include "spectra_shape/fe.hpp"

#include <map>
#include <memory>
#include <mutex>

#include "spectra_shape/error.hpp"
#include "spectra_shape/special.hpp"

namespace spectra_shape {

namespace {

const std::array<Vec2, 3> kVerts = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

}  // namespace

Vec2 edge_point(int e, double s) {
    const auto [a, b] = kLocalEdges[static_cast<std::size_t>(e)];
    return (1.0 - s) * kVerts[a] + s * kVerts[b];
}

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
    if (degree < 1 || degree > 3) reject("fe", "Lagrange degree must be 1, 2 or 3");
    for (const Vec2& v : kVerts) nodes_.push_back(v);
    for (int e = 0; e < 3; ++e)
        for (int m = 1; m < degree; ++m) nodes_.push_back(edge_point(e, static_cast<double>(m) / degree));
    if (degree == 3) nodes_.push_back(Vec2(1.0 / 3.0, 1.0 / 3.0));
    for (int d = 0; d <= degree; ++d)
        for (int j = 0; j <= d; ++j) monomials_.push_back({d - j, j});
    const int n = size();
    Eigen::MatrixXd v(n, n);
    for (int r = 0; r < n; ++r)
        for (int m = 0; m < n; ++m) v(r, m) = ipow(nodes_[r].x(), monomials_[m][0]) * ipow(nodes_[r].y(), monomials_[m][1]);
    coeffs_ = v.inverse();
}

void LagrangeBasis::eval(const Vec2& xi, double* values, std::array<double, 2>* grads,
                         std::array<double, 3>* hessians) const {
    const int n = size();
    double mv[10], mx[10], my[10], mxx[10], mxy[10], myy[10];
    for (int m = 0; m < n; ++m) {
        const int i = monomials_[m][0], j = monomials_[m][1];
        const double x = xi.x(), y = xi.y();
        mv[m] = ipow(x, i) * ipow(y, j);
        mx[m] = i > 0 ? i * ipow(x, i - 1) * ipow(y, j) : 0.0;
        my[m] = j > 0 ? j * ipow(x, i) * ipow(y, j - 1) : 0.0;
        mxx[m] = i > 1 ? i * (i - 1) * ipow(x, i - 2) * ipow(y, j) : 0.0;
        mxy[m] = (i > 0 && j > 0) ? i * j * ipow(x, i - 1) * ipow(y, j - 1) : 0.0;
        myy[m] = j > 1 ? j * (j - 1) * ipow(x, i) * ipow(y, j - 2) : 0.0;
    }
    for (int b = 0; b < n; ++b) {
        double v = 0, gx = 0, gy = 0, hxx = 0, hxy = 0, hyy = 0;
        for (int m = 0; m < n; ++m) {
            const double c = coeffs_(m, b);
            v += c * mv[m];
            gx += c * mx[m];
            gy += c * my[m];
            hxx += c * mxx[m];
            hxy += c * mxy[m];
            hyy += c * myy[m];
        }
        if (values) values[b] = v;
        if (grads) grads[b] = {gx, gy};
        if (hessians) hessians[b] = {hxx, hxy, hyy};
    }
}

const LagrangeBasis& LagrangeBasis::get(int degree) {
    static const LagrangeBasis b1(1), b2(2), b3(3);
    switch (degree) {
        case 1: return b1;
        case 2: return b2;
        case 3: return b3;
        default: reject("fe", "Lagrange degree must be 1, 2 or 3");
    }
}

const QuadratureRule& triangle_rule(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        std::vector<double> x, w;
        gauss_legendre(n, x, w);
        auto rule = std::make_unique<QuadratureRule>();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double u = 0.5 * (x[i] + 1.0), v = 0.5 * (x[j] + 1.0);
                rule->points.emplace_back(u, v * (1.0 - u));
                rule->weights.push_back(0.25 * w[i] * w[j] * (1.0 - u));
            }
        slot = std::move(rule);
    }
    return *slot;
}

const QuadratureRule& interval_rule(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        std::vector<double> x, w;
        gauss_legendre(n, x, w);
        auto rule = std::make_unique<QuadratureRule>();
        for (int i = 0; i < n; ++i) {
            rule->points.emplace_back(0.5 * (x[i] + 1.0), 0.0);
            rule->weights.push_back(0.5 * w[i]);
        }
        slot = std::move(rule);
    }
    return *slot;
}

}  // namespace spectra_shape
