#include "spectra_shape/map_expr.hpp"

#include <cmath>
#include <sstream>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

using detail::MapNode;

struct IdentityNode final : MapNode {
    JetPoint eval(const Jet3& x, const Jet3& y) const override { return {x, y}; }
    std::optional<Vec2> exact_inverse(const Vec2& y) const override { return y; }
    std::string describe() const override { return "identity"; }
};

struct AffineNode final : MapNode {
    Mat2 m;
    Vec2 b;
    AffineNode(const Mat2& m_, const Vec2& b_) : m(m_), b(b_) {}
    JetPoint eval(const Jet3& x, const Jet3& y) const override {
        return {m(0, 0) * x + m(0, 1) * y + Jet3(b(0)), m(1, 0) * x + m(1, 1) * y + Jet3(b(1))};
    }
    std::optional<Vec2> exact_inverse(const Vec2& y) const override {
        if (std::abs(m.determinant()) < 1e-300) return std::nullopt;
        return m.inverse() * (y - b);
    }
    std::string describe() const override {
        std::ostringstream os;
        os.precision(17);
        os << "affine[" << m(0, 0) << "," << m(0, 1) << ";" << m(1, 0) << "," << m(1, 1) << "|" << b(0) << ","
           << b(1) << "]";
        return os.str();
    }
};

// cos(m theta), sin(m theta) for m = 0..count-1 from c = cos theta, s = sin theta.
void angular_harmonics(const Jet3& c, const Jet3& s, int count, std::vector<Jet3>& cm, std::vector<Jet3>& sm) {
    cm.assign(count, Jet3(0.0));
    sm.assign(count, Jet3(0.0));
    if (count == 0) return;
    cm[0] = Jet3(1.0);
    for (int m = 1; m < count; ++m) {
        cm[m] = cm[m - 1] * c - sm[m - 1] * s;
        sm[m] = sm[m - 1] * c + cm[m - 1] * s;
    }
}

struct RadialBumpNode final : MapNode {
    int p;
    double amplitude, phase, inner, outer;
    RadialBumpNode(int p_, double a, double ph, double in, double out)
        : p(p_), amplitude(a), phase(ph), inner(in), outer(out) {}
    JetPoint eval(const Jet3& x, const Jet3& y) const override {
        const Jet3 r2 = x * x + y * y;
        if (std::sqrt(r2.value()) <= inner) return {Jet3(0.0), Jet3(0.0)};
        const Jet3 r = sqrt(r2);
        const Jet3 c = x / r, s = y / r;
        std::vector<Jet3> cm, sm;
        angular_harmonics(c, s, p + 1, cm, sm);
        const Jet3 ang = cm[p] * std::cos(p * phase) + sm[p] * std::sin(p * phase);
        const Jet3 mag = radial_cutoff(r, inner, outer) * ang * amplitude;
        return {mag * c, mag * s};
    }
    std::string describe() const override {
        std::ostringstream os;
        os.precision(17);
        os << "bump[p=" << p << ",amp=" << amplitude << ",phase=" << phase << "]";
        return os.str();
    }
};

struct FourierFieldNode final : MapNode {
    std::vector<Vec2> ca, sa;
    double inner, outer;
    FourierFieldNode(std::vector<Vec2> c, std::vector<Vec2> s, double in, double out)
        : ca(std::move(c)), sa(std::move(s)), inner(in), outer(out) {
        if (sa.size() < ca.size()) sa.resize(ca.size(), Vec2::Zero());
        if (ca.size() < sa.size()) ca.resize(sa.size(), Vec2::Zero());
    }
    JetPoint eval(const Jet3& x, const Jet3& y) const override {
        const Jet3 r2 = x * x + y * y;
        if (std::sqrt(r2.value()) <= inner || ca.empty()) return {Jet3(0.0), Jet3(0.0)};
        const Jet3 r = sqrt(r2);
        const Jet3 c = x / r, s = y / r;
        std::vector<Jet3> cm, sm;
        angular_harmonics(c, s, static_cast<int>(ca.size()), cm, sm);
        Jet3 fx(0.0), fy(0.0);
        for (std::size_t m = 0; m < ca.size(); ++m) {
            fx += cm[m] * ca[m](0) + sm[m] * sa[m](0);
            fy += cm[m] * ca[m](1) + sm[m] * sa[m](1);
        }
        const Jet3 chi = radial_cutoff(r, inner, outer);
        return {chi * fx, chi * fy};
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "fourier[modes=" << ca.size() << "]";
        return os.str();
    }
};

struct SumNode final : MapNode {
    std::shared_ptr<const MapNode> a, b;
    double wa, wb;
    SumNode(std::shared_ptr<const MapNode> a_, double wa_, std::shared_ptr<const MapNode> b_, double wb_)
        : a(std::move(a_)), b(std::move(b_)), wa(wa_), wb(wb_) {}
    JetPoint eval(const Jet3& x, const Jet3& y) const override {
        const JetPoint pa = a->eval(x, y);
        if (!b) return {pa[0] * wa, pa[1] * wa};
        const JetPoint pb = b->eval(x, y);
        return {pa[0] * wa + pb[0] * wb, pa[1] * wa + pb[1] * wb};
    }
    std::string describe() const override {
        std::ostringstream os;
        os.precision(17);
        if (!b) os << wa << "*(" << a->describe() << ")";
        else os << "(" << wa << "*" << a->describe() << " + " << wb << "*" << b->describe() << ")";
        return os.str();
    }
};

struct ComposeNode final : MapNode {
    std::shared_ptr<const MapNode> outer, inner;
    ComposeNode(std::shared_ptr<const MapNode> o, std::shared_ptr<const MapNode> i)
        : outer(std::move(o)), inner(std::move(i)) {}
    JetPoint eval(const Jet3& x, const Jet3& y) const override {
        const JetPoint p = inner->eval(x, y);
        return outer->eval(p[0], p[1]);
    }
    std::optional<Vec2> exact_inverse(const Vec2& y) const override {
        const auto oi = outer->exact_inverse(y);
        if (!oi) return std::nullopt;
        return inner->exact_inverse(*oi);
    }
    std::string describe() const override { return outer->describe() + " o " + inner->describe(); }
};

}  // namespace

MapExpr::MapExpr() : node_(std::make_shared<IdentityNode>()) {}

MapExpr MapExpr::identity() { return MapExpr(); }

MapExpr MapExpr::constant(const Vec2& c) { return MapExpr(std::make_shared<AffineNode>(Mat2::Zero(), c)); }

MapExpr MapExpr::linear(const Mat2& m) { return MapExpr(std::make_shared<AffineNode>(m, Vec2::Zero())); }

MapExpr MapExpr::affine(const Mat2& m, const Vec2& offset) {
    return MapExpr(std::make_shared<AffineNode>(m, offset));
}

MapExpr MapExpr::rotation(double angle) {
    Mat2 r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return linear(r);
}

MapExpr MapExpr::ellipse(double a, double b) {
    Mat2 m = Mat2::Zero();
    m(0, 0) = a;
    m(1, 1) = b;
    return linear(m);
}

MapExpr MapExpr::radial_bump(int p, double amplitude, double phase, double inner, double outer) {
    if (p < 0) reject("map", "bump order must be non-negative");
    if (!(inner >= 0.0 && inner < outer && outer <= 1.0)) reject("map", "bump cutoff radii must satisfy 0 <= inner < outer <= 1");
    return MapExpr(std::make_shared<RadialBumpNode>(p, amplitude, phase, inner, outer));
}

MapExpr MapExpr::fourier_field(std::vector<Vec2> cos_coeffs, std::vector<Vec2> sin_coeffs, double inner,
                               double outer) {
    if (!(inner >= 0.0 && inner < outer && outer <= 1.0)) reject("map", "cutoff radii must satisfy 0 <= inner < outer <= 1");
    return MapExpr(std::make_shared<FourierFieldNode>(std::move(cos_coeffs), std::move(sin_coeffs), inner, outer));
}

MapExpr operator+(const MapExpr& a, const MapExpr& b) {
    return MapExpr(std::make_shared<SumNode>(a.node_, 1.0, b.node_, 1.0));
}

MapExpr operator*(double s, const MapExpr& a) { return MapExpr(std::make_shared<SumNode>(a.node_, s, nullptr, 0.0)); }

MapExpr MapExpr::compose(const MapExpr& inner) const {
    return MapExpr(std::make_shared<ComposeNode>(node_, inner.node_));
}

Vec2 MapExpr::operator()(const Vec2& p) const {
    const JetPoint r = node_->eval(Jet3(p.x()), Jet3(p.y()));
    return {r[0].value(), r[1].value()};
}

Mat2 MapExpr::jacobian(const Vec2& p) const {
    const JetPoint r = eval_at(p);
    Mat2 j;
    j << r[0].coeff(1, 0), r[0].coeff(0, 1), r[1].coeff(1, 0), r[1].coeff(0, 1);
    return j;
}

Vec2 MapExpr::inverse(const Vec2& y, const Vec2& guess) const {
    if (auto e = node_->exact_inverse(y)) return *e;
    Vec2 x = guess;
    Vec2 res = (*this)(x) - y;
    for (int it = 0; it < 100; ++it) {
        if (res.norm() <= 1e-12 * std::max(1.0, y.norm())) return x;
        const Mat2 j = jacobian(x);
        const Vec2 step = j.partialPivLu().solve(res);
        double t = 1.0;
        for (int damp = 0; damp < 30; ++damp) {
            const Vec2 trial = x - t * step;
            const Vec2 r2 = (*this)(trial) - y;
            if (r2.norm() < res.norm() || damp == 29) {
                x = trial;
                res = r2;
                break;
            }
            t *= 0.5;
        }
    }
    if (res.norm() > 1e-10 * std::max(1.0, y.norm())) reject("map", "Newton inversion did not converge");
    return x;
}

}  // namespace spectra_shape
