#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectra_shape/jet.hpp"

namespace spectra_shape {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using JetPoint = std::array<Jet3, 2>;

namespace detail {

struct MapNode {
    virtual ~MapNode() = default;
    virtual JetPoint eval(const Jet3& x, const Jet3& y) const = 0;
    virtual std::optional<Vec2> exact_inverse(const Vec2&) const { return std::nullopt; }
    virtual std::string describe() const = 0;
};

}  // namespace detail

// Smooth radial cutoff: 0 for r <= inner, 1 for r >= outer, C-infinity between.
template <class T>
T radial_cutoff(const T& r, double inner, double outer) {
    const double t0 = (value_of(r) - inner) / (outer - inner);
    if (t0 <= 0.0) return T(0.0);
    if (t0 >= 1.0) return T(1.0);
    const T t = (r - T(inner)) / (outer - inner);
    const T f = exp(-1.0 / t);
    const T g = exp(-1.0 / (T(1.0) - t));
    return f / (f + g);
}

// A smooth closed-form vector field on the plane.  Instances are immutable
// and cheap to copy (shared node tree).  The same type serves as domain map
// phi and as perturbation field psi.
class MapExpr {
  public:
    MapExpr();  // identity

    static MapExpr identity();
    static MapExpr constant(const Vec2& c);
    static MapExpr linear(const Mat2& m);
    static MapExpr affine(const Mat2& m, const Vec2& offset);
    static MapExpr dilation(double s) { return linear(s * Mat2::Identity()); }
    static MapExpr rotation(double angle);
    // (x, y) -> (a x, b y)
    static MapExpr ellipse(double a, double b);
    // amplitude * chi(r) * cos(p (theta - phase)) * e_r
    static MapExpr radial_bump(int p, double amplitude, double phase = 0.0, double inner = 0.5,
                               double outer = 0.9);
    // chi(r) * sum_m (cos_m cos(m theta) + sin_m sin(m theta)), vector coefficients.
    static MapExpr fourier_field(std::vector<Vec2> cos_coeffs, std::vector<Vec2> sin_coeffs, double inner = 0.5,
                                 double outer = 0.9);

    friend MapExpr operator+(const MapExpr& a, const MapExpr& b);
    friend MapExpr operator*(double s, const MapExpr& a);
    // this o inner
    MapExpr compose(const MapExpr& inner) const;

    JetPoint eval(const Jet3& x, const Jet3& y) const { return node_->eval(x, y); }
    JetPoint eval_at(const Vec2& p) const { return eval(Jet3::variable(p.x(), 0), Jet3::variable(p.y(), 1)); }
    Vec2 operator()(const Vec2& p) const;
    Mat2 jacobian(const Vec2& p) const;

    // Preimage of y.  Uses the closed form when the catalog entry has one,
    // otherwise damped Newton from `guess` to 1e-12.
    Vec2 inverse(const Vec2& y, const Vec2& guess) const;

    std::string describe() const { return node_->describe(); }

  private:
    explicit MapExpr(std::shared_ptr<const detail::MapNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::MapNode> node_;
};

}  // namespace spectra_shape
