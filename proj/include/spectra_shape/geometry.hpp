#pragma once

#include <vector>

#include "spectra_shape/map_expr.hpp"

namespace spectra_shape {

struct BoundarySample {
    double theta = 0.0;   // parameter angle on the reference circle
    Vec2 reference;       // (cos theta, sin theta)
    Vec2 position;        // phi(reference)
    Vec2 tangent;         // unit, counterclockwise
    Vec2 normal;          // unit outer normal
    double curvature = 0.0;  // signed, +1 on the unit circle
    double speed = 0.0;      // ds / dtheta
    double weight = 0.0;     // periodic trapezoid weight in arc length
};

// Sampled boundary of phi(unit disk); samples are images of equispaced
// circle points, so the grid doubles as a spectrally accurate quadrature.
class BoundaryGeom {
  public:
    BoundaryGeom() = default;
    explicit BoundaryGeom(std::vector<BoundarySample> samples) : samples_(std::move(samples)) {}

    std::size_t size() const { return samples_.size(); }
    const BoundarySample& operator[](std::size_t i) const { return samples_[i]; }
    const std::vector<BoundarySample>& samples() const { return samples_; }

    double length() const;
    // Mean of a sampled function with respect to arc length.
    double mean(const std::vector<double>& f) const;
    double integrate(const std::vector<double>& f) const;
    double l2_norm(const std::vector<double>& f) const;
    // Enclosed area by Green's theorem, 1/2 of the integral of x . nu.
    double enclosed_area() const;
    // True when theta is equispaced over a full period.
    bool uniform() const;

  private:
    std::vector<BoundarySample> samples_;
};

// Samples d(phi(disk)) at n_samples equispaced angles theta0 + 2 pi i / n.
// Rejects maps that fold the boundary (non-positive Jacobian, turning number
// other than one, or a self-intersecting boundary polygon).
BoundaryGeom build_boundary(const MapExpr& map, int n_samples, double theta0 = 0.0);

// div f - [(grad f) nu] . nu at every sample; jacobians[i](r, c) = d f_r / d x_c.
std::vector<double> tangential_divergence(const BoundaryGeom& boundary, const std::vector<Vec2>& field,
                                          const std::vector<Mat2>& jacobians);

// grad u - (du/dnu) nu.
std::vector<Vec2> tangential_gradient(const BoundaryGeom& boundary, const std::vector<Vec2>& gradients);

// Laplace-Beltrami operator along the closed curve, by Fourier
// differentiation in the (uniform) parameter.
std::vector<double> tangential_laplacian(const BoundaryGeom& boundary, const std::vector<double>& values);

// Derivative d/dtheta of a periodic function sampled on a uniform grid.
std::vector<double> periodic_derivative(const std::vector<double>& values);

// d/de V[phi + e psi] at e = 0, i.e. the boundary integral of psi . nu.
double volume_derivative(const MapExpr& psi, const BoundaryGeom& boundary);

// zeta = psi o phi^{-1} evaluated at a physical point y.
Vec2 pushforward_field(const MapExpr& psi, const MapExpr& phi, const Vec2& y, const Vec2& guess);

}  // namespace spectra_shape
