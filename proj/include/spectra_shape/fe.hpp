#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace spectra_shape {

using Vec2 = Eigen::Vector2d;

// Lagrange basis of degree 1..3 on the reference triangle (0,0), (1,0), (0,1).
// Local node order: vertices, then the interior nodes of edges (0,1), (1,2),
// (2,0) running from the first to the second vertex, then interior nodes.
class LagrangeBasis {
  public:
    explicit LagrangeBasis(int degree);

    int degree() const { return degree_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    const std::vector<Vec2>& nodes() const { return nodes_; }

    // Values, reference gradients (d/dxi, d/deta) and reference Hessians
    // (xx, xy, yy) of every basis function at xi.  Null outputs are skipped.
    void eval(const Vec2& xi, double* values, std::array<double, 2>* grads = nullptr,
              std::array<double, 3>* hessians = nullptr) const;

    // Local node index of the m-th interior node (m = 0..degree-2) of local
    // edge e, counted from the edge's first vertex.
    int edge_node(int e, int m) const { return 3 + e * (degree_ - 1) + m; }

    static const LagrangeBasis& get(int degree);

  private:
    int degree_;
    std::vector<Vec2> nodes_;
    std::vector<std::array<int, 2>> monomials_;
    Eigen::MatrixXd coeffs_;  // coeffs_(m, i): monomial m weight in basis i
};

struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
};

// Collapsed Gauss-Legendre rule on the reference triangle with n x n points;
// exact for total degree 2n - 2.
const QuadratureRule& triangle_rule(int n);

// Gauss-Legendre rule on [0, 1]; points stored in x, y = 0.
const QuadratureRule& interval_rule(int n);

// Local vertex pairs of the reference edges.
constexpr std::array<std::array<int, 2>, 3> kLocalEdges = {{{0, 1}, {1, 2}, {2, 0}}};

// Reference point on local edge e at parameter s in [0, 1].
Vec2 edge_point(int e, double s);

}  // namespace spectra_shape
