#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectra_shape/assembly.hpp"
#include "spectra_shape/eigensolve.hpp"
#include "spectra_shape/geometry.hpp"
#include "spectra_shape/special.hpp"

namespace spectra_shape {

// Boundary data of one scalar component at every boundary sample.  Normal
// and tangential quantities use the outer normal nu and the counterclockwise
// tangent tau of the sample; third derivatives are read from the jets.
struct ComponentTrace {
    std::vector<Jet3> jet;           // Taylor data in physical coordinates
    std::vector<double> u;
    std::vector<Vec2> grad;
    std::vector<Mat2> hess;
    std::vector<double> un, unn, unnn;  // d^k u / d nu^k
    std::vector<double> dlap_dn;        // d (Laplacian u) / d nu
    std::vector<double> div_hess_n;     // tangential divergence of (D^2 u) nu
    std::vector<double> dun_ds;         // tangential gradient of du/dnu, along tau
};

struct TraceBundle {
    ProblemKind kind = ProblemKind::P10;
    double gamma = 0.0;
    std::string source;  // "oracle", "fe-annulus" or "fe-patch"
    std::vector<ComponentTrace> comp;
    std::size_t size() const { return comp.empty() ? 0 : comp.front().u.size(); }
};

// Builds the derived quantities from per-component jets at the samples.
TraceBundle make_trace_bundle(ProblemKind kind, double gamma, const BoundaryGeom& boundary,
                              std::vector<std::vector<Jet3>> jets, std::string source);

// Exact traces of a closed-form eigenfunction on the unit disk.
TraceBundle oracle_traces(const DiskEigenpair& pair, ProblemKind kind, const BoundaryGeom& boundary);

enum class TraceMethod { Annulus, Patch };

struct TraceOptions {
    TraceMethod method = TraceMethod::Annulus;
    // Annulus fit: reference radii in [1 - width, 1], Fourier order and
    // radial polynomial degree of the fitted expansion.
    double annulus_width = 0.35;
    int fourier_order = 12;
    int radial_degree = 7;
    // Patch fit: polynomial degree and graph radius around the boundary vertex.
    int patch_degree = 4;
    int patch_rings = 2;
};

// Least-squares trace recovery for FE eigenfunctions on one mesh.  The fit
// matrix depends only on the mesh and boundary, so it is factored once and
// reused for every eigenvector.
class TraceRecovery {
  public:
    TraceRecovery(const ProblemSpec& problem, const FESpace& space, const BoundaryGeom& boundary,
                  TraceOptions options = {});

    // `reduced` is a column of Spectrum::vectors.
    TraceBundle recover(const Eigen::VectorXd& reduced, double gamma) const;
    TraceBundle recover_full(const Eigen::VectorXd& full, double gamma) const;

    const TraceOptions& options() const { return opt_; }

  private:
    struct Patch {
        std::vector<int> elements;
        Vec2 center;
        double scale = 1.0;
        Eigen::MatrixXd pinv;  // coefficients = pinv * samples
        std::vector<std::pair<int, int>> points;  // (element, quadrature index)
    };

    std::vector<Jet3> annulus_component(const Eigen::VectorXd& full, int component) const;
    std::vector<Jet3> patch_component(const Eigen::VectorXd& full, int component) const;
    double sample_value(const Eigen::VectorXd& full, int element, int q, int component) const;

    ProblemSpec problem_;
    const FESpace* space_;
    const BoundaryGeom* boundary_;
    TraceOptions opt_;
    int radial_start_ = 0;  // lowest power of (1 - rho) in the annulus basis
    std::vector<std::vector<double>> basis_values_;  // per quadrature point of the reference rule
    // Annulus fit.
    std::vector<std::pair<int, int>> fit_points_;
    Eigen::MatrixXd fit_matrix_;          // weighted, column-scaled design matrix
    Eigen::VectorXd fit_scale_, fit_weights_;
    Eigen::LLT<Eigen::MatrixXd> fit_llt_;
    std::vector<std::vector<Jet3>> eval_jets_;  // per boundary sample, per basis function
    // Patch fit.
    std::vector<Patch> patches_;
    std::vector<int> sample_patch_;
};

struct MDensity {
    std::vector<double> values;
    std::string variant;
};

// M[u, v] of the problem family at every boundary sample.
MDensity m_density(const ProblemSpec& problem, const TraceBundle& tu, const TraceBundle& tv, double gamma,
                   const BoundaryGeom& boundary);

// Single biharmonic expression valid for P20, N and I.
MDensity m_density_unified_biharmonic(const TraceBundle& tu, const TraceBundle& tv, double gamma);

// zeta . nu at the samples, zeta = psi o phi^{-1}; the samples carry their preimages.
std::vector<double> normal_velocity(const MapExpr& psi, const BoundaryGeom& boundary);

// Differential of Gamma_{F,h} along psi; traces[l] belongs to cluster member l.
double gamma_differential(const ProblemSpec& problem, const ClusterF& cluster, int h, const MapExpr& psi,
                          const std::vector<TraceBundle>& traces, const BoundaryGeom& boundary);

// Matrix (-oint M[u_i, u_j] zeta . nu); its eigenvalues are the branch slopes.
Eigen::MatrixXd nagy_matrix(const ProblemSpec& problem, const ClusterF& cluster, const MapExpr& psi,
                            const std::vector<TraceBundle>& traces, const BoundaryGeom& boundary);

struct Criticality {
    double c_mean = 0.0;
    double rel_deviation = 0.0;
    std::vector<double> density;  // sum over the cluster of M[u_l, u_l]
};

Criticality criticality_residual(const ProblemSpec& problem, const ClusterF& cluster,
                                 const std::vector<TraceBundle>& traces, const BoundaryGeom& boundary);

double binomial_coefficient(int n, int k);

}  // namespace spectra_shape
