#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spectra_shape/hadamard.hpp"

namespace spectra_shape {

// Everything needed to solve the eigenproblem on phi(disk) for a given phi.
struct SolveSetup {
    ProblemSpec problem;
    std::shared_ptr<const RefMesh> ref;
    int count = 8;
    EigenOptions eig;
    AssemblyOptions assembly;
};

// Default solver options for a problem (negative shift for the Neumann kernel).
EigenOptions default_eigen_options(const ProblemSpec& problem);
SolveSetup make_setup(const ProblemSpec& problem, double h, int count);

struct ShapeSolve {
    ProblemSpec problem;
    std::shared_ptr<const MappedMesh> mesh;
    Assembled assembled;
    Spectrum spectrum;
};

ShapeSolve solve_shape(const SolveSetup& setup, const MapExpr& phi);

// Traces of every member of a cluster at a solved shape.
std::vector<TraceBundle> cluster_traces(const ShapeSolve& solve, const ClusterF& cluster,
                                        const BoundaryGeom& boundary, const TraceOptions& options = {});

struct EigenPath {
    std::vector<double> eps;                // ascending
    std::vector<Spectrum> spectra;
    // order[e][b]: sorted index at eps[e] carried by branch b; branches are
    // labelled by their sorted index at eps[0].
    std::vector<std::vector<int>> order;
    std::vector<double> min_overlap;        // matched overlap against the previous anchor
    bool flagged = false;
    std::string note;

    std::vector<double> branch(int b) const;
    // Labels of the branches occupying the given sorted indices at eps[e].
    std::vector<int> branches_at(int e, const std::vector<int>& sorted_indices) const;
    int index_of(double eps_value) const;
};

// Spectra of phi + eps psi over the grid with branches matched by maximal
// B-overlap.  Exactly degenerate points are skipped as matching anchors.
EigenPath eigen_path(const SolveSetup& setup, const MapExpr& phi, const MapExpr& psi, std::vector<double> eps,
                     int threads = 1);

// Central difference (g(e0) - g(-e0)) / (2 e0); with `richardson` the
// e0 / 2 pair is combined as (4 D(e0/2) - D(e0)) / 3.
double fd_derivative(const std::vector<double>& eps, const std::vector<double>& g, double eps0,
                     bool richardson = false);

// Symmetric grid {-e0, -e0/2, 0, e0/2, e0} (or {-e0, 0, e0}).
std::vector<double> symmetric_grid(double eps0, bool richardson);

struct NagyReport {
    std::vector<double> predicted;  // sorted eigenvalues of the splitting matrix
    std::vector<double> fd;         // sorted FD branch slopes
    double max_rel_dev = 0.0;
    bool inconclusive = false;
    std::string note;
};

NagyReport nagy_check(const SolveSetup& setup, const MapExpr& phi, const MapExpr& psi,
                      const std::vector<int>& cluster_indices, double eps0 = 1e-3, bool richardson = true,
                      int threads = 1, int boundary_samples = 256);

struct CrossingReport {
    std::string status;  // pass, fail, inconclusive
    double eps_cross = 0.0;
    double gamma_left = 0.0, gamma_right = 0.0;    // one-sided slopes of Gamma_{F,1}
    double sorted_left = 0.0, sorted_right = 0.0;  // one-sided slopes of the lower sorted eigenvalue
    double gamma_discrepancy = 0.0;                // |left - right| / max(|left|, |right|)
    double sorted_jump = 0.0;                      // |left - right| of the sorted eigenvalue
    std::string note;
};

struct CrossingOptions {
    double lo = -0.02, hi = 0.03;  // window in eps
    int scan_points = 6;
    double delta = 1e-3;           // one-sided FD step at the crossing
    double locate_tol = 1e-5;
    double gamma_tol = 0.01;
    double jump_factor = 10.0;
};

// Sorted eigenvalues j and j + 1 of phi + eps psi: finds a crossing of their
// branches in the window and compares one-sided slopes there.
CrossingReport crossing_probe(const SolveSetup& setup, const MapExpr& phi, const MapExpr& psi, int j,
                              const CrossingOptions& options = {});

// A(eps) = Q^T diag(1 + 2 eps, 1 - eps) Q: closed-form eigenvalues cross at 0.
CrossingReport crossing_probe_toy(double delta = 1e-3);

struct FlowOptions {
    std::vector<int> cluster = {0};
    int h = 1;
    int steps = 30;
    // Largest normal displacement of the first step; later steps scale with
    // the velocity so the flow slows near stationary shapes.
    double step = 0.02;
    double stationary_tol = 1e-3;
    int max_halvings = 20;
    int fourier_modes = 24;
    int boundary_samples = 256;
    double cutoff_inner = 0.5, cutoff_outer = 0.9;
    TraceOptions traces;
};

// phi = scale * (base + field): the field sums every accepted step.
struct FlowState {
    MapExpr base;
    std::vector<Vec2> cos_coeffs, sin_coeffs;
    double cutoff_inner = 0.5, cutoff_outer = 0.9;
    double scale = 1.0;
    double volume0 = 0.0;
    int step_count = 0;
    double velocity_scale = 0.0;  // 1 / sup |v| of the first step
    std::vector<double> gamma_history, volume_history, residual_history, velocity_history;
    std::vector<int> halvings;
    std::string status = "running";
    MapExpr map() const;
};

FlowState flow_start(const MapExpr& phi, const FlowOptions& options);

// One volume-projected descent step with backtracking.
FlowState constrained_gradient_step(const FlowState& state, const SolveSetup& setup, const FlowOptions& options,
                                    double eta);

FlowState run_flow(const MapExpr& phi, const SolveSetup& setup, const FlowOptions& options);

}  // namespace spectra_shape
