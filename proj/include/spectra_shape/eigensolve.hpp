#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spectra_shape/assembly.hpp"

namespace spectra_shape {

struct ClusterF {
    std::vector<int> indices;  // contiguous, 0-based
    double gamma = 0.0;        // mean of the members
    double spread = 0.0;       // max - min inside the cluster
    double gap = 0.0;          // distance to the nearest eigenvalue outside
    bool usable = false;
    std::string reason;        // why the cluster is unusable
    int size() const { return static_cast<int>(indices.size()); }
};

struct Spectrum {
    std::vector<double> values;        // ascending
    Eigen::MatrixXd vectors;           // reduced DOFs, one column per eigenvalue, B-orthonormal
    std::vector<double> residuals;     // ||A u - gamma B u|| / ||B u||
    std::vector<double> floors;        // rounding floor of the same quantity
    Eigen::SparseMatrix<double> B;     // normalization form
    std::string method;                // "dense" or "shift-invert"
    double shift = 0.0;
};

struct EigenOptions {
    double shift = 0.0;          // factorization shift; NaN = choose (negative for kernels)
    int block = 4;
    int dense_threshold = 600;   // dense generalized solver at or below this size
    // Residual target; raised to 8x the rounding floor where double precision
    // cannot reach it (penalized fourth-order forms).
    double tolerance = 1e-7;
    unsigned long long seed = 0; // start block; see seed_from_env()
    int max_restarts = 40;
};

unsigned long long seed_from_env();

// Lowest `count` generalized eigenpairs of A u = gamma B u.
Spectrum solve_lowest(const FormPair& forms, int count, const EigenOptions& options = {});

// Maximal groups with relative spread below tau; each cluster carries its
// outer gap and is flagged unusable when the gap is below 3 tau gamma_F or
// cannot be measured (top of the computed spectrum).
std::vector<ClusterF> detect_clusters(const std::vector<double>& values, double tau = 1e-3);
inline std::vector<ClusterF> detect_clusters(const Spectrum& s, double tau = 1e-3) { return detect_clusters(s.values, tau); }

// Cluster containing the 0-based eigenvalue index j.
const ClusterF& cluster_of(const std::vector<ClusterF>& clusters, int j);

// Elementary symmetric functions Gamma_h, h = 1..|values|.
std::vector<double> symmetric_functions(const std::vector<double>& values);
std::vector<double> symmetric_functions(const ClusterF& cluster, const Spectrum& s);

// Absolute floor under which an eigenvalue is treated as a kernel value.
double kernel_floor(const std::vector<double>& values);

}  // namespace spectra_shape
