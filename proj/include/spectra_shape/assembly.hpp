#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "spectra_shape/mesh.hpp"

namespace spectra_shape {

enum class ProblemKind { P10, P20, P21, NeumannBiharmonic, Intermediate, Lame, ReissnerMindlin };

struct ProblemSpec {
    ProblemKind kind = ProblemKind::P10;
    double lambda = 1.0;  // Lame / Reissner-Mindlin
    double mu = 1.0;
    double kappa = 5.0 / 6.0;  // shear correction, Reissner-Mindlin only
    double t = 0.3;            // plate thickness, Reissner-Mindlin only

    static ProblemSpec of(ProblemKind kind) {
        ProblemSpec p;
        p.kind = kind;
        return p;
    }

    // Regularity order k of the admissible maps: P_nm -> n, N and I -> 2, L and R -> 1.
    int regularity() const;
    int components() const;
    int degree() const { return fourth_order() ? 3 : 2; }
    bool fourth_order() const;
    // (n, m) of the polyharmonic family, or (0, 0) for other kinds.
    std::pair<int, int> polyharmonic_orders() const;
    // Exponent e with gamma(s Omega) = s^e gamma(Omega); 0 when t breaks scaling.
    int dilation_exponent() const;
    void validate() const;
};

std::string problem_name(ProblemKind kind);
// Accepts p10, p20, p21, neumann-biharmonic (n), intermediate (i), lame (l),
// reissner-mindlin (r).  Polyharmonic requests with n >= 3 are rejected.
ProblemKind parse_problem(const std::string& name);

struct FESpace {
    std::shared_ptr<const MappedMesh> mesh;
    int components = 1;
    int degree = 2;
    std::vector<int> constrained;   // full DOF indices, sorted
    std::vector<int> free_to_full;
    std::vector<int> full_to_free;  // -1 for constrained DOFs
    bool normal_derivative_penalty = false;  // weak clamping (P20, P21)
    double penalty = 0.0;                    // sigma * h_e; 0 for second-order kinds

    int num_full() const { return static_cast<int>(full_to_free.size()); }
    int num_free() const { return static_cast<int>(free_to_full.size()); }
    int dof(int node, int component) const { return node * components + component; }
    Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;
};

struct FormPair {
    Eigen::SparseMatrix<double> A, B;
};

struct AssemblyOptions {
    // Multiplies the interior-penalty parameter.  Defaults to the hidden
    // SPECTRA_SHAPE_PENALTY_SCALE environment override (normally unset = 1).
    double penalty_scale = -1.0;
    int threads = 1;
};

// Penalty sigma * h_e = 20 * degree^2; the assembled form is rejected below it.
double ipg_penalty_threshold(int degree);
double penalty_scale_from_env();

// Unconstrained space (no essential conditions applied yet).
FESpace make_space(const ProblemSpec& problem, std::shared_ptr<const MappedMesh> mesh);
FESpace apply_essential_conditions(const ProblemSpec& problem, FESpace space);

// Forms on all DOFs, before elimination of constrained ones.
FormPair assemble_full(const ProblemSpec& problem, const FESpace& space, const AssemblyOptions& options = {});
FormPair restrict_forms(const FormPair& full, const FESpace& space);

struct Assembled {
    FESpace space;
    FormPair forms;
};
Assembled assemble(const ProblemSpec& problem, std::shared_ptr<const MappedMesh> mesh,
                   const AssemblyOptions& options = {});

// Smallest x^T A x / x^T B x over seeded random and smooth trial vectors.
double stability_margin(const FormPair& forms, unsigned long long seed, int trials = 32);

// Scalar FE field evaluation on an element (full coefficient vector).
double fe_value(const FESpace& space, const Eigen::VectorXd& full, int element, const Vec2& xi, int component = 0);

// ROW COL VALUE lines with 17 significant digits (upper and lower triangle).
void write_matrix(std::ostream& os, const Eigen::SparseMatrix<double>& m);

// Rayleigh quotient R_nm of a fixed polynomial test function on the disk of
// radius s, computed symbolically: the analytic stand-in for n >= 3.
double polyharmonic_rayleigh(int n, int m, double s);

}  // namespace spectra_shape
