#include "spectra_shape/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

void fix_signs(Eigen::MatrixXd& v) {
    for (int j = 0; j < v.cols(); ++j) {
        Eigen::Index k;
        v.col(j).cwiseAbs().maxCoeff(&k);
        if (v(k, j) < 0) v.col(j) *= -1.0;
    }
}

// eps (|A||u| + |gamma||B||u|) / ||B u||: the residual a rounded vector cannot beat.
double rounding_floor(const SpMat& abs_a, const SpMat& abs_b, const Eigen::VectorXd& u, double gamma,
                      const Eigen::VectorXd& bu) {
    const Eigen::VectorXd au = u.cwiseAbs();
    const double eps = std::numeric_limits<double>::epsilon();
    return eps * ((abs_a * au).norm() + std::abs(gamma) * (abs_b * au).norm()) / bu.norm();
}

void residuals(const FormPair& f, Spectrum& s) {
    const SpMat abs_a = f.A.cwiseAbs(), abs_b = f.B.cwiseAbs();
    s.residuals.resize(s.values.size());
    s.floors.resize(s.values.size());
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        const Eigen::VectorXd u = s.vectors.col(static_cast<Eigen::Index>(j));
        const Eigen::VectorXd bu = f.B * u;
        const Eigen::VectorXd r = f.A * u - s.values[j] * bu;
        s.residuals[j] = r.norm() / bu.norm();
        s.floors[j] = rounding_floor(abs_a, abs_b, u, s.values[j], bu);
    }
}

Spectrum dense_solve(const FormPair& f, int count) {
    const Eigen::MatrixXd a = Eigen::MatrixXd(f.A), b = Eigen::MatrixXd(f.B);
    if (Eigen::LLT<Eigen::MatrixXd>(b).info() != Eigen::Success) reject("eigensolve", "mass form B is not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) reject("eigensolve", "dense generalized eigensolver failed (B not positive definite?)");
    Spectrum s;
    s.method = "dense";
    for (int j = 0; j < count; ++j) s.values.push_back(es.eigenvalues()[j]);
    s.vectors = es.eigenvectors().leftCols(count);
    // Re-normalize in B (the solver already does; this removes drift).
    for (int j = 0; j < count; ++j) s.vectors.col(j) /= std::sqrt(s.vectors.col(j).dot(f.B * s.vectors.col(j)));
    return s;
}

// B-orthogonalize w against the first `k` columns of v (twice), then normalize.
bool b_orthonormalize(const SpMat& b, const Eigen::MatrixXd& v, Eigen::Index k, Eigen::VectorXd& w) {
    Eigen::VectorXd bw = b * w;
    const double n0 = std::sqrt(std::max(0.0, w.dot(bw)));
    for (int pass = 0; pass < 2; ++pass) {
        if (k > 0) {
            const Eigen::VectorXd c = v.leftCols(k).transpose() * bw;
            w -= v.leftCols(k) * c;
        }
        bw = b * w;
    }
    const double n1 = std::sqrt(std::max(0.0, w.dot(bw)));
    if (!(n1 > 1e-14 * n0) || !(n1 > 0.0)) return false;
    w /= n1;
    return true;
}

}  // namespace

unsigned long long seed_from_env() {
    const char* v = std::getenv("SPECTRA_SHAPE_SEED");
    if (!v || !*v) return 0ULL;
    return std::strtoull(v, nullptr, 10);
}

double kernel_floor(const std::vector<double>& values) {
    const double top = values.empty() ? 1.0 : std::abs(values.back());
    return 1e-8 * std::max(1.0, top);
}

Spectrum solve_lowest(const FormPair& forms, int count, const EigenOptions& opt) {
    const int n = static_cast<int>(forms.A.rows());
    if (count < 1 || count > n) reject("eigensolve", "requested eigenvalue count exceeds the DOF count");
    Spectrum out;
    if (n <= opt.dense_threshold) {
        out = dense_solve(forms, count);
    } else {
        double shift = opt.shift;
        if (std::isnan(shift)) shift = 0.0;
        const SpMat k = forms.A - shift * forms.B;
        Eigen::SimplicialLDLT<SpMat> ldlt(k);
        const SpMat abs_a = forms.A.cwiseAbs(), abs_b = forms.B.cwiseAbs();
        if (ldlt.info() != Eigen::Success) reject("eigensolve", "factorization of A - shift B broke down");
        const int block = std::max(1, opt.block);
        const int keep = count + block;
        const int maxdim = std::min(n, 4 * keep);

        std::mt19937_64 rng(opt.seed);
        std::normal_distribution<double> nd;
        Eigen::MatrixXd x(n, keep);
        for (int j = 0; j < keep; ++j)
            for (int i = 0; i < n; ++i) x(i, j) = nd(rng);

        Eigen::VectorXd ritz;
        Eigen::MatrixXd rvec;
        bool converged = false;
        double worst = 0.0;
        for (int restart = 0; restart <= opt.max_restarts && !converged; ++restart) {
            Eigen::MatrixXd v(n, maxdim);
            Eigen::Index dim = 0;
            auto push = [&](Eigen::VectorXd w) {
                if (dim >= maxdim) return;
                if (!b_orthonormalize(forms.B, v, dim, w)) return;
                v.col(dim++) = w;
            };
            for (int j = 0; j < keep; ++j) push(x.col(j));
            if (dim == 0) reject("eigensolve", "mass form B is not positive definite");
            Eigen::Index start = 0;
            while (dim < maxdim) {
                const Eigen::Index end = dim;
                if (end == start) break;
                for (Eigen::Index j = start; j < end && dim < maxdim; ++j) {
                    Eigen::VectorXd w = ldlt.solve(forms.B * v.col(j));
                    push(w);
                }
                start = end;
            }
            const Eigen::MatrixXd vv = v.leftCols(dim);
            const Eigen::MatrixXd av = forms.A * vv;
            Eigen::MatrixXd h = vv.transpose() * av;
            h = 0.5 * (h + h.transpose());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
            ritz = es.eigenvalues().head(std::min<Eigen::Index>(keep, dim));
            rvec = vv * es.eigenvectors().leftCols(ritz.size());
            worst = 0.0;
            converged = true;
            for (int j = 0; j < count; ++j) {
                const Eigen::VectorXd bu = forms.B * rvec.col(j);
                const double r = (forms.A * rvec.col(j) - ritz[j] * bu).norm() / bu.norm();
                const double target = std::max(opt.tolerance, 8.0 * rounding_floor(abs_a, abs_b, rvec.col(j), ritz[j], bu));
                worst = std::max(worst, r / target);
                if (r > target) converged = false;
            }
            x = rvec;
            if (x.cols() < keep) {
                const Eigen::Index have = x.cols();
                x.conservativeResize(n, keep);
                for (Eigen::Index j = have; j < keep; ++j)
                    for (int i = 0; i < n; ++i) x(i, j) = nd(rng);
            }
        }
        if (!converged) {
            std::ostringstream os;
            os << "shift-invert iteration did not converge: worst residual is " << worst
               << " times its target (max of " << opt.tolerance << " and 8x the rounding floor)";
            reject("eigensolve", os.str());
        }
        out.method = "shift-invert";
        out.shift = shift;
        for (int j = 0; j < count; ++j) out.values.push_back(ritz[j]);
        out.vectors = rvec.leftCols(count);
    }
    fix_signs(out.vectors);
    residuals(forms, out);
    out.B = forms.B;
    return out;
}

std::vector<ClusterF> detect_clusters(const std::vector<double>& values, double tau) {
    std::vector<ClusterF> out;
    if (values.empty()) return out;
    const double zero = kernel_floor(values);
    auto same = [&](double a, double b) {
        if (std::abs(a) <= zero && std::abs(b) <= zero) return true;
        return std::abs(b - a) <= tau * std::max(std::abs(a), std::abs(b));
    };
    ClusterF cur;
    cur.indices.push_back(0);
    for (std::size_t j = 1; j < values.size(); ++j) {
        if (same(values[j - 1], values[j])) {
            cur.indices.push_back(static_cast<int>(j));
        } else {
            out.push_back(cur);
            cur = ClusterF();
            cur.indices.push_back(static_cast<int>(j));
        }
    }
    out.push_back(cur);
    for (std::size_t c = 0; c < out.size(); ++c) {
        ClusterF& cl = out[c];
        double sum = 0.0, lo = 1e300, hi = -1e300;
        for (int i : cl.indices) {
            sum += values[static_cast<std::size_t>(i)];
            lo = std::min(lo, values[static_cast<std::size_t>(i)]);
            hi = std::max(hi, values[static_cast<std::size_t>(i)]);
        }
        cl.gamma = sum / cl.size();
        cl.spread = hi - lo;
        double gap = std::numeric_limits<double>::infinity();
        if (cl.indices.front() > 0) gap = std::min(gap, lo - values[static_cast<std::size_t>(cl.indices.front() - 1)]);
        const bool top = static_cast<std::size_t>(cl.indices.back()) + 1 >= values.size();
        if (!top) gap = std::min(gap, values[static_cast<std::size_t>(cl.indices.back() + 1)] - hi);
        cl.gap = gap;
        const double need = std::abs(cl.gamma) <= zero ? zero : 3.0 * tau * std::abs(cl.gamma);
        if (top) {
            cl.usable = false;
            cl.reason = "no eigenvalue above the cluster: outer gap not measurable";
        } else if (!(gap > need)) {
            cl.usable = false;
            cl.reason = "outer gap below 3 tau gamma_F";
        } else {
            cl.usable = true;
        }
    }
    return out;
}

const ClusterF& cluster_of(const std::vector<ClusterF>& clusters, int j) {
    for (const ClusterF& c : clusters)
        if (std::find(c.indices.begin(), c.indices.end(), j) != c.indices.end()) return c;
    reject("eigensolve", "eigenvalue index outside the computed spectrum");
}

std::vector<double> symmetric_functions(const std::vector<double>& values) {
    // Coefficients of prod_j (1 + gamma_j x).
    std::vector<double> e(values.size() + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t j = 0; j < values.size(); ++j)
        for (std::size_t h = j + 1; h >= 1; --h) e[h] += values[j] * e[h - 1];
    return std::vector<double>(e.begin() + 1, e.end());
}

std::vector<double> symmetric_functions(const ClusterF& cluster, const Spectrum& s) {
    std::vector<double> v;
    for (int i : cluster.indices) v.push_back(s.values[static_cast<std::size_t>(i)]);
    return symmetric_functions(v);
}

}  // namespace spectra_shape
