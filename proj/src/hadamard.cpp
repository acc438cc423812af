#include "spectra_shape/hadamard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

// Third derivative tensor contracted with a, b, c.
double third(const Jet3& j, const Vec2& a, const Vec2& b, const Vec2& c) {
    double t[2][2][2];
    t[0][0][0] = j.derivative(3, 0);
    t[0][0][1] = t[0][1][0] = t[1][0][0] = j.derivative(2, 1);
    t[0][1][1] = t[1][0][1] = t[1][1][0] = j.derivative(1, 2);
    t[1][1][1] = j.derivative(0, 3);
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) s += t[i][k][l] * a[i] * b[k] * c[l];
    return s;
}

double frobenius(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

void check_pair(const TraceBundle& a, const TraceBundle& b, std::size_t n) {
    if (a.kind != b.kind) reject("hadamard", "trace bundles belong to different problems");
    if (a.size() != b.size() || a.comp.size() != b.comp.size())
        reject("hadamard", "trace bundles have mismatched lengths");
    if (n != 0 && a.size() != n) reject("hadamard", "trace bundle length differs from the boundary sample count");
}

// Reference-disk basis of the annulus fit, in Jet arithmetic so the same
// code yields values at fit points and jets at boundary samples.
template <class T>
void annulus_basis(const T& x, const T& y, int order, int k0, int degree, double width, std::vector<T>& out) {
    out.clear();
    const T r = sqrt(x * x + y * y);
    const T c = x / r, s = y / r;
    const T t = (T(1.0) - r) / width;
    std::vector<T> tp(static_cast<std::size_t>(degree) + 1);
    tp[0] = T(1.0);
    for (int k = 1; k <= degree; ++k) tp[static_cast<std::size_t>(k)] = tp[static_cast<std::size_t>(k - 1)] * t;
    T cm(1.0), sm(0.0);
    for (int p = 0; p <= order; ++p) {
        for (int k = k0; k <= degree; ++k) {
            out.push_back(tp[static_cast<std::size_t>(k)] * cm);
            if (p > 0) out.push_back(tp[static_cast<std::size_t>(k)] * sm);
        }
        const T nc = cm * c - sm * s;
        sm = sm * c + cm * s;
        cm = nc;
    }
}

template <class T>
void monomials(const T& x, const T& y, int degree, std::vector<T>& out) {
    out.clear();
    std::vector<T> xp(static_cast<std::size_t>(degree) + 1), yp(static_cast<std::size_t>(degree) + 1);
    xp[0] = T(1.0);
    yp[0] = T(1.0);
    for (int k = 1; k <= degree; ++k) {
        xp[static_cast<std::size_t>(k)] = xp[static_cast<std::size_t>(k - 1)] * x;
        yp[static_cast<std::size_t>(k)] = yp[static_cast<std::size_t>(k - 1)] * y;
    }
    for (int d = 0; d <= degree; ++d)
        for (int j = 0; j <= d; ++j) out.push_back(xp[static_cast<std::size_t>(d - j)] * yp[static_cast<std::size_t>(j)]);
}

// Lowest power of (1 - rho) compatible with the essential conditions.
int essential_order(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::NeumannBiharmonic: return 0;
        case ProblemKind::P20:
        case ProblemKind::P21: return 2;
        default: return 1;
    }
}

constexpr int kFitRule = 5;

// Least-squares pseudo-inverse P R^{-1} Q1^T of a tall full-rank matrix.
bool pseudo_inverse(const Eigen::MatrixXd& a, Eigen::MatrixXd& out) {
    const Eigen::Index m = a.rows(), n = a.cols();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < n) return false;
    const Eigen::MatrixXd q1 = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv_qt = r.triangularView<Eigen::Upper>().solve(q1.transpose());
    out = qr.colsPermutation() * rinv_qt;
    return true;
}

}  // namespace

double binomial_coefficient(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

TraceBundle make_trace_bundle(ProblemKind kind, double gamma, const BoundaryGeom& boundary,
                              std::vector<std::vector<Jet3>> jets, std::string source) {
    TraceBundle tb;
    tb.kind = kind;
    tb.gamma = gamma;
    tb.source = std::move(source);
    const std::size_t n = boundary.size();
    for (auto& j : jets) {
        if (j.size() != n) reject("hadamard", "jet count does not match the boundary sample count");
        ComponentTrace ct;
        ct.jet = std::move(j);
        ct.u.resize(n);
        ct.grad.resize(n);
        ct.hess.resize(n);
        ct.un.resize(n);
        ct.unn.resize(n);
        ct.unnn.resize(n);
        ct.dlap_dn.resize(n);
        ct.div_hess_n.resize(n);
        ct.dun_ds.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Jet3& q = ct.jet[i];
            const Vec2& nu = boundary[i].normal;
            const Vec2& tau = boundary[i].tangent;
            const double k = boundary[i].curvature;
            ct.u[i] = q.value();
            ct.grad[i] = {q.derivative(1, 0), q.derivative(0, 1)};
            Mat2 h;
            h << q.derivative(2, 0), q.derivative(1, 1), q.derivative(1, 1), q.derivative(0, 2);
            ct.hess[i] = h;
            ct.un[i] = ct.grad[i].dot(nu);
            ct.unn[i] = nu.dot(h * nu);
            ct.unnn[i] = third(q, nu, nu, nu);
            const double ttn = third(q, tau, tau, nu);
            ct.dlap_dn[i] = ct.unnn[i] + ttn;
            ct.div_hess_n[i] = ttn + k * tau.dot(h * tau);
            ct.dun_ds[i] = tau.dot(h * nu) + k * ct.grad[i].dot(tau);
        }
        tb.comp.push_back(std::move(ct));
    }
    return tb;
}

TraceBundle oracle_traces(const DiskEigenpair& pair, ProblemKind kind, const BoundaryGeom& boundary) {
    std::vector<Jet3> j(boundary.size());
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const Vec2& p = boundary[i].position;
        j[i] = pair.evaluate<3>(Jet3::variable(p.x(), 0), Jet3::variable(p.y(), 1));
    }
    return make_trace_bundle(kind, pair.eigenvalue, boundary, {std::move(j)}, "oracle");
}

TraceRecovery::TraceRecovery(const ProblemSpec& problem, const FESpace& space, const BoundaryGeom& boundary,
                             TraceOptions options)
    : problem_(problem), space_(&space), boundary_(&boundary), opt_(options) {
    const MappedMesh& mesh = *space.mesh;
    const RefMesh& ref = mesh.ref();
    const QuadratureRule& rule = triangle_rule(kFitRule);
    const int npe = mesh.nodes_per_element();
    basis_values_.assign(rule.points.size(), std::vector<double>(static_cast<std::size_t>(npe)));
    for (std::size_t q = 0; q < rule.points.size(); ++q) mesh.basis().eval(rule.points[q], basis_values_[q].data());
    radial_start_ = essential_order(problem.kind);

    if (opt_.method == TraceMethod::Annulus) {
        if (!(opt_.annulus_width > 0.0 && opt_.annulus_width < 1.0) || opt_.fourier_order < 0 ||
            opt_.radial_degree < radial_start_ + 3)
            reject("hadamard", "annulus fit needs 0 < width < 1 and a radial degree of at least 3 above the boundary order");
        std::vector<double> rows_w;
        std::vector<std::vector<double>> rows;
        std::vector<double> b;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const auto& tri = ref.triangles[static_cast<std::size_t>(e)];
            const Vec2 c = (ref.vertices[tri[0]] + ref.vertices[tri[1]] + ref.vertices[tri[2]]) / 3.0;
            if (c.norm() < 1.0 - opt_.annulus_width) continue;
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const ElementPoint ep = mesh.geometry(e, rule.points[q]);
                const Vec2 xi = mesh.map().inverse(ep.x, ep.disk);
                annulus_basis(xi.x(), xi.y(), opt_.fourier_order, radial_start_, opt_.radial_degree,
                              opt_.annulus_width, b);
                rows.push_back(b);
                rows_w.push_back(std::sqrt(rule.weights[q] * std::abs(ep.det)));
                fit_points_.emplace_back(e, static_cast<int>(q));
            }
        }
        const Eigen::Index nb = static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size());
        if (static_cast<Eigen::Index>(rows.size()) < 4 * nb)
            reject("hadamard", "annulus fit has too few sample points (mesh too coarse)");
        Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), nb);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (Eigen::Index c = 0; c < nb; ++c) a(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
        // Jacobi-scaled normal equations; the basis is well conditioned on
        // the annulus, so this matches a QR solve to working accuracy.
        fit_scale_ = a.colwise().norm().cwiseInverse().transpose();
        for (Eigen::Index r = 0; r < a.rows(); ++r) a.row(r) *= rows_w[static_cast<std::size_t>(r)];
        fit_matrix_ = a * fit_scale_.asDiagonal();
        fit_llt_.compute(fit_matrix_.transpose() * fit_matrix_);
        if (fit_llt_.info() != Eigen::Success || fit_llt_.matrixLLT().diagonal().minCoeff() < 1e-7)
            reject("hadamard", "annulus fit matrix is rank deficient (mesh too coarse)");
        fit_weights_ = Eigen::Map<const Eigen::VectorXd>(rows_w.data(), static_cast<Eigen::Index>(rows_w.size()));
        eval_jets_.resize(boundary.size());
        std::vector<Jet3> bj;
        for (std::size_t i = 0; i < boundary.size(); ++i) {
            const Vec2& xi = boundary[i].reference;
            const JetPoint f = mesh.map().eval_at(xi);
            const auto g = invert(f[0], f[1], xi.x(), xi.y());
            annulus_basis(g[0], g[1], opt_.fourier_order, radial_start_, opt_.radial_degree, opt_.annulus_width, bj);
            eval_jets_[i] = bj;
        }
        return;
    }

    // Vertex patches: elements touching a vertex within graph distance
    // patch_rings - 1 of the boundary vertex.
    const int nv = static_cast<int>(ref.vertices.size());
    std::vector<std::vector<int>> vert_elems(static_cast<std::size_t>(nv)), vert_adj(static_cast<std::size_t>(nv));
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int v : ref.triangles[static_cast<std::size_t>(e)]) vert_elems[static_cast<std::size_t>(v)].push_back(e);
    for (const MeshEdge& ed : ref.edges) {
        vert_adj[static_cast<std::size_t>(ed.v0)].push_back(ed.v1);
        vert_adj[static_cast<std::size_t>(ed.v1)].push_back(ed.v0);
    }
    std::vector<int> bverts;
    for (int v = 0; v < nv; ++v)
        if (!std::isnan(ref.vertex_theta[static_cast<std::size_t>(v)])) bverts.push_back(v);
    if (bverts.empty()) reject("hadamard", "patch fit needs a mesh with boundary vertices on the circle");
    const int nmono = (opt_.patch_degree + 1) * (opt_.patch_degree + 2) / 2;
    std::vector<double> mono;
    for (int v : bverts) {
        std::set<int> verts = {v}, frontier = {v};
        for (int ring = 1; ring < opt_.patch_rings; ++ring) {
            std::set<int> next;
            for (int f : frontier)
                for (int w : vert_adj[static_cast<std::size_t>(f)])
                    if (!verts.count(w)) next.insert(w);
            verts.insert(next.begin(), next.end());
            frontier = next;
        }
        std::set<int> elems;
        for (int w : verts)
            for (int e : vert_elems[static_cast<std::size_t>(w)]) elems.insert(e);
        Patch p;
        p.elements.assign(elems.begin(), elems.end());
        p.center = mesh.node_position(v);
        p.scale = ref.h > 0.0 ? ref.h : 1.0;
        std::vector<std::vector<double>> rows;
        std::vector<double> rw;
        for (int e : p.elements)
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const ElementPoint ep = mesh.geometry(e, rule.points[q]);
                const Vec2 z = (ep.x - p.center) / p.scale;
                monomials(z.x(), z.y(), opt_.patch_degree, mono);
                rows.push_back(mono);
                rw.push_back(std::sqrt(rule.weights[q] * std::abs(ep.det)) / p.scale);
                p.points.emplace_back(e, static_cast<int>(q));
            }
        if (static_cast<int>(rows.size()) < 2 * nmono) {
            std::ostringstream os;
            os << "patch around boundary vertex " << v << " is too small for a degree-" << opt_.patch_degree
               << " fit (mesh too coarse)";
            reject("hadamard", os.str());
        }
        Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), nmono);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (int c = 0; c < nmono; ++c) a(static_cast<Eigen::Index>(r), c) = rw[r] * rows[r][static_cast<std::size_t>(c)];
        if (!pseudo_inverse(a, p.pinv)) {
            std::ostringstream os;
            os << "patch around boundary vertex " << v << " gives a rank-deficient fit (mesh too coarse)";
            reject("hadamard", os.str());
        }
        for (Eigen::Index r = 0; r < p.pinv.cols(); ++r) p.pinv.col(r) *= rw[static_cast<std::size_t>(r)];
        patches_.push_back(std::move(p));
    }
    // Nearest boundary vertex (by angle) for every sample.
    sample_patch_.resize(boundary.size());
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const Vec2& r = boundary[i].reference;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < bverts.size(); ++k) {
            const double d = (ref.vertices[static_cast<std::size_t>(bverts[k])] - r).squaredNorm();
            if (d < best) {
                best = d;
                sample_patch_[i] = static_cast<int>(k);
            }
        }
    }
}

double TraceRecovery::sample_value(const Eigen::VectorXd& full, int element, int q, int component) const {
    const MappedMesh& mesh = *space_->mesh;
    const int* en = mesh.element_nodes(element);
    const std::vector<double>& bv = basis_values_[static_cast<std::size_t>(q)];
    double s = 0.0;
    for (int i = 0; i < mesh.nodes_per_element(); ++i) s += bv[static_cast<std::size_t>(i)] * full[space_->dof(en[i], component)];
    return s;
}

std::vector<Jet3> TraceRecovery::annulus_component(const Eigen::VectorXd& full, int component) const {
    Eigen::VectorXd s(static_cast<Eigen::Index>(fit_points_.size()));
    for (std::size_t r = 0; r < fit_points_.size(); ++r)
        s[static_cast<Eigen::Index>(r)] = sample_value(full, fit_points_[r].first, fit_points_[r].second, component);
    const Eigen::VectorXd rhs = fit_matrix_.transpose() * fit_weights_.cwiseProduct(s);
    const Eigen::VectorXd coef = fit_scale_.cwiseProduct(fit_llt_.solve(rhs));
    std::vector<Jet3> out(eval_jets_.size());
    for (std::size_t i = 0; i < eval_jets_.size(); ++i) {
        Jet3 acc;
        for (Eigen::Index j = 0; j < coef.size(); ++j) acc += eval_jets_[i][static_cast<std::size_t>(j)] * coef[j];
        out[i] = acc;
    }
    return out;
}

std::vector<Jet3> TraceRecovery::patch_component(const Eigen::VectorXd& full, int component) const {
    std::vector<Eigen::VectorXd> coefs(patches_.size());
    std::vector<Jet3> out(boundary_->size());
    std::vector<Jet3> mono;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t k = static_cast<std::size_t>(sample_patch_[i]);
        const Patch& p = patches_[k];
        if (coefs[k].size() == 0) {
            Eigen::VectorXd s(static_cast<Eigen::Index>(p.points.size()));
            for (std::size_t r = 0; r < p.points.size(); ++r)
                s[static_cast<Eigen::Index>(r)] = sample_value(full, p.points[r].first, p.points[r].second, component);
            coefs[k] = p.pinv * s;
        }
        const Vec2& x = (*boundary_)[i].position;
        const Jet3 zx = (Jet3::variable(x.x(), 0) - Jet3(p.center.x())) / p.scale;
        const Jet3 zy = (Jet3::variable(x.y(), 1) - Jet3(p.center.y())) / p.scale;
        monomials(zx, zy, opt_.patch_degree, mono);
        Jet3 acc;
        for (Eigen::Index j = 0; j < coefs[k].size(); ++j) acc += mono[static_cast<std::size_t>(j)] * coefs[k][j];
        out[i] = acc;
    }
    return out;
}

TraceBundle TraceRecovery::recover(const Eigen::VectorXd& reduced, double gamma) const {
    return recover_full(space_->expand(reduced), gamma);
}

TraceBundle TraceRecovery::recover_full(const Eigen::VectorXd& full, double gamma) const {
    if (full.size() != space_->num_full()) reject("hadamard", "coefficient vector does not match the FE space");
    std::vector<std::vector<Jet3>> jets;
    for (int c = 0; c < space_->components; ++c)
        jets.push_back(opt_.method == TraceMethod::Annulus ? annulus_component(full, c) : patch_component(full, c));
    return make_trace_bundle(problem_.kind, gamma, *boundary_, std::move(jets),
                             opt_.method == TraceMethod::Annulus ? "fe-annulus" : "fe-patch");
}

MDensity m_density(const ProblemSpec& problem, const TraceBundle& tu, const TraceBundle& tv, double gamma,
                   const BoundaryGeom& boundary) {
    check_pair(tu, tv, boundary.size());
    if (tu.kind != problem.kind) reject("hadamard", "trace bundle does not belong to the requested problem");
    if (static_cast<int>(tu.comp.size()) != problem.components())
        reject("hadamard", "trace bundle has the wrong number of components");
    const std::size_t n = tu.size();
    MDensity m;
    m.values.assign(n, 0.0);
    const auto& u = tu.comp;
    const auto& v = tv.comp;
    switch (problem.kind) {
        case ProblemKind::P10:
            m.variant = "polyharmonic n=1: u_nu v_nu";
            for (std::size_t i = 0; i < n; ++i) m.values[i] = u[0].un[i] * v[0].un[i];
            break;
        case ProblemKind::P20:
        case ProblemKind::P21:
            m.variant = "polyharmonic n=2: u_nunu v_nunu";
            for (std::size_t i = 0; i < n; ++i) m.values[i] = u[0].unn[i] * v[0].unn[i];
            break;
        case ProblemKind::NeumannBiharmonic:
            m.variant = "neumann: gamma u v - D2u:D2v";
            for (std::size_t i = 0; i < n; ++i)
                m.values[i] = gamma * u[0].u[i] * v[0].u[i] - frobenius(u[0].hess[i], v[0].hess[i]);
            break;
        case ProblemKind::Intermediate: {
            m.variant = "intermediate (symmetrized third-derivative pair)";
            std::vector<double> prod(n);
            for (std::size_t i = 0; i < n; ++i) prod[i] = u[0].un[i] * v[0].un[i];
            const std::vector<double> lap = tangential_laplacian(boundary, prod);
            for (std::size_t i = 0; i < n; ++i)
                m.values[i] = frobenius(u[0].hess[i], v[0].hess[i]) - 2.0 * lap[i] -
                              (u[0].un[i] * v[0].unnn[i] + v[0].un[i] * u[0].unnn[i]);
            break;
        }
        case ProblemKind::Lame:
            m.variant = "lame";
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 un(u[0].un[i], u[1].un[i]), vn(v[0].un[i], v[1].un[i]);
                const Vec2& nu = boundary[i].normal;
                m.values[i] = problem.mu * un.dot(vn) + (problem.mu + problem.lambda) * un.dot(nu) * vn.dot(nu);
            }
            break;
        case ProblemKind::ReissnerMindlin:
            m.variant = "reissner-mindlin";
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 bn(u[0].un[i], u[1].un[i]), tn(v[0].un[i], v[1].un[i]);
                const Vec2& nu = boundary[i].normal;
                m.values[i] = problem.mu / 12.0 * bn.dot(tn) +
                              (problem.mu + problem.lambda) / 12.0 * bn.dot(nu) * tn.dot(nu) +
                              problem.kappa * problem.mu / (problem.t * problem.t) * u[2].un[i] * v[2].un[i];
            }
            break;
    }
    return m;
}

MDensity m_density_unified_biharmonic(const TraceBundle& tu, const TraceBundle& tv, double gamma) {
    check_pair(tu, tv, 0);
    if (tu.kind != ProblemKind::P20 && tu.kind != ProblemKind::NeumannBiharmonic && tu.kind != ProblemKind::Intermediate)
        reject("hadamard", "the unified biharmonic density applies to P20, N and I only");
    const auto& u = tu.comp[0];
    const auto& v = tv.comp[0];
    MDensity m;
    m.variant = "unified biharmonic";
    m.values.resize(tu.size());
    for (std::size_t i = 0; i < m.values.size(); ++i)
        m.values[i] = 2.0 * u.unn[i] * v.unn[i] - frobenius(u.hess[i], v.hess[i]) + gamma * u.u[i] * v.u[i] -
                      u.un[i] * (v.div_hess_n[i] + v.dlap_dn[i]) - v.un[i] * (u.div_hess_n[i] + u.dlap_dn[i]);
    return m;
}

std::vector<double> normal_velocity(const MapExpr& psi, const BoundaryGeom& boundary) {
    std::vector<double> out(boundary.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = psi(boundary[i].reference).dot(boundary[i].normal);
    return out;
}

namespace {

void check_cluster(const ClusterF& cluster, const std::vector<TraceBundle>& traces) {
    if (!cluster.usable) reject("hadamard", "cluster is not usable: " + cluster.reason);
    if (static_cast<int>(traces.size()) != cluster.size())
        reject("hadamard", "need one trace bundle per cluster member");
}

}  // namespace

double gamma_differential(const ProblemSpec& problem, const ClusterF& cluster, int h, const MapExpr& psi,
                          const std::vector<TraceBundle>& traces, const BoundaryGeom& boundary) {
    check_cluster(cluster, traces);
    if (h < 1 || h > cluster.size()) reject("hadamard", "symmetric function index h must lie in 1..|F|");
    const std::vector<double> zn = normal_velocity(psi, boundary);
    double sum = 0.0;
    for (const TraceBundle& t : traces) {
        const MDensity m = m_density(problem, t, t, cluster.gamma, boundary);
        std::vector<double> f(zn.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = m.values[i] * zn[i];
        sum += boundary.integrate(f);
    }
    return -std::pow(cluster.gamma, h - 1) * binomial_coefficient(cluster.size() - 1, h - 1) * sum;
}

Eigen::MatrixXd nagy_matrix(const ProblemSpec& problem, const ClusterF& cluster, const MapExpr& psi,
                            const std::vector<TraceBundle>& traces, const BoundaryGeom& boundary) {
    check_cluster(cluster, traces);
    const std::vector<double> zn = normal_velocity(psi, boundary);
    const int m = cluster.size();
    Eigen::MatrixXd out(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            const MDensity d = m_density(problem, traces[static_cast<std::size_t>(i)], traces[static_cast<std::size_t>(j)],
                                         cluster.gamma, boundary);
            std::vector<double> f(zn.size());
            for (std::size_t k = 0; k < f.size(); ++k) f[k] = d.values[k] * zn[k];
            out(i, j) = out(j, i) = -boundary.integrate(f);
        }
    return out;
}

Criticality criticality_residual(const ProblemSpec& problem, const ClusterF& cluster,
                                 const std::vector<TraceBundle>& traces, const BoundaryGeom& boundary) {
    if (static_cast<int>(traces.size()) != cluster.size()) reject("hadamard", "need one trace bundle per cluster member");
    Criticality c;
    c.density.assign(boundary.size(), 0.0);
    for (const TraceBundle& t : traces) {
        const MDensity m = m_density(problem, t, t, cluster.gamma, boundary);
        for (std::size_t i = 0; i < m.values.size(); ++i) c.density[i] += m.values[i];
    }
    c.c_mean = boundary.mean(c.density);
    std::vector<double> dev(c.density.size());
    for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = c.density[i] - c.c_mean;
    const double denom = std::max(std::abs(c.c_mean), boundary.l2_norm(c.density));
    c.rel_deviation = denom > 0.0 ? boundary.l2_norm(dev) / denom : 0.0;
    return c;
}

}  // namespace spectra_shape
