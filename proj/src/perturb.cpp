#include "spectra_shape/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

constexpr double kDegenerate = 1e-8;

// Maximal runs of (relatively) equal eigenvalues, as [begin, end) ranges.
// Kernel eigenvalues sit at solver noise level and form one group.
std::vector<std::pair<int, int>> degenerate_groups(const std::vector<double>& v) {
    std::vector<std::pair<int, int>> g;
    const int n = static_cast<int>(v.size());
    const double floor = kernel_floor(v);
    auto same = [&](int j) {
        const double a = v[static_cast<std::size_t>(j - 1)], c = v[static_cast<std::size_t>(j)];
        if (std::abs(a) <= floor && std::abs(c) <= floor) return true;
        return std::abs(c - a) <= kDegenerate * std::max(1.0, std::abs(c));
    };
    int b = 0;
    for (int j = 1; j <= n; ++j) {
        if (j == n || !same(j)) {
            g.emplace_back(b, j);
            b = j;
        }
    }
    return g;
}

int group_of(const std::vector<std::pair<int, int>>& groups, int j) {
    for (std::size_t k = 0; k < groups.size(); ++k)
        if (j >= groups[k].first && j < groups[k].second) return static_cast<int>(k);
    return -1;
}

struct Match {
    std::vector<int> to;  // previous sorted index -> current sorted index
    double min_overlap = 1.0;
    bool merge = false;   // a degenerate current group absorbed distinct previous groups
};

// Greedy matching of previous eigenvectors onto current eigenspaces by
// B-overlap; degenerate current groups are matched as subspaces.
Match match_spectra(const Spectrum& prev, const Spectrum& cur) {
    const int n = static_cast<int>(prev.values.size());
    const Eigen::MatrixXd o = (prev.vectors.transpose() * (cur.B * cur.vectors)).cwiseAbs();
    const auto cg = degenerate_groups(cur.values);
    const auto pg = degenerate_groups(prev.values);
    std::vector<int> capacity;
    for (const auto& g : cg) capacity.push_back(g.second - g.first);
    Eigen::MatrixXd score(n, static_cast<Eigen::Index>(cg.size()));
    for (int i = 0; i < n; ++i)
        for (std::size_t k = 0; k < cg.size(); ++k) {
            double s = 0.0;
            for (int j = cg[k].first; j < cg[k].second; ++j) s += o(i, j) * o(i, j);
            score(i, static_cast<Eigen::Index>(k)) = std::sqrt(s);
        }
    Match m;
    m.to.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> assigned_group(static_cast<std::size_t>(n), -1);
    for (int step = 0; step < n; ++step) {
        double best = -1.0;
        int bi = -1, bk = -1;
        for (int i = 0; i < n; ++i) {
            if (assigned_group[static_cast<std::size_t>(i)] >= 0) continue;
            for (std::size_t k = 0; k < cg.size(); ++k) {
                if (capacity[k] == 0) continue;
                if (score(i, static_cast<Eigen::Index>(k)) > best) {
                    best = score(i, static_cast<Eigen::Index>(k));
                    bi = i;
                    bk = static_cast<int>(k);
                }
            }
        }
        assigned_group[static_cast<std::size_t>(bi)] = bk;
        --capacity[static_cast<std::size_t>(bk)];
        // The top computed eigenvalue may trade places with an uncomputed one.
        if (bi < n - 1) m.min_overlap = std::min(m.min_overlap, best);
    }
    for (std::size_t k = 0; k < cg.size(); ++k) {
        int slot = cg[k].first, source_group = -2;
        for (int i = 0; i < n; ++i) {
            if (assigned_group[static_cast<std::size_t>(i)] != static_cast<int>(k)) continue;
            m.to[static_cast<std::size_t>(i)] = slot++;
            const int g = group_of(pg, i);
            if (source_group == -2) source_group = g;
            else if (source_group != g) m.merge = true;
        }
    }
    return m;
}

double sum_of(const Spectrum& s, const std::vector<int>& idx) {
    double a = 0.0;
    for (int i : idx) a += s.values[static_cast<std::size_t>(i)];
    return a;
}

}  // namespace

EigenOptions default_eigen_options(const ProblemSpec& problem) {
    EigenOptions o;
    o.seed = seed_from_env();
    // The Neumann form has a kernel, so factor A + B instead of A.
    if (problem.kind == ProblemKind::NeumannBiharmonic) o.shift = -1.0;
    return o;
}

SolveSetup make_setup(const ProblemSpec& problem, double h, int count) {
    SolveSetup s;
    s.problem = problem;
    s.ref = std::make_shared<const RefMesh>(build_disk_mesh(h));
    s.count = count;
    s.eig = default_eigen_options(problem);
    return s;
}

ShapeSolve solve_shape(const SolveSetup& setup, const MapExpr& phi) {
    ShapeSolve out;
    out.problem = setup.problem;
    out.mesh = std::make_shared<const MappedMesh>(setup.ref, phi, setup.problem.degree());
    out.assembled = assemble(setup.problem, out.mesh, setup.assembly);
    out.spectrum = solve_lowest(out.assembled.forms, setup.count, setup.eig);
    return out;
}

std::vector<TraceBundle> cluster_traces(const ShapeSolve& solve, const ClusterF& cluster,
                                        const BoundaryGeom& boundary, const TraceOptions& options) {
    const TraceRecovery rec(solve.problem, solve.assembled.space, boundary, options);
    std::vector<TraceBundle> out;
    for (int i : cluster.indices)
        out.push_back(rec.recover(solve.spectrum.vectors.col(i), solve.spectrum.values[static_cast<std::size_t>(i)]));
    return out;
}

std::vector<double> EigenPath::branch(int b) const {
    std::vector<double> v(eps.size());
    for (std::size_t e = 0; e < eps.size(); ++e)
        v[e] = spectra[e].values[static_cast<std::size_t>(order[e][static_cast<std::size_t>(b)])];
    return v;
}

std::vector<int> EigenPath::branches_at(int e, const std::vector<int>& sorted_indices) const {
    std::vector<int> out;
    const auto& row = order[static_cast<std::size_t>(e)];
    for (int idx : sorted_indices)
        for (std::size_t b = 0; b < row.size(); ++b)
            if (row[b] == idx) out.push_back(static_cast<int>(b));
    return out;
}

int EigenPath::index_of(double eps_value) const {
    for (std::size_t e = 0; e < eps.size(); ++e)
        if (std::abs(eps[e] - eps_value) <= 1e-14 * std::max(1.0, std::abs(eps_value))) return static_cast<int>(e);
    return -1;
}

EigenPath eigen_path(const SolveSetup& setup, const MapExpr& phi, const MapExpr& psi, std::vector<double> eps,
                     int threads) {
    if (eps.empty()) reject("perturb", "empty eps grid");
    std::sort(eps.begin(), eps.end());
    EigenPath path;
    path.eps = eps;
    path.spectra.resize(eps.size());
    auto solve_at = [&](std::size_t e) {
        const MapExpr m = eps[e] == 0.0 ? phi : phi + eps[e] * psi;
        return solve_shape(setup, m).spectrum;
    };
    if (threads <= 1) {
        for (std::size_t e = 0; e < eps.size(); ++e) path.spectra[e] = solve_at(e);
    } else {
        for (std::size_t start = 0; start < eps.size(); start += static_cast<std::size_t>(threads)) {
            std::vector<std::future<Spectrum>> jobs;
            const std::size_t end = std::min(eps.size(), start + static_cast<std::size_t>(threads));
            for (std::size_t e = start; e < end; ++e) jobs.push_back(std::async(std::launch::async, solve_at, e));
            for (std::size_t e = start; e < end; ++e) path.spectra[e] = jobs[e - start].get();
        }
    }
    const int n = static_cast<int>(path.spectra[0].values.size());
    path.order.assign(eps.size(), std::vector<int>(static_cast<std::size_t>(n)));
    path.min_overlap.assign(eps.size(), 1.0);
    for (int b = 0; b < n; ++b) path.order[0][static_cast<std::size_t>(b)] = b;
    std::size_t anchor = 0;
    for (std::size_t e = 1; e < eps.size(); ++e) {
        const Match m = match_spectra(path.spectra[anchor], path.spectra[e]);
        path.min_overlap[e] = m.min_overlap;
        for (int b = 0; b < n; ++b)
            path.order[e][static_cast<std::size_t>(b)] =
                m.to[static_cast<std::size_t>(path.order[anchor][static_cast<std::size_t>(b)])];
        if (m.min_overlap < 0.7) {
            path.flagged = true;
            std::ostringstream os;
            os << "overlap " << m.min_overlap << " below 0.7 at eps = " << eps[e] << "; refine the eps grid";
            path.note = os.str();
        }
        if (!m.merge) anchor = e;
    }
    return path;
}

double fd_derivative(const std::vector<double>& eps, const std::vector<double>& g, double eps0, bool richardson) {
    if (eps.size() != g.size()) reject("perturb", "eps grid and series differ in length");
    auto at = [&](double x) {
        for (std::size_t i = 0; i < eps.size(); ++i)
            if (std::abs(eps[i] - x) <= 1e-12 * std::abs(eps0)) return g[i];
        std::ostringstream os;
        os << "grid is not symmetric: eps = " << x << " missing";
        reject("perturb", os.str());
    };
    if (!(eps0 > 0.0)) reject("perturb", "eps0 must be positive");
    const double d1 = (at(eps0) - at(-eps0)) / (2.0 * eps0);
    if (!richardson) return d1;
    const double d2 = (at(0.5 * eps0) - at(-0.5 * eps0)) / eps0;
    return (4.0 * d2 - d1) / 3.0;
}

std::vector<double> symmetric_grid(double eps0, bool richardson) {
    if (richardson) return {-eps0, -0.5 * eps0, 0.0, 0.5 * eps0, eps0};
    return {-eps0, 0.0, eps0};
}

NagyReport nagy_check(const SolveSetup& setup, const MapExpr& phi, const MapExpr& psi,
                      const std::vector<int>& cluster_indices, double eps0, bool richardson, int threads,
                      int boundary_samples) {
    NagyReport r;
    const ShapeSolve base = solve_shape(setup, phi);
    const auto clusters = detect_clusters(base.spectrum);
    const ClusterF& c = cluster_of(clusters, cluster_indices.front());
    if (c.indices != cluster_indices) {
        r.inconclusive = true;
        r.note = "requested indices do not form one cluster at the base shape";
        return r;
    }
    if (!c.usable) {
        r.inconclusive = true;
        r.note = "cluster not usable: " + c.reason;
        return r;
    }
    const BoundaryGeom boundary = build_boundary(phi, boundary_samples);
    const auto traces = cluster_traces(base, c, boundary);
    const Eigen::MatrixXd m = nagy_matrix(setup.problem, c, psi, traces, boundary);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (int i = 0; i < m.rows(); ++i) r.predicted.push_back(es.eigenvalues()[i]);

    const EigenPath path = eigen_path(setup, phi, psi, symmetric_grid(eps0, richardson), threads);
    if (path.flagged) {
        r.inconclusive = true;
        r.note = path.note;
    }
    const int center = path.index_of(0.0);
    for (int b : path.branches_at(center, c.indices)) r.fd.push_back(fd_derivative(path.eps, path.branch(b), eps0, richardson));
    std::sort(r.fd.begin(), r.fd.end());
    const double floor = 1e-3 * std::abs(c.gamma);
    for (std::size_t i = 0; i < r.fd.size() && i < r.predicted.size(); ++i)
        r.max_rel_dev = std::max(r.max_rel_dev, std::abs(r.fd[i] - r.predicted[i]) / std::max(std::abs(r.predicted[i]), floor));
    return r;
}

CrossingReport crossing_probe(const SolveSetup& setup, const MapExpr& phi, const MapExpr& psi, int j,
                              const CrossingOptions& opt) {
    CrossingReport rep;
    if (j < 0 || j + 1 >= setup.count) reject("perturb", "crossing pair must lie inside the computed spectrum");
    if (!(opt.hi > opt.lo) || opt.scan_points < 2) reject("perturb", "crossing window needs hi > lo and two scan points");
    std::vector<double> grid;
    for (int i = 0; i < opt.scan_points; ++i) grid.push_back(opt.lo + (opt.hi - opt.lo) * i / (opt.scan_points - 1));
    EigenPath path = eigen_path(setup, phi, psi, grid);
    const int b1 = j, b2 = j + 1;  // labels at the left end of the window
    auto diff = [&](std::size_t e) {
        return path.spectra[e].values[static_cast<std::size_t>(path.order[e][static_cast<std::size_t>(b1)])] -
               path.spectra[e].values[static_cast<std::size_t>(path.order[e][static_cast<std::size_t>(b2)])];
    };
    auto degenerate = [&](std::size_t e) {
        const auto& v = path.spectra[e].values;
        return std::abs(v[static_cast<std::size_t>(j + 1)] - v[static_cast<std::size_t>(j)]) <=
               kDegenerate * std::abs(v[static_cast<std::size_t>(j)]);
    };
    // A degenerate scan point is the crossing itself; otherwise look for a
    // sign change between neighbouring points.
    int bracket = -1;
    bool hit = false;
    for (std::size_t e = 0; e < grid.size() && bracket < 0; ++e) {
        if (degenerate(e)) {
            bracket = static_cast<int>(e);
            hit = true;
        } else if (e + 1 < grid.size() && !degenerate(e + 1) && (diff(e) < 0) != (diff(e + 1) < 0)) {
            bracket = static_cast<int>(e);
        }
    }
    if (bracket < 0) {
        rep.status = "inconclusive";
        rep.note = "no crossing of the tracked branches inside the window";
        return rep;
    }
    // Bisection on the branch difference, matching each midpoint against
    // the left end of the bracket.
    const std::size_t eb = static_cast<std::size_t>(bracket);
    double a = grid[eb], b = hit ? grid[eb] : grid[eb + 1];
    Spectrum left = path.spectra[eb];
    std::vector<int> left_order = path.order[eb];
    const double da = diff(eb);
    const double scale = std::abs(left.values[static_cast<std::size_t>(j)]);
    double c = hit ? a : 0.5 * (a + b);
    while (!hit && b - a > opt.locate_tol) {
        c = 0.5 * (a + b);
        const Spectrum mid = solve_shape(setup, c == 0.0 ? phi : phi + c * psi).spectrum;
        const Match m = match_spectra(left, mid);
        const int i1 = m.to[static_cast<std::size_t>(left_order[static_cast<std::size_t>(b1)])];
        const int i2 = m.to[static_cast<std::size_t>(left_order[static_cast<std::size_t>(b2)])];
        const double dm = mid.values[static_cast<std::size_t>(i1)] - mid.values[static_cast<std::size_t>(i2)];
        if (std::abs(dm) <= kDegenerate * scale || m.merge) break;
        if ((dm < 0) == (da < 0)) {
            a = c;
            std::vector<int> nord(left_order.size());
            for (std::size_t k = 0; k < nord.size(); ++k) nord[k] = m.to[static_cast<std::size_t>(left_order[k])];
            left = mid;
            left_order = nord;
        } else {
            b = c;
        }
    }
    rep.eps_cross = c;
    const std::vector<int> pair = {j, j + 1};
    auto at = [&](double e) { return solve_shape(setup, e == 0.0 ? phi : phi + e * psi).spectrum; };
    const Spectrum sm = at(c - opt.delta), s0 = at(c), sp = at(c + opt.delta);
    rep.gamma_left = (sum_of(s0, pair) - sum_of(sm, pair)) / opt.delta;
    rep.gamma_right = (sum_of(sp, pair) - sum_of(s0, pair)) / opt.delta;
    rep.sorted_left = (s0.values[static_cast<std::size_t>(j)] - sm.values[static_cast<std::size_t>(j)]) / opt.delta;
    rep.sorted_right = (sp.values[static_cast<std::size_t>(j)] - s0.values[static_cast<std::size_t>(j)]) / opt.delta;
    const double gd = std::abs(rep.gamma_left - rep.gamma_right);
    rep.gamma_discrepancy = gd / std::max({std::abs(rep.gamma_left), std::abs(rep.gamma_right), 1e-300});
    rep.sorted_jump = std::abs(rep.sorted_left - rep.sorted_right);
    const bool smooth = rep.gamma_discrepancy <= opt.gamma_tol;
    const bool kink = rep.sorted_jump >= opt.jump_factor * gd;
    rep.status = smooth && kink ? "pass" : "fail";
    std::ostringstream os;
    os << "crossing located at eps = " << c;
    rep.note = os.str();
    return rep;
}

CrossingReport crossing_probe_toy(double delta) {
    const double angle = 0.3;
    Eigen::Matrix2d q;
    q << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    auto eig = [&](double e) {
        Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
        d(0, 0) = 1.0 + 2.0 * e;
        d(1, 1) = 1.0 - e;
        const Eigen::Matrix2d a = q.transpose() * d * q;
        const double tr = a.trace(), det = a.determinant();
        const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
        return std::array<double, 2>{0.5 * tr - disc, 0.5 * tr + disc};
    };
    CrossingReport rep;
    rep.eps_cross = 0.0;
    const auto m = eig(-delta), z = eig(0.0), p = eig(delta);
    rep.gamma_left = ((z[0] + z[1]) - (m[0] + m[1])) / delta;
    rep.gamma_right = ((p[0] + p[1]) - (z[0] + z[1])) / delta;
    rep.sorted_left = (z[0] - m[0]) / delta;
    rep.sorted_right = (p[0] - z[0]) / delta;
    const double gd = std::abs(rep.gamma_left - rep.gamma_right);
    rep.gamma_discrepancy = gd / std::max(std::abs(rep.gamma_left), std::abs(rep.gamma_right));
    rep.sorted_jump = std::abs(rep.sorted_left - rep.sorted_right);
    rep.status = rep.gamma_discrepancy <= 0.01 && rep.sorted_jump >= 10.0 * gd ? "pass" : "fail";
    rep.note = "2x2 symmetric family, trace slope 1, sorted slopes 2 and -1";
    return rep;
}

MapExpr FlowState::map() const {
    MapExpr m = base;
    if (!cos_coeffs.empty()) m = base + MapExpr::fourier_field(cos_coeffs, sin_coeffs, cutoff_inner, cutoff_outer);
    return scale == 1.0 ? m : scale * m;
}

FlowState flow_start(const MapExpr& phi, const FlowOptions& options) {
    FlowState s;
    s.base = phi;
    s.cutoff_inner = options.cutoff_inner;
    s.cutoff_outer = options.cutoff_outer;
    s.cos_coeffs.assign(static_cast<std::size_t>(options.fourier_modes) + 1, Vec2::Zero());
    s.sin_coeffs.assign(static_cast<std::size_t>(options.fourier_modes) + 1, Vec2::Zero());
    s.volume0 = build_boundary(phi, options.boundary_samples).enclosed_area();
    return s;
}

namespace {

struct ShapeEval {
    double gamma = 0.0;     // Gamma_{F,h}
    double volume = 0.0;
    bool ok = false;
};

ShapeEval evaluate_shape(const SolveSetup& setup, const MapExpr& map, const FlowOptions& opt) {
    ShapeEval ev;
    try {
        const BoundaryGeom bd = build_boundary(map, opt.boundary_samples);
        const ShapeSolve s = solve_shape(setup, map);
        std::vector<double> vals;
        for (int i : opt.cluster) vals.push_back(s.spectrum.values[static_cast<std::size_t>(i)]);
        ev.gamma = symmetric_functions(vals)[static_cast<std::size_t>(opt.h - 1)];
        ev.volume = bd.enclosed_area();
        ev.ok = true;
    } catch (const Rejection&) {
        ev.ok = false;  // folded boundary or inverted element
    }
    return ev;
}

}  // namespace

FlowState constrained_gradient_step(const FlowState& state, const SolveSetup& setup, const FlowOptions& opt,
                                    double eta) {
    if (opt.cluster.empty() || opt.h < 1 || opt.h > static_cast<int>(opt.cluster.size()))
        reject("perturb", "flow needs a non-empty cluster and 1 <= h <= |F|");
    if (eta == 0.0) return state;
    FlowState next = state;
    const MapExpr map = state.map();
    const BoundaryGeom bd = build_boundary(map, opt.boundary_samples);
    const ShapeSolve s = solve_shape(setup, map);
    const auto clusters = detect_clusters(s.spectrum);
    const ClusterF& c = cluster_of(clusters, opt.cluster.front());
    if (c.indices != opt.cluster) reject("perturb", "flow cluster is not an isolated cluster at the current shape");
    if (!c.usable) reject("perturb", "flow cluster is not usable: " + c.reason);
    const auto traces = cluster_traces(s, c, bd, opt.traces);
    const Criticality crit = criticality_residual(setup.problem, c, traces, bd);
    const double factor = -std::pow(c.gamma, opt.h - 1) * binomial_coefficient(c.size() - 1, opt.h - 1);
    std::vector<double> v(bd.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -factor * (crit.density[i] - crit.c_mean);
    const double gamma_now = symmetric_functions(c, s.spectrum)[static_cast<std::size_t>(opt.h - 1)];
    if (next.gamma_history.empty()) {
        next.gamma_history.push_back(gamma_now);
        next.volume_history.push_back(bd.enclosed_area());
    }
    next.residual_history.push_back(crit.rel_deviation);
    next.velocity_history.push_back(bd.l2_norm(v));
    if (crit.rel_deviation <= opt.stationary_tol) {
        next.status = "stationary";
        return next;
    }
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    if (next.velocity_scale == 0.0) next.velocity_scale = 1.0 / vmax;

    // Fourier coefficients of the displacement v nu in the reference angle,
    // in the unscaled frame of the field.
    const int nm = opt.fourier_modes;
    const std::size_t ns = bd.size();
    std::vector<Vec2> dc(static_cast<std::size_t>(nm) + 1, Vec2::Zero()), ds(static_cast<std::size_t>(nm) + 1, Vec2::Zero());
    for (std::size_t i = 0; i < ns; ++i) {
        const Vec2 d = (eta * next.velocity_scale / state.scale) * v[i] * bd[i].normal;
        const double th = bd[i].theta;
        for (int m = 0; m <= nm; ++m) {
            const double w = (m == 0 ? 1.0 : 2.0) / static_cast<double>(ns);
            dc[static_cast<std::size_t>(m)] += w * std::cos(m * th) * d;
            ds[static_cast<std::size_t>(m)] += w * std::sin(m * th) * d;
        }
    }
    double t = 1.0;
    for (int half = 0; half <= opt.max_halvings; ++half, t *= 0.5) {
        FlowState trial = next;
        for (int m = 0; m <= nm; ++m) {
            trial.cos_coeffs[static_cast<std::size_t>(m)] += t * dc[static_cast<std::size_t>(m)];
            trial.sin_coeffs[static_cast<std::size_t>(m)] += t * ds[static_cast<std::size_t>(m)];
        }
        trial.scale = 1.0;
        double vol;
        try {
            vol = build_boundary(trial.map(), opt.boundary_samples).enclosed_area();
        } catch (const Rejection&) {
            continue;
        }
        trial.scale = std::sqrt(state.volume0 / vol);
        const ShapeEval ev = evaluate_shape(setup, trial.map(), opt);
        if (!ev.ok || !(ev.gamma < gamma_now)) continue;
        trial.step_count = state.step_count + 1;
        trial.gamma_history.push_back(ev.gamma);
        trial.volume_history.push_back(ev.volume);
        trial.halvings.push_back(half);
        return trial;
    }
    next.status = "stationary";
    return next;
}

FlowState run_flow(const MapExpr& phi, const SolveSetup& setup, const FlowOptions& options) {
    FlowState s = flow_start(phi, options);
    for (int k = 0; k < options.steps && s.status == "running"; ++k)
        s = constrained_gradient_step(s, setup, options, options.step);
    if (s.status == "running") s.status = "completed";
    return s;
}

}  // namespace spectra_shape
