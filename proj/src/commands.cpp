#include "spectra_shape/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spectra_shape/acceptance.hpp"
#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

std::vector<int> one_based(const std::vector<int>& v) {
    std::vector<int> o;
    for (int i : v) o.push_back(i + 1);
    return o;
}

bool is_kernel(double value, const std::vector<double>& values) { return std::abs(value) <= kernel_floor(values); }

Json cluster_json(const ClusterF& c, const Spectrum& s) {
    Json j;
    j["indices"] = one_based(c.indices);
    j["gamma"] = c.gamma;
    j["spread"] = c.spread;
    j["gap"] = c.gap;
    j["usable"] = c.usable;
    if (!c.usable) j["reason"] = c.reason;
    j["kernel"] = is_kernel(c.gamma, s.values);
    j["gamma_h"] = symmetric_functions(c, s);
    return j;
}

void dump_outputs(const RunConfig& c, const ShapeSolve& s) {
    if (!c.dump_mesh.empty()) {
        std::ostringstream os;
        write_mesh(os, *s.mesh);
        write_text_file(c.dump_mesh, os.str());
    }
    if (!c.dump_forms.empty()) {
        std::ostringstream a, b;
        write_matrix(a, s.assembled.forms.A);
        write_matrix(b, s.assembled.forms.B);
        write_text_file(c.dump_forms + ".A.txt", a.str());
        write_text_file(c.dump_forms + ".B.txt", b.str());
    }
}

ShapeSolve base_solve(const RunConfig& c, Json& report) {
    ShapeSolve s = solve_shape(c.setup(), c.shape.build());
    report["provenance"]["mesh"] = mesh_stats(s);
    dump_outputs(c, s);
    return s;
}

// Requested cluster, or the first usable cluster off the kernel.
const ClusterF* select_cluster(const RunConfig& c, const std::vector<ClusterF>& clusters, const Spectrum& s,
                               std::string& note) {
    if (!c.cluster.empty()) {
        for (const auto& cl : clusters)
            if (cl.indices == c.cluster) return &cl;
        note = "requested indices do not form one cluster at this shape";
        return nullptr;
    }
    for (const auto& cl : clusters)
        if (cl.usable && !is_kernel(cl.gamma, s.values)) return &cl;
    note = "no usable cluster off the kernel in the computed spectrum";
    return nullptr;
}

std::vector<double> fd_grid(const RunConfig& c) {
    // The centre point is not needed by the central differences.
    if (c.richardson) return {-c.eps0, -0.5 * c.eps0, 0.5 * c.eps0, c.eps0};
    return {-c.eps0, c.eps0};
}

Json eigen_json(const Spectrum& s) {
    Json list = Json::array();
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        const double target = std::max(EigenOptions{}.tolerance, 8.0 * s.floors[j]);
        Json e = measured(s.values[j], target, s.residuals[j] <= target ? "pass" : "fail");
        e["index"] = static_cast<int>(j + 1);
        e["residual"] = s.residuals[j];
        e["kernel"] = is_kernel(s.values[j], s.values);
        list.push_back(e);
    }
    return list;
}

std::string worst_of(const Json& list) {
    std::string v = "pass";
    for (const auto& e : list) v = combine_verdicts(v, e.at("verdict").get<std::string>());
    return v;
}

void finish(CommandOutput& out) {
    out.report["timestamps"]["finished"] = utc_timestamp();
    out.exit_code = exit_code_for(out.report["verdict"].get<std::string>());
}

}  // namespace

CommandOutput cmd_eig(const RunConfig& c) {
    CommandOutput out;
    out.report = make_report("eig", c);
    Json& r = out.report["results"];
    const ShapeSolve s = base_solve(c, out.report);
    r["eigenvalues"] = eigen_json(s.spectrum);
    std::string verdict = worst_of(r["eigenvalues"]);
    Json cl = Json::array();
    for (const auto& k : detect_clusters(s.spectrum, c.cluster_tol)) cl.push_back(cluster_json(k, s.spectrum));
    r["clusters"] = cl;
    int kernel = 0;
    for (double v : s.spectrum.values) kernel += is_kernel(v, s.spectrum.values);
    r["kernel_dimension"] = kernel;

    // Closed-form spectra on the unit disk.
    const bool disk = c.shape.map == "disk" && c.shape.bump_amplitude == 0.0;
    if (disk && (c.problem.kind == ProblemKind::P10 || c.problem.kind == ProblemKind::P20)) {
        const DiskKind dk = c.problem.kind == ProblemKind::P10 ? DiskKind::P10 : DiskKind::P20;
        const double tol = dk == DiskKind::P10 ? 5e-3 : 1e-2;
        const auto pairs = disk_eigenpairs(dk, c.count);
        Json o = Json::array();
        for (int j = 0; j < c.count; ++j) {
            const double ex = pairs[static_cast<std::size_t>(j)].eigenvalue;
            const double rel = std::abs(s.spectrum.values[static_cast<std::size_t>(j)] - ex) / ex;
            Json e = measured(rel, tol, rel <= tol ? "pass" : "fail");
            e["index"] = j + 1;
            e["oracle"] = ex;
            o.push_back(e);
        }
        r["oracle_relative_error"] = o;
        verdict = combine_verdicts(verdict, worst_of(o));
    }
    // Affine functions span the Neumann kernel.
    if (c.problem.kind == ProblemKind::NeumannBiharmonic && c.count > 3) {
        const std::string kv = kernel == 3 ? "pass" : "fail";
        r["kernel_expected"] = measured(kernel, 3.0, 0.0, kv);
        verdict = combine_verdicts(verdict, kv);
    }
    out.report["verdict"] = verdict;
    finish(out);
    return out;
}

CommandOutput cmd_dgamma(const RunConfig& c) {
    CommandOutput out;
    out.report = make_report("dgamma", c);
    Json& r = out.report["results"];
    const SolveSetup setup = c.setup();
    const MapExpr phi = c.shape.build(), psi = c.psi.build();
    const ShapeSolve s = base_solve(c, out.report);
    const auto clusters = detect_clusters(s.spectrum, c.cluster_tol);
    r["eigenvalues"] = eigen_json(s.spectrum);
    std::string note;
    const ClusterF* cp = select_cluster(c, clusters, s.spectrum, note);
    if (cp == nullptr || !cp->usable) {
        if (cp != nullptr) {
            r["cluster"] = cluster_json(*cp, s.spectrum);
            note = "cluster not usable: " + cp->reason;
        }
        r["note"] = note;
        out.report["verdict"] = "inconclusive";
        finish(out);
        return out;
    }
    const ClusterF& cl = *cp;
    r["cluster"] = cluster_json(cl, s.spectrum);
    const BoundaryGeom boundary = build_boundary(phi, c.boundary_samples);
    const auto traces = cluster_traces(s, cl, boundary, c.trace_options());
    const EigenPath path = eigen_path(setup, phi, psi, fd_grid(c), c.threads);
    std::string verdict = path.flagged ? "inconclusive" : "pass";
    if (path.flagged) r["path_note"] = path.note;
    const double tol = c.problem.kind == ProblemKind::Intermediate ? c.fd_tol_intermediate : c.fd_tol;
    const auto gamma_h = symmetric_functions(cl, s.spectrum);

    Json diffs = Json::array();
    const int h_lo = c.order > 0 ? c.order : 1, h_hi = c.order > 0 ? c.order : cl.size();
    for (int h = h_lo; h <= h_hi; ++h) {
        const double formula = gamma_differential(c.problem, cl, h, psi, traces, boundary);
        std::vector<double> g;
        for (const auto& sp : path.spectra) g.push_back(symmetric_functions(cl, sp)[static_cast<std::size_t>(h - 1)]);
        const double fd = fd_derivative(path.eps, g, c.eps0, c.richardson);
        const double G = gamma_h[static_cast<std::size_t>(h - 1)];
        Json d;
        d["h"] = h;
        d["gamma_h"] = G;
        d["formula"] = formula;
        d["fd"] = fd;
        std::string v;
        if (std::max(std::abs(formula), std::abs(fd)) <= c.small_abs * std::abs(G)) {
            d["mode"] = "absolute";
            d["check"] = measured(std::max(std::abs(formula), std::abs(fd)), c.small_abs * std::abs(G), "pass");
            v = "pass";
        } else {
            const double rel = std::abs(formula - fd) / std::abs(fd);
            v = rel <= tol ? "pass" : "fail";
            d["mode"] = "relative";
            d["check"] = measured(rel, tol, v);
        }
        if (path.flagged) v = "inconclusive", d["check"]["verdict"] = v;
        // Homogeneity: Gamma_h(s Omega) = s^(e h) Gamma_h(Omega).
        const int e = c.problem.dilation_exponent();
        if (c.psi.kind == "dilation" && e != 0) {
            const double ref = e * h * G;
            const double rel = std::abs(formula - ref) / std::abs(ref);
            d["scaling"] = measured(formula, ref, tol, rel <= tol ? "pass" : "fail");
            v = combine_verdicts(v, rel <= tol ? "pass" : "fail");
        }
        verdict = combine_verdicts(verdict, v);
        diffs.push_back(d);
    }
    r["differentials"] = diffs;

    // Branch slopes: eigenvalues of the splitting matrix vs FD of each branch.
    const Eigen::MatrixXd m = nagy_matrix(c.problem, cl, psi, traces, boundary);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    std::vector<double> predicted, slopes;
    for (int i = 0; i < m.rows(); ++i) predicted.push_back(es.eigenvalues()[i]);
    for (int b : path.branches_at(0, cl.indices)) slopes.push_back(fd_derivative(path.eps, path.branch(b), c.eps0, c.richardson));
    std::sort(slopes.begin(), slopes.end());
    double dev = 0.0;
    for (std::size_t i = 0; i < predicted.size() && i < slopes.size(); ++i)
        dev = std::max(dev, std::abs(slopes[i] - predicted[i]) / std::max(std::abs(predicted[i]), c.small_abs * std::abs(cl.gamma)));
    Json n;
    n["predicted"] = predicted;
    n["fd"] = slopes;
    std::string nv = slopes.size() == predicted.size() ? (dev <= c.nagy_tol ? "pass" : "fail") : "inconclusive";
    if (path.flagged) nv = "inconclusive";
    n["check"] = measured(dev, c.nagy_tol, nv);
    r["branch_slopes"] = n;
    verdict = combine_verdicts(verdict, nv);
    out.report["verdict"] = verdict;
    finish(out);
    return out;
}

CommandOutput cmd_critical(const RunConfig& c) {
    CommandOutput out;
    out.report = make_report("critical", c);
    Json& r = out.report["results"];
    const MapExpr phi = c.shape.build();
    const ShapeSolve s = base_solve(c, out.report);
    const auto clusters = detect_clusters(s.spectrum, c.cluster_tol);
    std::string note;
    const ClusterF* cp = select_cluster(c, clusters, s.spectrum, note);
    if (cp == nullptr || !cp->usable) {
        if (cp != nullptr) note = "cluster not usable: " + cp->reason;
        r["note"] = note;
        out.report["verdict"] = "inconclusive";
        finish(out);
        return out;
    }
    const ClusterF& cl = *cp;
    r["cluster"] = cluster_json(cl, s.spectrum);
    const BoundaryGeom boundary = build_boundary(phi, c.boundary_samples);
    const Criticality cr = criticality_residual(c.problem, cl, cluster_traces(s, cl, boundary, c.trace_options()), boundary);
    std::string verdict;
    if (c.shape.is_ball()) {
        verdict = cr.rel_deviation <= c.critical_tol ? "pass" : "fail";
    } else {
        // No criticality expectation away from the ball.
        verdict = "inconclusive";
        r["note"] = "informational: residual reported without a verdict for a non-ball shape";
    }
    Json res = measured(cr.rel_deviation, c.critical_tol, verdict);
    res["c_mean"] = cr.c_mean;
    r["residual"] = res;

    if (c.flow) {
        FlowOptions fo;
        fo.cluster = cl.indices;
        fo.h = c.order > 0 ? c.order : 1;
        fo.steps = c.flow_steps;
        fo.step = c.flow_step;
        fo.stationary_tol = c.stationary_tol;
        fo.boundary_samples = c.boundary_samples;
        fo.traces = c.trace_options();
        const FlowState f = run_flow(phi, c.setup(), fo);
        Json fl;
        fl["status"] = f.status;
        fl["steps"] = f.step_count;
        fl["gamma"] = f.gamma_history;
        fl["volume"] = f.volume_history;
        fl["residual"] = f.residual_history;
        fl["velocity_l2"] = f.velocity_history;
        fl["halvings"] = f.halvings;
        bool monotone = true;
        for (std::size_t i = 1; i < f.gamma_history.size(); ++i) monotone = monotone && f.gamma_history[i] < f.gamma_history[i - 1];
        double drift = 0.0;
        for (double v : f.volume_history) drift = std::max(drift, std::abs(v - f.volume0) / f.volume0);
        const std::string mv = monotone ? "pass" : "fail", dv = drift <= c.volume_tol ? "pass" : "fail";
        fl["monotone"] = measured(monotone ? 1.0 : 0.0, 1.0, 0.0, mv);
        fl["volume_drift"] = measured(drift, c.volume_tol, dv);
        r["flow"] = fl;
        // The flow's own verdicts replace the informational residual.
        verdict = c.shape.is_ball() ? combine_verdicts(verdict, combine_verdicts(mv, dv)) : combine_verdicts(mv, dv);

        std::ostringstream csv;
        csv.precision(17);
        csv << "step,gamma,volume,residual,velocity_l2,halvings\n";
        for (std::size_t i = 0; i < f.gamma_history.size(); ++i) {
            csv << i << ',' << f.gamma_history[i] << ',' << f.volume_history[i] << ',';
            if (i < f.residual_history.size()) csv << f.residual_history[i];
            csv << ',';
            if (i < f.velocity_history.size()) csv << f.velocity_history[i];
            csv << ',';
            if (i >= 1 && i - 1 < f.halvings.size()) csv << f.halvings[i - 1];
            csv << '\n';
        }
        out.csv = csv.str();
    }
    out.report["verdict"] = verdict;
    finish(out);
    return out;
}

CommandOutput cmd_branches(const RunConfig& c) {
    CommandOutput out;
    out.report = make_report("branches", c);
    Json& r = out.report["results"];
    const SolveSetup setup = c.setup();
    const MapExpr phi = c.shape.build(), psi = c.psi.build();
    const std::vector<double> grid = c.eps.empty() ? symmetric_grid(c.eps0, c.richardson) : c.eps;
    const EigenPath path = eigen_path(setup, phi, psi, grid, c.threads);
    r["eps"] = path.eps;
    Json br = Json::array();
    for (int b = 0; b < setup.count; ++b) br.push_back(path.branch(b));
    r["branches"] = br;
    r["min_overlap"] = path.min_overlap;
    std::string verdict = path.flagged ? "inconclusive" : "pass";
    if (path.flagged) r["note"] = path.note;

    if (c.crossing >= 0) {
        const CrossingReport x = crossing_probe(setup, phi, psi, c.crossing);
        Json j;
        j["status"] = x.status;
        j["eps_cross"] = x.eps_cross;
        j["gamma_slopes"] = {x.gamma_left, x.gamma_right};
        j["sorted_slopes"] = {x.sorted_left, x.sorted_right};
        const std::string gv = x.status == "inconclusive" ? "inconclusive" : (x.gamma_discrepancy <= 0.01 ? "pass" : "fail");
        j["gamma_discrepancy"] = measured(x.gamma_discrepancy, 0.01, gv);
        j["sorted_jump"] = x.sorted_jump;
        if (!x.note.empty()) j["note"] = x.note;
        r["crossing"] = j;
        verdict = combine_verdicts(verdict, x.status == "pass" ? "pass" : x.status);
    }

    std::ostringstream csv;
    csv.precision(17);
    csv << "eps";
    for (int b = 0; b < setup.count; ++b) csv << ",branch" << b + 1;
    csv << '\n';
    for (std::size_t e = 0; e < path.eps.size(); ++e) {
        csv << path.eps[e];
        for (int b = 0; b < setup.count; ++b) csv << ',' << path.branch(b)[e];
        csv << '\n';
    }
    out.csv = csv.str();
    out.report["verdict"] = verdict;
    finish(out);
    return out;
}

CommandOutput cmd_selftest(const RunConfig& c, std::function<void(const CriterionResult&)> progress) {
    AcceptanceOptions o;
    o.only = c.only;
    o.threads = c.threads;
    o.progress = std::move(progress);
    CommandOutput out;
    out.report = acceptance_report(run_acceptance(o), c);
    out.exit_code = exit_code_for(out.report["verdict"].get<std::string>());
    return out;
}

}  // namespace spectra_shape
