#include "spectra_shape/report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

int rank(const std::string& v) {
    if (v == "fail") return 2;
    if (v == "inconclusive") return 1;
    return 0;
}

}  // namespace

Json measured(double value, double tolerance, const std::string& verdict) {
    Json j;
    j["value"] = value;
    j["tolerance"] = tolerance;
    j["verdict"] = verdict;
    return j;
}

Json measured(double value, double reference, double tolerance, const std::string& verdict) {
    Json j;
    j["value"] = value;
    j["reference"] = reference;
    j["tolerance"] = tolerance;
    j["verdict"] = verdict;
    return j;
}

std::string combine_verdicts(const std::string& a, const std::string& b) { return rank(a) >= rank(b) ? a : b; }

int exit_code_for(const std::string& verdict) { return verdict == "fail" ? 1 : 0; }

Json mesh_stats(const ShapeSolve& s) {
    Json j;
    const RefMesh& ref = s.mesh->ref();
    j["h"] = ref.h;
    j["triangles"] = static_cast<int>(ref.triangles.size());
    j["vertices"] = static_cast<int>(ref.vertices.size());
    j["min_angle_degrees"] = ref.min_angle_degrees();
    j["degree"] = s.assembled.space.degree;
    j["nodes"] = s.mesh->num_nodes();
    j["dofs_full"] = s.assembled.space.num_full();
    j["dofs_free"] = s.assembled.space.num_free();
    j["area"] = s.mesh->area();
    j["min_jacobian"] = s.mesh->min_det().first;
    j["eigensolver"] = s.spectrum.method;
    return j;
}

Json make_report(const std::string& command, const RunConfig& c) {
    Json r;
    r["tool"] = "spectra-shape";
    r["command"] = command;
    Json p;
    p["config_hash"] = c.hash();
    Json cfg = Json::object();
    std::size_t pos = 0;
    const std::string text = c.canonical();
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const std::string line = text.substr(pos, end - pos);
        const auto eq = line.find(" = ");
        cfg[line.substr(0, eq)] = line.substr(eq + 3);
        pos = end + 1;
    }
    p["config"] = cfg;
    p["seed"] = std::to_string(seed_from_env());
    p["penalty_scale"] = penalty_scale_from_env();
    Json tol;
    tol["cluster_tol"] = c.cluster_tol;
    tol["eigen_residual"] = EigenOptions{}.tolerance;
    tol["fd_relative"] = c.fd_tol;
    tol["fd_relative_intermediate"] = c.fd_tol_intermediate;
    tol["small_derivative_abs"] = c.small_abs;
    tol["critical"] = c.critical_tol;
    p["tolerances"] = tol;
    r["provenance"] = p;
    r["results"] = Json::object();
    r["verdict"] = "pass";
    r["timestamps"] = {{"started", utc_timestamp()}};
    return r;
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string deterministic_text(Json report) {
    report.erase("timestamps");
    return report.dump(2);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) reject("report", "cannot write " + path);
    out << text;
    if (!out) reject("report", "write failed for " + path);
}

}  // namespace spectra_shape
