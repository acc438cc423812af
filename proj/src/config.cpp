#include "spectra_shape/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + v + "'");
    }
    if (used != v.size() || !std::isfinite(x)) throw ConfigError(key, "expected a finite number, got '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError(key, "expected an integer, got '" + v + "'");
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

// Indices are 1-based on the outside.
std::function<void(RunConfig&, const std::string&)> index_list(std::vector<int> RunConfig::*member,
                                                                 const std::string& key) {
    return [member, key](RunConfig& c, const std::string& v) {
        std::vector<int> out;
        for (const auto& s : split_list(v)) {
            const int i = to_int(key, s);
            if (i < 1) throw ConfigError(key, "indices are 1-based and must be positive");
            out.push_back(i - 1);
        }
        c.*member = out;
    };
}

std::string index_text(const std::vector<int>& v) {
    std::vector<std::string> s;
    for (int i : v) s.push_back(std::to_string(i + 1));
    return join(s);
}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = [] {
        std::vector<Field> t;
        auto dbl = [&t](const std::string& key, auto get_ref) {
            t.push_back({key, [key, get_ref](RunConfig& c, const std::string& v) { get_ref(c) = to_double(key, v); },
                         [get_ref](const RunConfig& c) { return num(get_ref(const_cast<RunConfig&>(c))); }});
        };
        auto integer = [&t](const std::string& key, auto get_ref) {
            t.push_back({key, [key, get_ref](RunConfig& c, const std::string& v) { get_ref(c) = to_int(key, v); },
                         [get_ref](const RunConfig& c) { return std::to_string(get_ref(const_cast<RunConfig&>(c))); }});
        };
        auto boolean = [&t](const std::string& key, auto get_ref) {
            t.push_back({key, [key, get_ref](RunConfig& c, const std::string& v) { get_ref(c) = to_bool(key, v); },
                         [get_ref](const RunConfig& c) { return std::string(get_ref(const_cast<RunConfig&>(c)) ? "true" : "false"); }});
        };
        auto text = [&t](const std::string& key, auto get_ref) {
            t.push_back({key, [get_ref](RunConfig& c, const std::string& v) { get_ref(c) = v; },
                         [get_ref](const RunConfig& c) { return get_ref(const_cast<RunConfig&>(c)); }});
        };

        t.push_back({"problem.kind",
                     [](RunConfig& c, const std::string& v) {
                         try {
                             c.problem.kind = parse_problem(v);
                         } catch (const Rejection& e) {
                             throw ConfigError("problem.kind", e.what());
                         }
                     },
                     [](const RunConfig& c) { return problem_name(c.problem.kind); }});
        dbl("problem.lambda", [](RunConfig& c) -> double& { return c.problem.lambda; });
        dbl("problem.mu", [](RunConfig& c) -> double& { return c.problem.mu; });
        dbl("problem.kappa", [](RunConfig& c) -> double& { return c.problem.kappa; });
        dbl("problem.thickness", [](RunConfig& c) -> double& { return c.problem.t; });

        text("shape.map", [](RunConfig& c) -> std::string& { return c.shape.map; });
        dbl("shape.a", [](RunConfig& c) -> double& { return c.shape.a; });
        dbl("shape.b", [](RunConfig& c) -> double& { return c.shape.b; });
        dbl("shape.stretch", [](RunConfig& c) -> double& { return c.shape.stretch; });
        integer("shape.bump_p", [](RunConfig& c) -> int& { return c.shape.bump_p; });
        dbl("shape.bump_amplitude", [](RunConfig& c) -> double& { return c.shape.bump_amplitude; });
        dbl("shape.bump_phase", [](RunConfig& c) -> double& { return c.shape.bump_phase; });

        text("perturbation.kind", [](RunConfig& c) -> std::string& { return c.psi.kind; });
        dbl("perturbation.dx", [](RunConfig& c) -> double& { return c.psi.dx; });
        dbl("perturbation.dy", [](RunConfig& c) -> double& { return c.psi.dy; });
        integer("perturbation.p", [](RunConfig& c) -> int& { return c.psi.p; });
        dbl("perturbation.amplitude", [](RunConfig& c) -> double& { return c.psi.amplitude; });
        dbl("perturbation.phase", [](RunConfig& c) -> double& { return c.psi.phase; });
        dbl("perturbation.sx", [](RunConfig& c) -> double& { return c.psi.sx; });
        dbl("perturbation.sy", [](RunConfig& c) -> double& { return c.psi.sy; });

        dbl("mesh.h", [](RunConfig& c) -> double& { return c.h; });
        integer("solver.count", [](RunConfig& c) -> int& { return c.count; });
        dbl("solver.cluster_tol", [](RunConfig& c) -> double& { return c.cluster_tol; });
        integer("traces.samples", [](RunConfig& c) -> int& { return c.boundary_samples; });
        text("traces.method", [](RunConfig& c) -> std::string& { return c.traces; });

        t.push_back({"derivative.cluster", index_list(&RunConfig::cluster, "derivative.cluster"),
                     [](const RunConfig& c) { return index_text(c.cluster); }});
        integer("derivative.order", [](RunConfig& c) -> int& { return c.order; });
        dbl("derivative.eps0", [](RunConfig& c) -> double& { return c.eps0; });
        boolean("derivative.richardson", [](RunConfig& c) -> bool& { return c.richardson; });
        dbl("derivative.tolerance", [](RunConfig& c) -> double& { return c.fd_tol; });
        dbl("derivative.tolerance_intermediate", [](RunConfig& c) -> double& { return c.fd_tol_intermediate; });
        dbl("derivative.tolerance_nagy", [](RunConfig& c) -> double& { return c.nagy_tol; });
        dbl("derivative.small_abs", [](RunConfig& c) -> double& { return c.small_abs; });
        t.push_back({"branches.eps",
                     [](RunConfig& c, const std::string& v) {
                         c.eps.clear();
                         for (const auto& s : split_list(v)) c.eps.push_back(to_double("branches.eps", s));
                     },
                     [](const RunConfig& c) {
                         std::vector<std::string> s;
                         for (double x : c.eps) s.push_back(num(x));
                         return join(s);
                     }});
        t.push_back({"branches.crossing",
                     [](RunConfig& c, const std::string& v) {
                         const int j = to_int("branches.crossing", v);
                         if (j != 0 && j < 1) throw ConfigError("branches.crossing", "1-based index or 0 for none");
                         c.crossing = j - 1;
                     },
                     [](const RunConfig& c) { return std::to_string(c.crossing + 1); }});

        dbl("critical.tolerance", [](RunConfig& c) -> double& { return c.critical_tol; });
        boolean("flow.enabled", [](RunConfig& c) -> bool& { return c.flow; });
        integer("flow.steps", [](RunConfig& c) -> int& { return c.flow_steps; });
        dbl("flow.step", [](RunConfig& c) -> double& { return c.flow_step; });
        dbl("flow.stationary_tol", [](RunConfig& c) -> double& { return c.stationary_tol; });
        dbl("flow.volume_tol", [](RunConfig& c) -> double& { return c.volume_tol; });

        t.push_back({"selftest.only",
                     [](RunConfig& c, const std::string& v) {
                         c.only.clear();
                         for (const auto& s : split_list(v)) c.only.push_back(to_int("selftest.only", s));
                     },
                     [](const RunConfig& c) {
                         std::vector<std::string> s;
                         for (int i : c.only) s.push_back(std::to_string(i));
                         return join(s);
                     }});

        text("output.out", [](RunConfig& c) -> std::string& { return c.out; });
        text("output.csv", [](RunConfig& c) -> std::string& { return c.csv; });
        text("output.dump_mesh", [](RunConfig& c) -> std::string& { return c.dump_mesh; });
        text("output.dump_forms", [](RunConfig& c) -> std::string& { return c.dump_forms; });
        integer("run.threads", [](RunConfig& c) -> int& { return c.threads; });
        return t;
    }();
    return f;
}

// Output paths and thread count do not change the numbers.
bool hashed(const std::string& key) { return key.rfind("output.", 0) != 0 && key != "run.threads"; }

void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

void validate(const RunConfig& c) {
    try {
        c.problem.validate();
    } catch (const Rejection& e) {
        std::string key = "problem.kind";
        const std::string w = e.what();
        if (w.find("lambda") != std::string::npos) key = "problem.lambda";
        else if (w.find("mu ") != std::string::npos) key = "problem.mu";
        else if (w.find("kappa") != std::string::npos) key = "problem.kappa";
        else if (w.find("thickness") != std::string::npos) key = "problem.thickness";
        throw ConfigError(key, w);
    }
    check(c.shape.map == "disk" || c.shape.map == "ellipse" || c.shape.map == "stretch", "shape.map",
          "expected disk, ellipse or stretch, got '" + c.shape.map + "'");
    check(c.shape.a > 0.0, "shape.a", "semi-axis must be positive");
    check(c.shape.b >= 0.0, "shape.b", "semi-axis must be positive (0 selects 1 / a)");
    check(c.shape.stretch > 0.0, "shape.stretch", "stretch factor must be positive");
    check(c.shape.bump_p >= 0, "shape.bump_p", "bump order must be non-negative");
    check(c.psi.kind == "dilation" || c.psi.kind == "translation" || c.psi.kind == "bump" || c.psi.kind == "stretch",
          "perturbation.kind", "expected dilation, translation, bump or stretch, got '" + c.psi.kind + "'");
    check(c.psi.p >= 0, "perturbation.p", "bump order must be non-negative");
    check(c.h >= 0.005 && c.h <= 0.5, "mesh.h", "target size must lie in [0.005, 0.5]");
    check(c.count >= 1 && c.count <= 200, "solver.count", "eigenvalue count must lie in [1, 200]");
    check(c.cluster_tol > 0.0 && c.cluster_tol < 0.5, "solver.cluster_tol", "cluster tolerance must lie in (0, 0.5)");
    check(c.boundary_samples >= 16, "traces.samples", "at least 16 boundary samples");
    check(c.traces == "annulus" || c.traces == "patch", "traces.method", "expected annulus or patch");
    for (std::size_t i = 0; i < c.cluster.size(); ++i) {
        check(c.cluster[i] < c.count, "derivative.cluster", "index exceeds solver.count");
        if (i) check(c.cluster[i] == c.cluster[i - 1] + 1, "derivative.cluster", "indices must be consecutive");
    }
    check(c.order >= 0, "derivative.order", "order must be non-negative (0 = all)");
    if (!c.cluster.empty()) check(c.order <= static_cast<int>(c.cluster.size()), "derivative.order", "order exceeds the cluster size");
    check(c.eps0 > 0.0 && c.eps0 <= 0.1, "derivative.eps0", "step must lie in (0, 0.1]");
    check(c.fd_tol > 0.0, "derivative.tolerance", "tolerance must be positive");
    check(c.fd_tol_intermediate > 0.0, "derivative.tolerance_intermediate", "tolerance must be positive");
    check(c.nagy_tol > 0.0, "derivative.tolerance_nagy", "tolerance must be positive");
    check(c.small_abs > 0.0, "derivative.small_abs", "tolerance must be positive");
    for (double e : c.eps) check(std::abs(e) <= 0.2, "branches.eps", "|eps| must not exceed 0.2");
    check(c.crossing < 0 || c.crossing + 1 < c.count, "branches.crossing", "pair must lie below solver.count");
    check(c.critical_tol > 0.0, "critical.tolerance", "tolerance must be positive");
    check(c.flow_steps >= 0 && c.flow_steps <= 1000, "flow.steps", "steps must lie in [0, 1000]");
    check(c.flow_step > 0.0 && c.flow_step < 0.2, "flow.step", "step must lie in (0, 0.2)");
    check(c.stationary_tol > 0.0, "flow.stationary_tol", "tolerance must be positive");
    check(c.volume_tol > 0.0, "flow.volume_tol", "tolerance must be positive");
    for (int i : c.only) check(i >= 1 && i <= 9, "selftest.only", "criteria are numbered 1 to 9");
    check(c.threads >= 1 && c.threads <= 256, "run.threads", "threads must lie in [1, 256]");
    // The map must produce an admissible boundary.
    try {
        (void)build_boundary(c.shape.build(), 64);
    } catch (const Rejection& e) {
        throw ConfigError("shape.map", e.what());
    }
}

}  // namespace

MapExpr ShapeConfig::build() const {
    MapExpr m = MapExpr::identity();
    if (map == "ellipse") {
        m = MapExpr::ellipse(a, b > 0.0 ? b : 1.0 / a);
    } else if (map == "stretch") {
        Mat2 s = Mat2::Identity();
        s(1, 1) = stretch;
        m = MapExpr::linear(s);
    }
    if (bump_amplitude != 0.0) m = m + MapExpr::radial_bump(bump_p, bump_amplitude, bump_phase);
    return m;
}

bool ShapeConfig::is_ball() const {
    if (bump_amplitude != 0.0) return false;
    if (map == "disk") return true;
    if (map == "ellipse") return a == (b > 0.0 ? b : 1.0 / a);
    return stretch == 1.0;
}

MapExpr PsiConfig::build() const {
    if (kind == "translation") return MapExpr::constant(Vec2(dx, dy));
    if (kind == "bump") return MapExpr::radial_bump(p, amplitude, phase);
    if (kind == "stretch") {
        Mat2 s = Mat2::Zero();
        s(0, 0) = sx;
        s(1, 1) = sy;
        return MapExpr::linear(s);
    }
    return MapExpr::identity();
}

SolveSetup RunConfig::setup() const {
    SolveSetup s = make_setup(problem, h, count);
    s.assembly.threads = threads;
    return s;
}

TraceOptions RunConfig::trace_options() const {
    TraceOptions o;
    o.method = traces == "patch" ? TraceMethod::Patch : TraceMethod::Annulus;
    return o;
}

std::string RunConfig::canonical() const {
    std::vector<std::string> lines;
    for (const auto& f : fields())
        if (hashed(f.key)) lines.push_back(f.key + " = " + f.get(*this));
    std::sort(lines.begin(), lines.end());
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string RunConfig::hash() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path);
    // The ini reader only knows ';' comments.
    std::stringstream text;
    for (std::string line; std::getline(in, line);) {
        const std::string t = trim(line);
        text << (!t.empty() && t[0] == '#' ? ";" + t : line) << "\n";
    }
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(text, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("--config", e.message() + " (" + path + " line " + std::to_string(e.line()) + ")");
    }
    KeyValues out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(section, "key outside a [section]");
        for (const auto& [key, value] : body) {
            std::string v = value.get_value<std::string>();
            // Inline comments.
            const auto hash = v.find_first_of("#;");
            if (hash != std::string::npos) v = v.substr(0, hash);
            out[section + "." + key] = trim(v);
        }
    }
    return out;
}

RunConfig make_config(const KeyValues& values) {
    RunConfig c;
    for (const auto& [key, value] : values) {
        const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return f.key == key; });
        if (it == fields().end()) throw ConfigError(key, "unknown configuration key");
        it->set(c, trim(value));
    }
    validate(c);
    return c;
}

}  // namespace spectra_shape
