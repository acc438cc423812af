#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectra_shape/perturb.hpp"

namespace spectra_shape {

// Malformed or out-of-range configuration; `field` is the offending key.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

// Flat "section.key" -> value text.
using KeyValues = std::map<std::string, std::string>;

// Reads "[section]" / "key = value" files.  '#' and ';' start comments.
KeyValues read_config_file(const std::string& path);

struct ShapeConfig {
    std::string map = "disk";  // disk, ellipse, stretch
    double a = 1.15;           // ellipse semi-axes; b = 0 means 1 / a
    double b = 0.0;
    double stretch = 1.0;      // (x, y) -> (x, stretch y)
    // Optional cos(p theta) bump added on top of the base map.
    int bump_p = 2;
    double bump_amplitude = 0.0;
    double bump_phase = 0.0;

    MapExpr build() const;
    // The unit disk up to a dilation.
    bool is_ball() const;
};

struct PsiConfig {
    std::string kind = "dilation";  // dilation, translation, bump, stretch
    double dx = 1.0, dy = 0.0;      // translation
    int p = 2;                       // bump
    double amplitude = 1.0, phase = 0.0;
    double sx = 1.0, sy = 0.0;       // stretch: (x, y) -> (sx x, sy y)

    MapExpr build() const;
};

struct RunConfig {
    ProblemSpec problem;
    ShapeConfig shape;
    PsiConfig psi;
    double h = 0.05;
    int count = 8;
    double cluster_tol = 1e-3;
    int boundary_samples = 256;
    std::string traces = "annulus";  // annulus, patch

    std::vector<int> cluster;  // 0-based; written 1-based in files
    int order = 0;             // Gamma_{F,h}; 0 = every h
    double eps0 = 1e-3;
    bool richardson = true;
    double fd_tol = 0.02;      // relative; problem I uses fd_tol_intermediate
    double fd_tol_intermediate = 0.10;
    double nagy_tol = 0.05;    // sorted splitting slopes vs FD branch slopes
    double small_abs = 1e-3;   // |both| <= small_abs * |Gamma| counts as zero
    std::vector<double> eps;   // branches grid; empty = symmetric grid of eps0
    int crossing = -1;         // 0-based lower index of a crossing probe

    double critical_tol = 0.05;
    bool flow = false;
    int flow_steps = 30;
    double flow_step = 0.02;
    double stationary_tol = 1e-3;
    double volume_tol = 1e-3;

    std::vector<int> only;  // selftest criteria subset

    std::string out, csv, dump_mesh, dump_forms;
    int threads = 1;

    SolveSetup setup() const;
    TraceOptions trace_options() const;
    // Sorted key = value lines of every resolved field (17 digits).
    std::string canonical() const;
    // FNV-1a 64 of canonical(), hex.
    std::string hash() const;
};

// Every accepted key, with its default rendered as text.
std::vector<std::string> config_keys();

// Parses and validates against the module preconditions; throws ConfigError.
RunConfig make_config(const KeyValues& values);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace spectra_shape
