#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spectra_shape/commands.hpp"
#include "spectra_shape/error.hpp"

using namespace spectra_shape;

namespace {

// Command-line values land in the same flat key space as config files.
struct Overrides {
    std::map<std::string, std::string> flags;
    std::vector<std::string> sets;  // --set section.key=value

    void bind(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(name, [this, key](const std::string& v) { flags[key] = v; }, help);
    }
};

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    write_text_file(path, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral shape derivatives on deformed disks"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    app.set_help_flag("--help", "Print this help message and exit");  // -h is not free: --h is the mesh size
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::string config_path;
    Overrides ov;
    app.add_option("--config", config_path, "Config file ([section] / key = value)")->check(CLI::ExistingFile);
    ov.bind(&app, "--out", "output.out", "Report path (default: stdout)");
    ov.bind(&app, "--dump-mesh", "output.dump_mesh", "Write the mapped mesh to PATH");
    ov.bind(&app, "--dump-forms", "output.dump_forms", "Write A and B to PREFIX.A.txt / PREFIX.B.txt");
    ov.bind(&app, "--threads", "run.threads", "Worker threads for independent solves");
    app.add_option("--set", ov.sets, "Override any config key: section.key=value")->take_all();

    auto shape_opts = [&ov](CLI::App* s) {
        ov.bind(s, "--problem", "problem.kind", "p10, p20, p21, neumann-biharmonic, intermediate, lame, reissner-mindlin");
        ov.bind(s, "--shape", "shape.map", "disk, ellipse or stretch");
        ov.bind(s, "--a", "shape.a", "Ellipse semi-axis along x");
        ov.bind(s, "--b", "shape.b", "Ellipse semi-axis along y (default 1/a)");
        ov.bind(s, "--stretch", "shape.stretch", "Stretch factor along y");
        ov.bind(s, "--h", "mesh.h", "Mesh size");
        ov.bind(s, "-k,--count", "solver.count", "Number of eigenvalues");
        ov.bind(s, "--cluster", "derivative.cluster", "1-based consecutive indices, e.g. 2,3");
        ov.bind(s, "--csv", "output.csv", "CSV table path");
    };
    auto field_opts = [&ov](CLI::App* s) {
        ov.bind(s, "--psi", "perturbation.kind", "dilation, translation, bump or stretch");
        ov.bind(s, "--order", "derivative.order", "Gamma_{F,h} order h (0 = all)");
        ov.bind(s, "--eps0", "derivative.eps0", "FD step");
    };

    CLI::App* eig = app.add_subcommand("eig", "Eigenvalues, clusters and symmetric functions");
    shape_opts(eig);
    CLI::App* dg = app.add_subcommand("dgamma", "Shape derivative: formula vs FD vs branch slopes");
    shape_opts(dg);
    field_opts(dg);
    CLI::App* crit = app.add_subcommand("critical", "Criticality residual; --flow runs the constrained descent");
    shape_opts(crit);
    ov.bind(crit, "--order", "derivative.order", "Gamma_{F,h} order for the flow");
    bool flow = false;
    crit->add_flag("--flow", flow, "Run the volume-constrained flow");
    ov.bind(crit, "--steps", "flow.steps", "Flow steps");
    CLI::App* br = app.add_subcommand("branches", "Eigenvalue branches along phi + eps psi");
    shape_opts(br);
    field_opts(br);
    ov.bind(br, "--eps", "branches.eps", "Comma-separated eps grid");
    ov.bind(br, "--crossing", "branches.crossing", "1-based lower index of a crossing probe");
    CLI::App* self = app.add_subcommand("selftest", "Run the acceptance suite");
    ov.bind(self, "--only", "selftest.only", "Comma-separated criteria subset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    RunConfig config;
    try {
        KeyValues kv;
        if (!config_path.empty()) kv = read_config_file(config_path);
        for (const auto& s : ov.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set", "expected section.key=value, got '" + s + "'");
            kv[s.substr(0, eq)] = s.substr(eq + 1);
        }
        for (const auto& [k, v] : ov.flags) kv[k] = v;
        if (flow) kv["flow.enabled"] = "true";
        config = make_config(kv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        CommandOutput out;
        if (eig->parsed()) {
            out = cmd_eig(config);
        } else if (dg->parsed()) {
            out = cmd_dgamma(config);
        } else if (crit->parsed()) {
            out = cmd_critical(config);
        } else if (br->parsed()) {
            out = cmd_branches(config);
        } else {
            out = cmd_selftest(config, [](const CriterionResult& r) { std::cerr << criterion_line(r) << std::endl; });
        }
        write_or_print(config.out, out.report.dump(2) + "\n");
        if (!out.csv.empty()) {
            std::string csv = config.csv;
            if (csv.empty() && !config.out.empty() && config.out != "-") csv = config.out + ".csv";
            write_or_print(csv, out.csv);
        }
        std::cerr << "verdict: " << out.report["verdict"].get<std::string>() << "\n";
        return out.exit_code;
    } catch (const Rejection& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
