// Command-line front end: simulate | diagnose | converge | criticality.
// Exit codes: 0 success, 2 configuration error, 3 integration failure.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "scvi/experiment.hpp"
#include "scvi/models.hpp"
#include "scvi/version.hpp"

namespace {

struct CliOverrides {
    std::optional<std::string> config_path;
    std::optional<std::string> model;
    std::optional<std::string> scheme;
    std::optional<std::uint64_t> seed;
    std::optional<double> h;
    std::optional<long> steps;
    std::optional<double> horizon;
    std::optional<std::string> out;
    std::optional<int> ensemble;
    std::optional<double> tol;
    std::optional<double> fd_step;
    std::optional<int> levels;
    std::optional<int> paths;
    std::optional<int> j_index;
    std::optional<double> q0, p0, s0;
    std::vector<std::string> params;  // NAME=VALUE
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->set_help_flag("--help", "print this help message and exit");
    cmd->add_option("--config", o.config_path, "JSON config file; flags override its values");
    cmd->add_option("--model", o.model, "registered model name");
    cmd->add_option("--scheme", o.scheme, "contact | em | both");
    cmd->add_option("--seed", o.seed, "noise seed");
    cmd->add_option("--h", o.h, "step size");
    cmd->add_option("--steps", o.steps, "number of steps N");
    cmd->add_option("--T", o.horizon, "time horizon; must equal steps*h");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--ensemble", o.ensemble, "number of ensemble members");
    cmd->add_option("--tol", o.tol, "headline tolerance of the subcommand");
    cmd->add_option("--fd-step", o.fd_step, "finite-difference step for diagnostics");
    cmd->add_option("--levels", o.levels, "dyadic refinement levels (converge)");
    cmd->add_option("--paths", o.paths, "number of seeds (converge)");
    cmd->add_option("--j", o.j_index, "single interior index (criticality)");
    cmd->add_option("--q0", o.q0, "initial position");
    cmd->add_option("--p0", o.p0, "initial momentum");
    cmd->add_option("--s0", o.s0, "initial action value");
    cmd->add_option("--param", o.params, "model parameter override NAME=VALUE (repeatable)");
}

scvi::ExperimentConfig assemble(const CliOverrides& o) {
    scvi::ExperimentConfig config;
    if (o.config_path) config = scvi::ExperimentConfig::from_json_file(*o.config_path);
    if (o.model) config.model = *o.model;
    if (o.scheme) config.scheme = *o.scheme;
    if (o.seed) config.seed = *o.seed;
    if (o.h) config.h = *o.h;
    if (o.steps) config.steps = *o.steps;
    if (o.horizon) config.horizon = *o.horizon;
    if (o.out) config.out = *o.out;
    if (o.ensemble) config.ensemble = *o.ensemble;
    if (o.tol) config.tol = *o.tol;
    if (o.fd_step) config.fd_step = *o.fd_step;
    if (o.levels) config.levels = *o.levels;
    if (o.paths) config.paths = *o.paths;
    if (o.j_index) config.j_index = *o.j_index;
    if (o.q0) config.q0 = {*o.q0};
    if (o.p0) config.p0 = {*o.p0};
    if (o.s0) config.s0 = *o.s0;
    for (const std::string& kv : o.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::invalid_argument("--param expects NAME=VALUE, got '" + kv + "'");
        }
        config.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic contact variational integrator harness"};
    app.set_help_flag("--help", "print this help message and exit");
    app.set_version_flag("--version", scvi::kVersion);
    app.require_subcommand(1);

    CliOverrides o;
    int (*runner)(const scvi::ExperimentConfig&) = nullptr;

    auto* simulate = app.add_subcommand("simulate", "integrate and write trajectory CSVs");
    add_common_options(simulate, o);
    simulate->callback([&] { runner = scvi::run_simulate; });

    auto* diagnose =
        app.add_subcommand("diagnose", "contact-structure and conformal-factor checks");
    add_common_options(diagnose, o);
    diagnose->callback([&] { runner = scvi::run_diagnose; });

    auto* converge = app.add_subcommand("converge", "dyadic self-convergence study");
    add_common_options(converge, o);
    converge->callback([&] { runner = scvi::run_converge; });

    auto* criticality =
        app.add_subcommand("criticality", "terminal-action derivative along the q-path");
    add_common_options(criticality, o);
    criticality->callback([&] { runner = scvi::run_criticality; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return runner(assemble(o));
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
