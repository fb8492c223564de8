#include "scvi/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "scvi/diagnostics.hpp"
#include "scvi/models.hpp"
#include "scvi/trajectory.hpp"
#include "scvi/version.hpp"
#include "scvi/wiener_path.hpp"

namespace fs = std::filesystem;

namespace scvi {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Collects every emitted file so the manifest can list it with a checksum.
class OutputWriter {
public:
    explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& content) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open output file " + (dir_ / name).string());
        os << content;
        os.close();
        entries_.push_back({name, content.size(), fnv1a64_hex(content)});
    }

    nlohmann::json manifest_entries() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : entries_) {
            arr.push_back({{"file", e.name}, {"bytes", e.bytes}, {"fnv1a64", e.checksum}});
        }
        return arr;
    }

    void write_manifest(nlohmann::json manifest) {
        manifest["outputs"] = manifest_entries();
        std::ofstream os(dir_ / "run_manifest.json", std::ios::binary);
        os << manifest.dump(2) << '\n';
    }

private:
    struct Entry {
        std::string name;
        std::size_t bytes;
        std::string checksum;
    };
    fs::path dir_;
    std::vector<Entry> entries_;
};

struct RunClock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

nlohmann::json base_manifest(const char* command, const ExperimentConfig& config,
                             const RunClock& clock) {
    return nlohmann::json{{"command", command},
                          {"config", config.to_json()},
                          {"version", kVersion},
                          {"compiler", __VERSION__},
                          {"wall_ms", clock.elapsed_ms()}};
}

ContactState initial_state(const ExperimentConfig& config) {
    Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(config.q0.data(),
                                                          static_cast<Eigen::Index>(config.q0.size()));
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(config.p0.data(),
                                                          static_cast<Eigen::Index>(config.p0.size()));
    return ContactState(q, p, config.s0, 0.0);
}

std::vector<std::string> selected_schemes(const std::string& scheme) {
    if (scheme == "both") return {"contact", "em"};
    return {scheme};
}

const Stepper& stepper_for(const ModelBundle& bundle, const std::string& scheme) {
    return scheme == "contact" ? bundle.contact : bundle.em;
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream os;
    traj.write_csv(os);
    return os.str();
}

std::string gnuplot_trajectories(const std::vector<std::string>& schemes, int n) {
    std::ostringstream os;
    os << "set datafile separator \",\"\nset key outside\nset xlabel \"t\"\n"
       << "set multiplot layout 3,1\n";
    const char* labels[3] = {"q1", "p1", "s"};
    const int cols[3] = {2, 1 + n, 1 + 2 * n};  // q1, p1, s columns (1-based, col 1 = t)
    for (int row = 0; row < 3; ++row) {
        os << "set ylabel \"" << labels[row] << "\"\nplot ";
        for (std::size_t i = 0; i < schemes.size(); ++i) {
            if (i) os << ", ";
            os << "\"trajectory_" << schemes[i] << ".csv\" using 1:" << cols[row] + 1
               << " with lines title \"" << schemes[i] << "\"";
        }
        os << '\n';
    }
    os << "unset multiplot\n";
    return os.str();
}

}  // namespace

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

void ExperimentConfig::validate() const {
    make_model(model, params);  // validates the name and parameter keys
    if (scheme != "contact" && scheme != "em" && scheme != "both") {
        throw std::invalid_argument("scheme must be one of: contact, em, both");
    }
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("h must be > 0");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (ensemble < 1) throw std::invalid_argument("ensemble must be >= 1");
    if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be > 0");
    if (levels < 1) throw std::invalid_argument("levels must be >= 1");
    if (paths < 1) throw std::invalid_argument("paths must be >= 1");
    if (q0.size() != 1 || p0.size() != 1) {
        throw std::invalid_argument("initial q and p must have length 1 for the registered models");
    }
    for (double v : q0)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite initial q");
    for (double v : p0)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite initial p");
    if (!std::isfinite(s0)) throw std::invalid_argument("non-finite initial s");
    if (horizon) {
        const double t_derived = static_cast<double>(steps) * h;
        if (std::abs(*horizon - t_derived) > 1e-9 * std::max(1.0, std::abs(*horizon))) {
            throw std::invalid_argument("T conflicts with steps*h (T = " + g17(*horizon) +
                                        ", steps*h = " + g17(t_derived) + ")");
        }
    }
    if (j_index && *j_index < 1) {
        throw std::invalid_argument("j must lie in 1..steps-1");
    }
    if (j_index && *j_index > steps - 1) {
        throw std::invalid_argument("j must lie in 1..steps-1");
    }
    if (tol && !(*tol > 0.0)) throw std::invalid_argument("tol must be > 0");
}

void ExperimentConfig::merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config JSON must be an object");
    bool steps_given = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "model") {
            model = value.get<std::string>();
        } else if (key == "scheme") {
            scheme = value.get<std::string>();
        } else if (key == "params") {
            for (const auto& [name, v] : value.items()) params[name] = v.get<double>();
        } else if (key == "initial") {
            for (const auto& [name, v] : value.items()) {
                if (name == "q") q0 = v.get<std::vector<double>>();
                else if (name == "p") p0 = v.get<std::vector<double>>();
                else if (name == "s") s0 = v.get<double>();
                else throw std::invalid_argument("unknown key initial." + name);
            }
        } else if (key == "h") {
            h = value.get<double>();
        } else if (key == "steps") {
            steps = value.get<long>();
            steps_given = true;
        } else if (key == "T") {
            horizon = value.get<double>();
        } else if (key == "seed") {
            seed = value.get<std::uint64_t>();
        } else if (key == "ensemble") {
            ensemble = value.get<int>();
        } else if (key == "out") {
            out = value.get<std::string>();
        } else if (key == "tol") {
            tol = value.get<double>();
        } else if (key == "fd_step") {
            fd_step = value.get<double>();
        } else if (key == "levels") {
            levels = value.get<int>();
        } else if (key == "paths") {
            paths = value.get<int>();
        } else if (key == "j") {
            j_index = value.get<int>();
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
    }
    // T without steps derives the step count.
    if (horizon && !steps_given && !(j.contains("steps"))) {
        if (!(h > 0.0)) throw std::invalid_argument("h must be > 0 to derive steps from T");
        const double raw = *horizon / h;
        const long rounded = std::lround(raw);
        if (rounded < 1 || std::abs(raw - static_cast<double>(rounded)) > 1e-9) {
            throw std::invalid_argument("T is not an integer multiple of h");
        }
        steps = rounded;
    }
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot read config file " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config file " + path + " is not valid JSON: " + e.what());
    }
    ExperimentConfig config;
    config.merge_json(j);
    return config;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j{{"model", model},
                     {"scheme", scheme},
                     {"params", params},
                     {"initial", {{"q", q0}, {"p", p0}, {"s", s0}}},
                     {"h", h},
                     {"steps", steps},
                     {"seed", seed},
                     {"ensemble", ensemble},
                     {"out", out},
                     {"fd_step", fd_step},
                     {"levels", levels},
                     {"paths", paths}};
    if (horizon) j["T"] = *horizon;
    if (tol) j["tol"] = *tol;
    if (j_index) j["j"] = *j_index;
    return j;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int run_simulate(const ExperimentConfig& config) {
    config.validate();
    const RunClock clock;
    const ModelBundle bundle = make_model(config.model, config.params);
    const ContactState x0 = initial_state(config);
    OutputWriter writer(config.out);

    const std::vector<std::string> schemes = selected_schemes(config.scheme);
    long total_iters = 0;
    double max_residual = 0.0;
    nlohmann::json error_info;
    bool failed = false;

    for (const std::string& scheme : schemes) {
        const Stepper& stepper = stepper_for(bundle, scheme);

        std::vector<IntegrationResult> members(static_cast<std::size_t>(config.ensemble));
        auto run_member = [&](int i) {
            WienerPath path = WienerPath::generate(config.seed + static_cast<std::uint64_t>(i),
                                                   stepper.m, config.steps, config.h);
            return integrate(stepper, x0, path);
        };
        if (config.ensemble == 1) {
            members[0] = run_member(0);
        } else {
            std::vector<std::future<IntegrationResult>> futures;
            futures.reserve(members.size());
            for (int i = 0; i < config.ensemble; ++i) {
                futures.push_back(std::async(std::launch::async, run_member, i));
            }
            for (std::size_t i = 0; i < futures.size(); ++i) members[i] = futures[i].get();
        }

        for (std::size_t i = 0; i < members.size(); ++i) {
            const IntegrationResult& res = members[i];
            total_iters += res.trajectory.total_newton_iters;
            max_residual = std::max(max_residual, res.trajectory.max_solver_residual);
            if (!res.ok && !failed) {
                failed = true;
                error_info = {{"scheme", scheme},
                              {"member", i},
                              {"step", res.failed_step},
                              {"message", res.error}};
            }
        }

        writer.write("trajectory_" + scheme + ".csv", trajectory_csv(members[0].trajectory));

        if (config.ensemble > 1) {
            std::size_t shared = members[0].trajectory.states.size();
            for (const auto& res : members) shared = std::min(shared, res.trajectory.states.size());
            std::ostringstream os;
            os << "t,norm_q,norm_p,norm_s,norm_state\n";
            for (std::size_t j = 0; j < shared; ++j) {
                std::vector<ContactState> sample;
                sample.reserve(members.size());
                for (const auto& res : members) sample.push_back(res.trajectory.states[j]);
                const EnsembleStats stats = ensemble_norms(sample);
                os << g17(sample.front().t) << ',' << g17(stats.q_norm) << ',' << g17(stats.p_norm)
                   << ',' << g17(stats.s_norm) << ',' << g17(stats.state_norm) << '\n';
            }
            writer.write("ensemble_" + scheme + ".csv", os.str());
        }
    }

    writer.write("plot_trajectories.gp", gnuplot_trajectories(schemes, bundle.model.n));

    nlohmann::json manifest = base_manifest("simulate", config, clock);
    manifest["solver"] = {{"total_newton_iters", total_iters}, {"max_residual", max_residual}};
    if (failed) manifest["integration_error"] = error_info;
    writer.write_manifest(std::move(manifest));
    return failed ? 3 : 0;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

int run_diagnose(const ExperimentConfig& config) {
    config.validate();
    const RunClock clock;
    const ModelBundle bundle = make_model(config.model, config.params);
    const ContactState x0 = initial_state(config);
    OutputWriter writer(config.out);

    const double residual_tol = config.tol.value_or(1e-6);
    const double nominal = std::exp(-bundle.dissipation_rate * config.h);

    const std::vector<std::string> schemes = selected_schemes(config.scheme);
    nlohmann::json summary;
    summary["tolerance"] = residual_tol;
    nlohmann::json error_info;
    bool failed = false;
    long total_iters = 0;
    double max_solver_residual = 0.0;

    for (const std::string& scheme : schemes) {
        const Stepper& stepper = stepper_for(bundle, scheme);
        WienerPath path = WienerPath::generate(config.seed, stepper.m, config.steps, config.h);
        IntegrationResult res = integrate(stepper, x0, path);
        total_iters += res.trajectory.total_newton_iters;
        max_solver_residual = std::max(max_solver_residual, res.trajectory.max_solver_residual);
        if (!res.ok && !failed) {
            failed = true;
            error_info = {{"scheme", scheme}, {"step", res.failed_step}, {"message", res.error}};
        }

        nlohmann::json scheme_summary;
        if (res.trajectory.step_count() > 0) {
            const ContactReport report =
                contact_residuals(stepper, res.trajectory, path, config.fd_step, {}, nominal);

            std::ostringstream os;
            os << "j,t,residual,lambda\n";
            for (std::size_t j = 0; j < report.residuals.size(); ++j) {
                os << j << ',' << g17(res.trajectory.states[j].t) << ','
                   << g17(report.residuals[j]) << ',' << g17(report.lambdas[j]) << '\n';
            }
            writer.write("residuals_" + scheme + ".csv", os.str());

            double mean = 0.0;
            for (double r : report.residuals) mean += r;
            mean /= static_cast<double>(report.residuals.size());
            scheme_summary["max_residual"] = report.max_residual;
            scheme_summary["mean_residual"] = mean;
            scheme_summary["pass"] = report.max_residual <= residual_tol;

            if (bundle.analytic_jacobian && scheme == "contact") {
                const ContactReport analytic = contact_residuals(
                    stepper, res.trajectory, path, config.fd_step, bundle.analytic_jacobian,
                    nominal);
                scheme_summary["max_residual_analytic"] = analytic.max_residual;
            }

            if (res.trajectory.has_lambda) {
                const ConformalSeries cont =
                    conformal_compare(res.trajectory, bundle.model, ConformalMode::Continuous);
                const ConformalSeries disc = conformal_compare(
                    res.trajectory, bundle.model, ConformalMode::Discrete, &bundle.lagrangian);

                std::ostringstream ls;
                ls << "j,t,lambda,ref_continuous,ref_discrete,nominal\n";
                for (std::size_t j = 0; j < cont.lambda.size(); ++j) {
                    ls << j << ',' << g17(res.trajectory.states[j].t) << ',' << g17(cont.lambda[j])
                       << ',' << g17(cont.lambda_ref[j]) << ',' << g17(disc.lambda_ref[j]) << ','
                       << g17(nominal) << '\n';
                }
                writer.write("lambda_" + scheme + ".csv", ls.str());

                double max_dev_nominal = 0.0;
                bool constant = true;
                for (std::size_t j = 0; j < cont.lambda.size(); ++j) {
                    max_dev_nominal =
                        std::max(max_dev_nominal, std::abs(cont.lambda[j] - nominal));
                    if (cont.lambda[j] != cont.lambda.front()) constant = false;
                }
                scheme_summary["conformal"] = {
                    {"nominal_factor", nominal},
                    {"lambda_constant", constant},
                    {"max_dev_vs_continuous", cont.max_deviation},
                    {"max_dev_vs_discrete", disc.max_deviation},
                    {"max_dev_vs_nominal", max_dev_nominal}};
            }
        }
        scheme_summary["completed_steps"] = res.trajectory.step_count();
        summary[scheme] = std::move(scheme_summary);
    }

    writer.write("summary.json", summary.dump(2) + "\n");

    {
        std::ostringstream os;
        os << "set datafile separator \",\"\nset logscale y\nset xlabel \"t\"\n"
           << "set ylabel \"pullback residual\"\nplot ";
        for (std::size_t i = 0; i < schemes.size(); ++i) {
            if (i) os << ", ";
            os << "\"residuals_" << schemes[i] << ".csv\" using 2:3 with lines title \""
               << schemes[i] << "\"";
        }
        os << '\n';
        writer.write("plot_residuals.gp", os.str());
    }
    if (config.scheme != "em") {
        std::ostringstream os;
        os << "set datafile separator \",\"\nset xlabel \"t\"\nset ylabel \"conformal factor\"\n"
           << "plot \"lambda_contact.csv\" using 2:3 with lines title \"recorded\", "
           << "\"lambda_contact.csv\" using 2:4 with lines title \"continuous reference\", "
           << "\"lambda_contact.csv\" using 2:6 with lines title \"nominal\"\n";
        writer.write("plot_lambda.gp", os.str());
    }

    nlohmann::json manifest = base_manifest("diagnose", config, clock);
    manifest["solver"] = {{"total_newton_iters", total_iters},
                          {"max_residual", max_solver_residual}};
    if (failed) manifest["integration_error"] = error_info;
    writer.write_manifest(std::move(manifest));
    return failed ? 3 : 0;
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

int run_converge(const ExperimentConfig& config) {
    config.validate();
    if (config.scheme == "both") {
        throw std::invalid_argument("converge needs a single scheme (contact or em)");
    }
    const RunClock clock;
    const ModelBundle bundle = make_model(config.model, config.params);
    const ContactState x0 = initial_state(config);
    OutputWriter writer(config.out);

    const Stepper& stepper = stepper_for(bundle, config.scheme);
    const std::vector<ConvergenceRow> rows = self_convergence(
        stepper, x0, config.seed, config.h, config.steps, config.levels, config.paths);

    const bool no_valid_paths = !rows.empty() && rows.front().failed_paths >= config.paths;

    std::ostringstream os;
    os << "level,h,strong_error,failed_paths\n";
    for (const ConvergenceRow& row : rows) {
        os << row.level << ',' << g17(row.h) << ',' << g17(row.strong_error) << ','
           << row.failed_paths << '\n';
    }
    writer.write("convergence.csv", os.str());

    const double slope = loglog_slope(rows);
    nlohmann::json summary;
    summary["slope"] = std::isfinite(slope) ? nlohmann::json(slope) : nlohmann::json();
    summary["levels"] = config.levels;
    summary["paths"] = config.paths;
    nlohmann::json jrows = nlohmann::json::array();
    for (const ConvergenceRow& row : rows) {
        jrows.push_back({{"level", row.level},
                         {"h", row.h},
                         {"strong_error", row.strong_error},
                         {"failed_paths", row.failed_paths}});
    }
    summary["rows"] = std::move(jrows);
    writer.write("summary.json", summary.dump(2) + "\n");

    writer.write("plot_convergence.gp",
                 "set datafile separator \",\"\nset logscale xy\nset xlabel \"h\"\n"
                 "set ylabel \"strong error\"\n"
                 "plot \"convergence.csv\" using 2:3 with linespoints title \"strong error\"\n");

    nlohmann::json manifest = base_manifest("converge", config, clock);
    if (no_valid_paths) manifest["integration_error"] = {{"message", "no path completed"}};
    writer.write_manifest(std::move(manifest));
    return no_valid_paths ? 3 : 0;
}

// ---------------------------------------------------------------------------
// criticality
// ---------------------------------------------------------------------------

int run_criticality(const ExperimentConfig& config) {
    config.validate();
    if (config.scheme == "both") {
        throw std::invalid_argument("criticality needs a single scheme (contact or em)");
    }
    const ModelBundle bundle = make_model(config.model, config.params);
    if (!bundle.lagrangian.p_independent) {
        throw std::invalid_argument(
            "criticality requires a momentum-independent discrete Lagrangian");
    }
    const RunClock clock;
    const ContactState x0 = initial_state(config);
    OutputWriter writer(config.out);

    const Stepper& stepper = stepper_for(bundle, config.scheme);
    WienerPath path = WienerPath::generate(config.seed, stepper.m, config.steps, config.h);
    IntegrationResult res = integrate(stepper, x0, path);
    if (!res.ok) {
        nlohmann::json manifest = base_manifest("criticality", config, clock);
        manifest["integration_error"] = {{"step", res.failed_step}, {"message", res.error}};
        writer.write_manifest(std::move(manifest));
        return 3;
    }

    std::vector<int> indices;
    if (config.j_index) {
        indices.push_back(*config.j_index);
    } else {
        for (int j = 1; j <= static_cast<int>(config.steps) - 1; ++j) indices.push_back(j);
    }

    const double pass_tol = config.tol.value_or(1e-5);
    double max_residual = 0.0;
    std::ostringstream os;
    os << "j,residual\n";
    for (int j : indices) {
        const double r =
            criticality_residual(bundle.lagrangian, res.trajectory, path, j, config.fd_step);
        os << j << ',' << g17(r) << '\n';
        max_residual = std::max(max_residual, r);
    }
    writer.write("criticality.csv", os.str());

    nlohmann::json summary{{"max_residual", max_residual},
                           {"tolerance", pass_tol},
                           {"pass", max_residual <= pass_tol},
                           {"scheme", config.scheme}};
    writer.write("summary.json", summary.dump(2) + "\n");

    writer.write_manifest(base_manifest("criticality", config, clock));
    return 0;
}

}  // namespace scvi
