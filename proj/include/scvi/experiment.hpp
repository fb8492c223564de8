#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace scvi {

/// Everything a CLI run needs. Defaults reproduce the additive damped
/// oscillator experiment (h = 0.1, 200 steps, alpha = 0.1, epsilon = 0.02,
/// start (0.75, -0.25, 0.08)) out of the box.
struct ExperimentConfig {
    std::string model = "damped-oscillator-additive";
    std::string scheme = "both";  ///< contact | em | both
    std::map<std::string, double> params;

    std::vector<double> q0 = {0.75};
    std::vector<double> p0 = {-0.25};
    double s0 = 0.08;

    double h = 0.1;
    long steps = 200;
    std::optional<double> horizon;  ///< optional "T"; must equal steps*h when given

    std::uint64_t seed = 42;
    int ensemble = 1;
    std::string out = "out";

    std::optional<double> tol;  ///< headline tolerance override per subcommand
    double fd_step = 1e-6;
    int levels = 4;  ///< converge: dyadic refinement levels
    int paths = 50;  ///< converge: number of seeds
    std::optional<int> j_index;  ///< criticality: single interior index

    /// Throws std::invalid_argument with a human-readable message.
    void validate() const;

    /// Merge fields present in the JSON object over the current values.
    /// Unknown keys are rejected.
    void merge_json(const nlohmann::json& j);

    static ExperimentConfig from_json_file(const std::string& path);

    nlohmann::json to_json() const;
};

/// Subcommand drivers. Each validates, runs, writes its outputs plus
/// run_manifest.json under config.out, and returns the process exit code:
/// 0 success, 3 integration failure (partial outputs retained). Config errors
/// surface as std::invalid_argument, which the CLI maps to exit code 2.
int run_simulate(const ExperimentConfig& config);
int run_diagnose(const ExperimentConfig& config);
int run_converge(const ExperimentConfig& config);
int run_criticality(const ExperimentConfig& config);

/// FNV-1a 64-bit checksum, lowercase hex; the manifest's file fingerprint.
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace scvi
