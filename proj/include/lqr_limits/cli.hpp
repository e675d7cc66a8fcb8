#pragma once

// Command layer behind the `lqr-limits` executable. Each command reads one
// JSON config and writes a CSV or JSON artifact.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lqr_limits/bounds.hpp"
#include "lqr_limits/serialization.hpp"
#include "lqr_limits/simulator.hpp"

namespace lqr_limits {

inline constexpr int kConfigSchemaVersion = 1;

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFlagged = 2;

struct SystemSpec {
    std::string generator;  // "matrices", "scalar" or "exponential"
    SystemInstance instance;
    int exponential_dim = 0;
    double exponential_rho = 0.0;
};

struct BoundSpec {
    std::string form = "asymptotic";
    double epsilon = 0.0;
    std::optional<double> J_lambda_norm;
    std::optional<double> prior_constant;
    int ball_samples = 64;
};

struct Figure1Spec {
    double gamma_min = 1e-3;
    double gamma_max = 1e-2;
    int n_points = 50;
};

struct ScanSpec {
    std::string kind = "exponential";  // or "dimension"
    int d_x_min = 3;
    int d_x_max = 8;
    double rho = 0.5;
    std::vector<std::pair<int, int>> pairs{{2, 1}, {3, 1}, {4, 2}, {6, 3}};
    int instances_per_pair = 5;
    double a = 0.5;
};

struct CompareSpec {
    std::vector<long> N_values{100, 1000};
    bool diagnostic_exact_model = false;
};

struct ExperimentConfig {
    std::optional<SystemSpec> system;
    // F defaults to zero once the system is known.
    std::optional<Matrix> F;
    double sigma_u_sq = 1.0;
    long N = 1;
    long T = 10;
    std::string basis = "input";  // input, polderman, self, canonical, custom
    Json custom_basis;
    GammaChoice gamma_choice = GammaChoice::NoiseFloor;
    BoundSpec bound;
    std::uint64_t seed = 0;
    int trials = 100;
    int threads = 1;
    BudgetConvention budget_convention = BudgetConvention::Total;
    Figure1Spec figure1;
    ScanSpec scan;
    CompareSpec compare;

    [[nodiscard]] const SystemSpec& require_system() const;
    [[nodiscard]] ExplorationSetup setup_for(const SystemInstance& sys) const;
    [[nodiscard]] PerturbationBasis basis_for(const SystemInstance& sys) const;
};

// Throws Config with the offending field (and line for JSON syntax errors).
// Relative basis file paths resolve against base_dir.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

struct CommandOutput {
    int exit_code = kExitSuccess;
    std::string artifact;  // main CSV / JSON content
    std::string summary;   // secondary JSON (scan, compare); empty if none
    std::vector<std::string> notes;  // human-readable diagnostics
};

[[nodiscard]] CommandOutput cmd_bound(const ExperimentConfig& config);
[[nodiscard]] CommandOutput cmd_figure1(const ExperimentConfig& config);
[[nodiscard]] CommandOutput cmd_scan(const ExperimentConfig& config);
[[nodiscard]] CommandOutput cmd_compare(const ExperimentConfig& config);
[[nodiscard]] CommandOutput cmd_simulate(const ExperimentConfig& config);

struct VerifyOptions {
    std::uint64_t seed = 0;
    // Solver settings under test; loosening them must make checks fail.
    DareOptions dare;
};

struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

[[nodiscard]] std::vector<VerifyCheck> run_verify_suite(const VerifyOptions& options);
[[nodiscard]] CommandOutput cmd_verify(const VerifyOptions& options);

// Dispatches `command`, writes artifacts (stdout when out_path is empty) and
// returns the process exit code.
int run_cli(const std::string& command, const std::string& config_path, const std::string& out_path,
            std::optional<std::uint64_t> seed, std::optional<int> threads, std::ostream& out, std::ostream& err);

}  // namespace lqr_limits
