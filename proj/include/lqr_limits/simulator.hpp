#pragma once

// Offline data collection (X₀ = 0, U = FX + Ũ) and the identify-then-control
// pipeline: least squares → certainty-equivalent LQR → exact excess cost.

#include <cstdint>
#include <string>
#include <vector>

#include "lqr_limits/bounds.hpp"
#include "lqr_limits/lti_core.hpp"
#include "lqr_limits/perturbation.hpp"

namespace lqr_limits {

// per_coordinate: Ũ ~ N(0, σ²I), average energy d_u·σ².
// total:          Ũ ~ N(0, (σ²/d_u)I), average energy σ².
enum class BudgetConvention { PerCoordinate, Total };

[[nodiscard]] std::string to_string(BudgetConvention convention);
[[nodiscard]] BudgetConvention parse_budget_convention(const std::string& text);

// Per-coordinate variance of Ũ.
[[nodiscard]] double exploratory_variance(double sigma_u_sq, int input_dim, BudgetConvention convention);

struct TrajectoryBatch {
    int N = 0;
    int T = 0;
    // One entry per experiment. states[n] is dₓ×(T+1) (columns X₀ … X_T);
    // inputs[n] and exploratory[n] are d_u×T.
    std::vector<Matrix> states;
    std::vector<Matrix> inputs;
    std::vector<Matrix> exploratory;
    std::uint64_t seed = 0;
};

[[nodiscard]] TrajectoryBatch rollout_offline(const SystemInstance& sys, const ExplorationSetup& setup,
                                              std::uint64_t seed,
                                              BudgetConvention convention = BudgetConvention::Total);

// (1/NT)·Σ_{n,t} ‖Ũ_{t,n}‖²
[[nodiscard]] double check_budget(const TrajectoryBatch& batch);

struct SysIdEstimate {
    Matrix A_hat;
    Matrix B_hat;
    double gram_min_singular = 0.0;
};

// [Â B̂] = (Σ X_{t+1}Zᵀ)(Σ ZZᵀ)⁻¹ with Z = [X; U]. Throws ExcitationDeficient
// when the regressor Gram matrix is numerically singular.
[[nodiscard]] SysIdEstimate least_squares_sysid(const TrajectoryBatch& batch);

struct CertaintyEquivalentGain {
    Matrix K_hat;
    bool solved = false;   // false: the DARE on the estimate failed and K_hat = 0
    std::string failure;
};

[[nodiscard]] CertaintyEquivalentGain certainty_equivalent_gain(const Matrix& A_hat, const Matrix& B_hat,
                                                                const Matrix& Q, const Matrix& R);

struct ExcessCost {
    double value = 0.0;
    bool overflow = false;  // value is +inf
};

// (1/T)·Σ_{t<T} tr((K̂−K)ᵀΨ(K̂−K)Σ_t), Σ₀ = 0, Σ_{t+1} = (A+BK̂)Σ_t(A+BK̂)ᵀ + Σ_W.
[[nodiscard]] ExcessCost excess_cost_exact(const SystemInstance& sys, const Matrix& K_hat, long T);
[[nodiscard]] ExcessCost excess_cost_exact(const SystemInstance& sys, const LqrSolution& sol,
                                           const Matrix& K_hat, long T);

struct LearnerResult {
    Matrix A_hat;
    Matrix B_hat;
    Matrix K_hat;
    double excess_cost = 0.0;
    bool stabilized = false;  // ρ(A + BK̂) < 1 on the true system
    bool failed = false;      // excluded from Monte Carlo averages
    std::string failure;
};

struct PipelineOptions {
    BudgetConvention convention = BudgetConvention::Total;
    // Skip identification and hand the learner the true (A, B).
    bool diagnostic_exact_model = false;
};

[[nodiscard]] LearnerResult run_pipeline(const SystemInstance& sys, const LqrSolution& sol,
                                         const ExplorationSetup& setup, std::uint64_t seed,
                                         const PipelineOptions& options = {});

// Seed of trial `trial` under master seed `seed`.
[[nodiscard]] std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

struct MonteCarloOptions {
    int trials = 100;
    std::uint64_t seed = 0;
    int threads = 1;  // 0: hardware concurrency
    PipelineOptions pipeline;
};

struct MonteCarloStats {
    double mean = 0.0;
    double stderr_mean = 0.0;
    int n_trials = 0;
    int n_failed = 0;
    long N = 0;
    long T = 0;
    std::uint64_t seed = 0;
    double N_times_mean = 0.0;
    double N_times_stderr = 0.0;
};

// Throws AllTrialsFailed when no trial produced a stabilizing gain.
[[nodiscard]] MonteCarloStats monte_carlo_excess_cost(const SystemInstance& sys, const ExplorationSetup& setup,
                                                      const MonteCarloOptions& options);

struct FisherCheck {
    double ratio = 0.0;           // ‖VᵀÎV‖ / (TN·L)
    double empirical_norm = 0.0;  // ‖VᵀÎV‖
    double L = 0.0;
};

// Averages Σ_{n,t} Z_{t,n}Z_{t,n}ᵀ ⊗ Σ_W⁻¹ over independent batches, projects
// onto V and compares with TN·L. With L = 0 and an empirical value of 0 the
// ratio is reported as 0.
[[nodiscard]] FisherCheck empirical_fisher_check(const SystemInstance& sys, const ExplorationSetup& setup,
                                                 const PerturbationBasis& basis, int trials,
                                                 std::uint64_t seed, int threads = 1,
                                                 BudgetConvention convention = BudgetConvention::Total);

}  // namespace lqr_limits
