#pragma once

// Local-minimax excess-cost lower bounds for offline LQR learning.
//
// Every bound has the shape  G / (8·N·T·L)  where
//   G  weighs the sensitivity of the optimal gain along a set of parameter
//      directions V by Γ⊗Ψ (Γ = Σ_W or ½Σ_X),
//   L  bounds the Fisher information the offline data carries along span(V).
// The asymptotic form drops N (it bounds N times the excess cost).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lqr_limits/lti_core.hpp"
#include "lqr_limits/perturbation.hpp"

namespace lqr_limits {

struct ExplorationSetup {
    Matrix F;                // d_u×dₓ pre-stabilizing feedback
    double sigma_u_sq = 1.0; // average exploratory input energy
    long N = 1;              // number of experiments
    long T = 1;              // experiment horizon

    [[nodiscard]] static ExplorationSetup zero_feedback(const SystemInstance& sys, double sigma_u_sq,
                                                        long N, long T);
    // Shapes, σ² ≥ 0, N, T ≥ 1 and ρ(A + BF) < 1. Throws Validation / Instability.
    void validate(const SystemInstance& sys) const;
};

enum class GammaChoice { NoiseFloor, StationaryHalf };
enum class BoundForm { Asymptotic, FiniteSample, Dimensional, Exponential, SystemTheoretic };

[[nodiscard]] std::string to_string(GammaChoice choice);
[[nodiscard]] std::string to_string(BoundForm form);
[[nodiscard]] GammaChoice parse_gamma_choice(const std::string& text);

struct BurnInCheck {
    std::string name;
    std::string relation;  // "actual >= required" or "actual <= required"
    double required = 0.0;
    double actual = 0.0;
    bool passed = false;
};

struct BoundReport {
    BoundForm form = BoundForm::Asymptotic;
    // Withheld (empty) whenever a burn-in condition fails.
    std::optional<double> bound_value;
    // The formula evaluated regardless of burn-in status.
    double formula_value = 0.0;
    double G = 0.0;
    double L = 0.0;
    GammaChoice gamma_choice = GammaChoice::NoiseFloor;
    std::vector<BurnInCheck> burn_in;
    std::map<std::string, double> constants;
    std::map<std::string, double> extras;
    std::vector<std::string> flags;
    // For the closed-form relaxations: closed form ≤ exact bound.
    std::optional<bool> relaxation_holds;
    long N = 0;
    long T = 0;
    int basis_size = 0;
    int ball_samples = 0;
    std::optional<std::uint64_t> seed;

    [[nodiscard]] bool burn_in_ok() const;
    [[nodiscard]] bool has_flag(const std::string& flag) const;
};

// dlyap((A+BF)ᵀ, Σ_W): noise-to-state controllability gramian under F.
[[nodiscard]] Matrix exploration_gramian(const SystemInstance& sys, const Matrix& F);

// Σ_t ‖(A+BF)ᵗB‖
[[nodiscard]] double hinf_input_sum(const SystemInstance& sys, const Matrix& F, double tol = 1e-12);

// L(θ) = (4/λ_min(Σ_W))·λ_max(VᵀDV) with D = diag(c_A·I, c_B·I) on the A / B
// coordinates, c_A = ‖W_c‖ + σ²·h², c_B = 2‖F‖²c_A + 2σ².
[[nodiscard]] double fisher_direction_bound(const SystemInstance& sys, const ExplorationSetup& setup,
                                            const PerturbationBasis& basis);

// Γ = Σ_W or ½Σ_X
[[nodiscard]] Matrix gamma_matrix(const SystemInstance& sys, const LqrSolution& sol, GammaChoice choice);

// tr((Γ⊗Ψ)·D_θvecK·V·(D_θvecK·V)ᵀ) = Σ_v tr(Ψ d_vK Γ d_vKᵀ)
[[nodiscard]] double g_numerator(const SystemInstance& sys, const LqrSolution& sol,
                                 const PerturbationBasis& basis, GammaChoice choice);

// 16‖Σ_X‖² / λ_min(Σ_X): horizon needed before Γ = ½Σ_X may be used.
[[nodiscard]] double stationary_horizon_threshold(const LqrSolution& sol);

// Lower bound on liminf N·EC: G/(8·T·L) at the nominal instance.
[[nodiscard]] BoundReport asymptotic_lower_bound(const SystemInstance& sys, const ExplorationSetup& setup,
                                                 const PerturbationBasis& basis, GammaChoice choice);

struct AlphaConstant {
    double value = 0.0;
    bool degenerate = false;  // ‖A_cl‖ = 0 makes the event constant vacuous
};

// α = min{‖A_cl‖/‖B‖, (λ_min(Σ_X)/24) / (‖A_cl‖‖B‖J(A_cl)‖Σ_X‖)}
[[nodiscard]] AlphaConstant alpha_event_constant(const SystemInstance& sys);
[[nodiscard]] AlphaConstant alpha_event_constant(const SystemInstance& sys, const LqrSolution& sol);

struct GainLipschitzConstants {
    double Phi = 0.0;  // 1 + max{‖A‖, ‖B‖, ‖P‖, ‖K‖, ‖R⁻¹‖}
    double tau = 0.0;
    bool tau_certified = false;
    double c1 = 0.0;   // 84Φ⁹τ
    double c2 = 0.0;   // min{(1+‖A_cl‖)⁻², (1+‖P‖)⁻¹} / (10τc₁)
};

// Throws DegenerateInput when ρ(A_cl) = 0 (τ undefined).
[[nodiscard]] GainLipschitzConstants gain_lipschitz_constants(const SystemInstance& sys,
                                                              const LqrSolution& sol);

// ‖J(λ)‖ for a prior of radius ε built by rescaling a unit-ball prior whose
// Fisher norm is prior_constant: ‖J(λ)‖ = prior_constant/ε².
[[nodiscard]] double prior_fisher_norm(double prior_constant, double epsilon);

struct FiniteSampleOptions {
    double epsilon = 0.0;
    double J_lambda_norm = 0.0;
    GammaChoice gamma_choice = GammaChoice::NoiseFloor;
    int ball_samples = 64;
    std::uint64_t seed = 0;
};

// G/(8NTL̄) with the ball extrema replaced by extrema over the centre plus
// ball_samples random points on the ε-sphere. Throws BallTooLarge naming the
// first sample where F fails to stabilize or the DARE has no solution.
[[nodiscard]] BoundReport finite_sample_bound(const SystemInstance& sys, const ExplorationSetup& setup,
                                              const PerturbationBasis& basis,
                                              const FiniteSampleOptions& options);

// dₓd_u·λ_min(Σ_X−Σ_W)·λ_min(P)² / (16T‖Ψ‖‖[−K I]‖²L̃)
[[nodiscard]] BoundReport dimensional_bound(const SystemInstance& sys, const ExplorationSetup& setup);

// L with ν₁ → 1 and ν₂ → 1 + 2‖F‖².
[[nodiscard]] double relaxed_fisher_bound(const SystemInstance& sys, const ExplorationSetup& setup);

// Bidiagonal chain: ρ on the diagonal, 2 on the superdiagonal, B = e_{dₓ},
// Q = I, R = 1, Σ_W = I.
[[nodiscard]] SystemInstance exponential_instance(int state_dim, double rho);

[[nodiscard]] SystemInstance scalar_instance(double a, double b, double q = 1.0, double r = 1.0,
                                             double sigma_w_sq = 1.0);

// Closed form ρ²·4^{dₓ−2}/(256Tσ²) next to the exact bound along the input
// direction with Γ = Σ_W. Requires dₓ ≥ 3 and F = 0.
[[nodiscard]] BoundReport exponential_bound(int state_dim, double rho, const ExplorationSetup& setup);

// Self-direction relaxation. Requires R and BᵀPB to commute (‖[R, BᵀPB]‖ ≤ 1e-8).
[[nodiscard]] BoundReport system_theoretic_bound(const SystemInstance& sys, const ExplorationSetup& setup);

struct ScalarCurvePoint {
    double gamma = 0.0;
    double bound_value = 0.0;  // G/(8TL) along V = [0 1]ᵀ, Γ = Σ_W
    double P = 0.0;
    double K = 0.0;
    double dK_db = 0.0;
    // (b²P + 1)/(32T)·(∂K/∂b)², the form quoted for the global-minimax argument.
    double quoted_closed_form = 0.0;
};

// a = 1 − γ, b = γ, Q = R = Σ_W = 1; the setup must have F = 0 and σ² = 1.
[[nodiscard]] std::vector<ScalarCurvePoint> scalar_bound_curve(const std::vector<double>& gammas,
                                                               const ExplorationSetup& setup);

}  // namespace lqr_limits
