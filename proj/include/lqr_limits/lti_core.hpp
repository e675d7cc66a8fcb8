#pragma once

// Linear-time-invariant plant data and the Riccati / Lyapunov substrate.
//
// Conventions used throughout the library:
//   dlyap(A, Q) is the solution P of  AᵀPA − P + Q = 0,  i.e. P = Σ_t (Aᵗ)ᵀ Q Aᵗ.
//   The stationary covariance of x⁺ = M x + w is therefore dlyap(Mᵀ, Σ_W).
//   ‖·‖ is the spectral norm unless a name says otherwise.

#include <Eigen/Dense>

#include "lqr_limits/errors.hpp"

namespace lqr_limits {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Anything with spectral radius above 1 − kStabilityMargin is treated as unstable.
inline constexpr double kStabilityMargin = 1e-8;
inline constexpr double kSymmetryTolerance = 1e-10;

struct SystemInstance {
    Matrix A;        // dₓ×dₓ
    Matrix B;        // dₓ×d_u
    Matrix Q;        // dₓ×dₓ, Q ⪰ 0
    Matrix R;        // d_u×d_u, R ≻ 0
    Matrix Sigma_W;  // dₓ×dₓ, Σ_W ≻ 0

    [[nodiscard]] int state_dim() const { return static_cast<int>(A.rows()); }
    [[nodiscard]] int input_dim() const { return static_cast<int>(B.cols()); }
    // d_Θ for the canonical parametrization θ = vec[A B].
    [[nodiscard]] int param_dim() const { return state_dim() * (state_dim() + input_dim()); }

    // Dimension, finiteness, symmetry and definiteness checks. Throws Validation.
    void validate() const;

    // θ = vec[A B] (column-major).
    [[nodiscard]] Vector theta() const;
    // Same Q, R, Σ_W with A, B replaced from a parameter vector.
    [[nodiscard]] SystemInstance with_theta(const Vector& theta) const;
};

struct LqrSolution {
    Matrix P;      // stabilizing DARE solution
    Matrix K;      // optimal gain, u = Kx
    Matrix Psi;    // BᵀPB + R
    Matrix A_cl;   // A + BK
    Matrix Sigma_X;  // stationary closed-loop state covariance
    double optimal_cost = 0.0;  // trace(PΣ_W)
};

struct DareOptions {
    double tol = 1e-12;            // relative change between doubling steps
    int max_iterations = 100000;
    double residual_tol = 1e-9;    // accepted ‖residual‖ / (1 + ‖P‖)
};

// --- small dense helpers -------------------------------------------------

[[nodiscard]] double spectral_radius(const Matrix& M);
[[nodiscard]] double spectral_norm(const Matrix& M);
[[nodiscard]] double lambda_min(const Matrix& symmetric);
[[nodiscard]] double lambda_max(const Matrix& symmetric);
[[nodiscard]] Matrix symmetrize(const Matrix& M);
[[nodiscard]] Vector vec(const Matrix& M);
[[nodiscard]] Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

// Throws Instability when ρ(M) > 1 − kStabilityMargin. `what` names the matrix.
void require_stable(const Matrix& M, const char* what);

// --- equations -----------------------------------------------------------

// Solves AᵀPA − P + Q = 0. Kronecker solve for dₓ ≤ 12, Smith doubling above.
[[nodiscard]] Matrix solve_dlyap(const Matrix& A, const Matrix& Q);

// ‖AᵀPA − P + Q‖_F
[[nodiscard]] double dlyap_residual(const Matrix& A, const Matrix& Q, const Matrix& P);

// Stabilizing solution of Q + AᵀPA − AᵀPB(BᵀPB+R)⁻¹BᵀPA − P = 0 by the
// structure-preserving doubling algorithm.
[[nodiscard]] Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                                const Matrix& R, const DareOptions& options = {});

// ‖Q + AᵀPA − AᵀPB(BᵀPB+R)⁻¹BᵀPA − P‖_F
[[nodiscard]] double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                                   const Matrix& R, const Matrix& P);

// K = −(BᵀPB+R)⁻¹BᵀPA
[[nodiscard]] Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& P);

[[nodiscard]] LqrSolution lqr_synthesize(const SystemInstance& sys, const DareOptions& options = {});

// Σ_t ‖M^t · right‖^exponent, truncated once a certified geometric tail bound
// falls below tol. Requires ρ(M) < 1.
[[nodiscard]] double power_norm_sum(const Matrix& M, const Matrix& right, int exponent, double tol);

// J(A_cl) = Σ_t ‖A_clᵗ‖²
[[nodiscard]] double tail_sum_J(const Matrix& A_cl, double tol = 1e-12);

struct TauEstimate {
    double value = 0.0;
    double sup_ratio = 1.0;   // sup_k ‖A^k‖ρ^{−k} over the scanned range
    int argmax_power = 0;
    // True when a power m with ‖A^m‖ρ^{−m} ≤ 1 was found, which bounds every
    // later ratio by the running sup. False means the scan stopped at max_power.
    bool certified = false;
};

// τ(A_cl) = (sup_k ‖A_cl^k‖ρ^{−k})² / (1 − ρ²)
[[nodiscard]] TauEstimate tau_estimate(const Matrix& A_cl, int max_power = 10000);
[[nodiscard]] double tau(const Matrix& A_cl, int max_power = 10000);

}  // namespace lqr_limits
