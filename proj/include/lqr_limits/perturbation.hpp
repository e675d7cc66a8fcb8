#pragma once

// Parameter-perturbation directions for θ = vec[A B] and derivatives of the
// optimal gain K(θ) along them.

#include <vector>

#include "lqr_limits/lti_core.hpp"

namespace lqr_limits {

struct PerturbationDirection {
    Matrix Delta_A;  // dₓ×dₓ
    Matrix Delta_B;  // dₓ×d_u

    // Scales [Δ_A Δ_B] to unit Frobenius norm. Throws DegenerateInput on zero.
    [[nodiscard]] static PerturbationDirection unit(const Matrix& delta_a, const Matrix& delta_b);
    [[nodiscard]] static PerturbationDirection from_vec(const Vector& v, int state_dim, int input_dim);

    [[nodiscard]] Vector vec() const;
    [[nodiscard]] double frobenius_norm() const;
    // Δ_{A_cl} = Δ_A + Δ_B K
    [[nodiscard]] Matrix closed_loop_change(const Matrix& K) const;
};

class PerturbationBasis {
public:
    PerturbationBasis() = default;
    // Throws Validation unless VᵀV = I within 1e-10 and shapes agree.
    PerturbationBasis(std::vector<PerturbationDirection> directions, int state_dim, int input_dim);

    [[nodiscard]] static PerturbationBasis from_matrix(const Matrix& V, int state_dim, int input_dim);
    // All d_Θ canonical unit vectors.
    [[nodiscard]] static PerturbationBasis canonical(int state_dim, int input_dim);

    [[nodiscard]] const std::vector<PerturbationDirection>& directions() const { return directions_; }
    [[nodiscard]] const Matrix& V() const { return V_; }
    [[nodiscard]] int size() const { return static_cast<int>(directions_.size()); }
    [[nodiscard]] int state_dim() const { return state_dim_; }
    [[nodiscard]] int input_dim() const { return input_dim_; }

private:
    std::vector<PerturbationDirection> directions_;
    Matrix V_;
    int state_dim_ = 0;
    int input_dim_ = 0;
};

// d_vK = −Ψ⁻¹(Δ_BᵀPA_cl + BᵀPΔ_{A_cl} + BᵀP′A_cl),
// P′ = dlyap(A_cl, A_clᵀPΔ_{A_cl} + Δ_{A_clᵀ}PA_cl). Linear in the direction;
// no normalization is applied.
[[nodiscard]] Matrix directional_gain_derivative(const LqrSolution& sol, const SystemInstance& sys,
                                                 const PerturbationDirection& dir);

// h = 1e-5·(1 + ‖θ‖)
[[nodiscard]] double default_fd_step(const SystemInstance& sys);

// (K(θ + h·v) − K(θ − h·v)) / 2h
[[nodiscard]] Matrix finite_difference_gain_derivative(const SystemInstance& sys,
                                                       const PerturbationDirection& dir, double h);

// D_θ vec K(θ), shape (dₓd_u)×d_Θ.
[[nodiscard]] Matrix controller_jacobian(const SystemInstance& sys);
[[nodiscard]] Matrix controller_jacobian(const LqrSolution& sol, const SystemInstance& sys);

// dₓd_u orthonormal directions vec[−ΔK Δ], each leaving A + BK unchanged.
[[nodiscard]] PerturbationBasis polderman_basis(const LqrSolution& sol);

// [A B] / ‖[A B]‖_F
[[nodiscard]] PerturbationDirection self_direction(const SystemInstance& sys);
// [0 B/‖B‖_F]
[[nodiscard]] PerturbationDirection input_direction(const SystemInstance& sys);

[[nodiscard]] PerturbationBasis single_direction_basis(const PerturbationDirection& dir);

// Closed form of d_VK along self_direction:
//   −2Ψ⁻¹Bᵀ dlyap(A_cl, P) A_cl / ‖[A B]‖_F
// The sign matches directional_gain_derivative.
[[nodiscard]] Matrix self_direction_gain_derivative(const LqrSolution& sol, const SystemInstance& sys);

}  // namespace lqr_limits
