#pragma once

// Seeded generators for test suites and parameter scans.

#include <random>

#include "lqr_limits/lti_core.hpp"

namespace lqr_limits {

struct RandomInstanceOptions {
    double radius_min = 0.5;   // open-loop spectral radius drawn uniformly in [min, max]
    double radius_max = 1.1;
    bool identity_costs = false;  // Q = I, R = I instead of random SPD weights
    bool identity_noise = false;  // Σ_W = I
};

// Gaussian A rescaled to a random spectral radius, Gaussian B. Redraws until
// the DARE is solvable, so the result is always stabilizable.
[[nodiscard]] SystemInstance random_instance(std::mt19937_64& rng, int state_dim, int input_dim,
                                             const RandomInstanceOptions& options = {});

// Haar-distributed orthogonal matrix.
[[nodiscard]] Matrix random_orthogonal(std::mt19937_64& rng, int dim);

// A = a·I, B = U[I; 0]W for random orthogonal U, W; Q, R, Σ_W identities.
// All (dₓ, d_u) with d_u < dₓ share the same spectra of P, Ψ and Σ_X.
[[nodiscard]] SystemInstance fixed_spectrum_instance(std::mt19937_64& rng, int state_dim, int input_dim,
                                                     double a = 0.5);

}  // namespace lqr_limits
