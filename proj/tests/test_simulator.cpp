#include <doctest.h>

#include "lqr_limits/simulator.hpp"
#include "test_support.hpp"

using namespace lqr_limits;
using test_support::rel_err;

namespace {

// Σ_t E[Z_t Z_tᵀ] over t < T for one experiment started at X₀ = 0.
Matrix expected_regressor_gram(const SystemInstance& sys, const Matrix& F, double variance, long T) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    const Matrix M = sys.A + sys.B * F;
    const Matrix drive = sys.Sigma_W + variance * sys.B * sys.B.transpose();
    Matrix S = Matrix::Zero(n, n);
    Matrix total = Matrix::Zero(n + m, n + m);
    for (long t = 0; t < T; ++t) {
        Matrix Z(n + m, n + m);
        Z << S, S * F.transpose(), F * S, F * S * F.transpose() + variance * Matrix::Identity(m, m);
        total += Z;
        S = M * S * M.transpose() + drive;
    }
    return total;
}

// Exact Fisher norm along V divided by TN·L.
double exact_fisher_ratio(const SystemInstance& sys, const ExplorationSetup& setup, const PerturbationBasis& basis) {
    const double variance = exploratory_variance(setup.sigma_u_sq, sys.input_dim(), BudgetConvention::Total);
    const Matrix gram = expected_regressor_gram(sys, setup.F, variance, setup.T);
    const Matrix noise_inv = sys.Sigma_W.inverse();
    const int k = basis.size();
    Matrix projected(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const auto& a = basis.directions()[static_cast<std::size_t>(i)];
            const auto& b = basis.directions()[static_cast<std::size_t>(j)];
            Matrix Da(a.Delta_A.rows(), a.Delta_A.cols() + a.Delta_B.cols());
            Da << a.Delta_A, a.Delta_B;
            Matrix Db(b.Delta_A.rows(), b.Delta_A.cols() + b.Delta_B.cols());
            Db << b.Delta_A, b.Delta_B;
            projected(i, j) = (Da.transpose() * noise_inv * Db * gram).trace();
        }
    }
    return lambda_max(symmetrize(projected)) / (static_cast<double>(setup.T) * fisher_direction_bound(sys, setup, basis));
}

}  // namespace

TEST_CASE("budget conventions") {
    CHECK(exploratory_variance(2.0, 4, BudgetConvention::Total) == 0.5);
    CHECK(exploratory_variance(2.0, 4, BudgetConvention::PerCoordinate) == 2.0);
    CHECK(parse_budget_convention("per_coordinate") == BudgetConvention::PerCoordinate);
    CHECK(to_string(BudgetConvention::Total) == "total");
    CHECK_THROWS_AS((void)parse_budget_convention("both"), Error);
}

TEST_CASE("rollout shapes, start state and reproducibility") {
    std::mt19937_64 rng(81);
    const SystemInstance sys = random_instance(rng, 3, 2, {0.5, 0.9, false, false});
    const auto setup = ExplorationSetup::zero_feedback(sys, 1.0, 4, 20);
    const TrajectoryBatch a = rollout_offline(sys, setup, 7);
    const TrajectoryBatch b = rollout_offline(sys, setup, 7);
    const TrajectoryBatch c = rollout_offline(sys, setup, 8);
    REQUIRE(a.states.size() == 4);
    CHECK(a.states[0].rows() == 3);
    CHECK(a.states[0].cols() == 21);
    CHECK(a.inputs[0].rows() == 2);
    CHECK(a.inputs[0].cols() == 20);
    for (const auto& X : a.states) CHECK(X.col(0).norm() == 0.0);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(a.states[k] == b.states[k]);
        CHECK(a.inputs[k] == b.inputs[k]);
    }
    CHECK(a.states[0] != c.states[0]);
}

TEST_CASE("rollout obeys the feedback law") {
    const SystemInstance sys = scalar_instance(1.2, 1.0);
    ExplorationSetup setup{Matrix::Constant(1, 1, -0.7), 1.0, 2, 30};
    const TrajectoryBatch batch = rollout_offline(sys, setup, 3);
    for (std::size_t k = 0; k < 2; ++k) {
        const Matrix U = setup.F * batch.states[k].leftCols(30) + batch.exploratory[k];
        CHECK(rel_err(batch.inputs[k], U) < 1e-14);
    }
}

TEST_CASE("exploration budget matches the convention") {
    std::mt19937_64 rng(83);
    const SystemInstance sys = random_instance(rng, 2, 3, {0.5, 0.9, false, false});
    const auto setup = ExplorationSetup::zero_feedback(sys, 1.5, 200, 100);
    CHECK(check_budget(rollout_offline(sys, setup, 1, BudgetConvention::Total)) ==
          doctest::Approx(1.5).epsilon(0.02));
    CHECK(check_budget(rollout_offline(sys, setup, 1, BudgetConvention::PerCoordinate)) ==
          doctest::Approx(4.5).epsilon(0.02));
}

TEST_CASE("least squares is exact on noise-free data") {
    std::mt19937_64 rng(85);
    const SystemInstance sys = random_instance(rng, 3, 2);
    TrajectoryBatch batch;
    batch.N = 2;
    batch.T = 10;
    for (int k = 0; k < 2; ++k) {
        Matrix X(3, 11);
        X.col(0) = test_support::gaussian(rng, 3, 1);
        const Matrix U = test_support::gaussian(rng, 2, 10);
        for (int t = 0; t < 10; ++t) X.col(t + 1) = sys.A * X.col(t) + sys.B * U.col(t);
        batch.states.push_back(X);
        batch.inputs.push_back(U);
        batch.exploratory.push_back(U);
    }
    const SysIdEstimate est = least_squares_sysid(batch);
    CHECK(rel_err(est.A_hat, sys.A) < 1e-9);
    CHECK(rel_err(est.B_hat, sys.B) < 1e-9);
    CHECK(est.gram_min_singular > 0.0);
}

TEST_CASE("least squares converges with more data") {
    const SystemInstance sys = scalar_instance(0.9, 1.0);
    const auto err = [&](long N) {
        const auto setup = ExplorationSetup::zero_feedback(sys, 1.0, N, 50);
        double total = 0.0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const SysIdEstimate est = least_squares_sysid(rollout_offline(sys, setup, s));
            total += (est.A_hat - sys.A).squaredNorm() + (est.B_hat - sys.B).squaredNorm();
        }
        return total / 20.0;
    };
    const double coarse = err(10);
    const double fine = err(1000);
    CHECK(fine < coarse / 30.0);
}

TEST_CASE("missing excitation is reported") {
    const SystemInstance sys = scalar_instance(0.5, 1.0);
    const auto setup = ExplorationSetup::zero_feedback(sys, 0.0, 5, 20);
    try {
        (void)least_squares_sysid(rollout_offline(sys, setup, 1));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ExcitationDeficient);
    }
    MonteCarloOptions opts;
    opts.trials = 3;
    CHECK_THROWS_AS((void)monte_carlo_excess_cost(sys, setup, opts), Error);
}

TEST_CASE("certainty-equivalent gain on the true model is optimal") {
    std::mt19937_64 rng(87);
    const SystemInstance sys = random_instance(rng, 3, 2);
    const LqrSolution sol = lqr_synthesize(sys);
    const CertaintyEquivalentGain ce = certainty_equivalent_gain(sys.A, sys.B, sys.Q, sys.R);
    REQUIRE(ce.solved);
    CHECK(rel_err(ce.K_hat, sol.K) < 1e-10);
    const CertaintyEquivalentGain bad = certainty_equivalent_gain(Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1),
                                                                  Matrix::Identity(1, 1), Matrix::Identity(1, 1));
    CHECK_FALSE(bad.solved);
    CHECK_FALSE(bad.failure.empty());
}

TEST_CASE("exact excess cost") {
    std::mt19937_64 rng(89);
    const SystemInstance sys = random_instance(rng, 3, 2);
    const LqrSolution sol = lqr_synthesize(sys);
    CHECK(excess_cost_exact(sys, sol, sol.K, 100).value == 0.0);

    Matrix delta = test_support::gaussian(rng, 2, 3);
    delta *= 0.05 / delta.norm();
    const Matrix K_hat = sol.K + delta;
    REQUIRE(spectral_radius(sys.A + sys.B * K_hat) < 1.0);

    // Long-horizon average tends to the stationary cost gap J(K̂) − J(K).
    const Matrix S = solve_dlyap((sys.A + sys.B * K_hat).transpose(), sys.Sigma_W);
    const double gap = (S * (sys.Q + K_hat.transpose() * sys.R * K_hat)).trace() - sol.optimal_cost;
    const ExcessCost ec = excess_cost_exact(sys, sol, K_hat, 200000);
    CHECK(ec.value == doctest::Approx(gap).epsilon(1e-3));

    // Short horizon: Σ₀ = 0 contributes nothing, Σ₁ = Σ_W.
    const double two = excess_cost_exact(sys, sol, K_hat, 2).value;
    CHECK(two == doctest::Approx(0.5 * (delta.transpose() * sol.Psi * delta * sys.Sigma_W).trace()).epsilon(1e-12));

    const ExcessCost blown = excess_cost_exact(scalar_instance(0.5, 1.0), Matrix::Constant(1, 1, 1e3), 400);
    CHECK(blown.overflow);
    CHECK_THROWS_AS((void)excess_cost_exact(sys, sol, K_hat, 0), Error);
}

TEST_CASE("trial seeds") {
    CHECK(trial_seed(1, 0) == trial_seed(1, 0));
    CHECK(trial_seed(1, 0) != trial_seed(1, 1));
    CHECK(trial_seed(1, 0) != trial_seed(2, 0));
}

TEST_CASE("pipeline with the exact model has zero excess cost") {
    const SystemInstance sys = scalar_instance(0.9, 1.0);
    const LqrSolution sol = lqr_synthesize(sys);
    const auto setup = ExplorationSetup::zero_feedback(sys, 1.0, 10, 50);
    PipelineOptions opts;
    opts.diagnostic_exact_model = true;
    const LearnerResult r = run_pipeline(sys, sol, setup, 4, opts);
    CHECK_FALSE(r.failed);
    CHECK(r.stabilized);
    CHECK(r.excess_cost <= 1e-20);
}

TEST_CASE("Monte Carlo is independent of the thread count") {
    const SystemInstance sys = scalar_instance(0.9, 1.0);
    const auto setup = ExplorationSetup::zero_feedback(sys, 1.0, 20, 50);
    MonteCarloOptions opts;
    opts.trials = 40;
    opts.seed = 12;
    const MonteCarloStats one = monte_carlo_excess_cost(sys, setup, opts);
    opts.threads = 4;
    const MonteCarloStats four = monte_carlo_excess_cost(sys, setup, opts);
    CHECK(one.mean == four.mean);
    CHECK(one.stderr_mean == four.stderr_mean);
    CHECK(one.n_trials == 40);
    CHECK(one.N_times_mean == doctest::Approx(20.0 * one.mean));
    CHECK(one.mean > 0.0);
    opts.seed = 13;
    CHECK(monte_carlo_excess_cost(sys, setup, opts).mean != one.mean);
}

TEST_CASE("empirical Fisher information stays below L") {
    std::mt19937_64 rng(91);
    const SystemInstance sys = random_instance(rng, 2, 1, {0.5, 0.9, false, false});
    const LqrSolution sol = lqr_synthesize(sys);
    const auto setup = ExplorationSetup::zero_feedback(sys, 1.0, 10, 100);
    for (const auto& basis : {polderman_basis(sol), PerturbationBasis::canonical(2, 1)}) {
        const double exact = exact_fisher_ratio(sys, setup, basis);
        CHECK(exact <= 1.0);
        const FisherCheck check = empirical_fisher_check(sys, setup, basis, 200, 3, 2);
        CHECK(check.ratio == doctest::Approx(exact).epsilon(0.05));
        CHECK(check.ratio <= 1.05);
    }
}
