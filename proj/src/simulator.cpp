#include "lqr_limits/simulator.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace lqr_limits {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

// Runs body(i) for i in [0, count) on up to `threads` workers. Exceptions are
// rethrown for the lowest failing index so the outcome is schedule independent.
template <typename Body>
void parallel_for(int count, int threads, Body body) {
    if (threads <= 0) {
        threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    threads = std::min(threads, std::max(count, 1));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    const auto worker = [&]() {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                body(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

Matrix regressor_gram(const TrajectoryBatch& batch) {
    const Eigen::Index n = batch.states.front().rows();
    const Eigen::Index m = batch.inputs.front().rows();
    Matrix gram = Matrix::Zero(n + m, n + m);
    Matrix Z(n + m, batch.T);
    for (int k = 0; k < batch.N; ++k) {
        Z.topRows(n) = batch.states[static_cast<std::size_t>(k)].leftCols(batch.T);
        Z.bottomRows(m) = batch.inputs[static_cast<std::size_t>(k)];
        gram.noalias() += Z * Z.transpose();
    }
    return gram;
}

}  // namespace

std::string to_string(BudgetConvention convention) {
    return convention == BudgetConvention::Total ? "total" : "per_coordinate";
}

BudgetConvention parse_budget_convention(const std::string& text) {
    if (text == "total") return BudgetConvention::Total;
    if (text == "per_coordinate") return BudgetConvention::PerCoordinate;
    throw Error(ErrorKind::Validation,
                "budget_convention must be \"total\" or \"per_coordinate\", got \"" + text + "\"");
}

double exploratory_variance(double sigma_u_sq, int input_dim, BudgetConvention convention) {
    return convention == BudgetConvention::Total ? sigma_u_sq / input_dim : sigma_u_sq;
}

TrajectoryBatch rollout_offline(const SystemInstance& sys, const ExplorationSetup& setup, std::uint64_t seed,
                                BudgetConvention convention) {
    sys.validate();
    setup.validate(sys);
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    const int N = static_cast<int>(setup.N);
    const int T = static_cast<int>(setup.T);

    Eigen::LLT<Matrix> noise_factor(sys.Sigma_W);
    const Matrix L_w = noise_factor.matrixL();
    const double u_std = std::sqrt(exploratory_variance(setup.sigma_u_sq, m, convention));

    std::mt19937_64 rng = seeded_engine(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);

    TrajectoryBatch batch;
    batch.N = N;
    batch.T = T;
    batch.seed = seed;
    batch.states.reserve(static_cast<std::size_t>(N));
    batch.inputs.reserve(static_cast<std::size_t>(N));
    batch.exploratory.reserve(static_cast<std::size_t>(N));
    Vector w(n);
    Vector u_tilde(m);
    for (int k = 0; k < N; ++k) {
        Matrix X = Matrix::Zero(n, T + 1);
        Matrix U(m, T);
        Matrix U_tilde(m, T);
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < n; ++i) w(i) = normal(rng);
            for (int i = 0; i < m; ++i) u_tilde(i) = u_std * normal(rng);
            U_tilde.col(t) = u_tilde;
            U.col(t) = setup.F * X.col(t) + u_tilde;
            X.col(t + 1) = sys.A * X.col(t) + sys.B * U.col(t) + L_w * w;
        }
        if (!X.allFinite()) {
            std::ostringstream os;
            os << "state overflow in experiment " << k;
            throw Error(ErrorKind::Divergence, os.str());
        }
        batch.states.push_back(std::move(X));
        batch.inputs.push_back(std::move(U));
        batch.exploratory.push_back(std::move(U_tilde));
    }
    return batch;
}

double check_budget(const TrajectoryBatch& batch) {
    if (batch.N == 0 || batch.T == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& U : batch.exploratory) {
        total += U.squaredNorm();
    }
    return total / (static_cast<double>(batch.N) * batch.T);
}

SysIdEstimate least_squares_sysid(const TrajectoryBatch& batch) {
    if (batch.N == 0 || batch.T == 0) {
        throw Error(ErrorKind::ExcitationDeficient, "empty trajectory batch");
    }
    const Eigen::Index n = batch.states.front().rows();
    const Eigen::Index m = batch.inputs.front().rows();
    const Matrix gram = regressor_gram(batch);
    Matrix cross = Matrix::Zero(n, n + m);
    Matrix Z(n + m, batch.T);
    for (int k = 0; k < batch.N; ++k) {
        const auto& X = batch.states[static_cast<std::size_t>(k)];
        Z.topRows(n) = X.leftCols(batch.T);
        Z.bottomRows(m) = batch.inputs[static_cast<std::size_t>(k)];
        cross.noalias() += X.rightCols(batch.T) * Z.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double smallest = std::max(0.0, eig.eigenvalues()(0));
    const double largest = eig.eigenvalues()(eig.eigenvalues().size() - 1);
    if (!(largest > 0.0) || smallest <= 1e-12 * largest) {
        std::ostringstream os;
        os << "regressor Gram matrix is singular (smallest singular value " << smallest << ")";
        throw Error(ErrorKind::ExcitationDeficient, os.str());
    }
    const Matrix theta = gram.ldlt().solve(cross.transpose()).transpose();
    return {theta.leftCols(n), theta.rightCols(m), smallest};
}

CertaintyEquivalentGain certainty_equivalent_gain(const Matrix& A_hat, const Matrix& B_hat, const Matrix& Q,
                                                  const Matrix& R) {
    CertaintyEquivalentGain out;
    try {
        if (!A_hat.allFinite() || !B_hat.allFinite()) {
            throw Error(ErrorKind::Validation, "estimate has non-finite entries");
        }
        const Matrix P = solve_dare(A_hat, B_hat, Q, R);
        out.K_hat = lqr_gain(A_hat, B_hat, R, P);
        out.solved = true;
    } catch (const Error& e) {
        out.K_hat = Matrix::Zero(B_hat.cols(), A_hat.rows());
        out.failure = e.what();
    }
    return out;
}

ExcessCost excess_cost_exact(const SystemInstance& sys, const Matrix& K_hat, long T) {
    return excess_cost_exact(sys, lqr_synthesize(sys), K_hat, T);
}

ExcessCost excess_cost_exact(const SystemInstance& sys, const LqrSolution& sol, const Matrix& K_hat, long T) {
    if (T < 1) {
        throw Error(ErrorKind::Validation, "excess cost horizon must be >= 1");
    }
    const Matrix dK = K_hat - sol.K;
    const Matrix weight = dK.transpose() * sol.Psi * dK;
    const Matrix M = sys.A + sys.B * K_hat;
    Matrix Sigma = Matrix::Zero(sys.state_dim(), sys.state_dim());
    double total = 0.0;
    for (long t = 0; t < T; ++t) {
        total += (weight * Sigma).trace();
        Sigma = M * Sigma * M.transpose() + sys.Sigma_W;
        if (!std::isfinite(total) || !Sigma.allFinite()) {
            return {std::numeric_limits<double>::infinity(), true};
        }
    }
    return {std::max(0.0, total / static_cast<double>(T)), false};
}

LearnerResult run_pipeline(const SystemInstance& sys, const LqrSolution& sol, const ExplorationSetup& setup,
                           std::uint64_t seed, const PipelineOptions& options) {
    LearnerResult result;
    if (options.diagnostic_exact_model) {
        result.A_hat = sys.A;
        result.B_hat = sys.B;
    } else {
        try {
            const TrajectoryBatch batch = rollout_offline(sys, setup, seed, options.convention);
            const SysIdEstimate est = least_squares_sysid(batch);
            result.A_hat = est.A_hat;
            result.B_hat = est.B_hat;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ExcitationDeficient && e.kind() != ErrorKind::Divergence) {
                throw;
            }
            result.failed = true;
            result.failure = e.what();
            return result;
        }
    }
    const CertaintyEquivalentGain ce = certainty_equivalent_gain(result.A_hat, result.B_hat, sys.Q, sys.R);
    result.K_hat = ce.K_hat;
    if (!ce.solved) {
        result.failed = true;
        result.failure = ce.failure;
        return result;
    }
    result.stabilized = spectral_radius(sys.A + sys.B * result.K_hat) < 1.0 - kStabilityMargin;
    if (!result.stabilized) {
        result.failed = true;
        result.failure = "certainty-equivalent gain does not stabilize the true system";
        return result;
    }
    const ExcessCost ec = excess_cost_exact(sys, sol, result.K_hat, setup.T);
    result.excess_cost = ec.value;
    if (ec.overflow) {
        result.failed = true;
        result.failure = "excess cost overflow";
    }
    return result;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
    std::mt19937_64 engine = seeded_engine(seed, trial + 1);
    return engine();
}

MonteCarloStats monte_carlo_excess_cost(const SystemInstance& sys, const ExplorationSetup& setup,
                                        const MonteCarloOptions& options) {
    if (options.trials < 1) {
        throw Error(ErrorKind::Validation, "trials must be >= 1");
    }
    sys.validate();
    setup.validate(sys);
    const LqrSolution sol = lqr_synthesize(sys);

    std::vector<LearnerResult> results(static_cast<std::size_t>(options.trials));
    parallel_for(options.trials, options.threads, [&](int i) {
        results[static_cast<std::size_t>(i)] =
            run_pipeline(sys, sol, setup, trial_seed(options.seed, static_cast<std::uint64_t>(i)), options.pipeline);
    });

    MonteCarloStats stats;
    stats.n_trials = options.trials;
    stats.N = setup.N;
    stats.T = setup.T;
    stats.seed = options.seed;
    double sum = 0.0;
    int ok = 0;
    for (const auto& r : results) {
        if (r.failed) {
            ++stats.n_failed;
            continue;
        }
        sum += r.excess_cost;
        ++ok;
    }
    if (ok == 0) {
        std::ostringstream os;
        os << "all " << options.trials << " trials failed";
        if (!results.empty()) {
            os << " (first: " << results.front().failure << ")";
        }
        throw Error(ErrorKind::AllTrialsFailed, os.str());
    }
    stats.mean = sum / ok;
    double sq = 0.0;
    for (const auto& r : results) {
        if (!r.failed) {
            const double d = r.excess_cost - stats.mean;
            sq += d * d;
        }
    }
    stats.stderr_mean = ok > 1 ? std::sqrt(sq / (ok - 1) / ok) : 0.0;
    stats.N_times_mean = static_cast<double>(setup.N) * stats.mean;
    stats.N_times_stderr = static_cast<double>(setup.N) * stats.stderr_mean;
    return stats;
}

FisherCheck empirical_fisher_check(const SystemInstance& sys, const ExplorationSetup& setup,
                                   const PerturbationBasis& basis, int trials, std::uint64_t seed, int threads,
                                   BudgetConvention convention) {
    if (trials < 1) {
        throw Error(ErrorKind::Validation, "trials must be >= 1");
    }
    sys.validate();
    setup.validate(sys);

    std::vector<Matrix> grams(static_cast<std::size_t>(trials));
    parallel_for(trials, threads, [&](int i) {
        const TrajectoryBatch batch =
            rollout_offline(sys, setup, trial_seed(seed, static_cast<std::uint64_t>(i)), convention);
        grams[static_cast<std::size_t>(i)] = regressor_gram(batch);
    });
    Matrix mean_gram = Matrix::Zero(grams.front().rows(), grams.front().cols());
    for (const auto& g : grams) {
        mean_gram += g;
    }
    mean_gram /= trials;

    const Matrix noise_inv = sys.Sigma_W.inverse();
    const auto& dirs = basis.directions();
    const int k = basis.size();
    std::vector<Matrix> blocks;
    blocks.reserve(dirs.size());
    for (const auto& d : dirs) {
        Matrix AB(d.Delta_A.rows(), d.Delta_A.cols() + d.Delta_B.cols());
        AB << d.Delta_A, d.Delta_B;
        blocks.push_back(std::move(AB));
    }
    Matrix projected(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            projected(i, j) = (blocks[static_cast<std::size_t>(i)].transpose() * noise_inv *
                               blocks[static_cast<std::size_t>(j)] * mean_gram)
                                  .trace();
        }
    }

    FisherCheck out;
    out.empirical_norm = std::max(0.0, lambda_max(symmetrize(projected)));
    out.L = fisher_direction_bound(sys, setup, basis);
    const double scale = static_cast<double>(setup.T) * static_cast<double>(setup.N) * out.L;
    if (scale == 0.0) {
        out.ratio = out.empirical_norm == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
        out.ratio = out.empirical_norm / scale;
    }
    return out;
}

}  // namespace lqr_limits
