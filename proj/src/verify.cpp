#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "lqr_limits/cli.hpp"
#include "lqr_limits/instances.hpp"

namespace lqr_limits {

namespace {

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& what) {
        if (!condition && passed) {
            passed = false;
            detail << what;
        }
    }
};

using Check = std::function<void(Outcome&)>;

// Scalar DARE root by bisection, independent of the doubling solver.
double scalar_dare_bisection(double a, double b, double q, double r) {
    const auto f = [&](double p) { return q + a * a * p - a * a * p * p * b * b / (b * b * p + r) - p; };
    double lo = q;
    double hi = q + 1.0;
    while (f(hi) > 0.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Matrix truncated_dlyap_series(const Matrix& A, const Matrix& Q, int terms) {
    Matrix P = Matrix::Zero(A.rows(), A.cols());
    Matrix power = Matrix::Identity(A.rows(), A.cols());
    for (int t = 0; t < terms; ++t) {
        P += power.transpose() * Q * power;
        power = power * A;
    }
    return P;
}

double relative_error(const Matrix& got, const Matrix& want) {
    return (got - want).norm() / std::max(1e-12, want.norm());
}

}  // namespace

std::vector<VerifyCheck> run_verify_suite(const VerifyOptions& options) {
    const DareOptions& dare = options.dare;
    const auto synth = [&](const SystemInstance& sys) { return lqr_synthesize(sys, dare); };

    std::vector<std::pair<std::string, Check>> checks;

    checks.emplace_back("dlyap_truncated_series", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed);
        for (int i = 0; i < 20; ++i) {
            const int n = 1 + i % 8;
            RandomInstanceOptions ro;
            ro.radius_min = 0.1;
            ro.radius_max = 0.95;
            const SystemInstance sys = random_instance(rng, n, 1, ro);
            const Matrix P = solve_dlyap(sys.A, sys.Q);
            const Matrix series = truncated_dlyap_series(sys.A, sys.Q, 4000);
            const double err = (P - series).cwiseAbs().maxCoeff() / (1.0 + series.norm());
            o.require(err <= 1e-8, "instance " + std::to_string(i) + " error " + std::to_string(err));
        }
    });

    checks.emplace_back("dare_residual_suite", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed + 1);
        for (int i = 0; i < 50; ++i) {
            const int n = 1 + i % 8;
            const int m = 1 + i % 3;
            const SystemInstance sys = random_instance(rng, n, m);
            try {
                const Matrix P = solve_dare(sys.A, sys.B, sys.Q, sys.R, dare);
                const double res = dare_residual(sys.A, sys.B, sys.Q, sys.R, P);
                o.require(res <= 1e-9 * (1.0 + spectral_norm(P)),
                          "instance " + std::to_string(i) + " residual " + std::to_string(res));
            } catch (const Error& e) {
                o.require(false, "instance " + std::to_string(i) + ": " + e.what());
            }
        }
    });

    checks.emplace_back("dare_scalar_root", [&](Outcome& o) {
        const SystemInstance sys = scalar_instance(0.9, 1.0);
        const double root = 0.5 * (0.81 + std::sqrt(0.81 * 0.81 + 4.0));
        const double bisect = scalar_dare_bisection(0.9, 1.0, 1.0, 1.0);
        const LqrSolution sol = synth(sys);
        o.require(std::abs(sol.P(0, 0) - root) <= 1e-8, "P differs from the quadratic root");
        o.require(std::abs(sol.P(0, 0) - bisect) <= 1e-8, "P differs from the bisection root");
    });

    checks.emplace_back("completed_square_and_argmin", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed + 2);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < 10; ++i) {
            const SystemInstance sys = random_instance(rng, 2 + i % 4, 1 + i % 2);
            const LqrSolution sol = synth(sys);
            const Matrix rhs = sys.Q + sol.A_cl.transpose() * sol.P * sol.A_cl + sol.K.transpose() * sys.R * sol.K;
            o.require((sol.P - rhs).norm() <= 1e-8 * (1.0 + sol.P.norm()), "completed-square identity");
            for (int k = 0; k < 10; ++k) {
                Matrix delta(sol.K.rows(), sol.K.cols());
                for (Eigen::Index j = 0; j < delta.size(); ++j) delta(j) = normal(rng);
                delta *= 1e-3 / delta.norm();
                const Matrix K = sol.K + delta;
                const Matrix M = sys.A + sys.B * K;
                if (spectral_radius(M) >= 1.0 - kStabilityMargin) continue;
                const Matrix S = solve_dlyap(M.transpose(), sys.Sigma_W);
                const double cost = (S * (sys.Q + K.transpose() * sys.R * K)).trace();
                o.require(cost > sol.optimal_cost, "perturbed gain did not increase the cost");
            }
        }
    });

    checks.emplace_back("gain_derivative_vs_finite_difference", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed + 3);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < 20; ++i) {
            const SystemInstance sys = random_instance(rng, 1 + i % 5, 1 + i % 3);
            const LqrSolution sol = synth(sys);
            for (int k = 0; k < 3; ++k) {
                Vector v(sys.param_dim());
                for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = normal(rng);
                const auto dir = PerturbationDirection::from_vec(v / v.norm(), sys.state_dim(), sys.input_dim());
                const Matrix exact = directional_gain_derivative(sol, sys, dir);
                const Matrix fd = finite_difference_gain_derivative(sys, dir, default_fd_step(sys));
                const double err = relative_error(fd, exact);
                o.require(err <= 1e-4, "instance " + std::to_string(i) + " relative error " + std::to_string(err));
            }
        }
    });

    checks.emplace_back("polderman_directions", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed + 4);
        for (int i = 0; i < 10; ++i) {
            const SystemInstance sys = random_instance(rng, 2 + i % 4, 1 + i % 2);
            const LqrSolution sol = synth(sys);
            const PerturbationBasis basis = polderman_basis(sol);
            for (const auto& d : basis.directions()) {
                o.require(d.closed_loop_change(sol.K).norm() <= 1e-10, "closed-loop change not zero");
                const Matrix expected = -sol.Psi.llt().solve(d.Delta_B.transpose() * sol.P * sol.A_cl);
                const Matrix got = directional_gain_derivative(sol, sys, d);
                o.require((got - expected).norm() <= 1e-10 * (1.0 + expected.norm()), "derivative mismatch");
            }
        }
    });

    checks.emplace_back("self_direction_closed_form", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed + 5);
        for (int i = 0; i < 20; ++i) {
            const SystemInstance sys = random_instance(rng, 1 + i % 5, 1 + i % 3);
            const LqrSolution sol = synth(sys);
            const Matrix general = directional_gain_derivative(sol, sys, self_direction(sys));
            const Matrix closed = self_direction_gain_derivative(sol, sys);
            o.require((general - closed).norm() <= 1e-8 * (1.0 + general.norm()), "closed form mismatch");
        }
    });

    checks.emplace_back("fisher_input_constant", [&](Outcome& o) {
        const SystemInstance sys = scalar_instance(0.9, 1.0);
        for (const double sigma : {0.25, 1.0, 3.0}) {
            const ExplorationSetup setup = ExplorationSetup::zero_feedback(sys, sigma, 1, 10);
            const double L = fisher_direction_bound(sys, setup, single_direction_basis(input_direction(sys)));
            o.require(std::abs(L - 8.0 * sigma) <= 1e-14 * 8.0 * sigma, "L != 8 sigma^2");
        }
    });

    checks.emplace_back("fisher_sup_grid_search", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed + 6);
        const SystemInstance sys = random_instance(rng, 2, 1, {0.3, 0.8, false, false});
        const LqrSolution sol = synth(sys);
        const ExplorationSetup setup{sol.K * 0.5, 1.3, 1, 10};
        Matrix G(sys.param_dim(), 2);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index j = 0; j < G.size(); ++j) G(j) = normal(rng);
        const Matrix V = Eigen::HouseholderQR<Matrix>(G).householderQ() * Matrix::Identity(G.rows(), 2);
        const PerturbationBasis basis = PerturbationBasis::from_matrix(V, 2, 1);
        const double L = fisher_direction_bound(sys, setup, basis);
        const double W = spectral_norm(exploration_gramian(sys, setup.F));
        const double h = hinf_input_sum(sys, setup.F);
        const double Fn = spectral_norm(setup.F);
        double best = 0.0;
        for (int k = 0; k < 20000; ++k) {
            const double angle = M_PI * k / 20000.0;
            const Vector w = V.col(0) * std::cos(angle) + V.col(1) * std::sin(angle);
            const double wa = w.head(4).squaredNorm();
            const double wb = w.tail(2).squaredNorm();
            const double nu1 = wa + 2.0 * wb * Fn * Fn;
            const double nu2 = wb;
            best = std::max(best, 4.0 / lambda_min(sys.Sigma_W) *
                                      (nu1 * (W + setup.sigma_u_sq * h * h) + 2.0 * setup.sigma_u_sq * nu2));
        }
        o.require(best <= L * (1.0 + 1e-12) && best >= L * (1.0 - 1e-6), "grid sup disagrees with eigenvalue form");
    });

    checks.emplace_back("g_kronecker_identity", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed + 7);
        for (int i = 0; i < 10; ++i) {
            const SystemInstance sys = random_instance(rng, 2 + i % 3, 1 + i % 2);
            const LqrSolution sol = synth(sys);
            const PerturbationBasis basis = PerturbationBasis::canonical(sys.state_dim(), sys.input_dim());
            const Matrix M = controller_jacobian(sol, sys) * basis.V();
            for (const auto choice : {GammaChoice::NoiseFloor, GammaChoice::StationaryHalf}) {
                const Matrix Gamma = gamma_matrix(sys, sol, choice);
                Matrix kron(Gamma.rows() * sol.Psi.rows(), Gamma.cols() * sol.Psi.cols());
                for (Eigen::Index r = 0; r < Gamma.rows(); ++r)
                    for (Eigen::Index c = 0; c < Gamma.cols(); ++c)
                        kron.block(r * sol.Psi.rows(), c * sol.Psi.cols(), sol.Psi.rows(), sol.Psi.cols()) =
                            Gamma(r, c) * sol.Psi;
                const double direct = (kron * M * M.transpose()).trace();
                const double G = g_numerator(sys, sol, basis, choice);
                o.require(std::abs(direct - G) <= 1e-10 * (1.0 + std::abs(direct)), "Kronecker form mismatch");
            }
        }
    });

    checks.emplace_back("relaxation_chains", [&](Outcome& o) {
        std::mt19937_64 rng(options.seed + 8);
        for (int i = 0; i < 15; ++i) {
            RandomInstanceOptions ro;
            ro.identity_costs = true;
            ro.radius_max = 0.95;
            const SystemInstance sys = random_instance(rng, 2 + i % 3, 1 + i % 2, ro);
            const ExplorationSetup setup = ExplorationSetup::zero_feedback(sys, 1.0, 1, 10);
            const BoundReport dim = dimensional_bound(sys, setup);
            const BoundReport st = system_theoretic_bound(sys, setup);
            o.require(dim.relaxation_holds.value_or(false), "dimensional bound above the Polderman bound");
            o.require(st.relaxation_holds.value_or(false), "system-theoretic bound above the self-direction bound");
        }
        for (int d = 3; d <= 8; ++d) {
            const SystemInstance sys = exponential_instance(d, 0.5);
            const BoundReport r = exponential_bound(d, 0.5, ExplorationSetup::zero_feedback(sys, 1.0, 1, 10));
            o.require(r.relaxation_holds.value_or(false), "exponential closed form above the exact bound");
            o.require(r.extras.at("P_last") >= std::pow(4.0, d - 2), "P_last below 4^(d-2)");
        }
    });

    checks.emplace_back("figure1_monotone", [&](Outcome& o) {
        std::vector<double> gammas;
        for (int i = 0; i < 20; ++i) gammas.push_back(std::pow(10.0, -3.0 + i / 19.0));
        const auto curve = scalar_bound_curve(gammas, {Matrix::Zero(1, 1), 1.0, 1, 10});
        for (std::size_t i = 1; i < curve.size(); ++i) {
            o.require(curve[i].bound_value < curve[i - 1].bound_value, "not strictly decreasing in gamma");
        }
        o.require(curve.front().bound_value / curve.back().bound_value > 10.0, "ratio over the range <= 10");
    });

    checks.emplace_back("tau_brute_force", [&](Outcome& o) {
        Matrix A(2, 2);
        A << 0.5, 10.0, 0.0, 0.5;
        double sup = 0.0;
        Matrix power = Matrix::Identity(2, 2);
        for (int k = 0; k <= 500; ++k) {
            sup = std::max(sup, spectral_norm(power) * std::pow(2.0, k));
            power = power * A;
        }
        const double brute = sup * sup / 0.75;
        const double got = tau(A, 500);
        o.require(std::abs(got - brute) <= 1e-9 * brute, "tau differs from the brute-force scan");
    });

    checks.emplace_back("empirical_fisher_ratio", [&](Outcome& o) {
        const SystemInstance sys = scalar_instance(0.5, 1.0);
        const ExplorationSetup setup = ExplorationSetup::zero_feedback(sys, 1.0, 10, 100);
        const FisherCheck fc =
            empirical_fisher_check(sys, setup, PerturbationBasis::canonical(1, 1), 100, options.seed + 9);
        o.require(fc.ratio > 0.0 && fc.ratio <= 1.05, "ratio " + std::to_string(fc.ratio));
    });

    checks.emplace_back("learner_above_bound", [&](Outcome& o) {
        const SystemInstance sys = scalar_instance(0.9, 1.0);
        const ExplorationSetup setup = ExplorationSetup::zero_feedback(sys, 1.0, 100, 50);
        const BoundReport bound =
            asymptotic_lower_bound(sys, setup, single_direction_basis(input_direction(sys)), GammaChoice::NoiseFloor);
        MonteCarloOptions mc;
        mc.trials = 200;
        mc.seed = options.seed + 10;
        const MonteCarloStats stats = monte_carlo_excess_cost(sys, setup, mc);
        o.require(stats.N_times_mean >= bound.formula_value - 3.0 * stats.N_times_stderr,
                  "N*mean " + std::to_string(stats.N_times_mean) + " below bound " +
                      std::to_string(bound.formula_value));
    });

    std::vector<VerifyCheck> results;
    results.reserve(checks.size());
    for (auto& [name, check] : checks) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            check(o);
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail << "exception: " << e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ostringstream detail;
        detail << o.detail.str() << (o.detail.str().empty() ? "" : " ") << "(" << seconds << " s)";
        results.push_back({name, o.passed, detail.str()});
    }
    return results;
}

CommandOutput cmd_verify(const VerifyOptions& options) {
    const auto checks = run_verify_suite(options);
    CommandOutput out;
    std::ostringstream text;
    int failed = 0;
    for (const auto& c : checks) {
        text << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        failed += c.passed ? 0 : 1;
    }
    text << (failed == 0 ? "all " + std::to_string(checks.size()) + " checks passed"
                         : std::to_string(failed) + " of " + std::to_string(checks.size()) + " checks failed")
         << '\n';
    out.artifact = text.str();
    out.exit_code = failed == 0 ? kExitSuccess : kExitError;
    return out;
}

}  // namespace lqr_limits
