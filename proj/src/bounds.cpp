#include "lqr_limits/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace lqr_limits {

namespace {

Matrix feedback_or_zero(const SystemInstance& sys, const Matrix& F) {
    if (F.size() == 0) {
        return Matrix::Zero(sys.input_dim(), sys.state_dim());
    }
    return F;
}

BurnInCheck at_least(std::string name, double required, double actual) {
    return {std::move(name), "actual >= required", required, actual, actual >= required};
}

BurnInCheck at_most(std::string name, double required, double actual) {
    return {std::move(name), "actual <= required", required, actual, actual <= required};
}

// Smallest generalized eigenvalue of (X, C) for C ≻ 0, i.e. the largest s
// with X ⪰ s·C.
double relative_lambda_min(const Matrix& X, const Matrix& C) {
    Eigen::LLT<Matrix> llt(C);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "Cholesky factorization of a minorant centre failed");
    }
    const Matrix Linv_X = llt.matrixL().solve(X);
    const Matrix S = llt.matrixL().solve(Linv_X.transpose());
    return lambda_min(symmetrize(S));
}

// c_A = ‖W_c‖ + σ²h²
double state_weight(const SystemInstance& sys, const Matrix& F, double sigma_u_sq) {
    const Matrix W_c = exploration_gramian(sys, F);
    const double h = hinf_input_sum(sys, F);
    return spectral_norm(W_c) + sigma_u_sq * h * h;
}

std::vector<Matrix> basis_gain_derivatives(const SystemInstance& sys, const LqrSolution& sol,
                                           const PerturbationBasis& basis) {
    std::vector<Matrix> out;
    out.reserve(basis.directions().size());
    for (const auto& dir : basis.directions()) {
        out.push_back(directional_gain_derivative(sol, sys, dir));
    }
    return out;
}

double weighted_trace(const std::vector<Matrix>& left, const std::vector<Matrix>& right, const Matrix& Psi,
                      const Matrix& Gamma) {
    double total = 0.0;
    for (std::size_t v = 0; v < left.size(); ++v) {
        total += (right[v].transpose() * Psi * left[v] * Gamma).trace();
    }
    return total;
}

void require_basis_matches(const SystemInstance& sys, const PerturbationBasis& basis) {
    if (basis.size() == 0) {
        throw Error(ErrorKind::DegenerateInput, "perturbation basis is empty");
    }
    if (basis.state_dim() != sys.state_dim() || basis.input_dim() != sys.input_dim()) {
        throw Error(ErrorKind::Validation, "perturbation basis dimensions do not match the system");
    }
}

double ab_frobenius_sq(const SystemInstance& sys) {
    return sys.A.squaredNorm() + sys.B.squaredNorm();
}

}  // namespace

ExplorationSetup ExplorationSetup::zero_feedback(const SystemInstance& sys, double sigma_u_sq, long N,
                                                 long T) {
    return {Matrix::Zero(sys.input_dim(), sys.state_dim()), sigma_u_sq, N, T};
}

void ExplorationSetup::validate(const SystemInstance& sys) const {
    if (F.rows() != sys.input_dim() || F.cols() != sys.state_dim()) {
        std::ostringstream os;
        os << "F must be " << sys.input_dim() << "x" << sys.state_dim() << ", got " << F.rows() << "x"
           << F.cols();
        throw Error(ErrorKind::Validation, os.str());
    }
    if (!F.allFinite()) {
        throw Error(ErrorKind::Validation, "F has non-finite entries");
    }
    if (!(sigma_u_sq >= 0.0) || !std::isfinite(sigma_u_sq)) {
        throw Error(ErrorKind::Validation, "sigma_u_sq must be finite and >= 0");
    }
    if (N < 1 || T < 1) {
        throw Error(ErrorKind::Validation, "N and T must be >= 1");
    }
    require_stable(sys.A + sys.B * F, "A + BF");
}

std::string to_string(GammaChoice choice) {
    return choice == GammaChoice::NoiseFloor ? "noise_floor" : "stationary_half";
}

std::string to_string(BoundForm form) {
    switch (form) {
        case BoundForm::Asymptotic: return "asymptotic";
        case BoundForm::FiniteSample: return "finite_sample";
        case BoundForm::Dimensional: return "dimensional";
        case BoundForm::Exponential: return "exponential";
        case BoundForm::SystemTheoretic: return "system_theoretic";
    }
    return "unknown";
}

GammaChoice parse_gamma_choice(const std::string& text) {
    if (text == "noise_floor") return GammaChoice::NoiseFloor;
    if (text == "stationary_half") return GammaChoice::StationaryHalf;
    throw Error(ErrorKind::Validation,
                "gamma_choice must be \"noise_floor\" or \"stationary_half\", got \"" + text + "\"");
}

bool BoundReport::burn_in_ok() const {
    return std::all_of(burn_in.begin(), burn_in.end(), [](const BurnInCheck& c) { return c.passed; });
}

bool BoundReport::has_flag(const std::string& flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

Matrix exploration_gramian(const SystemInstance& sys, const Matrix& F) {
    const Matrix M = sys.A + sys.B * feedback_or_zero(sys, F);
    require_stable(M, "A + BF");
    return solve_dlyap(M.transpose(), sys.Sigma_W);
}

double hinf_input_sum(const SystemInstance& sys, const Matrix& F, double tol) {
    const Matrix M = sys.A + sys.B * feedback_or_zero(sys, F);
    return power_norm_sum(M, sys.B, 1, tol);
}

double fisher_direction_bound(const SystemInstance& sys, const ExplorationSetup& setup,
                              const PerturbationBasis& basis) {
    require_basis_matches(sys, basis);
    const Matrix F = feedback_or_zero(sys, setup.F);
    const double c_A = state_weight(sys, F, setup.sigma_u_sq);
    const double F_norm = spectral_norm(F);
    const double c_B = 2.0 * F_norm * F_norm * c_A + 2.0 * setup.sigma_u_sq;

    const Eigen::Index a_len = static_cast<Eigen::Index>(sys.state_dim()) * sys.state_dim();
    const Matrix& V = basis.V();
    const Matrix V_A = V.topRows(a_len);
    const Matrix V_B = V.bottomRows(V.rows() - a_len);
    const Matrix form = c_A * V_A.transpose() * V_A + c_B * V_B.transpose() * V_B;
    return std::max(0.0, 4.0 / lambda_min(sys.Sigma_W) * lambda_max(symmetrize(form)));
}

Matrix gamma_matrix(const SystemInstance& sys, const LqrSolution& sol, GammaChoice choice) {
    return choice == GammaChoice::NoiseFloor ? sys.Sigma_W : Matrix(0.5 * sol.Sigma_X);
}

double g_numerator(const SystemInstance& sys, const LqrSolution& sol, const PerturbationBasis& basis,
                   GammaChoice choice) {
    require_basis_matches(sys, basis);
    const auto dK = basis_gain_derivatives(sys, sol, basis);
    return std::max(0.0, weighted_trace(dK, dK, sol.Psi, gamma_matrix(sys, sol, choice)));
}

double stationary_horizon_threshold(const LqrSolution& sol) {
    const double norm = spectral_norm(sol.Sigma_X);
    return 16.0 * norm * norm / lambda_min(sol.Sigma_X);
}

BoundReport asymptotic_lower_bound(const SystemInstance& sys, const ExplorationSetup& setup,
                                   const PerturbationBasis& basis, GammaChoice choice) {
    sys.validate();
    setup.validate(sys);
    const LqrSolution sol = lqr_synthesize(sys);

    BoundReport report;
    report.form = BoundForm::Asymptotic;
    report.gamma_choice = choice;
    report.N = setup.N;
    report.T = setup.T;
    report.basis_size = basis.size();
    report.G = g_numerator(sys, sol, basis, choice);
    report.L = fisher_direction_bound(sys, setup, basis);
    if (!(report.L > 0.0)) {
        throw Error(ErrorKind::DegenerateInput,
                    "L = 0: the offline data carries no information along the basis, the bound is unbounded");
    }
    report.formula_value = report.G / (8.0 * static_cast<double>(setup.T) * report.L);
    if (choice == GammaChoice::StationaryHalf) {
        report.burn_in.push_back(at_least("stationary_horizon", stationary_horizon_threshold(sol),
                                          static_cast<double>(setup.T)));
    }
    report.constants["J"] = tail_sum_J(sol.A_cl);
    if (report.burn_in_ok()) {
        report.bound_value = report.formula_value;
    } else {
        report.flags.push_back("burn-in-failed");
    }
    return report;
}

AlphaConstant alpha_event_constant(const SystemInstance& sys) {
    return alpha_event_constant(sys, lqr_synthesize(sys));
}

AlphaConstant alpha_event_constant(const SystemInstance& sys, const LqrSolution& sol) {
    const double B_norm = spectral_norm(sys.B);
    if (!(B_norm > 0.0)) {
        throw Error(ErrorKind::DegenerateInput, "event constant requires B != 0");
    }
    const double Acl_norm = spectral_norm(sol.A_cl);
    if (Acl_norm == 0.0) {
        return {0.0, true};
    }
    const double J = tail_sum_J(sol.A_cl);
    const double second =
        (lambda_min(sol.Sigma_X) / 24.0) / (Acl_norm * B_norm * J * spectral_norm(sol.Sigma_X));
    return {std::min(Acl_norm / B_norm, second), false};
}

GainLipschitzConstants gain_lipschitz_constants(const SystemInstance& sys, const LqrSolution& sol) {
    GainLipschitzConstants c;
    const double R_inv_norm = 1.0 / lambda_min(sys.R);
    c.Phi = 1.0 + std::max({spectral_norm(sys.A), spectral_norm(sys.B), spectral_norm(sol.P),
                            spectral_norm(sol.K), R_inv_norm});
    const TauEstimate t = tau_estimate(sol.A_cl);
    c.tau = t.value;
    c.tau_certified = t.certified;
    c.c1 = 84.0 * std::pow(c.Phi, 9) * c.tau;
    const double Acl = 1.0 + spectral_norm(sol.A_cl);
    c.c2 = std::min(1.0 / (Acl * Acl), 1.0 / (1.0 + spectral_norm(sol.P))) / (10.0 * c.tau * c.c1);
    return c;
}

double prior_fisher_norm(double prior_constant, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw Error(ErrorKind::Validation, "prior radius epsilon must be positive");
    }
    if (!(prior_constant >= 0.0)) {
        throw Error(ErrorKind::Validation, "prior Fisher constant must be >= 0");
    }
    return prior_constant / (epsilon * epsilon);
}

BoundReport finite_sample_bound(const SystemInstance& sys, const ExplorationSetup& setup,
                                const PerturbationBasis& basis, const FiniteSampleOptions& options) {
    sys.validate();
    setup.validate(sys);
    require_basis_matches(sys, basis);
    if (!(options.epsilon >= 0.0) || !std::isfinite(options.epsilon)) {
        throw Error(ErrorKind::Validation, "epsilon must be finite and >= 0");
    }
    if (!(options.J_lambda_norm >= 0.0)) {
        throw Error(ErrorKind::Validation, "J_lambda_norm must be >= 0");
    }
    if (options.ball_samples < 0) {
        throw Error(ErrorKind::Validation, "ball_samples must be >= 0");
    }

    struct Sample {
        SystemInstance sys;
        LqrSolution sol;
        double L = 0.0;
        std::vector<Matrix> dK;
    };

    const Vector theta = sys.theta();
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(options.ball_samples) + 1);
    for (int i = 0; i <= options.ball_samples; ++i) {
        Vector point = theta;
        if (i > 0) {
            Vector g(theta.size());
            for (Eigen::Index j = 0; j < g.size(); ++j) {
                g(j) = normal(rng);
            }
            point += options.epsilon * g / g.norm();
        }
        Sample s;
        s.sys = sys.with_theta(point);
        try {
            require_stable(s.sys.A + s.sys.B * setup.F, "A' + B'F");
            s.sol = lqr_synthesize(s.sys);
            s.L = fisher_direction_bound(s.sys, setup, basis);
            s.dK = basis_gain_derivatives(s.sys, s.sol, basis);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "ball sample " << i << (i == 0 ? " (centre)" : "") << " at radius " << options.epsilon
               << " is not admissible: " << e.what();
            throw Error(ErrorKind::BallTooLarge, os.str());
        }
        samples.push_back(std::move(s));
    }

    const Sample& centre = samples.front();
    const bool stationary = options.gamma_choice == GammaChoice::StationaryHalf;

    double psi_scale = 1.0;
    double gamma_scale = 1.0;
    double L_bar = 0.0;
    double alpha = std::numeric_limits<double>::infinity();
    bool alpha_degenerate = false;
    double horizon_threshold = 0.0;
    for (const auto& s : samples) {
        psi_scale = std::min(psi_scale, relative_lambda_min(s.sol.Psi, centre.sol.Psi));
        if (stationary) {
            gamma_scale = std::min(gamma_scale, relative_lambda_min(s.sol.Sigma_X, centre.sol.Sigma_X));
            horizon_threshold = std::max(horizon_threshold, stationary_horizon_threshold(s.sol));
        }
        L_bar = std::max(L_bar, s.L);
        const AlphaConstant a = alpha_event_constant(s.sys, s.sol);
        alpha = std::min(alpha, a.value);
        alpha_degenerate = alpha_degenerate || a.degenerate;
    }
    if (!(L_bar > 0.0)) {
        throw Error(ErrorKind::DegenerateInput,
                    "L = 0 over the ball: the offline data carries no information along the basis");
    }
    const Matrix Psi_min = psi_scale * centre.sol.Psi;
    const Matrix Gamma_min = stationary ? Matrix(0.5 * gamma_scale * centre.sol.Sigma_X) : sys.Sigma_W;

    double G = std::numeric_limits<double>::infinity();
    for (const auto& a : samples) {
        for (const auto& b : samples) {
            G = std::min(G, weighted_trace(a.dK, b.dK, Psi_min, Gamma_min));
        }
    }

    BoundReport report;
    report.form = BoundForm::FiniteSample;
    report.gamma_choice = options.gamma_choice;
    report.N = setup.N;
    report.T = setup.T;
    report.basis_size = basis.size();
    report.ball_samples = options.ball_samples;
    report.seed = options.seed;
    report.G = G;
    report.L = L_bar;
    report.flags.push_back("sampled-extremum");
    if (G < 0.0) {
        report.flags.push_back("negative-G-clamped");
    }
    const double TN = static_cast<double>(setup.T) * static_cast<double>(setup.N);
    report.formula_value = std::max(G, 0.0) / (8.0 * TN * L_bar);

    report.constants["alpha"] = alpha;
    report.constants["J"] = tail_sum_J(centre.sol.A_cl);
    report.constants["psi_minorant_scale"] = psi_scale;
    if (stationary) {
        report.constants["gamma_minorant_scale"] = gamma_scale;
    }
    report.extras["epsilon"] = options.epsilon;
    report.extras["J_lambda_norm"] = options.J_lambda_norm;
    report.extras["L_centre"] = centre.L;
    if (alpha_degenerate) {
        report.flags.push_back("alpha-degenerate");
    }

    std::optional<GainLipschitzConstants> lip;
    try {
        lip = gain_lipschitz_constants(sys, centre.sol);
        report.constants["Phi"] = lip->Phi;
        report.constants["tau"] = lip->tau;
        report.constants["c1"] = lip->c1;
        report.constants["c2"] = lip->c2;
        if (!lip->tau_certified) {
            report.flags.push_back("tau-uncertified");
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateInput) {
            throw;
        }
        report.flags.push_back("tau-undefined");
    }

    if (!stationary) {
        report.burn_in.push_back(at_least("data_vs_prior", options.J_lambda_norm / L_bar, TN));
    } else {
        report.burn_in.push_back(
            at_least("stationary_horizon", horizon_threshold, static_cast<double>(setup.T)));
        const double event_term =
            alpha > 0.0 ? std::max(G, 0.0) / (lambda_min(sys.Sigma_W) * lambda_min(sys.R) * alpha * alpha)
                        : std::numeric_limits<double>::infinity();
        report.burn_in.push_back(
            at_least("data_vs_prior_and_event", std::max(options.J_lambda_norm, event_term) / L_bar, TN));
        const double radius =
            lip ? std::min(alpha / (2.0 * lip->c1), lip->c2) : 0.0;
        report.burn_in.push_back(at_most("ball_radius", radius, options.epsilon));
    }

    if (report.burn_in_ok()) {
        report.bound_value = report.formula_value;
    } else {
        report.flags.push_back("burn-in-failed");
    }
    return report;
}

double relaxed_fisher_bound(const SystemInstance& sys, const ExplorationSetup& setup) {
    const Matrix F = feedback_or_zero(sys, setup.F);
    const double c_A = state_weight(sys, F, setup.sigma_u_sq);
    const double F_norm = spectral_norm(F);
    return 4.0 / lambda_min(sys.Sigma_W) *
           (c_A + 2.0 * setup.sigma_u_sq * (1.0 + 2.0 * F_norm * F_norm));
}

BoundReport dimensional_bound(const SystemInstance& sys, const ExplorationSetup& setup) {
    sys.validate();
    setup.validate(sys);
    const LqrSolution sol = lqr_synthesize(sys);
    const int n = sys.state_dim();
    const int m = sys.input_dim();

    const double L_tilde = relaxed_fisher_bound(sys, setup);
    const double excess = std::max(0.0, lambda_min(symmetrize(sol.Sigma_X - sys.Sigma_W)));
    const double P_min = lambda_min(sol.P);
    Matrix KI(m, n + m);
    KI << -sol.K, Matrix::Identity(m, m);
    const double KI_norm = spectral_norm(KI);

    BoundReport report;
    report.form = BoundForm::Dimensional;
    report.gamma_choice = GammaChoice::StationaryHalf;
    report.N = setup.N;
    report.T = setup.T;
    report.basis_size = n * m;
    report.L = L_tilde;
    report.formula_value = static_cast<double>(n) * m * excess * P_min * P_min /
                           (16.0 * static_cast<double>(setup.T) * spectral_norm(sol.Psi) * KI_norm *
                            KI_norm * L_tilde);
    report.extras["closed_form"] = report.formula_value;
    report.extras["L_tilde"] = L_tilde;

    const BoundReport exact =
        asymptotic_lower_bound(sys, setup, polderman_basis(sol), GammaChoice::StationaryHalf);
    report.G = exact.G;
    report.extras["exact_bound"] = exact.formula_value;
    report.extras["exact_L"] = exact.L;
    report.relaxation_holds = report.formula_value <= exact.formula_value * (1.0 + 1e-10) + 1e-300;
    if (!*report.relaxation_holds) {
        report.flags.push_back("relaxation-violated");
    }

    report.burn_in.push_back(at_least("stationary_horizon", stationary_horizon_threshold(sol),
                                      static_cast<double>(setup.T)));
    if (report.burn_in_ok()) {
        report.bound_value = report.formula_value;
    } else {
        report.flags.push_back("burn-in-failed");
    }
    return report;
}

SystemInstance exponential_instance(int state_dim, double rho) {
    if (state_dim < 2) {
        throw Error(ErrorKind::Validation, "exponential instance needs d_x >= 2");
    }
    if (!(rho > 0.0 && rho < 1.0)) {
        throw Error(ErrorKind::Validation, "exponential instance needs rho in (0, 1)");
    }
    SystemInstance sys;
    sys.A = rho * Matrix::Identity(state_dim, state_dim);
    for (int i = 0; i + 1 < state_dim; ++i) {
        sys.A(i, i + 1) = 2.0;
    }
    sys.B = Matrix::Zero(state_dim, 1);
    sys.B(state_dim - 1, 0) = 1.0;
    sys.Q = Matrix::Identity(state_dim, state_dim);
    sys.R = Matrix::Identity(1, 1);
    sys.Sigma_W = Matrix::Identity(state_dim, state_dim);
    return sys;
}

SystemInstance scalar_instance(double a, double b, double q, double r, double sigma_w_sq) {
    SystemInstance sys;
    sys.A = Matrix::Constant(1, 1, a);
    sys.B = Matrix::Constant(1, 1, b);
    sys.Q = Matrix::Constant(1, 1, q);
    sys.R = Matrix::Constant(1, 1, r);
    sys.Sigma_W = Matrix::Constant(1, 1, sigma_w_sq);
    sys.validate();
    return sys;
}

BoundReport exponential_bound(int state_dim, double rho, const ExplorationSetup& setup) {
    if (state_dim < 3) {
        throw Error(ErrorKind::Validation, "the exponential bound is stated for d_x >= 3");
    }
    const SystemInstance sys = exponential_instance(state_dim, rho);
    const Matrix F = feedback_or_zero(sys, setup.F);
    if (F.cwiseAbs().maxCoeff() != 0.0) {
        throw Error(ErrorKind::Precondition, "the exponential bound assumes F = 0");
    }
    ExplorationSetup zero = setup;
    zero.F = F;

    const BoundReport exact =
        asymptotic_lower_bound(sys, zero, single_direction_basis(input_direction(sys)), GammaChoice::NoiseFloor);
    const LqrSolution sol = lqr_synthesize(sys);

    BoundReport report = exact;
    report.form = BoundForm::Exponential;
    report.formula_value = rho * rho * std::pow(4.0, state_dim - 2) /
                           (256.0 * static_cast<double>(setup.T) * setup.sigma_u_sq);
    report.bound_value = report.formula_value;
    report.extras["closed_form"] = report.formula_value;
    report.extras["exact_bound"] = exact.formula_value;
    report.extras["P_last"] = sol.P(state_dim - 1, state_dim - 1);
    report.extras["rho"] = rho;
    report.extras["d_x"] = state_dim;
    report.relaxation_holds = report.formula_value <= exact.formula_value * (1.0 + 1e-10);
    if (!*report.relaxation_holds) {
        report.flags.push_back("relaxation-violated");
    }
    return report;
}

BoundReport system_theoretic_bound(const SystemInstance& sys, const ExplorationSetup& setup) {
    sys.validate();
    setup.validate(sys);
    const LqrSolution sol = lqr_synthesize(sys);
    const int m = sys.input_dim();

    const Matrix BPB = symmetrize(sys.B.transpose() * sol.P * sys.B);
    const double commutator = (sys.R * BPB - BPB * sys.R).norm();
    if (commutator > 1e-8) {
        std::ostringstream os;
        os << "R and B'PB are not simultaneously diagonalizable (commutator norm " << commutator << ")";
        throw Error(ErrorKind::Precondition, os.str());
    }
    // A generic combination separates any eigenvalue ties that the two
    // commuting matrices do not share.
    Eigen::SelfAdjointEigenSolver<Matrix> joint(symmetrize(BPB + 0.7236067977499790 * sys.R));
    if (joint.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "joint eigen-decomposition of R and B'PB failed");
    }
    double ratio_inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        const Vector u = joint.eigenvectors().col(i);
        const double lam = u.dot(BPB * u);
        const double r = u.dot(sys.R * u);
        ratio_inf = std::min(ratio_inf, lam / (lam + r));
    }

    const Matrix cost_to_go = solve_dlyap(sol.A_cl, sol.P);
    Eigen::SelfAdjointEigenSolver<Matrix> ctg(symmetrize(cost_to_go), Eigen::EigenvaluesOnly);
    double eig_sum = 0.0;
    for (int j = 0; j < m && j < sys.state_dim(); ++j) {
        eig_sum += ctg.eigenvalues()(j);
    }

    const double L_tilde = relaxed_fisher_bound(sys, setup);
    const double excess = std::max(0.0, lambda_min(symmetrize(sol.Sigma_X - sys.Sigma_W)));
    const double value = excess / (4.0 * static_cast<double>(setup.T) * ab_frobenius_sq(sys) *
                                   L_tilde) *
                         ratio_inf * eig_sum;

    BoundReport report;
    report.form = BoundForm::SystemTheoretic;
    report.gamma_choice = GammaChoice::StationaryHalf;
    report.N = setup.N;
    report.T = setup.T;
    report.basis_size = 1;
    report.L = L_tilde;
    report.formula_value = value;
    report.extras["closed_form"] = value;
    report.extras["printed_constant_value"] = 2.0 * value;
    report.extras["L_tilde"] = L_tilde;
    report.extras["ratio_inf"] = ratio_inf;
    report.extras["eigenvalue_sum"] = eig_sum;
    report.extras["commutator_norm"] = commutator;

    const BoundReport exact = asymptotic_lower_bound(sys, setup, single_direction_basis(self_direction(sys)),
                                                     GammaChoice::StationaryHalf);
    report.G = exact.G;
    report.extras["exact_bound"] = exact.formula_value;
    report.extras["exact_L"] = exact.L;
    report.relaxation_holds = value <= exact.formula_value * (1.0 + 1e-10) + 1e-300;
    if (!*report.relaxation_holds) {
        report.flags.push_back("relaxation-violated");
    }

    report.burn_in.push_back(at_least("stationary_horizon", stationary_horizon_threshold(sol),
                                      static_cast<double>(setup.T)));
    if (report.burn_in_ok()) {
        report.bound_value = value;
    } else {
        report.flags.push_back("burn-in-failed");
    }
    return report;
}

std::vector<ScalarCurvePoint> scalar_bound_curve(const std::vector<double>& gammas,
                                                 const ExplorationSetup& setup) {
    if (setup.sigma_u_sq != 1.0) {
        throw Error(ErrorKind::Validation, "the scalar curve fixes sigma_u_sq = 1");
    }
    if (setup.F.size() != 0 && setup.F.cwiseAbs().maxCoeff() != 0.0) {
        throw Error(ErrorKind::Validation, "the scalar curve fixes F = 0");
    }
    std::vector<ScalarCurvePoint> curve;
    curve.reserve(gammas.size());
    for (const double gamma : gammas) {
        if (!(gamma > 0.0 && gamma < 1.0)) {
            std::ostringstream os;
            os << "gamma must lie in (0, 1), got " << gamma;
            throw Error(ErrorKind::Validation, os.str());
        }
        const SystemInstance sys = scalar_instance(1.0 - gamma, gamma);
        ExplorationSetup s = setup;
        s.F = Matrix::Zero(1, 1);
        const LqrSolution sol = lqr_synthesize(sys);
        const PerturbationDirection dir = input_direction(sys);
        const BoundReport report = asymptotic_lower_bound(sys, s, single_direction_basis(dir), GammaChoice::NoiseFloor);

        ScalarCurvePoint point;
        point.gamma = gamma;
        point.bound_value = report.formula_value;
        point.P = sol.P(0, 0);
        point.K = sol.K(0, 0);
        point.dK_db = directional_gain_derivative(sol, sys, dir)(0, 0);
        point.quoted_closed_form = (gamma * gamma * point.P + 1.0) / (32.0 * static_cast<double>(setup.T)) *
                                   point.dK_db * point.dK_db;
        curve.push_back(point);
    }
    return curve;
}

}  // namespace lqr_limits
