#include "lqr_limits/lti_core.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace lqr_limits {

namespace {

std::string dims(const Matrix& M) {
    std::ostringstream os;
    os << M.rows() << "x" << M.cols();
    return os.str();
}

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (M.rows() != rows || M.cols() != cols) {
        std::ostringstream os;
        os << name << " has shape " << dims(M) << ", expected " << rows << "x" << cols;
        throw Error(ErrorKind::Validation, os.str());
    }
}

void require_finite(const Matrix& M, const char* name) {
    if (!M.allFinite()) {
        throw Error(ErrorKind::Validation, std::string(name) + " has non-finite entries");
    }
}

void require_symmetric(const Matrix& M, const char* name) {
    const double scale = 1.0 + M.cwiseAbs().maxCoeff();
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
        throw Error(ErrorKind::Validation, std::string(name) + " is not symmetric");
    }
}

// Kronecker-vectorized solve of (I − Aᵀ⊗Aᵀ) vec(P) = vec(Q).
Matrix dlyap_kronecker(const Matrix& A, const Matrix& Q) {
    const Eigen::Index n = A.rows();
    const Eigen::Index n2 = n * n;
    Matrix system = Matrix::Identity(n2, n2);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            // block (i, j) of Aᵀ⊗Aᵀ is (Aᵀ)_{ij}·Aᵀ = A(j, i)·Aᵀ
            system.block(i * n, j * n, n, n) -= A(j, i) * A.transpose();
        }
    }
    Eigen::PartialPivLU<Matrix> lu(system);
    if (!(std::abs(lu.determinant()) > 0.0) || lu.rcond() < 1e-15) {
        throw Error(ErrorKind::NumericalFailure,
                    "Lyapunov system (I - A'(x)A') is singular for A of shape " + dims(A));
    }
    const Vector p = lu.solve(vec(Q));
    return symmetrize(unvec(p, n, n));
}

// Smith doubling: P_{k+1} = P_k + A_kᵀ P_k A_k, A_{k+1} = A_k².
Matrix dlyap_doubling(const Matrix& A, const Matrix& Q) {
    Matrix P = Q;
    Matrix Ak = A;
    for (int k = 0; k < 200; ++k) {
        const Matrix step = Ak.transpose() * P * Ak;
        P = symmetrize(P + step);
        Ak = Ak * Ak;
        if (!P.allFinite()) {
            break;
        }
        if (step.norm() <= 1e-17 * (1.0 + P.norm()) || Ak.norm() == 0.0) {
            return P;
        }
    }
    throw Error(ErrorKind::NumericalFailure,
                "Smith doubling did not converge for A of shape " + dims(A));
}

}  // namespace

// --- SystemInstance ---------------------------------------------------------

void SystemInstance::validate() const {
    const Eigen::Index n = A.rows();
    if (n == 0 || A.cols() != n) {
        throw Error(ErrorKind::Validation, "A must be a non-empty square matrix, got " + dims(A));
    }
    if (B.rows() != n || B.cols() == 0) {
        throw Error(ErrorKind::Validation, "B has shape " + dims(B) + ", expected " +
                                               std::to_string(n) + "xm with m >= 1");
    }
    const Eigen::Index m = B.cols();
    require_shape(Q, n, n, "Q");
    require_shape(R, m, m, "R");
    require_shape(Sigma_W, n, n, "Sigma_W");
    require_finite(A, "A");
    require_finite(B, "B");
    require_finite(Q, "Q");
    require_finite(R, "R");
    require_finite(Sigma_W, "Sigma_W");
    require_symmetric(Q, "Q");
    require_symmetric(R, "R");
    require_symmetric(Sigma_W, "Sigma_W");
    if (lambda_min(Q) < -kSymmetryTolerance * (1.0 + spectral_norm(Q))) {
        throw Error(ErrorKind::Validation, "Q is not positive semidefinite");
    }
    if (!(lambda_min(R) > 0.0)) {
        throw Error(ErrorKind::Validation, "R is not positive definite");
    }
    if (!(lambda_min(Sigma_W) > 0.0)) {
        throw Error(ErrorKind::Validation, "Sigma_W is not positive definite");
    }
}

Vector SystemInstance::theta() const {
    Matrix AB(A.rows(), A.cols() + B.cols());
    AB << A, B;
    return vec(AB);
}

SystemInstance SystemInstance::with_theta(const Vector& theta) const {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    if (theta.size() != n * (n + m)) {
        throw Error(ErrorKind::Validation, "parameter vector has length " +
                                               std::to_string(theta.size()) + ", expected " +
                                               std::to_string(n * (n + m)));
    }
    const Matrix AB = unvec(theta, n, n + m);
    SystemInstance out = *this;
    out.A = AB.leftCols(n);
    out.B = AB.rightCols(m);
    return out;
}

// --- helpers ------------------------------------------------------------------

double spectral_radius(const Matrix& M) {
    if (M.rows() != M.cols()) {
        throw Error(ErrorKind::Validation, "spectral radius of non-square matrix " + dims(M));
    }
    if (M.size() == 0) {
        return 0.0;
    }
    if (!M.allFinite()) {
        throw Error(ErrorKind::NumericalFailure, "spectral radius of non-finite matrix " + dims(M));
    }
    Eigen::EigenSolver<Matrix> solver(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure,
                    "eigenvalue iteration did not converge for matrix " + dims(M));
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const Matrix& M) {
    if (M.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

double lambda_min(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(symmetric), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "symmetric eigensolver failed for " + dims(symmetric));
    }
    return solver.eigenvalues().minCoeff();
}

double lambda_max(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(symmetric), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "symmetric eigensolver failed for " + dims(symmetric));
    }
    return solver.eigenvalues().maxCoeff();
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

Vector vec(const Matrix& M) { return Eigen::Map<const Vector>(M.data(), M.size()); }

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

void require_stable(const Matrix& M, const char* what) {
    const double rho = spectral_radius(M);
    if (rho > 1.0 - kStabilityMargin) {
        std::ostringstream os;
        os.precision(17);
        os << what << " has spectral radius " << rho << " (must be < 1 - " << kStabilityMargin
           << ")";
        throw Error(ErrorKind::Instability, os.str());
    }
}

// --- Lyapunov -------------------------------------------------------------------

Matrix solve_dlyap(const Matrix& A, const Matrix& Q) {
    if (A.rows() != A.cols()) {
        throw Error(ErrorKind::Validation, "dlyap: A must be square, got " + dims(A));
    }
    require_shape(Q, A.rows(), A.rows(), "dlyap Q");
    require_stable(A, "dlyap: A");
    const Matrix Qs = symmetrize(Q);
    if (A.rows() <= 12) {
        return dlyap_kronecker(A, Qs);
    }
    return dlyap_doubling(A, Qs);
}

double dlyap_residual(const Matrix& A, const Matrix& Q, const Matrix& P) {
    return (A.transpose() * P * A - P + Q).norm();
}

// --- Riccati --------------------------------------------------------------------

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  const DareOptions& options) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n) {
        throw Error(ErrorKind::Validation, "dare: incompatible A " + dims(A) + " and B " + dims(B));
    }
    require_shape(Q, n, n, "dare Q");
    require_shape(R, B.cols(), B.cols(), "dare R");

    Eigen::LLT<Matrix> R_llt(symmetrize(R));
    if (R_llt.info() != Eigen::Success) {
        throw Error(ErrorKind::Validation, "dare: R is not positive definite");
    }

    // Structure-preserving doubling:
    //   W = I + GₖHₖ
    //   Aₖ₊₁ = AₖW⁻¹Aₖ,  Gₖ₊₁ = Gₖ + AₖW⁻¹GₖAₖᵀ,  Hₖ₊₁ = Hₖ + AₖᵀHₖW⁻¹Aₖ
    // with A₀ = A, G₀ = BR⁻¹Bᵀ, H₀ = Q. Hₖ → P.
    Matrix A_k = A;
    Matrix G_k = symmetrize(B * R_llt.solve(B.transpose()));
    Matrix H_k = symmetrize(Q);
    const Matrix I = Matrix::Identity(n, n);

    double change = 0.0;
    bool converged = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const Matrix W = I + G_k * H_k;
        Eigen::PartialPivLU<Matrix> W_lu(W);
        const Matrix V1 = W_lu.solve(A_k);                           // W⁻¹Aₖ
        const Matrix V2 = W_lu.solve(G_k.transpose()).transpose();   // GₖW⁻ᵀ
        const Matrix H_next = symmetrize(H_k + V1.transpose() * H_k * A_k);
        G_k = symmetrize(G_k + A_k * V2 * A_k.transpose());
        A_k = A_k * V1;
        if (!H_next.allFinite() || !G_k.allFinite() || !A_k.allFinite()) {
            throw Error(ErrorKind::NonConvergence,
                        "dare: doubling iterates became non-finite after " +
                            std::to_string(iter + 1) + " steps (is (A, B) stabilizable?)");
        }
        change = (H_next - H_k).norm();
        H_k = H_next;
        if (change <= options.tol * H_k.norm()) {
            converged = true;
            break;
        }
    }

    const Matrix P = H_k;
    const double residual = dare_residual(A, B, Q, R, P);
    if (!converged || !(residual <= options.residual_tol * (1.0 + P.norm()))) {
        std::ostringstream os;
        os.precision(6);
        os << "dare: " << (converged ? "stopped" : "iteration cap reached")
           << " with residual " << residual << " (relative " << residual / (1.0 + P.norm())
           << ", last step change " << change << ")";
        throw Error(ErrorKind::NonConvergence, os.str());
    }
    const Matrix A_cl = A + B * lqr_gain(A, B, R, P);
    if (spectral_radius(A_cl) > 1.0 - kStabilityMargin) {
        throw Error(ErrorKind::NonConvergence,
                    "dare: solution is not stabilizing (is (A, Q^1/2) detectable?)");
    }
    return P;
}

double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                     const Matrix& P) {
    const Matrix BtPA = B.transpose() * P * A;
    const Matrix Psi = symmetrize(B.transpose() * P * B + R);
    const Matrix residual = Q + A.transpose() * P * A - BtPA.transpose() * Psi.ldlt().solve(BtPA) - P;
    return residual.norm();
}

Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& P) {
    const Matrix Psi = symmetrize(B.transpose() * P * B + R);
    Eigen::LLT<Matrix> llt(Psi);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "B'PB + R is not positive definite");
    }
    return -llt.solve(B.transpose() * P * A);
}

LqrSolution lqr_synthesize(const SystemInstance& sys, const DareOptions& options) {
    sys.validate();
    LqrSolution sol;
    sol.P = solve_dare(sys.A, sys.B, sys.Q, sys.R, options);
    sol.Psi = symmetrize(sys.B.transpose() * sol.P * sys.B + sys.R);
    sol.K = lqr_gain(sys.A, sys.B, sys.R, sol.P);
    sol.A_cl = sys.A + sys.B * sol.K;
    require_stable(sol.A_cl, "optimal closed loop A + BK");
    sol.Sigma_X = solve_dlyap(sol.A_cl.transpose(), sys.Sigma_W);
    sol.optimal_cost = (sol.P * sys.Sigma_W).trace();
    return sol;
}

// --- power sums -------------------------------------------------------------------

double power_norm_sum(const Matrix& M, const Matrix& right, int exponent, double tol) {
    require_stable(M, "power sum: M");
    constexpr long kMaxTerms = 5'000'000;
    const auto term_of = [exponent](double norm) {
        return exponent == 1 ? norm : std::pow(norm, exponent);
    };

    // n_{t+k} ≤ ‖M^k‖^p n_t, so once q = ‖M^k‖^p < 1 the tail after the last
    // k terms is at most q/(1−q) times their sum.
    std::vector<double> terms;
    Matrix power = Matrix::Identity(M.rows(), M.cols());
    double total = 0.0;
    long k = 0;
    double q = 1.0;
    double window = 0.0;
    for (long t = 0; t < kMaxTerms; ++t) {
        const double term = term_of(spectral_norm(power * right));
        terms.push_back(term);
        total += term;
        const double power_norm = spectral_norm(power);
        if (power_norm == 0.0) {
            return total;
        }
        if (k == 0 && t >= 1 && power_norm <= 0.5) {
            k = t;
            q = term_of(power_norm);
            for (long r = t - k + 1; r <= t; ++r) {
                window += terms[static_cast<std::size_t>(r)];
            }
        } else if (k > 0) {
            window += term - terms[static_cast<std::size_t>(t - k)];
        }
        if (k > 0 && q * std::max(window, 0.0) / (1.0 - q) <= tol) {
            return total;
        }
        power = power * M;
    }
    throw Error(ErrorKind::NonConvergence, "power sum did not reach tolerance within the term cap");
}

double tail_sum_J(const Matrix& A_cl, double tol) {
    return power_norm_sum(A_cl, Matrix::Identity(A_cl.rows(), A_cl.cols()), 2, tol);
}

TauEstimate tau_estimate(const Matrix& A_cl, int max_power) {
    const double rho = spectral_radius(A_cl);
    if (rho > 1.0 - kStabilityMargin) {
        require_stable(A_cl, "tau: A_cl");
    }
    if (rho <= 1e-12 * std::max(1.0, spectral_norm(A_cl))) {
        throw Error(ErrorKind::DegenerateInput,
                    "tau: spectral radius of A_cl is zero, rho^-k is undefined");
    }
    // ‖A^k‖ρ^{−k} = ‖(A/ρ)^k‖ and for m with ‖(A/ρ)^m‖ ≤ 1 submultiplicativity
    // caps every later ratio by one already seen.
    const Matrix scaled = A_cl / rho;
    Matrix power = Matrix::Identity(A_cl.rows(), A_cl.cols());
    TauEstimate est;
    est.sup_ratio = 1.0;
    for (int k = 1; k <= max_power; ++k) {
        power = power * scaled;
        const double ratio = spectral_norm(power);
        if (ratio > est.sup_ratio) {
            est.sup_ratio = ratio;
            est.argmax_power = k;
        }
        if (ratio <= 1.0) {
            est.certified = true;
            break;
        }
    }
    est.value = est.sup_ratio * est.sup_ratio / (1.0 - rho * rho);
    return est;
}

double tau(const Matrix& A_cl, int max_power) { return tau_estimate(A_cl, max_power).value; }

}  // namespace lqr_limits
