#include "lqr_limits/perturbation.hpp"

#include <cmath>
#include <sstream>

namespace lqr_limits {

PerturbationDirection PerturbationDirection::unit(const Matrix& delta_a, const Matrix& delta_b) {
    const double norm = std::sqrt(delta_a.squaredNorm() + delta_b.squaredNorm());
    if (!(norm > 0.0)) {
        throw Error(ErrorKind::DegenerateInput, "perturbation direction has zero norm");
    }
    return {delta_a / norm, delta_b / norm};
}

PerturbationDirection PerturbationDirection::from_vec(const Vector& v, int state_dim, int input_dim) {
    if (v.size() != static_cast<Eigen::Index>(state_dim) * (state_dim + input_dim)) {
        throw Error(ErrorKind::Validation, "direction vector has length " + std::to_string(v.size()) +
                                               ", expected " +
                                               std::to_string(state_dim * (state_dim + input_dim)));
    }
    const Matrix AB = unvec(v, state_dim, state_dim + input_dim);
    return {AB.leftCols(state_dim), AB.rightCols(input_dim)};
}

Vector PerturbationDirection::vec() const {
    Matrix AB(Delta_A.rows(), Delta_A.cols() + Delta_B.cols());
    AB << Delta_A, Delta_B;
    return lqr_limits::vec(AB);
}

double PerturbationDirection::frobenius_norm() const {
    return std::sqrt(Delta_A.squaredNorm() + Delta_B.squaredNorm());
}

Matrix PerturbationDirection::closed_loop_change(const Matrix& K) const {
    return Delta_A + Delta_B * K;
}

PerturbationBasis::PerturbationBasis(std::vector<PerturbationDirection> directions, int state_dim,
                                     int input_dim)
    : directions_(std::move(directions)), state_dim_(state_dim), input_dim_(input_dim) {
    const Eigen::Index d_theta = static_cast<Eigen::Index>(state_dim) * (state_dim + input_dim);
    V_.resize(d_theta, static_cast<Eigen::Index>(directions_.size()));
    for (std::size_t j = 0; j < directions_.size(); ++j) {
        const auto& d = directions_[j];
        if (d.Delta_A.rows() != state_dim || d.Delta_A.cols() != state_dim ||
            d.Delta_B.rows() != state_dim || d.Delta_B.cols() != input_dim) {
            throw Error(ErrorKind::Validation,
                        "direction " + std::to_string(j) + " does not match the system dimensions");
        }
        V_.col(static_cast<Eigen::Index>(j)) = d.vec();
    }
    const Matrix gram = V_.transpose() * V_;
    const double defect =
        (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (directions_.size() > 0 && defect > 1e-10) {
        std::ostringstream os;
        os << "basis columns are not orthonormal (max |V'V - I| = " << defect << ")";
        throw Error(ErrorKind::Validation, os.str());
    }
}

PerturbationBasis PerturbationBasis::from_matrix(const Matrix& V, int state_dim, int input_dim) {
    std::vector<PerturbationDirection> dirs;
    dirs.reserve(static_cast<std::size_t>(V.cols()));
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        dirs.push_back(PerturbationDirection::from_vec(V.col(j), state_dim, input_dim));
    }
    return PerturbationBasis(std::move(dirs), state_dim, input_dim);
}

PerturbationBasis PerturbationBasis::canonical(int state_dim, int input_dim) {
    const int d_theta = state_dim * (state_dim + input_dim);
    return from_matrix(Matrix::Identity(d_theta, d_theta), state_dim, input_dim);
}

Matrix directional_gain_derivative(const LqrSolution& sol, const SystemInstance& sys,
                                   const PerturbationDirection& dir) {
    const Matrix& P = sol.P;
    const Matrix& A_cl = sol.A_cl;
    const Matrix delta_cl = dir.closed_loop_change(sol.K);
    const Matrix forcing = A_cl.transpose() * P * delta_cl;
    const Matrix P_prime = solve_dlyap(A_cl, forcing + forcing.transpose());
    const Matrix inner = dir.Delta_B.transpose() * P * A_cl + sys.B.transpose() * P * delta_cl +
                         sys.B.transpose() * P_prime * A_cl;
    return -sol.Psi.llt().solve(inner);
}

double default_fd_step(const SystemInstance& sys) { return 1e-5 * (1.0 + sys.theta().norm()); }

Matrix finite_difference_gain_derivative(const SystemInstance& sys, const PerturbationDirection& dir,
                                         double h) {
    if (!(h > 0.0)) {
        throw Error(ErrorKind::Validation, "finite-difference step must be positive");
    }
    const Vector theta = sys.theta();
    const Vector v = dir.vec();
    const auto gain_at = [&](double sign) {
        try {
            return lqr_synthesize(sys.with_theta(theta + sign * h * v)).K;
        } catch (const Error& e) {
            std::ostringstream os;
            os << "instance at theta " << (sign > 0 ? "+" : "-") << " h*v (h = " << h
               << ") is not solvable (" << e.what() << "); try a smaller h";
            throw Error(ErrorKind::PerturbationTooLarge, os.str());
        }
    };
    const Matrix K_plus = gain_at(+1.0);
    const Matrix K_minus = gain_at(-1.0);
    return (K_plus - K_minus) / (2.0 * h);
}

Matrix controller_jacobian(const SystemInstance& sys) {
    return controller_jacobian(lqr_synthesize(sys), sys);
}

Matrix controller_jacobian(const LqrSolution& sol, const SystemInstance& sys) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    const int d_theta = sys.param_dim();
    Matrix jac(static_cast<Eigen::Index>(n) * m, d_theta);
    Vector e = Vector::Zero(d_theta);
    for (int j = 0; j < d_theta; ++j) {
        e.setZero();
        e(j) = 1.0;
        const auto dir = PerturbationDirection::from_vec(e, n, m);
        jac.col(j) = vec(directional_gain_derivative(sol, sys, dir));
    }
    return jac;
}

PerturbationBasis polderman_basis(const LqrSolution& sol) {
    const Matrix& K = sol.K;
    const int m = static_cast<int>(K.rows());
    const int n = static_cast<int>(K.cols());
    // Directions e_i rᵀ[−K I]: distinct rows i are orthogonal, and within a row
    // the Gram entry is r₁ᵀ(I + KKᵀ)r₂, diagonalized by the eigenvectors of KKᵀ.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(K * K.transpose()));
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "eigen-decomposition of KK' failed");
    }
    Matrix r(m, m);
    for (int j = 0; j < m; ++j) {
        r.col(j) = eig.eigenvectors().col(j) / std::sqrt(1.0 + std::max(0.0, eig.eigenvalues()(j)));
    }
    std::vector<PerturbationDirection> dirs;
    dirs.reserve(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            Matrix delta = Matrix::Zero(n, m);
            delta.row(i) = r.col(j).transpose();
            dirs.push_back({-delta * K, delta});
        }
    }
    return PerturbationBasis(std::move(dirs), n, m);
}

PerturbationDirection self_direction(const SystemInstance& sys) {
    const double norm = std::sqrt(sys.A.squaredNorm() + sys.B.squaredNorm());
    if (!(norm > 0.0)) {
        throw Error(ErrorKind::DegenerateInput, "self direction of a zero system [A B] = 0");
    }
    return {sys.A / norm, sys.B / norm};
}

PerturbationDirection input_direction(const SystemInstance& sys) {
    const double norm = sys.B.norm();
    if (!(norm > 0.0)) {
        throw Error(ErrorKind::DegenerateInput, "input direction requires B != 0");
    }
    return {Matrix::Zero(sys.A.rows(), sys.A.cols()), sys.B / norm};
}

PerturbationBasis single_direction_basis(const PerturbationDirection& dir) {
    const int n = static_cast<int>(dir.Delta_A.rows());
    const int m = static_cast<int>(dir.Delta_B.cols());
    return PerturbationBasis({dir}, n, m);
}

Matrix self_direction_gain_derivative(const LqrSolution& sol, const SystemInstance& sys) {
    const double norm = std::sqrt(sys.A.squaredNorm() + sys.B.squaredNorm());
    if (!(norm > 0.0)) {
        throw Error(ErrorKind::DegenerateInput, "self direction of a zero system [A B] = 0");
    }
    const Matrix cost_to_go = solve_dlyap(sol.A_cl, sol.P);
    return -2.0 * sol.Psi.llt().solve(sys.B.transpose() * cost_to_go * sol.A_cl) / norm;
}

}  // namespace lqr_limits
