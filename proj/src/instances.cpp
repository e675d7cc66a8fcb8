#include "lqr_limits/instances.hpp"

namespace lqr_limits {

namespace {

Matrix gaussian(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix M(rows, cols);
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            M(i, j) = normal(rng);
        }
    }
    return M;
}

Matrix random_spd(std::mt19937_64& rng, int dim) {
    const Matrix G = gaussian(rng, dim, dim);
    return symmetrize(G * G.transpose() / dim + 0.5 * Matrix::Identity(dim, dim));
}

}  // namespace

SystemInstance random_instance(std::mt19937_64& rng, int state_dim, int input_dim,
                               const RandomInstanceOptions& options) {
    if (state_dim < 1 || input_dim < 1) {
        throw Error(ErrorKind::Validation, "random instance dimensions must be positive");
    }
    std::uniform_real_distribution<double> radius(options.radius_min, options.radius_max);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        SystemInstance sys;
        sys.A = gaussian(rng, state_dim, state_dim);
        const double rho = spectral_radius(sys.A);
        if (rho < 1e-6) {
            continue;
        }
        sys.A *= radius(rng) / rho;
        sys.B = gaussian(rng, state_dim, input_dim);
        sys.Q = options.identity_costs ? Matrix::Identity(state_dim, state_dim) : random_spd(rng, state_dim);
        sys.R = options.identity_costs ? Matrix::Identity(input_dim, input_dim) : random_spd(rng, input_dim);
        sys.Sigma_W =
            options.identity_noise ? Matrix::Identity(state_dim, state_dim) : random_spd(rng, state_dim);
        try {
            (void)lqr_synthesize(sys);
            return sys;
        } catch (const Error&) {
        }
    }
    throw Error(ErrorKind::NonConvergence, "could not draw a stabilizable instance in 1000 attempts");
}

Matrix random_orthogonal(std::mt19937_64& rng, int dim) {
    const Matrix G = gaussian(rng, dim, dim);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(dim, dim);
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j) {
        if (R(j, j) < 0.0) {
            Q.col(j) = -Q.col(j);
        }
    }
    return Q;
}

SystemInstance fixed_spectrum_instance(std::mt19937_64& rng, int state_dim, int input_dim, double a) {
    if (input_dim < 1 || input_dim > state_dim) {
        throw Error(ErrorKind::Validation, "fixed-spectrum instance needs 1 <= d_u <= d_x");
    }
    const Matrix U = random_orthogonal(rng, state_dim);
    const Matrix W = random_orthogonal(rng, input_dim);
    Matrix E = Matrix::Zero(state_dim, input_dim);
    E.topRows(input_dim) = Matrix::Identity(input_dim, input_dim);
    SystemInstance sys;
    sys.A = a * Matrix::Identity(state_dim, state_dim);
    sys.B = U * E * W;
    sys.Q = Matrix::Identity(state_dim, state_dim);
    sys.R = Matrix::Identity(input_dim, input_dim);
    sys.Sigma_W = Matrix::Identity(state_dim, state_dim);
    sys.validate();
    return sys;
}

}  // namespace lqr_limits
