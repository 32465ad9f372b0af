#ifndef NOISEFLOOR_SPECTRAL_HPP
#define NOISEFLOOR_SPECTRAL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace noisefloor {

/// Raw linear-model inputs: Y = X beta + sigma xi with n >= p >= 1.
struct LinearModelData {
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;

    void validate() const {
        if (X.cols() < 1 || X.rows() < X.cols())
            throw std::invalid_argument("LinearModelData: need n >= p >= 1");
        if (Y.size() != X.rows())
            throw std::invalid_argument("LinearModelData: length(Y) != n");
        if (!X.allFinite() || !Y.allFinite())
            throw std::invalid_argument("LinearModelData: non-finite entries");
    }
};

/// Diagonalized sufficient statistics: eigenvalues of X^T X (nonincreasing,
/// zeros for the rank-deficient block) and the rotated observations ybar.
/// ybar[0..rank) are coordinates on the normalized image vectors of X;
/// ybar[rank..n) live on an orthonormal completion. Only the tail *sum of
/// squares* is contractually meaningful for the completion block.
struct SpectralModel {
    Eigen::VectorXd eigenvalues;  // length p, sorted nonincreasing, >= 0
    Eigen::VectorXd ybar;         // length n
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::Index rank = 0;        // eigenvalues[rank..p) are exact zeros
};

/// Reduce (X, Y) to the diagonal spectral form. Eigenvalues at or below
/// rank_tolerance * lambda_1 are folded into the pure-noise block.
inline SpectralModel spectralize(const LinearModelData& data,
                                 double rank_tolerance = 1e-12) {
    data.validate();
    if (rank_tolerance < 0)
        throw std::invalid_argument("spectralize: rank_tolerance must be >= 0");

    const Eigen::Index n = data.X.rows();
    const Eigen::Index p = data.X.cols();

    Eigen::MatrixXd xtx = data.X.transpose() * data.X;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xtx);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectralize: eigendecomposition failed");

    // Eigen returns ascending order; flip to nonincreasing.
    Eigen::VectorXd lambda = es.eigenvalues().reverse();
    Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();

    const double lambda_max = std::max(lambda(0), 0.0);
    for (Eigen::Index k = 0; k < p; ++k) {
        if (lambda(k) < 0.0) lambda(k) = 0.0;
        // Deterministic sign: first nonzero eigenvector component positive.
        for (Eigen::Index i = 0; i < p; ++i) {
            if (std::fabs(vecs(i, k)) > 1e-14) {
                if (vecs(i, k) < 0.0) vecs.col(k) = -vecs.col(k);
                break;
            }
        }
    }

    Eigen::Index rank = 0;
    const double cut = rank_tolerance * lambda_max;
    while (rank < p && lambda(rank) > cut) ++rank;
    for (Eigen::Index k = rank; k < p; ++k) lambda(k) = 0.0;

    // Normalized image vectors e_k^* = X e_k / sqrt(lambda_k).
    Eigen::MatrixXd estar(n, rank);
    for (Eigen::Index k = 0; k < rank; ++k)
        estar.col(k) = data.X * vecs.col(k) / std::sqrt(lambda(k));

    Eigen::VectorXd ybar(n);
    ybar.head(rank) = estar.transpose() * data.Y;

    if (rank < n) {
        if (rank == 0) {
            ybar = data.Y;
        } else {
            // Orthonormal completion from the trailing Householder Q columns.
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(estar);
            Eigen::MatrixXd q = qr.householderQ();
            ybar.tail(n - rank) = q.rightCols(n - rank).transpose() * data.Y;
        }
    }

    SpectralModel model;
    model.eigenvalues = lambda;
    model.ybar = ybar;
    model.n = n;
    model.p = p;
    model.rank = rank;
    return model;
}

/// True iff the least-squares residual recomputed in original coordinates
/// matches the tail sum of squares of ybar (relative 1e-8).
inline bool model_equivalence_check(const LinearModelData& data,
                                    const SpectralModel& model) {
    data.validate();
    const Eigen::Index n = data.X.rows();
    if (model.n != n || model.ybar.size() != n) return false;

    Eigen::VectorXd beta_ls = data.X.colPivHouseholderQr().solve(data.Y);
    const double residual = (data.Y - data.X * beta_ls).squaredNorm();
    const double tail = model.ybar.tail(n - model.rank).squaredNorm();

    const double scale = std::max(residual, tail);
    if (scale <= 1e-12 * data.Y.squaredNorm() + 1e-300) return true;
    return std::fabs(residual - tail) <= 1e-8 * scale;
}

}  // namespace noisefloor

#endif
