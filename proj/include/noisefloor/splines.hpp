#ifndef NOISEFLOOR_SPLINES_HPP
#define NOISEFLOOR_SPLINES_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisefloor/envelope.hpp"
#include "noisefloor/estimator.hpp"
#include "noisefloor/regularizers.hpp"

namespace noisefloor {

/// Demmler-Reinsch-type basis for m-th order smoothing on a design in [0,1]:
/// columns phi_k with (1/n) phi^T phi = I and the discrete penalty diagonal
/// with eigenvalues nu_k (nondecreasing, the first m exactly zero).
struct SplineBasis {
    Eigen::MatrixXd phi;      // n x n
    Eigen::VectorXd nu;       // length n, ascending, nu[0..m) == 0
    int m = 1;
    Eigen::VectorXd design;   // sorted X_i in [0,1]
    std::vector<std::string> warnings;
};

namespace detail {

/// First-difference matrix (n-1) x n.
inline Eigen::MatrixXd first_difference(Eigen::Index n) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 1, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        d(i, i) = -1.0;
        d(i, i + 1) = 1.0;
    }
    return d;
}

/// Factor F with F^T F = the discrete m-th order roughness form:
/// the P1 stiffness L = D^T diag(1/h) D composed through the lumped
/// trapezoid mass W, P_m = L (W^{-1} L)^{m-1}, with degree-<m polynomials
/// projected out so they are exact null vectors.
inline Eigen::MatrixXd penalty_factor(const Eigen::VectorXd& x, int m) {
    const Eigen::Index n = x.size();
    const Eigen::VectorXd h = x.tail(n - 1) - x.head(n - 1);
    const Eigen::MatrixXd d1 = first_difference(n);

    Eigen::MatrixXd stiffness =
        d1.transpose() * h.cwiseInverse().asDiagonal() * d1;
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
    mass.head(n - 1) += 0.5 * h;
    mass.tail(n - 1) += 0.5 * h;

    // Euclidean-orthonormal polynomial block for the deflation.
    Eigen::MatrixXd poly(n, m);
    for (int j = 0; j < m; ++j) poly.col(j) = x.array().pow(j);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(poly);
    Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, m);

    Eigen::MatrixXd f;
    if (m % 2 == 1) {
        f = h.cwiseSqrt().cwiseInverse().asDiagonal() * d1;
        for (int j = 0; j < (m - 1) / 2; ++j)
            f = f * (mass.cwiseInverse().asDiagonal() * stiffness);
    } else {
        f = mass.cwiseSqrt().cwiseInverse().asDiagonal() * stiffness;
        for (int j = 0; j < m / 2 - 1; ++j)
            f = f * (mass.cwiseInverse().asDiagonal() * stiffness);
    }
    f = f - (f * q) * q.transpose();
    return f;
}

}  // namespace detail

/// Assemble the deflated discrete penalty form P (for oracles and direct
/// solves); phi^T P phi = diag(nu) for the basis built from the same design.
inline Eigen::MatrixXd spline_penalty_matrix(const Eigen::VectorXd& design,
                                             int m) {
    const Eigen::MatrixXd f = detail::penalty_factor(design, m);
    return f.transpose() * f;
}

inline SplineBasis demmler_reinsch(const Eigen::VectorXd& design, int m) {
    const Eigen::Index n = design.size();
    if (m < 1) throw std::invalid_argument("demmler_reinsch: m must be >= 1");
    if (n < 2 * m + 2)
        throw std::invalid_argument("demmler_reinsch: need n >= 2m+2");

    SplineBasis basis;
    basis.m = m;
    basis.design = design;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (design(i) > design(i + 1))
            throw std::invalid_argument("demmler_reinsch: design not sorted");
        if (design(i) == design(i + 1)) {
            // Stable jitter so divided differences stay finite.
            basis.design(i + 1) =
                std::nextafter(basis.design(i) + 1e-12, 2.0);
            basis.warnings.push_back("tied design points perturbed");
        }
    }
    if (design(0) < 0.0 || design(n - 1) > 1.0)
        throw std::invalid_argument("demmler_reinsch: design outside [0,1]");

    const Eigen::MatrixXd f = detail::penalty_factor(basis.design, m);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(f, Eigen::ComputeFullV);
    const Eigen::Index nsv = svd.singularValues().size();

    // Ascending nu = n * sigma^2; BDCSVD returns descending singular values.
    basis.nu = Eigen::VectorXd::Zero(n);
    basis.phi.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;  // ascending position k
        double s = src < nsv ? svd.singularValues()(src) : 0.0;
        basis.nu(k) = static_cast<double>(n) * s * s;
        basis.phi.col(k) = std::sqrt(static_cast<double>(n)) *
                           svd.matrixV().col(src);
    }

    // The null space is known exactly: degree-<m polynomials.
    Eigen::MatrixXd poly(n, m);
    for (int j = 0; j < m; ++j) poly.col(j) = basis.design.array().pow(j);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(poly);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    for (int j = 0; j < m; ++j) {
        basis.nu(j) = 0.0;
        basis.phi.col(j) = std::sqrt(static_cast<double>(n)) * q.col(j);
    }
    return basis;
}

/// Smoothing-spline shrinkage h_alpha(nu) = 1/(1 + alpha nu); algebraically
/// the Tikhonov family on reciprocal eigenvalues lambda = 1/nu.
inline double spline_shrinkage(double alpha, double nu) {
    if (alpha < 0 || nu < 0)
        throw std::domain_error("spline_shrinkage: negative input");
    return 1.0 / (1.0 + alpha * nu);
}

/// Map penalty eigenvalues to the generic spectrum lambda = 1/nu (descending,
/// +infinity on the null space).
inline Eigen::VectorXd spline_spectrum_lambdas(const SplineBasis& basis) {
    const Eigen::Index n = basis.nu.size();
    Eigen::VectorXd lambda(n);
    for (Eigen::Index k = 0; k < n; ++k)
        lambda(k) = basis.nu(k) == 0.0
                        ? std::numeric_limits<double>::infinity()
                        : 1.0 / basis.nu(k);
    return lambda;  // nu ascending => lambda nonincreasing
}

/// Fitted values f_hat(X_i) = sum_k h_alpha(nu_k) ybar_k phi_k(X_i) with
/// empirical Fourier coefficients ybar_k = (1/n) sum_i y_i phi_k(X_i).
inline Eigen::VectorXd spline_fit(const SplineBasis& basis,
                                  const Eigen::VectorXd& y, double alpha) {
    const Eigen::Index n = basis.phi.rows();
    if (y.size() != n) throw std::invalid_argument("spline_fit: length mismatch");
    if (alpha < 0) throw std::domain_error("spline_fit: alpha must be >= 0");
    Eigen::VectorXd coeffs =
        (basis.phi.transpose() * y) / static_cast<double>(n);
    for (Eigen::Index k = 0; k < n; ++k)
        coeffs(k) *= spline_shrinkage(alpha, basis.nu(k));
    return basis.phi * coeffs;
}

/// K(m) = int_0^inf [2/(1+x^{2m}) - 1/(1+x^{2m})^2]^2 dx via adaptive
/// Simpson on [0, X] plus the analytic 4 x^{1-4m}/(4m-1) tail bound.
inline double k_m_constant(int m) {
    if (m < 1) throw std::invalid_argument("k_m_constant: m must be >= 1");
    const auto integrand = [m](double x) {
        const double a = 1.0 / (1.0 + std::pow(x, 2.0 * m));
        const double v = 2.0 * a - a * a;
        return v * v;
    };
    // Truncation point: integrand ~ 4 x^{-4m} < 1e-14.
    const double cutoff = std::pow(4e14, 1.0 / (4.0 * m));

    struct Simpson {
        const std::function<double(double)>& f;
        double adapt(double a, double b, double fa, double fm, double fb,
                     double whole, double tol, int depth) const {
            const double mid = 0.5 * (a + b);
            const double lm = f(0.5 * (a + mid));
            const double rm = f(0.5 * (mid + b));
            const double left = (mid - a) / 6.0 * (fa + 4.0 * lm + fm);
            const double right = (b - mid) / 6.0 * (fm + 4.0 * rm + fb);
            if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
                return left + right + (left + right - whole) / 15.0;
            return adapt(a, mid, fa, lm, fm, left, 0.5 * tol, depth - 1) +
                   adapt(mid, b, fm, rm, fb, right, 0.5 * tol, depth - 1);
        }
        double run(double a, double b, double tol) const {
            const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
            const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            return adapt(a, b, fa, fm, fb, whole, tol, 50);
        }
    };
    const std::function<double(double)> f = integrand;
    Simpson simpson{f};
    // Split at 1 where the large-m integrand transitions sharply.
    double value = simpson.run(0.0, 1.0, 0.5e-9) +
                   simpson.run(1.0, std::min(2.0, cutoff), 0.25e-9) +
                   simpson.run(std::min(2.0, cutoff), cutoff, 0.25e-9);
    value += 4.0 * std::pow(cutoff, 1.0 - 4.0 * m) / (4.0 * m - 1.0);
    return value;
}

struct GridSpec {
    double alpha_min = 0.0;        // 0 => alpha_max * 1e-8
    double alpha_max = 0.0;        // 0 => auto (largest alpha with D >= d_target)
    double ratio_override = 0.0;   // 0 => epsilon^2 / Q
    double d_target = 5.0;         // D(alpha_max) level for the auto policy
};

struct SplineFitReport {
    Eigen::VectorXd fitted;
    double alpha_hat = 0.0;
    double sigma2_hat = 0.0;   // per-observation noise variance
    double w_alpha = 0.0;
    double v_eps = 0.0;
    AlphaGrid grid;
    EstimateReport estimate;   // generic-machinery report (sigma^2/n scale)
    std::vector<std::string> warnings;
};

/// Full spline noise estimator: builds the basis, maps to the generic
/// spectrum (sigma -> sigma/sqrt(n), lambda = 1/nu), delegates grid
/// construction and selection, and rescales back to per-observation units.
inline SplineFitReport spline_noise_estimate(const SplineBasis& basis,
                                             const Eigen::VectorXd& y,
                                             EnvelopeParams params,
                                             GridSpec spec = {}) {
    const Eigen::Index n = basis.phi.rows();
    if (y.size() != n)
        throw std::invalid_argument("spline_noise_estimate: length mismatch");

    SpectralModel model;
    model.eigenvalues = spline_spectrum_lambdas(basis);
    model.ybar = (basis.phi.transpose() * y) / static_cast<double>(n);
    model.n = n;
    model.p = n;
    model.rank = n;

    const auto family = RegularizerFamily::tikhonov();
    double alpha_max = spec.alpha_max;
    if (alpha_max <= 0.0)
        alpha_max = auto_alpha_max(family, model.eigenvalues, spec.d_target);
    const double alpha_min =
        spec.alpha_min > 0.0 ? spec.alpha_min : alpha_max * 1e-8;

    params.alpha_max = alpha_max;
    params.d_alpha_max = d_functional(family, alpha_max, model.eigenvalues);
    AlphaGrid grid = build_grid(family, model.eigenvalues, n, alpha_min,
                                alpha_max, params, spec.ratio_override);
    EstimateReport est = select_alpha(model, family, grid);

    SplineFitReport report;
    report.alpha_hat = est.alpha_hat;
    report.sigma2_hat = static_cast<double>(n) * est.sigma2_hat;
    report.w_alpha = est.w_at_alpha_hat;
    report.v_eps = est.v_at_alpha_hat;
    report.fitted = spline_fit(basis, y, est.alpha_hat);
    report.grid = std::move(grid);
    report.warnings = est.warnings;
    report.warnings.insert(report.warnings.end(), basis.warnings.begin(),
                           basis.warnings.end());
    report.estimate = std::move(est);
    return report;
}

inline SplineFitReport spline_noise_estimate(const Eigen::VectorXd& design,
                                             const Eigen::VectorXd& y, int m,
                                             EnvelopeParams params,
                                             GridSpec spec = {}) {
    return spline_noise_estimate(demmler_reinsch(design, m), y, params, spec);
}

}  // namespace noisefloor

#endif
