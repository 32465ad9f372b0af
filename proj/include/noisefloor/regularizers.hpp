#ifndef NOISEFLOOR_REGULARIZERS_HPP
#define NOISEFLOOR_REGULARIZERS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace noisefloor {

enum class FamilyKind { tikhonov, cutoff, landweber };

inline std::string to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::tikhonov: return "tikhonov";
        case FamilyKind::cutoff: return "cutoff";
        case FamilyKind::landweber: return "landweber";
    }
    return "?";
}

inline FamilyKind family_from_string(const std::string& name) {
    if (name == "tikhonov") return FamilyKind::tikhonov;
    if (name == "cutoff") return FamilyKind::cutoff;
    if (name == "landweber") return FamilyKind::landweber;
    throw std::invalid_argument("unknown family: " + name);
}

/// An ordered spectral-regularizer family alpha -> H_alpha(lambda) in [0,1].
/// Ordering: alpha <= alpha' implies h(alpha, .) >= h(alpha', .) pointwise.
struct RegularizerFamily {
    FamilyKind kind = FamilyKind::tikhonov;
    double lambda_max = 0.0;  // landweber step eta = 1/lambda_max

    static RegularizerFamily tikhonov() { return {FamilyKind::tikhonov, 0.0}; }
    static RegularizerFamily cutoff() { return {FamilyKind::cutoff, 0.0}; }
    static RegularizerFamily landweber(double lambda_max) {
        if (!(lambda_max > 0))
            throw std::invalid_argument("landweber: lambda_max must be > 0");
        return {FamilyKind::landweber, lambda_max};
    }

    /// H_alpha(lambda). lambda may be +infinity (fully retained coordinate).
    double h(double alpha, double lambda) const {
        if (alpha < 0 || lambda < 0)
            throw std::domain_error("h_value: negative input");
        switch (kind) {
            case FamilyKind::tikhonov:
                if (std::isinf(lambda)) return 1.0;
                if (lambda == 0.0) return 0.0;  // includes h(0,0) := 0
                return lambda / (alpha + lambda);
            case FamilyKind::cutoff:
                return lambda >= alpha ? 1.0 : 0.0;
            case FamilyKind::landweber: {
                if (lambda == 0.0) return 0.0;
                if (alpha == 0.0) return 1.0;
                const double base = 1.0 - lambda / lambda_max;
                if (base <= 0.0) return 1.0;
                return 1.0 - std::pow(base, 1.0 / alpha);
            }
        }
        return 0.0;
    }
};

/// G(h) = 2h - h^2 = 1 - (1-h)^2; monotone increasing on [0,1].
inline double g_value(double h) {
    if (!(h >= 0.0 && h <= 1.0))
        throw std::domain_error("g_value: h outside [0,1]");
    return h * (2.0 - h);
}

/// The spectral functionals of one (family, alpha) pair on a given spectrum.
/// Eigenvalues beyond p are treated as exact zeros, contributing nothing.
struct SpectralFunctionals {
    Eigen::VectorXd g_values;  // length n; zeros beyond p
    double d_alpha = 0.0;      // sum G^2
    double q_alpha = 0.0;      // [1 - W/n]^{-1} - 1
    double w_alpha = 0.0;      // sum G
};

inline SpectralFunctionals spectral_functionals(const RegularizerFamily& family,
                                                double alpha,
                                                const Eigen::VectorXd& eigenvalues,
                                                Eigen::Index n) {
    const Eigen::Index p = eigenvalues.size();
    if (n < p) throw std::invalid_argument("spectral_functionals: n < p");
    SpectralFunctionals f;
    f.g_values = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < p; ++k) {
        const double g = g_value(family.h(alpha, eigenvalues(k)));
        f.g_values(k) = g;
        f.w_alpha += g;
        f.d_alpha += g * g;
    }
    if (f.w_alpha >= static_cast<double>(n))
        throw std::domain_error(
            "spectral_functionals: degenerate correction (W(alpha) >= n)");
    f.q_alpha = 1.0 / (1.0 - f.w_alpha / static_cast<double>(n)) - 1.0;
    return f;
}

/// D(alpha) = sum G^2 alone; avoids the q guard for grid construction.
inline double d_functional(const RegularizerFamily& family, double alpha,
                           const Eigen::VectorXd& eigenvalues) {
    double d = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        const double g = g_value(family.h(alpha, eigenvalues(k)));
        d += g * g;
    }
    return d;
}

/// Condition A diagnostic: K-hat = max over the alpha grid of W(alpha)/D(alpha).
/// Grid points with D == 0 are excluded; throws if all are.
inline double condition_a_constant(const RegularizerFamily& family,
                                   std::span<const double> alphas,
                                   const Eigen::VectorXd& eigenvalues,
                                   Eigen::Index n) {
    if (alphas.empty())
        throw std::invalid_argument("condition_a_constant: empty grid");
    double k_hat = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (double alpha : alphas) {
        double w = 0.0, d = 0.0;
        for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
            const double g = g_value(family.h(alpha, eigenvalues(k)));
            w += g;
            d += g * g;
        }
        (void)n;
        if (d == 0.0) continue;
        any = true;
        k_hat = std::max(k_hat, w / d);
    }
    if (!any)
        throw std::domain_error("condition_a_constant: D(alpha) = 0 on whole grid");
    return k_hat;
}

}  // namespace noisefloor

#endif
