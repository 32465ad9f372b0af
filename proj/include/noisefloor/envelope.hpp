#ifndef NOISEFLOOR_ENVELOPE_HPP
#define NOISEFLOOR_ENVELOPE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "noisefloor/regularizers.hpp"

namespace noisefloor {

/// Q = 4/(sqrt(2)-1)^2 = 12 + 8 sqrt(2).
inline constexpr double envelope_q_constant = 12.0 + 8.0 * std::numbers::sqrt2;

struct EnvelopeParams {
    double epsilon = 0.5;        // in (0, 1]
    double alpha_max = 0.0;
    double d_alpha_max = 0.0;    // D(alpha_max)
    bool theorem_mode = true;    // enforce D(alpha_max) >= 5

    void validate() const {
        if (!(epsilon > 0.0 && epsilon <= 1.0))
            throw std::invalid_argument("EnvelopeParams: epsilon must be in (0,1]");
        if (!(d_alpha_max > 0.0))
            throw std::invalid_argument("EnvelopeParams: d_alpha_max must be > 0");
        if (theorem_mode && d_alpha_max < 5.0 * (1.0 - 1e-6))
            throw std::invalid_argument(
                "EnvelopeParams: d_alpha_max < 5 outside theorem regime");
    }
};

/// Deterministic envelope V_eps at a given D(alpha) value. Clamped to 0
/// wherever the brace term is non-positive (alpha near alpha_max).
inline double v_epsilon(const EnvelopeParams& params, double d_alpha) {
    params.validate();
    if (d_alpha < params.d_alpha_max * (1.0 - 1e-9))
        throw std::domain_error("v_epsilon: d_alpha below d_alpha_max");
    const double t = std::log(d_alpha / params.d_alpha_max);
    if (t <= 0.0) return 0.0;
    const double eps = params.epsilon;
    const double brace =
        t + 2.0 * (1.0 + eps) * std::log(envelope_q_constant / (eps * eps) * t);
    if (brace <= 0.0) return 0.0;
    return (1.0 + eps) * std::sqrt(2.0 * d_alpha * brace);
}

/// Conjectured log-log variant; experimental (unproven). The max(t, e)
/// guard inside log log is our convention for t < e.
inline double v_epsilon_tilde(const EnvelopeParams& params, double d_alpha) {
    params.validate();
    if (d_alpha < params.d_alpha_max * (1.0 - 1e-9))
        throw std::domain_error("v_epsilon_tilde: d_alpha below d_alpha_max");
    const double t = std::log(d_alpha / params.d_alpha_max);
    if (t <= 0.0) return 0.0;
    const double eps = params.epsilon;
    const double brace =
        t + 2.0 * (1.0 + eps) *
                (std::log(std::log(std::max(t, std::numbers::e))) +
                 std::log(1.0 / eps));
    if (brace <= 0.0) return 0.0;
    return std::sqrt(2.0 * d_alpha * brace);
}

/// Geometric-in-D alpha grid: D(alpha_k) = (1+r)^k D(alpha_max), indexed
/// from alpha_max downward, with alpha_min appended as the final point.
struct AlphaGrid {
    std::vector<double> alphas;
    std::vector<double> d_values;
    std::vector<double> v_values;
    double epsilon = 0.5;
    double r = 0.0;
    double d_alpha_max = 0.0;
    bool single_point_warning = false;
    bool snapped_warning = false;

    std::size_t size() const { return alphas.size(); }
};

/// Solve D(alpha) = target by bisection on [lo, hi] where D is nonincreasing
/// in alpha. Returns the alpha whose D is closest to target among the final
/// bracket; *achieved receives D at that alpha.
namespace detail {
inline double bisect_d(const RegularizerFamily& family,
                       const Eigen::VectorXd& eigenvalues, double target,
                       double lo, double hi, double* achieved) {
    double d_lo = d_functional(family, lo, eigenvalues);
    double d_hi = d_functional(family, hi, eigenvalues);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double d_mid = d_functional(family, mid, eigenvalues);
        if (std::fabs(d_mid - target) <= 1e-8 * target) {
            *achieved = d_mid;
            return mid;
        }
        if (d_mid < target) {
            hi = mid;
            d_hi = d_mid;
        } else {
            lo = mid;
            d_lo = d_mid;
        }
    }
    // Plateau or exhausted bracket: snap to the nearest achievable level.
    if (std::fabs(d_lo - target) <= std::fabs(d_hi - target)) {
        *achieved = d_lo;
        return lo;
    }
    *achieved = d_hi;
    return hi;
}
}  // namespace detail

inline AlphaGrid build_grid(const RegularizerFamily& family,
                            const Eigen::VectorXd& eigenvalues, Eigen::Index n,
                            double alpha_min, double alpha_max,
                            const EnvelopeParams& params,
                            double grid_ratio_override = 0.0) {
    if (!(alpha_min > 0.0) || !(alpha_min < alpha_max))
        throw std::invalid_argument("build_grid: need 0 < alpha_min < alpha_max");
    (void)n;

    const double d_max_pt = d_functional(family, alpha_max, eigenvalues);
    if (!(d_max_pt > 0.0))
        throw std::invalid_argument("build_grid: D(alpha_max) must be > 0");

    // Ordering sanity: D must be nonincreasing in alpha (64 log-spaced probes).
    {
        const double lr = std::log(alpha_min), ur = std::log(alpha_max);
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 64; ++i) {
            const double a = std::exp(lr + (ur - lr) * i / 63.0);
            const double d = d_functional(family, a, eigenvalues);
            if (d > prev * (1.0 + 1e-9))
                throw std::runtime_error(
                    "build_grid: D(alpha) not monotone; family violates ordering");
            prev = d;
        }
    }

    AlphaGrid grid;
    grid.epsilon = params.epsilon;
    grid.r = grid_ratio_override > 0.0
                 ? grid_ratio_override
                 : params.epsilon * params.epsilon / envelope_q_constant;
    grid.d_alpha_max = d_max_pt;

    const double d_min_pt = d_functional(family, alpha_min, eigenvalues);
    grid.alphas.push_back(alpha_max);
    grid.d_values.push_back(d_max_pt);

    if (d_min_pt <= d_max_pt * (1.0 + grid.r)) {
        grid.single_point_warning = true;
    } else {
        double upper = alpha_max;
        for (int k = 1;; ++k) {
            const double target = d_max_pt * std::pow(1.0 + grid.r, k);
            if (target > d_min_pt) break;
            double achieved = 0.0;
            const double a = detail::bisect_d(family, eigenvalues, target,
                                              alpha_min, upper, &achieved);
            if (std::fabs(achieved - target) > 1e-6 * target)
                grid.snapped_warning = true;
            if (a < upper) {
                grid.alphas.push_back(a);
                grid.d_values.push_back(achieved);
                upper = a;
            }
            if (a <= alpha_min) break;
        }
        if (grid.alphas.back() > alpha_min) {
            grid.alphas.push_back(alpha_min);
            grid.d_values.push_back(d_min_pt);
        }
    }

    EnvelopeParams vp = params;
    vp.alpha_max = alpha_max;
    vp.d_alpha_max = d_max_pt;
    grid.v_values.reserve(grid.size());
    for (double d : grid.d_values) grid.v_values.push_back(v_epsilon(vp, d));
    return grid;
}

/// Largest alpha with D(alpha) >= d_target (bisected); used for the default
/// alpha_max policy. Throws if even alpha -> 0 cannot reach d_target.
inline double auto_alpha_max(const RegularizerFamily& family,
                             const Eigen::VectorXd& eigenvalues,
                             double d_target = 5.0) {
    double finite_max = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
        if (std::isfinite(eigenvalues(k)))
            finite_max = std::max(finite_max, eigenvalues(k));
    double lo = std::max(finite_max, 1.0) * 1e-14;
    if (d_functional(family, lo, eigenvalues) < d_target)
        throw std::domain_error("auto_alpha_max: D(alpha) cannot reach target");
    double hi = std::max(finite_max, 1.0);
    while (d_functional(family, hi, eigenvalues) >= d_target) {
        hi *= 4.0;
        if (hi > 1e300)
            throw std::runtime_error("auto_alpha_max: no upper bracket");
    }
    double achieved = 0.0;
    return detail::bisect_d(family, eigenvalues, d_target, lo, hi, &achieved);
}

}  // namespace noisefloor

#endif
