#ifndef NOISEFLOOR_MONTECARLO_HPP
#define NOISEFLOOR_MONTECARLO_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "noisefloor/envelope.hpp"
#include "noisefloor/estimator.hpp"
#include "noisefloor/regularizers.hpp"
#include "noisefloor/rng.hpp"
#include "noisefloor/splines.hpp"

namespace noisefloor {

enum class ScenarioKind { pure_noise, fixed_beta, sobolev_regression };

inline std::string to_string(ScenarioKind s) {
    switch (s) {
        case ScenarioKind::pure_noise: return "pure_noise";
        case ScenarioKind::fixed_beta: return "fixed_beta";
        case ScenarioKind::sobolev_regression: return "sobolev_regression";
    }
    return "?";
}

inline ScenarioKind scenario_from_string(const std::string& name) {
    if (name == "pure_noise") return ScenarioKind::pure_noise;
    if (name == "fixed_beta") return ScenarioKind::fixed_beta;
    if (name == "sobolev_regression") return ScenarioKind::sobolev_regression;
    throw std::invalid_argument("unknown scenario: " + name);
}

struct SimulationConfig {
    ScenarioKind scenario = ScenarioKind::pure_noise;
    Eigen::VectorXd beta;                 // fixed_beta: spectral coordinates
    std::string function_name = "sin2pi"; // sobolev_regression test function
    int m = 2;                            // sobolev_regression order
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    std::vector<Eigen::Index> n_ladder;   // sobolev sweep; empty => {n}
    double sigma = 1.0;
    FamilyKind family = FamilyKind::tikhonov;
    double epsilon = 0.5;
    GridSpec grid;
    double fixed_alpha = 0.0;  // > 0: evaluate sigma2 at this alpha, no selection
    int replicates = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (replicates < 1)
            throw std::invalid_argument("SimulationConfig: replicates must be >= 1");
        if (!(sigma > 0.0))
            throw std::invalid_argument("SimulationConfig: sigma must be > 0");
        if (n < 1) throw std::invalid_argument("SimulationConfig: n must be >= 1");
        if (scenario != ScenarioKind::sobolev_regression && p < 1)
            throw std::invalid_argument("SimulationConfig: p must be >= 1");
        if (scenario != ScenarioKind::sobolev_regression && p > n)
            throw std::invalid_argument("SimulationConfig: need p <= n");
        if (scenario == ScenarioKind::fixed_beta && beta.size() != p)
            throw std::invalid_argument("SimulationConfig: beta must have length p");
    }
};

struct ReplicateRecord {
    double sigma2_hat = 0.0;
    double alpha_hat = 0.0;
    double delta = 0.0;
    double sup_exceedance = 0.0;
};

struct FieldSummary {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
    double q05 = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, q95 = 0.0;
};

struct RateFit {
    bool present = false;
    double exponent = 0.0;
    double intercept = 0.0;
};

struct SimulationResult {
    std::vector<ReplicateRecord> records;
    FieldSummary sigma2_summary;
    FieldSummary delta_summary;
    double mean_exceedance = 0.0;
    double normalized_ratio = 0.0;  // mean exceedance / (eps^{-1} sqrt(D(alpha_max)))
    double mean_sup_zeta = 0.0;
    std::vector<double> ladder_n;          // sobolev sweep sizes
    std::vector<double> ladder_mean_delta; // mean delta per sweep size
    RateFit rate_fit;
};

namespace detail {

inline int worker_count(int replicates) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    int cap = static_cast<int>(hw);
    if (const char* env = std::getenv("NOISE_FLOOR_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) cap = v;
    }
    return std::max(1, std::min(cap, replicates));
}

/// Run body(r) for r in [0, replicates) on a worker pool. The body writes
/// only to its own replicate slot, so worker count cannot affect output.
template <typename Body>
void parallel_replicates(int replicates, const Body& body) {
    const int workers = worker_count(replicates);
    if (workers == 1) {
        for (int r = 0; r < replicates; ++r) body(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int r = next.fetch_add(1); r < replicates;
                 r = next.fetch_add(1))
                body(r);
        });
    for (auto& t : pool) t.join();
}

/// Type-7 quantile of a sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline FieldSummary summarize(const std::vector<double>& values) {
    FieldSummary s;
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;  // fixed index order: deterministic
    s.mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.se = s.sd / std::sqrt(n);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.q05 = quantile_sorted(sorted, 0.05);
    s.q25 = quantile_sorted(sorted, 0.25);
    s.median = quantile_sorted(sorted, 0.50);
    s.q75 = quantile_sorted(sorted, 0.75);
    s.q95 = quantile_sorted(sorted, 0.95);
    return s;
}

inline void aggregate_records(SimulationResult& result) {
    std::vector<double> s2, dl;
    s2.reserve(result.records.size());
    dl.reserve(result.records.size());
    for (const auto& rec : result.records) {
        if (!std::isfinite(rec.sigma2_hat) || !std::isfinite(rec.delta) ||
            !std::isfinite(rec.sup_exceedance))
            throw std::runtime_error("montecarlo: non-finite replicate record");
        s2.push_back(rec.sigma2_hat);
        dl.push_back(rec.delta);
    }
    result.sigma2_summary = summarize(s2);
    result.delta_summary = summarize(dl);
}

/// Polynomially decaying benchmark spectrum lambda_k = (p/k)^2, k = 1..p.
inline Eigen::VectorXd benchmark_eigenvalues(Eigen::Index p) {
    Eigen::VectorXd lambda(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const double ratio = static_cast<double>(p) / static_cast<double>(k + 1);
        lambda(k) = ratio * ratio;
    }
    return lambda;
}

inline RegularizerFamily make_family(FamilyKind kind,
                                     const Eigen::VectorXd& eigenvalues) {
    switch (kind) {
        case FamilyKind::tikhonov: return RegularizerFamily::tikhonov();
        case FamilyKind::cutoff: return RegularizerFamily::cutoff();
        case FamilyKind::landweber: {
            double lmax = 0.0;
            for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
                if (std::isfinite(eigenvalues(k)))
                    lmax = std::max(lmax, eigenvalues(k));
            return RegularizerFamily::landweber(lmax);
        }
    }
    throw std::invalid_argument("make_family: unknown kind");
}

inline AlphaGrid make_grid(const RegularizerFamily& family,
                           const Eigen::VectorXd& eigenvalues, Eigen::Index n,
                           double epsilon, const GridSpec& spec) {
    double alpha_max = spec.alpha_max;
    if (alpha_max <= 0.0)
        alpha_max = auto_alpha_max(family, eigenvalues, spec.d_target);
    const double alpha_min =
        spec.alpha_min > 0.0 ? spec.alpha_min : alpha_max * 1e-8;
    EnvelopeParams params;
    params.epsilon = epsilon;
    params.alpha_max = alpha_max;
    params.d_alpha_max = d_functional(family, alpha_max, eigenvalues);
    return build_grid(family, eigenvalues, n, alpha_min, alpha_max, params,
                      spec.ratio_override);
}

inline Eigen::VectorXd named_function(const std::string& name,
                                      const Eigen::VectorXd& x) {
    Eigen::VectorXd f(x.size());
    if (name == "sin2pi") {
        for (Eigen::Index i = 0; i < x.size(); ++i)
            f(i) = std::sin(2.0 * std::numbers::pi * x(i));
    } else if (name == "zero") {
        f.setZero();
    } else if (name == "bump") {
        for (Eigen::Index i = 0; i < x.size(); ++i)
            f(i) = std::exp(-50.0 * (x(i) - 0.5) * (x(i) - 0.5));
    } else {
        throw std::invalid_argument("unknown test function: " + name);
    }
    return f;
}

inline Eigen::VectorXd midpoint_design(Eigen::Index n) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i)
        x(i) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    return x;
}

}  // namespace detail

/// Exceedance experiment for the envelope: per replicate draw xi' standard
/// Gaussian, form zeta(alpha) = sum_k G_alpha(lambda_k)(1 - xi_k'^2) on the
/// grid and record sup over the grid of [|zeta| - V_eps]_+ and sup |zeta|.
inline SimulationResult simulate_zeta_exceedance(
    const Eigen::VectorXd& eigenvalues, const RegularizerFamily& family,
    const AlphaGrid& grid, double epsilon, int replicates, std::uint64_t seed,
    bool force = false) {
    if (grid.size() == 0)
        throw std::invalid_argument("simulate_zeta_exceedance: empty grid");
    if (replicates < 1)
        throw std::invalid_argument("simulate_zeta_exceedance: replicates >= 1");
    if (!force && grid.d_alpha_max < 5.0 * (1.0 - 1e-6))
        throw std::domain_error(
            "simulate_zeta_exceedance: D(alpha_max) < 5 (use force to override)");

    const Eigen::Index p = eigenvalues.size();
    const auto npts = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd gmat(npts, p);
    for (Eigen::Index i = 0; i < npts; ++i)
        for (Eigen::Index k = 0; k < p; ++k)
            gmat(i, k) = g_value(family.h(grid.alphas[static_cast<std::size_t>(i)],
                                          eigenvalues(k)));

    SimulationResult result;
    result.records.resize(static_cast<std::size_t>(replicates));
    std::vector<double> sup_zeta(static_cast<std::size_t>(replicates), 0.0);

    detail::parallel_replicates(replicates, [&](int r) {
        SubstreamRng rng(seed, static_cast<std::uint64_t>(r));
        Eigen::VectorXd u(p);
        for (Eigen::Index k = 0; k < p; ++k) {
            const double xi = rng.next_gaussian();
            u(k) = 1.0 - xi * xi;
        }
        const Eigen::VectorXd zeta = gmat * u;
        double exceed = 0.0, sup = 0.0;
        for (Eigen::Index i = 0; i < npts; ++i) {
            const double az = std::fabs(zeta(i));
            sup = std::max(sup, az);
            exceed = std::max(
                exceed, az - grid.v_values[static_cast<std::size_t>(i)]);
        }
        auto& rec = result.records[static_cast<std::size_t>(r)];
        rec.sup_exceedance = std::max(exceed, 0.0);
        sup_zeta[static_cast<std::size_t>(r)] = sup;
    });

    detail::aggregate_records(result);
    double sum_ex = 0.0, sum_sup = 0.0;
    for (std::size_t r = 0; r < result.records.size(); ++r) {
        sum_ex += result.records[r].sup_exceedance;
        sum_sup += sup_zeta[r];
    }
    result.mean_exceedance = sum_ex / static_cast<double>(replicates);
    result.mean_sup_zeta = sum_sup / static_cast<double>(replicates);
    result.normalized_ratio =
        result.mean_exceedance / (std::sqrt(grid.d_alpha_max) / epsilon);
    return result;
}

namespace detail {

/// Generic-model replicate sweep shared by pure_noise and fixed_beta, so the
/// two scenarios agree bit-for-bit when beta == 0.
inline void run_generic(const SimulationConfig& config,
                        SimulationResult& result) {
    const Eigen::VectorXd lambda = benchmark_eigenvalues(config.p);
    const RegularizerFamily family = make_family(config.family, lambda);
    const Eigen::VectorXd beta = config.scenario == ScenarioKind::fixed_beta
                                     ? config.beta
                                     : Eigen::VectorXd::Zero(config.p);

    AlphaGrid grid;
    if (config.fixed_alpha <= 0.0)
        grid = make_grid(family, lambda, config.n, config.epsilon, config.grid);

    Eigen::VectorXd signal(config.n);
    signal.setZero();
    for (Eigen::Index k = 0; k < config.p; ++k)
        signal(k) = std::sqrt(lambda(k)) * beta(k);

    result.records.resize(static_cast<std::size_t>(config.replicates));
    parallel_replicates(config.replicates, [&](int r) {
        SubstreamRng rng(config.seed, static_cast<std::uint64_t>(r));
        Eigen::VectorXd xi(config.n);
        for (Eigen::Index k = 0; k < config.n; ++k)
            xi(k) = rng.next_gaussian();

        SpectralModel model;
        model.eigenvalues = lambda;
        model.ybar = signal + config.sigma * xi;
        model.n = config.n;
        model.p = config.p;
        model.rank = config.p;

        auto& rec = result.records[static_cast<std::size_t>(r)];
        if (config.fixed_alpha > 0.0) {
            rec.alpha_hat = config.fixed_alpha;
            rec.sigma2_hat = sigma2_alpha(model, family, config.fixed_alpha);
        } else {
            const EstimateReport est = select_alpha(model, family, grid);
            rec.alpha_hat = est.alpha_hat;
            rec.sigma2_hat = est.sigma2_hat;
        }
        rec.delta = delta_diagnostic(rec.sigma2_hat, config.sigma, xi);
    });
}

/// One sweep point of the spline scenario; basis and grid are built once and
/// shared read-only across replicates.
inline void run_sobolev_point(const SimulationConfig& config, Eigen::Index n,
                              std::uint64_t seed,
                              std::vector<ReplicateRecord>& records) {
    const SplineBasis basis = demmler_reinsch(midpoint_design(n), config.m);
    const Eigen::VectorXd f = named_function(config.function_name, basis.design);
    const Eigen::VectorXd lambda = spline_spectrum_lambdas(basis);
    const RegularizerFamily family = RegularizerFamily::tikhonov();
    const AlphaGrid grid =
        make_grid(family, lambda, n, config.epsilon, config.grid);

    records.resize(static_cast<std::size_t>(config.replicates));
    parallel_replicates(config.replicates, [&](int r) {
        SubstreamRng rng(seed, static_cast<std::uint64_t>(r));
        Eigen::VectorXd xi(n);
        for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.next_gaussian();
        const Eigen::VectorXd y = f + config.sigma * xi;

        SpectralModel model;
        model.eigenvalues = lambda;
        model.ybar = (basis.phi.transpose() * y) / static_cast<double>(n);
        model.n = n;
        model.p = n;
        model.rank = n;

        const EstimateReport est = select_alpha(model, family, grid);
        auto& rec = records[static_cast<std::size_t>(r)];
        rec.alpha_hat = est.alpha_hat;
        // Per-observation units: generic sigma is sigma/sqrt(n).
        rec.sigma2_hat = static_cast<double>(n) * est.sigma2_hat;
        rec.delta = delta_diagnostic(rec.sigma2_hat, config.sigma, xi);
    });
}

}  // namespace detail

inline SimulationResult run_experiment(const SimulationConfig& config) {
    config.validate();
    SimulationResult result;

    if (config.scenario == ScenarioKind::sobolev_regression) {
        std::vector<Eigen::Index> ladder = config.n_ladder;
        if (ladder.empty()) ladder.push_back(config.n);
        for (std::size_t j = 0; j < ladder.size(); ++j) {
            std::vector<ReplicateRecord> records;
            // Distinct substream block per sweep point.
            detail::run_sobolev_point(
                config, ladder[j],
                config.seed + 0x100000000ull * static_cast<std::uint64_t>(j),
                records);
            double sum = 0.0;
            for (const auto& rec : records) sum += rec.delta;
            result.ladder_n.push_back(static_cast<double>(ladder[j]));
            result.ladder_mean_delta.push_back(
                sum / static_cast<double>(records.size()));
            result.records.insert(result.records.end(), records.begin(),
                                  records.end());
        }
        if (ladder.size() >= 2) {
            // Unweighted least squares on (log n, log mean delta).
            const auto npts = static_cast<double>(result.ladder_n.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t j = 0; j < result.ladder_n.size(); ++j) {
                const double x = std::log(result.ladder_n[j]);
                const double y = std::log(result.ladder_mean_delta[j]);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            result.rate_fit.present = true;
            result.rate_fit.exponent =
                (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
            result.rate_fit.intercept =
                (sy - result.rate_fit.exponent * sx) / npts;
        }
    } else {
        detail::run_generic(config, result);
    }

    detail::aggregate_records(result);
    return result;
}

/// Mean Delta(sigma2_hat at alpha_hat) over replicates divided by the oracle
/// level r_eps for the known beta. Envelope-clamped grid points (V = 0) are
/// excluded from the oracle minimum so the denominator stays positive.
inline double oracle_gap(const SimulationConfig& config) {
    config.validate();
    if (config.scenario == ScenarioKind::pure_noise && config.p < 1)
        throw std::invalid_argument("oracle_gap: invalid scenario");

    Eigen::VectorXd lambda, beta_bar;
    Eigen::Index n = config.n;
    double sigma_gen = config.sigma;
    double delta_rescale = 1.0;  // converts recorded delta to generic units
    if (config.scenario == ScenarioKind::sobolev_regression) {
        const SplineBasis basis =
            demmler_reinsch(detail::midpoint_design(n), config.m);
        const Eigen::VectorXd f =
            detail::named_function(config.function_name, basis.design);
        lambda = spline_spectrum_lambdas(basis);
        Eigen::VectorXd fbar =
            (basis.phi.transpose() * f) / static_cast<double>(n);
        beta_bar.resize(n);
        for (Eigen::Index k = 0; k < n; ++k)
            beta_bar(k) = std::isfinite(lambda(k)) && lambda(k) > 0.0
                              ? fbar(k) / std::sqrt(lambda(k))
                              : 0.0;
        sigma_gen = config.sigma / std::sqrt(static_cast<double>(n));
        // Recorded delta is n |s2_obs - pseudo_obs|; generic delta is
        // n |s2_gen - pseudo_gen| = recorded / n.
        delta_rescale = 1.0 / static_cast<double>(n);
    } else {
        lambda = detail::benchmark_eigenvalues(config.p);
        beta_bar = config.scenario == ScenarioKind::fixed_beta
                       ? config.beta
                       : Eigen::VectorXd::Zero(config.p);
    }

    const RegularizerFamily family = detail::make_family(config.family, lambda);
    const AlphaGrid grid =
        detail::make_grid(family, lambda, n, config.epsilon, config.grid);
    const OracleReport oracle =
        oracle_quantities(beta_bar, lambda, n, family, grid, sigma_gen);

    double r_eps = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.v_values[i] > 0.0)
            r_eps = std::min(r_eps, oracle.r_values[i]);
    if (!std::isfinite(r_eps) || r_eps <= 0.0)
        throw std::domain_error("oracle_gap: degenerate oracle (r_eps <= 0)");

    SimulationConfig run = config;
    if (config.scenario == ScenarioKind::sobolev_regression) run.n_ladder = {n};
    const SimulationResult result = run_experiment(run);
    return delta_rescale * result.delta_summary.mean / r_eps;
}

}  // namespace noisefloor

#endif
