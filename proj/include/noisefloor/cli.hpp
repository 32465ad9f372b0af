#ifndef NOISEFLOOR_CLI_HPP
#define NOISEFLOOR_CLI_HPP

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "noisefloor/csv.hpp"
#include "noisefloor/envelope.hpp"
#include "noisefloor/estimator.hpp"
#include "noisefloor/montecarlo.hpp"
#include "noisefloor/report.hpp"
#include "noisefloor/spectral.hpp"
#include "noisefloor/splines.hpp"

namespace noisefloor {

struct CliConfig {
    std::string subcommand;
    std::string x_path, y_path, beta_path, eigenvalues_path;
    std::string family = "tikhonov";
    double epsilon = 0.5;
    double alpha_min = 0.0;   // 0 => alpha_max * 1e-8
    double alpha_max = 0.0;   // 0 => auto: largest alpha with D >= 5
    double grid_ratio = 0.0;  // 0 => epsilon^2 / Q
    double d_target = 5.0;    // D(alpha_max) level for the auto policy
    int order = 2;
    std::string scenario = "pure_noise";
    std::string function_name = "sin2pi";
    long long n = 0, p = 0;
    double sigma = 1.0;
    double fixed_alpha = 0.0;
    long long replicates = 1000;
    std::uint64_t seed = 0;
    std::vector<long long> n_ladder;
    std::string out_path, csv_path;
    bool no_records = false;
    int verbosity = 0;
};

inline ordered_json config_to_json(const CliConfig& c) {
    ordered_json j;
    j["subcommand"] = c.subcommand;
    j["x"] = c.x_path;
    j["y"] = c.y_path;
    j["beta"] = c.beta_path;
    j["eigenvalues"] = c.eigenvalues_path;
    j["family"] = c.family;
    j["epsilon"] = c.epsilon;
    j["alpha_min"] = c.alpha_min;
    j["alpha_max"] = c.alpha_max;
    j["grid_ratio"] = c.grid_ratio;
    j["d_target"] = c.d_target;
    j["order"] = c.order;
    j["scenario"] = c.scenario;
    j["function"] = c.function_name;
    j["n"] = c.n;
    j["p"] = c.p;
    j["sigma"] = c.sigma;
    j["fixed_alpha"] = c.fixed_alpha;
    j["replicates"] = c.replicates;
    j["seed"] = c.seed;
    j["n_ladder"] = c.n_ladder;
    j["out"] = c.out_path;
    j["csv"] = c.csv_path;
    j["no_records"] = c.no_records;
    j["verbosity"] = c.verbosity;
    return j;
}

inline CliConfig config_from_json(const ordered_json& j) {
    CliConfig c;
    c.subcommand = j.at("subcommand").get<std::string>();
    c.x_path = j.at("x").get<std::string>();
    c.y_path = j.at("y").get<std::string>();
    c.beta_path = j.at("beta").get<std::string>();
    c.eigenvalues_path = j.at("eigenvalues").get<std::string>();
    c.family = j.at("family").get<std::string>();
    c.epsilon = j.at("epsilon").get<double>();
    c.alpha_min = j.at("alpha_min").get<double>();
    c.alpha_max = j.at("alpha_max").get<double>();
    c.grid_ratio = j.at("grid_ratio").get<double>();
    c.d_target = j.at("d_target").get<double>();
    c.order = j.at("order").get<int>();
    c.scenario = j.at("scenario").get<std::string>();
    c.function_name = j.at("function").get<std::string>();
    c.n = j.at("n").get<long long>();
    c.p = j.at("p").get<long long>();
    c.sigma = j.at("sigma").get<double>();
    c.fixed_alpha = j.at("fixed_alpha").get<double>();
    c.replicates = j.at("replicates").get<long long>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_ladder = j.at("n_ladder").get<std::vector<long long>>();
    c.out_path = j.at("out").get<std::string>();
    c.csv_path = j.at("csv").get<std::string>();
    c.no_records = j.at("no_records").get<bool>();
    c.verbosity = j.at("verbosity").get<int>();
    return c;
}

namespace detail {

/// Default grid policy: alpha_max is the largest alpha with D(alpha) >= 5;
/// when the spectrum cannot reach D = 5 we fall back to 90% of the maximal
/// achievable D, leave the theorem regime, and warn.
inline AlphaGrid default_grid(const RegularizerFamily& family,
                              const Eigen::VectorXd& eigenvalues,
                              Eigen::Index n, const CliConfig& c,
                              std::vector<std::string>* warnings) {
    double alpha_max = c.alpha_max;
    EnvelopeParams params;
    params.epsilon = c.epsilon;
    if (alpha_max <= 0.0) {
        try {
            alpha_max = auto_alpha_max(family, eigenvalues, c.d_target);
        } catch (const std::domain_error&) {
            double d_top = 0.0;
            double lo = 1.0;
            for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
                if (std::isfinite(eigenvalues(k)))
                    lo = std::max(lo, eigenvalues(k));
            d_top = d_functional(family, lo * 1e-14, eigenvalues);
            alpha_max = auto_alpha_max(family, eigenvalues, 0.9 * d_top);
            params.theorem_mode = false;
            if (warnings)
                warnings->push_back(
                    "D(alpha_max) < 5: outside the concentration regime; "
                    "alpha_max set to 90% of the achievable D");
        }
    }
    const double alpha_min =
        c.alpha_min > 0.0 ? c.alpha_min : alpha_max * 1e-8;
    params.alpha_max = alpha_max;
    params.d_alpha_max = d_functional(family, alpha_max, eigenvalues);
    if (params.d_alpha_max < 5.0 * (1.0 - 1e-6)) params.theorem_mode = false;
    return build_grid(family, eigenvalues, n, alpha_min, alpha_max, params,
                      c.grid_ratio);
}

inline int run_estimate(const CliConfig& c) {
    LinearModelData data;
    data.X = read_matrix_csv(c.x_path);
    data.Y = read_vector_csv(c.y_path);
    const SpectralModel model = spectralize(data);
    const RegularizerFamily family =
        make_family(family_from_string(c.family), model.eigenvalues);

    std::vector<std::string> grid_warnings;
    const AlphaGrid grid =
        default_grid(family, model.eigenvalues, model.n, c, &grid_warnings);
    EstimateReport report = select_alpha(model, family, grid);
    report.warnings.insert(report.warnings.end(), grid_warnings.begin(),
                           grid_warnings.end());

    const ordered_json j = estimate_to_json(report, c.family, c.epsilon, grid);
    if (!c.out_path.empty()) write_json(j, c.out_path);
    std::cout << j.dump(2) << '\n';
    return 0;
}

inline int run_spline(const CliConfig& c) {
    const Eigen::VectorXd design = read_vector_csv(c.x_path);
    const Eigen::VectorXd y = read_vector_csv(c.y_path);
    EnvelopeParams params;
    params.epsilon = c.epsilon;
    GridSpec spec;
    spec.alpha_min = c.alpha_min;
    spec.alpha_max = c.alpha_max;
    spec.ratio_override = c.grid_ratio;
    spec.d_target = c.d_target;
    const SplineFitReport report =
        spline_noise_estimate(design, y, c.order, params, spec);
    const ordered_json j = spline_to_json(report, c.order, c.epsilon);
    if (!c.out_path.empty()) write_json(j, c.out_path);
    std::cout << "sigma2_hat = " << format_double(report.sigma2_hat)
              << "  alpha_hat = " << format_double(report.alpha_hat) << '\n';
    return 0;
}

inline int run_simulate(const CliConfig& c) {
    SimulationConfig config;
    config.scenario = scenario_from_string(c.scenario);
    config.family = family_from_string(c.family);
    config.epsilon = c.epsilon;
    config.n = c.n;
    config.p = c.p;
    config.sigma = c.sigma;
    config.fixed_alpha = c.fixed_alpha;
    config.replicates = static_cast<int>(c.replicates);
    config.seed = c.seed;
    config.function_name = c.function_name;
    config.m = c.order;
    config.grid.alpha_min = c.alpha_min;
    config.grid.alpha_max = c.alpha_max;
    config.grid.ratio_override = c.grid_ratio;
    config.grid.d_target = c.d_target;
    for (long long n : c.n_ladder) config.n_ladder.push_back(n);
    if (config.scenario == ScenarioKind::fixed_beta) {
        if (c.beta_path.empty())
            throw std::runtime_error("fixed_beta scenario requires --beta");
        config.beta = read_vector_csv(c.beta_path);
    }
    if (config.scenario == ScenarioKind::sobolev_regression && config.p == 0)
        config.p = config.n;

    const SimulationResult result = run_experiment(config);
    const ordered_json j = simulation_to_json(config, result, !c.no_records);
    if (!c.out_path.empty()) write_json(j, c.out_path);
    if (!c.csv_path.empty()) write_records_csv(result, c.csv_path);

    // Human summary table.
    std::cout << "scenario    " << c.scenario << "  (n=" << config.n
              << ", p=" << config.p << ", replicates=" << config.replicates
              << ", seed=" << config.seed << ")\n";
    std::cout << "field        mean          sd            se\n";
    const auto row = [](const char* name, const FieldSummary& s) {
        std::printf("%-12s %-13.6g %-13.6g %-13.6g\n", name, s.mean, s.sd,
                    s.se);
    };
    row("sigma2_hat", result.sigma2_summary);
    row("delta", result.delta_summary);
    if (result.rate_fit.present)
        std::printf("rate_fit     exponent=%.6g intercept=%.6g\n",
                    result.rate_fit.exponent, result.rate_fit.intercept);
    return 0;
}

inline int run_envelope(const CliConfig& c) {
    Eigen::VectorXd eigenvalues;
    if (!c.eigenvalues_path.empty()) {
        eigenvalues = read_vector_csv(c.eigenvalues_path);
    } else if (!c.x_path.empty()) {
        LinearModelData data;
        data.X = read_matrix_csv(c.x_path);
        data.Y = Eigen::VectorXd::Zero(data.X.rows());
        eigenvalues = spectralize(data).eigenvalues;
    } else {
        throw std::runtime_error("envelope requires --x or --eigenvalues");
    }
    const Eigen::Index n = c.n > 0 ? c.n : eigenvalues.size();
    const RegularizerFamily family =
        make_family(family_from_string(c.family), eigenvalues);
    std::vector<std::string> warnings;
    const AlphaGrid grid = default_grid(family, eigenvalues, n, c, &warnings);

    ordered_json j;
    j["family"] = c.family;
    j["epsilon"] = c.epsilon;
    j["q_constant"] = envelope_q_constant;
    j["r"] = grid.r;
    j["d_alpha_max"] = grid.d_alpha_max;
    ordered_json points = ordered_json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ordered_json pt;
        pt["alpha"] = grid.alphas[i];
        pt["d_alpha"] = grid.d_values[i];
        pt["v_eps"] = grid.v_values[i];
        points.push_back(pt);
    }
    j["grid"] = points;
    j["warnings"] = warnings;
    if (!c.out_path.empty()) write_json(j, c.out_path);
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace detail

/// Build the CLI11 application over a CliConfig. Exposed separately so tests
/// can drive parsing without spawning a process.
inline void setup_cli(CLI::App& app, CliConfig& c) {
    app.require_subcommand(1);

    const auto add_grid_flags = [&](CLI::App* sub) {
        sub->add_option("--family", c.family, "regularizer family")
            ->check(CLI::IsMember({"tikhonov", "cutoff", "landweber"}))
            ->capture_default_str();
        sub->add_option("--epsilon", c.epsilon, "envelope parameter in (0,1]")
            ->check(CLI::Range(1e-6, 1.0))
            ->capture_default_str();
        sub->add_option("--alpha-min", c.alpha_min,
                        "grid lower endpoint (default alpha_max*1e-8)");
        sub->add_option("--alpha-max", c.alpha_max,
                        "grid upper endpoint (default: largest alpha with D>=5)");
        sub->add_option("--grid-ratio", c.grid_ratio,
                        "geometric D-ratio r (default epsilon^2/Q)");
        sub->add_option("--d-max", c.d_target,
                        "target D(alpha_max) for the automatic alpha_max")
            ->check(CLI::Range(5.0, 1e12));
        sub->add_option("--out", c.out_path, "JSON output path");
    };

    auto* estimate = app.add_subcommand(
        "estimate", "noise level from a design matrix and response");
    estimate->add_option("--x", c.x_path, "design matrix CSV")
        ->required()
        ->check(CLI::ExistingFile);
    estimate->add_option("--y", c.y_path, "response vector CSV")
        ->required()
        ->check(CLI::ExistingFile);
    add_grid_flags(estimate);

    auto* spline = app.add_subcommand(
        "spline", "smoothing-spline noise level on a [0,1] design");
    spline->add_option("--x", c.x_path, "design points CSV (sorted, in [0,1])")
        ->required()
        ->check(CLI::ExistingFile);
    spline->add_option("--y", c.y_path, "response vector CSV")
        ->required()
        ->check(CLI::ExistingFile);
    spline->add_option("--order", c.order, "penalty order m")
        ->check(CLI::Range(1, 4))
        ->capture_default_str();
    add_grid_flags(spline);

    auto* simulate =
        app.add_subcommand("simulate", "seeded Monte Carlo experiments");
    simulate
        ->add_option("--scenario", c.scenario,
                     "pure_noise | fixed_beta | sobolev_regression")
        ->check(CLI::IsMember(
            {"pure_noise", "fixed_beta", "sobolev_regression"}))
        ->capture_default_str();
    simulate->add_option("--n", c.n, "sample size")->required();
    simulate->add_option("--p", c.p, "model dimension");
    simulate->add_option("--sigma", c.sigma, "noise standard deviation")
        ->capture_default_str();
    simulate->add_option("--replicates", c.replicates, "replicate count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--seed", c.seed, "64-bit RNG seed")
        ->capture_default_str();
    simulate->add_option("--beta", c.beta_path,
                         "coefficient CSV for fixed_beta");
    simulate->add_option("--function", c.function_name,
                         "sobolev test function (sin2pi, bump, zero)")
        ->capture_default_str();
    simulate->add_option("--order", c.order, "sobolev penalty order m")
        ->check(CLI::Range(1, 4))
        ->capture_default_str();
    simulate->add_option("--n-ladder", c.n_ladder,
                         "sobolev sweep sizes (overrides --n)");
    simulate->add_option("--fixed-alpha", c.fixed_alpha,
                         "skip selection; evaluate at this alpha");
    simulate->add_option("--csv", c.csv_path, "per-replicate CSV output path");
    simulate->add_flag("--no-records", c.no_records,
                       "omit per-replicate records from JSON");
    add_grid_flags(simulate);

    auto* envelope = app.add_subcommand(
        "envelope", "dump the alpha grid with D(alpha) and V_eps(alpha)");
    envelope->add_option("--x", c.x_path, "design matrix CSV")
        ->check(CLI::ExistingFile);
    envelope->add_option("--eigenvalues", c.eigenvalues_path,
                         "spectrum CSV (one value per line)")
        ->check(CLI::ExistingFile);
    envelope->add_option("--n", c.n, "sample size (default: spectrum length)");
    add_grid_flags(envelope);

    app.add_flag("-v,--verbose", c.verbosity, "increase verbosity");
}

/// Entry point shared by the binary and the tests.
/// Exit codes: 0 success, 1 runtime/domain error, 2 usage error.
inline int run_cli(int argc, const char* const* argv) {
    CliConfig c;
    CLI::App app{"ordered spectral regularization noise-level estimator"};
    setup_cli(app, c);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        c.subcommand = app.get_subcommands().front()->get_name();
        if (c.subcommand == "estimate") return detail::run_estimate(c);
        if (c.subcommand == "spline") return detail::run_spline(c);
        if (c.subcommand == "simulate") return detail::run_simulate(c);
        if (c.subcommand == "envelope") return detail::run_envelope(c);
        std::cerr << "error: unknown subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace noisefloor

#endif
