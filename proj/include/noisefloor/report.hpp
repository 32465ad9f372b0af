#ifndef NOISEFLOOR_REPORT_HPP
#define NOISEFLOOR_REPORT_HPP

#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>

#include "noisefloor/csv.hpp"
#include "noisefloor/estimator.hpp"
#include "noisefloor/montecarlo.hpp"
#include "noisefloor/splines.hpp"

namespace noisefloor {

using ordered_json = nlohmann::ordered_json;

inline ordered_json grid_to_json(const AlphaGrid& grid) {
    ordered_json j;
    j["size"] = grid.size();
    j["epsilon"] = grid.epsilon;
    j["r"] = grid.r;
    j["d_alpha_max"] = grid.d_alpha_max;
    j["alpha_max"] = grid.alphas.empty() ? 0.0 : grid.alphas.front();
    j["alpha_min"] = grid.alphas.empty() ? 0.0 : grid.alphas.back();
    return j;
}

inline ordered_json estimate_to_json(const EstimateReport& report,
                                     const std::string& family, double epsilon,
                                     const AlphaGrid& grid) {
    ordered_json j;
    j["sigma2_hat"] = report.sigma2_hat;
    j["alpha_hat"] = report.alpha_hat;
    j["epsilon"] = epsilon;
    j["family"] = family;
    ordered_json d;
    d["alpha_index"] = report.alpha_index;
    d["d_alpha"] = report.d_at_alpha_hat;
    d["w_alpha"] = report.w_at_alpha_hat;
    d["q_alpha"] = report.q_at_alpha_hat;
    d["v_eps"] = report.v_at_alpha_hat;
    d["condition_a"] = report.condition_a;
    d["grid"] = grid_to_json(grid);
    j["diagnostics"] = d;
    j["warnings"] = report.warnings;
    return j;
}

inline ordered_json spline_to_json(const SplineFitReport& report, int m,
                                   double epsilon, bool include_fitted = true) {
    ordered_json j;
    j["sigma2_hat"] = report.sigma2_hat;
    j["alpha_hat"] = report.alpha_hat;
    j["epsilon"] = epsilon;
    j["family"] = "tikhonov";
    j["m"] = m;
    ordered_json d;
    d["w_alpha"] = report.w_alpha;
    d["v_eps"] = report.v_eps;
    d["q_alpha"] = report.estimate.q_at_alpha_hat;
    d["d_alpha"] = report.estimate.d_at_alpha_hat;
    d["condition_a"] = report.estimate.condition_a;
    d["grid"] = grid_to_json(report.grid);
    j["diagnostics"] = d;
    if (include_fitted) {
        ordered_json fitted = ordered_json::array();
        for (Eigen::Index i = 0; i < report.fitted.size(); ++i)
            fitted.push_back(report.fitted(i));
        j["fitted"] = fitted;
    }
    j["warnings"] = report.warnings;
    return j;
}

inline ordered_json summary_to_json(const FieldSummary& s) {
    ordered_json j;
    j["mean"] = s.mean;
    j["sd"] = s.sd;
    j["se"] = s.se;
    j["q05"] = s.q05;
    j["q25"] = s.q25;
    j["median"] = s.median;
    j["q75"] = s.q75;
    j["q95"] = s.q95;
    return j;
}

inline ordered_json simulation_to_json(const SimulationConfig& config,
                                       const SimulationResult& result,
                                       bool include_records = true) {
    ordered_json j;
    j["scenario"] = to_string(config.scenario);
    j["family"] = to_string(config.family);
    j["epsilon"] = config.epsilon;
    j["n"] = config.n;
    j["p"] = config.p;
    j["sigma"] = config.sigma;
    j["replicates"] = config.replicates;
    j["seed"] = config.seed;
    if (config.fixed_alpha > 0.0) j["fixed_alpha"] = config.fixed_alpha;
    if (config.scenario == ScenarioKind::sobolev_regression) {
        j["function"] = config.function_name;
        j["m"] = config.m;
    }
    j["sigma2"] = summary_to_json(result.sigma2_summary);
    j["delta"] = summary_to_json(result.delta_summary);
    j["mean_exceedance"] = result.mean_exceedance;
    j["normalized_ratio"] = result.normalized_ratio;
    j["mean_sup_zeta"] = result.mean_sup_zeta;
    if (!result.ladder_n.empty()) {
        ordered_json ladder = ordered_json::array();
        for (std::size_t i = 0; i < result.ladder_n.size(); ++i) {
            ordered_json point;
            point["n"] = result.ladder_n[i];
            point["mean_delta"] = result.ladder_mean_delta[i];
            ladder.push_back(point);
        }
        j["ladder"] = ladder;
    }
    if (result.rate_fit.present) {
        ordered_json fit;
        fit["exponent"] = result.rate_fit.exponent;
        fit["intercept"] = result.rate_fit.intercept;
        j["rate_fit"] = fit;
    }
    if (include_records) {
        ordered_json records = ordered_json::array();
        for (const auto& rec : result.records) {
            ordered_json r;
            r["sigma2_hat"] = rec.sigma2_hat;
            r["alpha_hat"] = rec.alpha_hat;
            r["delta"] = rec.delta;
            r["sup_exceedance"] = rec.sup_exceedance;
            records.push_back(r);
        }
        j["records"] = records;
    }
    return j;
}

inline void write_json(const ordered_json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// One row per replicate; floats at 17 significant digits.
inline void write_records_csv(const SimulationResult& result,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "replicate,sigma2_hat,alpha_hat,delta,sup_exceedance\n";
    for (std::size_t r = 0; r < result.records.size(); ++r) {
        const auto& rec = result.records[r];
        out << r << ',' << format_double(rec.sigma2_hat) << ','
            << format_double(rec.alpha_hat) << ',' << format_double(rec.delta)
            << ',' << format_double(rec.sup_exceedance) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace noisefloor

#endif
