#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gldfit/gld.hpp"
#include "gldfit/parallel.hpp"
#include "gldfit/regression.hpp"
#include "gldfit/rng.hpp"

namespace gldfit {

/// The four error laws of the simulation study: symmetric and right-skewed
/// shapes in each parametrization.  The location is always the zero-mean
/// lambda1*, so the regression intercept carries the whole location.
enum class Scenario { HrsSymmetric, HfkmlSymmetric, HrsSkewed, HfkmlSkewed };

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::HrsSymmetric: return "hrs-symmetric";
        case Scenario::HfkmlSymmetric: return "hfkml-symmetric";
        case Scenario::HrsSkewed: return "hrs-skewed";
        case Scenario::HfkmlSkewed: return "hfkml-skewed";
    }
    return "?";
}

inline Scenario parse_scenario(const std::string& name) {
    if (name == "hrs-symmetric") return Scenario::HrsSymmetric;
    if (name == "hfkml-symmetric") return Scenario::HfkmlSymmetric;
    if (name == "hrs-skewed") return Scenario::HrsSkewed;
    if (name == "hfkml-skewed") return Scenario::HfkmlSkewed;
    throw std::invalid_argument("unknown scenario: " + name);
}

inline Parametrization scenario_parametrization(Scenario s) {
    return (s == Scenario::HrsSymmetric || s == Scenario::HrsSkewed) ? Parametrization::RS
                                                                     : Parametrization::FKML;
}

/// Zero-mean error distribution of a scenario.
inline GldParams scenario_error_params(Scenario s) {
    const Parametrization par = scenario_parametrization(s);
    double l2 = 2.0, l3 = 0.13, l4 = 0.13;
    if (s == Scenario::HrsSkewed) {
        l2 = 0.11;
        l3 = 0.0023;
        l4 = 0.19;
    } else if (s == Scenario::HfkmlSkewed) {
        l2 = 1.07;
        l3 = 0.84;
        l4 = 0.02;
    }
    return {lambda1_star(l2, l3, l4, par), l2, l3, l4, par};
}

// generating model coefficients
inline constexpr std::array<double, 3> kNonzeroTargets = {6.13, -0.021, -0.35};
inline constexpr std::array<double, 3> kZeroTargets = {1.6, -0.13, 0.21};

struct SimulatedSample {
    std::vector<double> x1;
    std::vector<double> x2;
    std::vector<double> y;
};

/// One draw of the generating model: covariate x1 from a fixed skewed
/// distribution, binary x2, a logistic zero indicator and a location model
/// with the scenario's error law on the non-zero part.
inline SimulatedSample simulate_model_sample(Scenario s, std::size_t n, Rng& rng) {
    const GldParams x1_law = rs_params(3.87, 0.10, 0.024, 0.19);
    const GldParams err = scenario_error_params(s);
    SimulatedSample out;
    out.x1.resize(n);
    out.x2.resize(n);
    out.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = quantile(x1_law, rng.uniform_open());
        const double x2 = rng.bernoulli(0.6) ? 1.0 : 0.0;
        const double logit = kZeroTargets[0] + kZeroTargets[1] * x1 + kZeroTargets[2] * x2;
        const bool zero = rng.bernoulli(1.0 / (1.0 + std::exp(-logit)));
        const double eps = quantile(err, rng.uniform_open());
        out.x1[i] = x1;
        out.x2[i] = x2;
        out.y[i] = zero ? 0.0
                        : kNonzeroTargets[0] + kNonzeroTargets[1] * x1 + kNonzeroTargets[2] * x2 +
                              eps;
    }
    return out;
}

struct ReplicateEstimate {
    std::array<double, 3> gamma{}; // zero part
    std::array<double, 3> beta{};  // non-zero part
    bool zero_ok = false;
    bool nonzero_ok = false;
    bool nonzero_converged = false;
};

struct CoefficientSummary {
    std::string part; // "zero" or "nonzero"
    std::string name; // "intercept", "x1", "x2"
    double target = 0.0;
    std::size_t used = 0;
    double mean = kNaN;
    double se = kNaN; // standard deviation of the estimates
    double p025 = kNaN;
    double p975 = kNaN;
};

struct StudyResult {
    Scenario scenario;
    std::size_t n = 0;
    std::size_t replicates = 0;
    std::size_t nonzero_failures = 0;
    std::size_t zero_failures = 0;
    std::vector<ReplicateEstimate> estimates;
    std::vector<CoefficientSummary> summary;
};

/// Generates `replicates` samples of the model at size n, fits the hurdle
/// regression to each, and summarizes the coefficient estimates.  Replicates
/// run on substreams indexed by replicate number, so results are identical
/// for any thread count.
inline StudyResult run_simulation_study(Scenario s, std::size_t n, std::size_t replicates,
                                        std::uint64_t seed, unsigned threads = 1,
                                        OptimizerConfig base_cfg = {}) {
    StudyResult out;
    out.scenario = s;
    out.n = n;
    out.replicates = replicates;
    out.estimates.assign(replicates, {});
    const Parametrization par = scenario_parametrization(s);

    parallel_for_index(replicates, threads, [&](std::size_t r) {
        Rng rng(substream_seed(seed, r));
        const SimulatedSample sample = simulate_model_sample(s, n, rng);
        const Matrix W = make_design({sample.x1, sample.x2}, n);
        OptimizerConfig cfg = base_cfg;
        cfg.seed = substream_seed(seed ^ 0x51abull, r);
        ReplicateEstimate& est = out.estimates[r];
        try {
            const HurdleRegressionFit fit = hurdle_regression_fit(W, W, sample.y, par, cfg);
            if (fit.zero_part.has_value()) {
                for (int j = 0; j < 3; ++j) est.gamma[j] = fit.zero_part->gamma[j];
                est.zero_ok = true;
            }
            for (int j = 0; j < 3; ++j) est.beta[j] = fit.nonzero_part.beta[j];
            est.nonzero_ok = true;
            est.nonzero_converged = fit.nonzero_part.converged;
        } catch (const std::exception&) {
            // counted below; the replicate simply drops out
        }
    });

    const std::array<std::string, 3> names = {"intercept", "x1", "x2"};
    auto summarize = [&](const std::string& part, int j) {
        CoefficientSummary cs;
        cs.part = part;
        cs.name = names[static_cast<std::size_t>(j)];
        cs.target = (part == "zero") ? kZeroTargets[static_cast<std::size_t>(j)]
                                     : kNonzeroTargets[static_cast<std::size_t>(j)];
        std::vector<double> values;
        for (const auto& est : out.estimates) {
            if (part == "zero" && est.zero_ok) values.push_back(est.gamma[static_cast<std::size_t>(j)]);
            if (part == "nonzero" && est.nonzero_ok)
                values.push_back(est.beta[static_cast<std::size_t>(j)]);
        }
        cs.used = values.size();
        if (!values.empty()) {
            double m = 0.0;
            for (double v : values) m += v;
            m /= static_cast<double>(values.size());
            cs.mean = m;
            if (values.size() > 1) {
                double s2 = 0.0;
                for (double v : values) s2 += (v - m) * (v - m);
                cs.se = std::sqrt(s2 / static_cast<double>(values.size() - 1));
            }
            cs.p025 = quantile_type8(values, 0.025);
            cs.p975 = quantile_type8(values, 0.975);
        }
        return cs;
    };
    for (int j = 0; j < 3; ++j) out.summary.push_back(summarize("nonzero", j));
    for (int j = 0; j < 3; ++j) out.summary.push_back(summarize("zero", j));
    for (const auto& est : out.estimates) {
        out.nonzero_failures += est.nonzero_ok ? 0 : 1;
        out.zero_failures += est.zero_ok ? 0 : 1;
    }
    return out;
}

} // namespace gldfit
