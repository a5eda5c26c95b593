#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gldfit/fitting.hpp"
#include "gldfit/gld.hpp"

namespace gldfit {

/// Mixture of a point mass lambda0 at zero and a continuous part on the
/// non-zero values.
struct HurdleGldParams {
    double lambda0 = 0.0;
    GldParams continuous;
};

struct HurdleSplit {
    std::size_t zero_count = 0;
    std::vector<double> nonzero_values; // original order preserved
};

/// Partition exact zeros from non-zeros (indicator v_i = 1{y_i = 0}).
inline HurdleSplit split(const std::vector<double>& data) {
    HurdleSplit out;
    for (double y : data) {
        if (y == 0.0)
            ++out.zero_count;
        else
            out.nonzero_values.push_back(y);
    }
    return out;
}

struct HurdleFitReport {
    double lambda0 = 0.0; // zero proportion, exact
    std::size_t zero_count = 0;
    std::size_t n = 0;
    std::optional<FitResult> continuous; // absent when the non-zero fit failed
    std::string continuous_error;        // reason, when absent
};

/// Two-part estimation: the zero mass is the exact zero proportion, the
/// continuous parameters come from the numerical MLE on the non-zero values
/// alone.  The factored log-likelihood makes the two estimations orthogonal,
/// so neither ever reads the other's data.
inline HurdleFitReport fit_hurdle(const std::vector<double>& data, Parametrization par,
                                  const OptimizerConfig& cfg = {}) {
    if (data.empty()) throw std::invalid_argument("fit_hurdle: empty data");
    const HurdleSplit parts = split(data);
    HurdleFitReport out;
    out.n = data.size();
    out.zero_count = parts.zero_count;
    out.lambda0 = static_cast<double>(parts.zero_count) / static_cast<double>(data.size());
    try {
        out.continuous = nmle_fit(parts.nonzero_values, par, cfg);
    } catch (const std::exception& e) {
        out.continuous_error = e.what();
    }
    return out;
}

/// Joint hurdle log-likelihood: Bernoulli part for the zero indicator plus
/// the continuous log-density over the non-zero values.
inline double hurdle_loglik(const HurdleGldParams& p, const std::vector<double>& data) {
    const HurdleSplit parts = split(data);
    const std::size_t nz = parts.nonzero_values.size();
    double total = 0.0;
    if (parts.zero_count > 0) {
        if (!(p.lambda0 > 0.0)) return -kInf;
        total += static_cast<double>(parts.zero_count) * std::log(p.lambda0);
    }
    if (nz > 0) {
        if (!(p.lambda0 < 1.0)) return -kInf;
        total += static_cast<double>(nz) * std::log(1.0 - p.lambda0);
        const double cont = gld_log_likelihood(p.continuous, parts.nonzero_values);
        if (cont == -kInf) return -kInf;
        total += cont;
    }
    return total;
}

/// Mixture CDF: F*(y) = lambda0 * 1{y >= 0} + (1 - lambda0) * F(y).
inline double hurdle_cdf(const HurdleGldParams& p, double y) {
    const double atom = (y >= 0.0) ? p.lambda0 : 0.0;
    return atom + (1.0 - p.lambda0) * cdf(p.continuous, y);
}

/// Draw the zero indicator first, then the continuous part by inverse
/// transform when the indicator is off.
inline std::vector<double> hurdle_sample(const HurdleGldParams& p, std::size_t n, Rng& rng) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.bernoulli(p.lambda0))
            out.push_back(0.0);
        else
            out.push_back(quantile(p.continuous, rng.uniform_open()));
    }
    return out;
}

} // namespace gldfit
