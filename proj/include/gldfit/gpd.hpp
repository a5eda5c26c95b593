#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gldfit/fitting.hpp"
#include "gldfit/linalg.hpp"
#include "gldfit/math.hpp"
#include "gldfit/nelder_mead.hpp"
#include "gldfit/regression.hpp"
#include "gldfit/rng.hpp"

namespace gldfit {

/// Generalized Pareto with known threshold alpha, scale tau and shape xi.
/// Support is [alpha, inf) for xi >= 0 and [alpha, alpha - tau/xi] otherwise.
struct GpdParams {
    double alpha = 0.0;
    double tau = 1.0;
    double xi = 0.0;
};

namespace detail {
inline constexpr double kGpdZeroShape = 1e-10; // |xi| below this uses the exponential branch
}

/// Mean-scale construction: tau chosen so the mean equals mu (needs xi < 1).
inline GpdParams gpd_params_from_mean(double alpha, double mu, double xi) {
    if (!(xi < 1.0)) throw std::domain_error("gpd_params_from_mean: mean requires xi < 1");
    if (!(mu > alpha)) throw std::domain_error("gpd_params_from_mean: mean must exceed alpha");
    return {alpha, (mu - alpha) * (1.0 - xi), xi};
}

inline double gpd_log_density(const GpdParams& p, double y) {
    if (!(p.tau > 0.0)) throw std::domain_error("gpd: tau must be positive");
    const double z = (y - p.alpha) / p.tau;
    if (z < 0.0) return -kInf;
    if (std::fabs(p.xi) < detail::kGpdZeroShape) return -std::log(p.tau) - z;
    const double t = 1.0 + p.xi * z;
    if (!(t > 0.0)) return -kInf;
    return -std::log(p.tau) - (1.0 + 1.0 / p.xi) * std::log1p(p.xi * z);
}

inline double gpd_pdf(const GpdParams& p, double y) {
    const double ld = gpd_log_density(p, y);
    return (ld == -kInf) ? 0.0 : std::exp(ld);
}

inline double gpd_cdf(const GpdParams& p, double y) {
    if (!(p.tau > 0.0)) throw std::domain_error("gpd: tau must be positive");
    const double z = (y - p.alpha) / p.tau;
    if (z <= 0.0) return 0.0;
    if (std::fabs(p.xi) < detail::kGpdZeroShape) return -std::expm1(-z);
    const double t = 1.0 + p.xi * z;
    if (t <= 0.0) return 1.0; // beyond the finite upper endpoint (xi < 0)
    return -std::expm1(-std::log1p(p.xi * z) / p.xi);
}

inline double gpd_quantile(const GpdParams& p, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("gpd_quantile: u outside [0,1]");
    if (!(p.tau > 0.0)) throw std::domain_error("gpd: tau must be positive");
    if (std::fabs(p.xi) < detail::kGpdZeroShape) return p.alpha - p.tau * std::log1p(-u);
    return p.alpha + p.tau * std::expm1(-p.xi * std::log1p(-u)) / p.xi;
}

template <typename UniformStream>
inline std::vector<double> gpd_sample_with(const GpdParams& p, std::size_t n,
                                           UniformStream&& next) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(gpd_quantile(p, next()));
    return out;
}

inline std::vector<double> gpd_sample(const GpdParams& p, std::size_t n, Rng& rng) {
    return gpd_sample_with(p, n, [&rng]() { return rng.uniform_open(); });
}

/// Finite only for xi < 1.
inline double gpd_mean(const GpdParams& p) {
    if (!(p.xi < 1.0)) throw std::domain_error("gpd_mean: infinite for xi >= 1");
    return p.alpha + p.tau / (1.0 - p.xi);
}

struct GpdFitResult {
    GpdParams params;
    double loglik = -kInf;
    bool converged = false;
    int iterations = 0;
};

/// Maximum likelihood over (xi, tau) with the threshold known, run on the
/// shared simplex engine; the support constraint for xi < 0 acts through a
/// rejecting objective.  The shape is kept above -1, below which the
/// likelihood is unbounded and no maximizer exists.
inline GpdFitResult gpd_mle_fit(const std::vector<double>& data, double alpha,
                                const OptimizerConfig& cfg = {}) {
    if (data.size() < 5) throw std::invalid_argument("gpd_mle_fit: need at least 5 observations");
    double m = 0.0;
    for (double y : data) {
        if (y < alpha) throw std::invalid_argument("gpd_mle_fit: observation below threshold");
        m += y - alpha;
    }
    const std::size_t n = data.size();
    m /= static_cast<double>(n);
    double s2 = 0.0;
    for (double y : data) s2 += (y - alpha - m) * (y - alpha - m);
    s2 /= static_cast<double>(n);
    if (!(s2 > 0.0) || !(m > 0.0))
        throw std::runtime_error("gpd_mle_fit: degenerate data at the threshold");

    // moment start: m^2/s^2 = 1 - 2 xi under the model
    double xi0 = std::clamp(0.5 * (1.0 - m * m / s2), -0.95, 0.9);
    double tau0 = std::max(m * (1.0 - xi0), 1e-12);
    if (xi0 < 0.0) {
        // a negative-shape start must put the finite upper endpoint beyond
        // the sample maximum or the whole initial simplex is rejected
        double zmax = 0.0;
        for (double y : data) zmax = std::max(zmax, y - alpha);
        tau0 = std::max(tau0, 1.1 * (-xi0) * zmax);
    }

    auto objective = [&](const std::vector<double>& t) {
        const GpdParams p{alpha, t[1], t[0]};
        if (!(t[1] > 0.0) || t[0] < -1.0 + 1e-8) return kInf;
        double total = 0.0;
        for (double y : data) {
            const double ld = gpd_log_density(p, y);
            if (ld == -kInf) return kInf;
            total += ld;
        }
        return -total;
    };

    NelderMeadOptions opt;
    opt.tolerance = cfg.simplex_tolerance;
    opt.max_iterations = cfg.max_iterations;
    NelderMeadResult best = nelder_mead(objective, {xi0, tau0},
                                        {std::max(0.05, 0.1 * std::fabs(xi0)), 0.1 * tau0}, opt);
    int iterations = best.iterations;
    Rng perturb(substream_seed(cfg.seed, 0x6bd));
    for (int r = 1; r < cfg.restarts; ++r) {
        std::vector<double> xr = best.x;
        xr[0] += 0.05 * (perturb.uniform() - 0.5);
        xr[1] *= 1.0 + 0.05 * (perturb.uniform() - 0.5);
        const auto alt = nelder_mead(objective, xr, {0.02, 0.05 * xr[1]}, opt);
        iterations += alt.iterations;
        if (alt.value < best.value) best = alt;
    }

    GpdFitResult out;
    out.params = {alpha, best.x[1], best.x[0]};
    out.loglik = -best.value;
    out.converged = best.converged && std::isfinite(best.value);
    out.iterations = iterations;
    return out;
}

struct GpdGlmFit {
    double alpha = 0.0;
    double xi = 0.0;
    std::vector<double> beta;       // log-link coefficients of the mean
    std::vector<double> std_errors; // for (xi, beta...); empty when unavailable
    std::vector<double> p_values;   // asymptotic normal, same layout
    bool se_ok = false;
    double loglik = -kInf;
    bool converged = false;
    int iterations = 0;
};

inline double gpd_glm_loglik(const Matrix& X, const std::vector<double>& y, double alpha,
                             double xi, const std::vector<double>& beta) {
    if (!(xi < 1.0 - 1e-6) || xi < -1.0 + 1e-8) return -kInf;
    const std::size_t n = y.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < X.cols(); ++j) eta += X(i, j) * beta[j];
        const double mu = std::exp(eta);
        if (!(mu > alpha)) return -kInf;
        const GpdParams p{alpha, (mu - alpha) * (1.0 - xi), xi};
        const double ld = gpd_log_density(p, y[i]);
        if (ld == -kInf) return -kInf;
        total += ld;
    }
    return total;
}

/// GLM on the mean with a log link: mu_i = exp(x_i' beta), shape common to
/// all observations and restricted below one so the mean identity holds.
/// Standard errors come from the numerically differentiated observed
/// information; a non positive definite Hessian leaves them flagged absent.
inline GpdGlmFit gpd_glm_fit(const Matrix& X, const std::vector<double>& y, double alpha,
                             const OptimizerConfig& cfg = {}) {
    const std::size_t n = y.size();
    const std::size_t p = X.cols();
    if (X.rows() != n) throw std::invalid_argument("gpd_glm_fit: row mismatch");
    for (double t : y)
        if (t < alpha) throw std::invalid_argument("gpd_glm_fit: observation below threshold");

    // intercept-only start from the plain MLE through the mean identity
    const GpdFitResult base = gpd_mle_fit(y, alpha, cfg);
    std::vector<double> theta(1 + p, 0.0);
    theta[0] = std::min(base.params.xi, 0.9);
    theta[1] = std::log(std::max(gpd_mean(GpdParams{alpha, base.params.tau,
                                                    std::min(base.params.xi, 0.9)}),
                                 alpha + 1e-9));

    auto objective = [&](const std::vector<double>& t) {
        const std::vector<double> beta(t.begin() + 1, t.end());
        return -gpd_glm_loglik(X, y, alpha, t[0], beta);
    };
    if (!std::isfinite(objective(theta)))
        throw std::runtime_error("gpd_glm_fit: infeasible starting point");

    std::vector<double> step(1 + p, 0.05);
    step[0] = 0.05;
    NelderMeadOptions opt;
    opt.tolerance = cfg.simplex_tolerance;
    opt.max_iterations = cfg.max_iterations;
    NelderMeadResult best = nelder_mead(objective, theta, step, opt);
    int iterations = best.iterations;
    Rng perturb(substream_seed(cfg.seed, 0x91d));
    for (int r = 1; r < cfg.restarts; ++r) {
        std::vector<double> tr = best.x;
        for (double& c : tr) c += 0.02 * (perturb.uniform() - 0.5);
        const auto alt = nelder_mead(objective, tr, step, opt);
        iterations += alt.iterations;
        if (alt.value < best.value) best = alt;
    }

    GpdGlmFit out;
    out.alpha = alpha;
    out.xi = best.x[0];
    out.beta.assign(best.x.begin() + 1, best.x.end());
    out.loglik = -best.value;
    out.converged = best.converged && std::isfinite(best.value);
    out.iterations = iterations;

    // observed information by central differences, step 1e-5 * scale
    const std::size_t dim = 1 + p;
    Matrix hess(dim, dim, 0.0);
    std::vector<double> h(dim);
    for (std::size_t j = 0; j < dim; ++j) h[j] = 1e-5 * std::max(1.0, std::fabs(best.x[j]));
    auto f = [&](const std::vector<double>& t) { return -objective(t); };
    const double f0 = f(best.x);
    bool hess_ok = std::isfinite(f0);
    for (std::size_t a = 0; a < dim && hess_ok; ++a) {
        for (std::size_t b = a; b < dim && hess_ok; ++b) {
            std::vector<double> t = best.x;
            double val;
            if (a == b) {
                t[a] = best.x[a] + h[a];
                const double fp = f(t);
                t[a] = best.x[a] - h[a];
                const double fm = f(t);
                val = (fp - 2.0 * f0 + fm) / (h[a] * h[a]);
            } else {
                t[a] = best.x[a] + h[a];
                t[b] = best.x[b] + h[b];
                const double fpp = f(t);
                t[b] = best.x[b] - h[b];
                const double fpm = f(t);
                t[a] = best.x[a] - h[a];
                const double fmm = f(t);
                t[b] = best.x[b] + h[b];
                const double fmp = f(t);
                val = (fpp - fpm - fmp + fmm) / (4.0 * h[a] * h[b]);
            }
            if (!std::isfinite(val)) hess_ok = false;
            hess(a, b) = -val; // observed information
            hess(b, a) = -val;
        }
    }
    Matrix inv;
    if (hess_ok && invert_spd(hess, inv)) {
        out.se_ok = true;
        out.std_errors.resize(dim);
        out.p_values.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            out.std_errors[j] = std::sqrt(inv(j, j));
            const double z = best.x[j] / out.std_errors[j];
            out.p_values[j] = 2.0 * normal_cdf(-std::fabs(z));
        }
    }
    return out;
}

struct HurdleGpdFit {
    double lambda0 = 0.0;
    std::size_t zero_count = 0;
    std::size_t n = 0;
    std::optional<GpdFitResult> continuous;
    std::string continuous_error;
};

/// Hurdle variant without covariates: the zero mass is the exact zero
/// proportion, the continuous part is the plain MLE on the non-zero values.
inline HurdleGpdFit hurdle_gpd_fit(const std::vector<double>& data, double alpha,
                                   const OptimizerConfig& cfg = {}) {
    if (data.empty()) throw std::invalid_argument("hurdle_gpd_fit: empty data");
    HurdleGpdFit out;
    out.n = data.size();
    std::vector<double> nonzero;
    for (double y : data) {
        if (y == 0.0)
            ++out.zero_count;
        else
            nonzero.push_back(y);
    }
    out.lambda0 = static_cast<double>(out.zero_count) / static_cast<double>(out.n);
    try {
        out.continuous = gpd_mle_fit(nonzero, alpha, cfg);
    } catch (const std::exception& e) {
        out.continuous_error = e.what();
    }
    return out;
}

struct HurdleGpdGlmFit {
    std::optional<LogisticFit> zero_part;
    std::string zero_error;
    GpdGlmFit nonzero_part;
};

/// Hurdle GLM: logistic zero part on Z, mean-link GPD on the non-zero rows
/// of X; orthogonal likelihood factors as in the hurdle location model.
inline HurdleGpdGlmFit hurdle_gpd_glm_fit(const Matrix& X, const Matrix& Z,
                                          const std::vector<double>& y, double alpha,
                                          const OptimizerConfig& cfg = {}) {
    const std::size_t n = y.size();
    if (X.rows() != n || Z.rows() != n)
        throw std::invalid_argument("hurdle_gpd_glm_fit: row mismatch");
    std::vector<double> v(n);
    std::size_t nz = 0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = (y[i] == 0.0) ? 1.0 : 0.0;
        nz += (y[i] != 0.0) ? 1 : 0;
    }
    HurdleGpdGlmFit out;
    try {
        out.zero_part = logistic_fit(Z, v);
    } catch (const std::exception& e) {
        out.zero_error = e.what();
    }
    Matrix Xnz(nz, X.cols());
    std::vector<double> ynz;
    ynz.reserve(nz);
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] == 0.0) continue;
        for (std::size_t j = 0; j < X.cols(); ++j) Xnz(r, j) = X(i, j);
        ynz.push_back(y[i]);
        ++r;
    }
    out.nonzero_part = gpd_glm_fit(Xnz, ynz, alpha, cfg);
    return out;
}

/// Reference law of the scaled error residual (y - alpha) / mu under a
/// correct model: a GPD with threshold zero and unit mean.
inline GpdParams gpd_error_residual_reference(double xi) {
    return gpd_params_from_mean(0.0, 1.0, xi);
}

struct GpdResidualReport {
    std::vector<double> error_residuals;    // (y - alpha) / mu_hat
    std::vector<double> quantile_residuals; // normal quantile of the fitted CDF
    std::vector<bool> boundary;             // residual at a support boundary
};

inline GpdResidualReport gpd_residuals(const GpdGlmFit& fit, const Matrix& X,
                                       const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (X.rows() != n) throw std::invalid_argument("gpd_residuals: row mismatch");
    GpdResidualReport out;
    out.error_residuals.resize(n);
    out.quantile_residuals.resize(n);
    out.boundary.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] < fit.alpha) throw std::invalid_argument("gpd_residuals: y below threshold");
        double eta = 0.0;
        for (std::size_t j = 0; j < X.cols(); ++j) eta += X(i, j) * fit.beta[j];
        const double mu = std::exp(eta);
        out.error_residuals[i] = (y[i] - fit.alpha) / mu;
        const GpdParams p{fit.alpha, (mu - fit.alpha) * (1.0 - fit.xi), fit.xi};
        const double F = gpd_cdf(p, y[i]);
        out.quantile_residuals[i] = normal_quantile(F);
        out.boundary[i] = !std::isfinite(out.quantile_residuals[i]);
    }
    return out;
}

} // namespace gldfit
