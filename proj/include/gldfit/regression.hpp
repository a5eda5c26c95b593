#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gldfit/fitting.hpp"
#include "gldfit/gld.hpp"
#include "gldfit/linalg.hpp"
#include "gldfit/math.hpp"
#include "gldfit/nelder_mead.hpp"
#include "gldfit/parallel.hpp"

namespace gldfit {

/// Builds a design matrix from covariate columns, with a leading column of
/// ones unless the intercept is disabled.
inline Matrix make_design(const std::vector<std::vector<double>>& columns, std::size_t n_rows,
                          bool intercept = true) {
    for (const auto& c : columns)
        if (c.size() != n_rows) throw std::invalid_argument("make_design: column length mismatch");
    const std::size_t p = columns.size() + (intercept ? 1 : 0);
    Matrix W(n_rows, p);
    for (std::size_t i = 0; i < n_rows; ++i) {
        std::size_t j = 0;
        if (intercept) W(i, j++) = 1.0;
        for (const auto& c : columns) W(i, j++) = c[i];
    }
    return W;
}

/// Ordinary least squares; the initializer of the regression algorithm.
inline LeastSquaresResult ols_fit(const Matrix& W, const std::vector<double>& x) {
    return qr_least_squares(W, x);
}

/// Location that gives the error distribution mean zero, so the regression
/// coefficients carry all of the location.
inline double lambda1_star(double l2, double l3, double l4, Parametrization par) {
    if (!(std::min(l3, l4) > -1.0))
        throw std::domain_error("lambda1_star: error mean does not exist");
    const double gap = 1.0 / (l3 + 1.0) - 1.0 / (l4 + 1.0);
    return (par == Parametrization::RS) ? -gap / l2 : gap / l2;
}

struct RegressionFit {
    std::vector<double> beta;
    double lambda1_star = 0.0;
    double lambda2 = 1.0;
    double lambda3 = 0.0;
    double lambda4 = 0.0;
    Parametrization parametrization = Parametrization::RS;
    double loglik = -kInf;
    bool converged = false;
    int iterations = 0;
    std::vector<double> beta_init;
    GldParams error_init; // error-distribution start from the plain fit
};

/// The fitted zero-mean error distribution.
inline GldParams error_params(const RegressionFit& fit) {
    return {fit.lambda1_star, fit.lambda2, fit.lambda3, fit.lambda4, fit.parametrization};
}

namespace detail {

/// Joint regression log-likelihood over (beta, lambda2, lambda3, lambda4).
/// The location lambda1* is refreshed from the shape triple at every
/// evaluation, residuals are recentered after every coefficient proposal,
/// and each observation's CDF root is warm-started from the previous
/// evaluation (the simplex moves are small).
class RegressionLoglik {
public:
    RegressionLoglik(const Matrix& W, std::vector<double> y, Parametrization par)
        : W_(W), y_(std::move(y)), par_(par), u_(y_.size(), 0.5), resid_(y_.size(), 0.0) {}

    // theta = [beta_0..beta_{p-1}, lambda2, lambda3, lambda4]
    double operator()(const std::vector<double>& theta) const {
        const std::size_t n = y_.size();
        const std::size_t p = W_.cols();
        const double l2 = theta[p], l3 = theta[p + 1], l4 = theta[p + 2];
        if (!(std::min(l3, l4) > -1.0)) return -kInf;
        const double gap = 1.0 / (l3 + 1.0) - 1.0 / (l4 + 1.0);
        const double l1s = (par_ == Parametrization::RS) ? -gap / l2 : gap / l2;
        const GldParams params{l1s, l2, l3, l4, par_};
        if (!cheap_validity(params)) return -kInf;

        double mean_e = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t j = 0; j < p; ++j) fit += W_(i, j) * theta[j];
            resid_[i] = y_[i] - fit;
            mean_e += resid_[i];
        }
        mean_e /= static_cast<double>(n);
        double lo = kInf, hi = -kInf;
        for (std::size_t i = 0; i < n; ++i) {
            resid_[i] -= mean_e;
            lo = std::min(lo, resid_[i]);
            hi = std::max(hi, resid_[i]);
        }
        const Support s = support(params);
        if (!(s.lower <= lo && hi <= s.upper)) return -kInf;

        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = invert_quantile(params, resid_[i], u_[i]);
            u_[i] = u;
            const double term = gld_log_density_at_u(params, u);
            if (term == -kInf) return -kInf;
            total += term;
        }
        return total;
    }

private:
    Matrix W_;
    std::vector<double> y_;
    Parametrization par_;
    mutable std::vector<double> u_;
    mutable std::vector<double> resid_;
};

inline double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 1.0;
    double m = 0.0;
    for (double t : v) m += t;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double t : v) s += (t - m) * (t - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace detail

/// Location-model quantile regression: OLS start, error shapes from the
/// plain fit on OLS residuals, then one joint simplex maximization over
/// coefficients and shapes, with the zero-mean location recomputed at every
/// step.
inline RegressionFit gld_regression_fit(const Matrix& W, const std::vector<double>& x,
                                        Parametrization par, const OptimizerConfig& cfg = {}) {
    const std::size_t p = W.cols();
    const LeastSquaresResult ols = ols_fit(W, x);
    if (ols.residuals.size() < 8)
        throw std::invalid_argument("gld_regression_fit: need at least 8 observations");

    const FitResult resid_fit = nmle_fit(ols.residuals, par, cfg);

    detail::RegressionLoglik loglik(W, x, par);

    // The per-evaluation recentering makes the likelihood exactly flat along
    // an intercept column (a constant shift of all residuals cancels), so
    // that coefficient is held at its least-squares value instead of letting
    // the simplex random-walk an unidentified direction.
    std::ptrdiff_t intercept_col = -1;
    for (std::size_t j = 0; j < p && intercept_col < 0; ++j) {
        bool ones = true;
        for (std::size_t i = 0; i < W.rows() && ones; ++i) ones = (W(i, j) == 1.0);
        if (ones) intercept_col = static_cast<std::ptrdiff_t>(j);
    }

    std::vector<std::size_t> free_beta;
    for (std::size_t j = 0; j < p; ++j)
        if (static_cast<std::ptrdiff_t>(j) != intercept_col) free_beta.push_back(j);
    const std::size_t q = free_beta.size();

    auto expand = [&](const std::vector<double>& reduced) {
        std::vector<double> theta(p + 3);
        if (intercept_col >= 0)
            theta[static_cast<std::size_t>(intercept_col)] =
                ols.coefficients[static_cast<std::size_t>(intercept_col)];
        for (std::size_t k = 0; k < q; ++k) theta[free_beta[k]] = reduced[k];
        theta[p] = reduced[q];
        theta[p + 1] = reduced[q + 1];
        theta[p + 2] = reduced[q + 2];
        return theta;
    };
    auto objective = [&](const std::vector<double>& reduced) { return -loglik(expand(reduced)); };

    std::vector<double> r0(q + 3);
    for (std::size_t k = 0; k < q; ++k) r0[k] = ols.coefficients[free_beta[k]];
    r0[q] = resid_fit.params.lambda2;
    r0[q + 1] = resid_fit.params.lambda3;
    r0[q + 2] = resid_fit.params.lambda4;

    // The zero-mean relocation can push extreme residuals just outside the
    // candidate support; widening the scale restores feasibility.
    int widen = 0;
    while (!std::isfinite(objective(r0)) && widen < 60) {
        r0[q] *= 0.9;
        ++widen;
    }
    if (!std::isfinite(objective(r0)))
        throw std::runtime_error("gld_regression_fit: initializer infeasible");

    // coefficient steps live on the residual scale: OLS already locates the
    // likelihood peak to within a few standard errors
    const double resid_scale = std::max(detail::sd_of(ols.residuals), 1e-9);
    auto step_for = [&](const std::vector<double>& t) {
        std::vector<double> s(t.size());
        for (std::size_t k = 0; k < q; ++k) s[k] = 0.1 * resid_scale;
        for (std::size_t k = q; k < t.size(); ++k) s[k] = std::max(0.02, 0.1 * std::fabs(t[k]));
        return s;
    };

    NelderMeadOptions opt;
    opt.tolerance = cfg.simplex_tolerance;
    opt.max_iterations = cfg.max_iterations;

    NelderMeadResult best = nelder_mead(objective, r0, step_for(r0), opt);
    int iterations = best.iterations;
    Rng perturb(substream_seed(cfg.seed, 0x9e97));
    for (int r = 1; r < cfg.restarts; ++r) {
        std::vector<double> tr = best.x.empty() ? r0 : best.x;
        for (std::size_t k = 0; k < q; ++k)
            tr[k] += 0.05 * resid_scale * (perturb.uniform() - 0.5);
        for (std::size_t k = q; k < tr.size(); ++k)
            tr[k] += 0.02 * std::max(0.05, std::fabs(tr[k])) * (perturb.uniform() - 0.5);
        const auto alt = nelder_mead(objective, tr, step_for(tr), opt);
        iterations += alt.iterations;
        if (alt.value < best.value) best = alt;
    }

    RegressionFit out;
    out.parametrization = par;
    out.beta_init = ols.coefficients;
    out.error_init = resid_fit.params;
    out.iterations = iterations;

    std::vector<double> reduced = best.x;
    bool ok = std::isfinite(best.value);
    if (ok && par == Parametrization::RS) {
        const double l1s = lambda1_star(reduced[q], reduced[q + 1], reduced[q + 2], par);
        ok = rs_is_valid(rs_params(l1s, reduced[q], reduced[q + 1], reduced[q + 2]));
    }
    if (!ok) {
        reduced = r0; // certified starting point
        best.converged = false;
    }
    std::vector<double> theta = expand(reduced);

    out.beta.assign(theta.begin(), theta.begin() + p);
    out.lambda2 = theta[p];
    out.lambda3 = theta[p + 1];
    out.lambda4 = theta[p + 2];
    out.lambda1_star = lambda1_star(out.lambda2, out.lambda3, out.lambda4, par);
    out.loglik = loglik(theta);
    out.converged = best.converged && ok;
    return out;
}

/// Hyndman-Fan type-8 sample quantile: h = (n + 1/3)p + 1/3 clamped to
/// [1, n], linear interpolation between neighbouring order statistics.
inline double quantile_type8(const std::vector<double>& sample, double prob) {
    if (sample.empty()) throw std::invalid_argument("quantile_type8: empty sample");
    std::vector<double> x = sample;
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double h = (n + 1.0 / 3.0) * prob + 1.0 / 3.0;
    h = std::clamp(h, 1.0, n);
    const double j = std::floor(h);
    const double g = h - j;
    const std::size_t ji = static_cast<std::size_t>(j);
    if (ji >= x.size()) return x.back();
    return x[ji - 1] + g * (x[ji] - x[ji - 1]);
}

struct CoefficientCI {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<double> adjusted_sample; // mean-shifted to the estimate
};

struct CoefficientCIs {
    std::vector<CoefficientCI> coefficients;
    double alpha = 0.05;
    std::size_t n_requested = 0;
    std::size_t n_failed = 0;
};

/// Simulation confidence intervals for the regression coefficients: refit
/// synthetic responses drawn from the fitted model, shift each coefficient
/// sample so its mean matches the point estimate, and take type-8 quantiles.
/// Replicates run on independent substreams and are merged by index, so the
/// result does not depend on the thread count.
inline CoefficientCIs simulate_coefficient_cis(const RegressionFit& fit, const Matrix& W,
                                               const OptimizerConfig& cfg = {},
                                               std::size_t n_reps = 1000, double alpha = 0.05,
                                               std::uint64_t seed = 0, unsigned threads = 1) {
    if (!fit.converged)
        throw std::invalid_argument("simulate_coefficient_cis: fit did not converge");
    if (n_reps == 0) throw std::invalid_argument("simulate_coefficient_cis: n_reps must be > 0");
    const std::size_t n = W.rows();
    const std::size_t p = W.cols();
    const GldParams errp = error_params(fit);

    std::vector<std::vector<double>> estimates(n_reps);
    std::vector<char> failed(n_reps, 0);
    parallel_for_index(n_reps, threads, [&](std::size_t r) {
        try {
            Rng rng(substream_seed(seed, r));
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                double fit_i = 0.0;
                for (std::size_t j = 0; j < p; ++j) fit_i += W(i, j) * fit.beta[j];
                y[i] = fit_i + quantile(errp, rng.uniform_open());
            }
            OptimizerConfig rc = cfg;
            rc.seed = substream_seed(seed ^ 0xC1F5ull, r);
            const RegressionFit refit = gld_regression_fit(W, y, fit.parametrization, rc);
            estimates[r] = refit.beta;
        } catch (const std::exception&) {
            failed[r] = 1;
        }
    });

    CoefficientCIs out;
    out.alpha = alpha;
    out.n_requested = n_reps;
    for (char f : failed) out.n_failed += f;
    if (5 * out.n_failed > n_reps)
        throw std::runtime_error("simulate_coefficient_cis: more than 20% of replicates failed");

    for (std::size_t j = 0; j < p; ++j) {
        CoefficientCI ci;
        ci.estimate = fit.beta[j];
        std::vector<double> sample;
        sample.reserve(n_reps);
        for (std::size_t r = 0; r < n_reps; ++r)
            if (!failed[r]) sample.push_back(estimates[r][j]);
        double m = 0.0;
        for (double t : sample) m += t;
        m /= static_cast<double>(sample.size());
        for (double& t : sample) t = t - m + fit.beta[j];
        ci.lower = quantile_type8(sample, alpha / 2.0);
        ci.upper = quantile_type8(sample, 1.0 - alpha / 2.0);
        ci.adjusted_sample = std::move(sample);
        out.coefficients.push_back(std::move(ci));
    }
    return out;
}

struct LogisticFit {
    std::vector<double> gamma;
    std::vector<double> std_errors;
    double deviance = kInf;
    bool converged = false;
    int iterations = 0;
};

/// Logistic regression by iteratively reweighted least squares; standard
/// errors from the inverse observed information.  Diverging coefficients are
/// reported as separation.
inline LogisticFit logistic_fit(const Matrix& Z, const std::vector<double>& v) {
    const std::size_t n = Z.rows();
    const std::size_t p = Z.cols();
    if (v.size() != n) throw std::invalid_argument("logistic_fit: size mismatch");
    bool has_zero = false, has_one = false;
    for (double t : v) {
        if (t == 0.0) has_zero = true;
        else if (t == 1.0) has_one = true;
        else throw std::invalid_argument("logistic_fit: responses must be 0 or 1");
    }
    if (!has_zero || !has_one)
        throw std::runtime_error("logistic_fit: both classes must be present");

    std::vector<double> gamma(p, 0.0);
    std::vector<double> eta(n), mu(n), w(n);
    double deviance = kInf;
    LogisticFit out;
    for (int iter = 1; iter <= 50; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (std::size_t j = 0; j < p; ++j) e += Z(i, j) * gamma[j];
            eta[i] = std::clamp(e, -30.0, 30.0);
            mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
            w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
        }
        Matrix Xw(n, p);
        std::vector<double> zw(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double sw = std::sqrt(w[i]);
            const double working = eta[i] + (v[i] - mu[i]) / w[i];
            for (std::size_t j = 0; j < p; ++j) Xw(i, j) = sw * Z(i, j);
            zw[i] = sw * working;
        }
        gamma = qr_least_squares(Xw, zw).coefficients;

        double inf_norm = 0.0;
        for (double g : gamma) inf_norm = std::max(inf_norm, std::fabs(g));
        if (inf_norm > 1e4)
            throw std::runtime_error("logistic_fit: separation detected (diverging coefficients)");

        double dev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (std::size_t j = 0; j < p; ++j) e += Z(i, j) * gamma[j];
            e = std::clamp(e, -30.0, 30.0);
            const double m = 1.0 / (1.0 + std::exp(-e));
            dev -= 2.0 * (v[i] * std::log(m) + (1.0 - v[i]) * std::log(1.0 - m));
        }
        // a deviance collapsing to zero means every class is predicted
        // perfectly, which only separation can achieve
        if (dev < 1e-6)
            throw std::runtime_error("logistic_fit: separation detected (zero deviance)");
        out.iterations = iter;
        if (std::fabs(deviance - dev) < 1e-8) {
            deviance = dev;
            out.converged = true;
            break;
        }
        deviance = dev;
    }

    out.gamma = gamma;
    out.deviance = deviance;
    Matrix info(p, p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double e = 0.0;
        for (std::size_t j = 0; j < p; ++j) e += Z(i, j) * gamma[j];
        e = std::clamp(e, -30.0, 30.0);
        const double m = 1.0 / (1.0 + std::exp(-e));
        const double wi = m * (1.0 - m);
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) info(a, b) += wi * Z(i, a) * Z(i, b);
    }
    Matrix inv;
    if (invert_spd(info, inv)) {
        out.std_errors.resize(p);
        for (std::size_t j = 0; j < p; ++j) out.std_errors[j] = std::sqrt(inv(j, j));
    }
    return out;
}

struct HurdleRegressionFit {
    std::optional<LogisticFit> zero_part; // absent when only one class exists
    std::string zero_error;
    RegressionFit nonzero_part;
    std::optional<CoefficientCIs> nonzero_cis;
};

/// Two-part regression on disjoint likelihood factors: a logistic model for
/// the zero indicator on Z and a location regression on W over the non-zero
/// rows, each fit in complete ignorance of the other's data.
inline HurdleRegressionFit hurdle_regression_fit(const Matrix& W, const Matrix& Z,
                                                 const std::vector<double>& y, Parametrization par,
                                                 const OptimizerConfig& cfg = {},
                                                 std::size_t ci_reps = 0, double ci_alpha = 0.05,
                                                 unsigned threads = 1) {
    const std::size_t n = y.size();
    if (W.rows() != n || Z.rows() != n)
        throw std::invalid_argument("hurdle_regression_fit: row mismatch");

    std::vector<double> v(n);
    std::size_t nz = 0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = (y[i] == 0.0) ? 1.0 : 0.0;
        nz += (y[i] != 0.0) ? 1 : 0;
    }

    HurdleRegressionFit out;
    try {
        out.zero_part = logistic_fit(Z, v);
    } catch (const std::exception& e) {
        out.zero_error = e.what();
    }

    Matrix Wnz(nz, W.cols());
    std::vector<double> ynz;
    ynz.reserve(nz);
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] == 0.0) continue;
        for (std::size_t j = 0; j < W.cols(); ++j) Wnz(r, j) = W(i, j);
        ynz.push_back(y[i]);
        ++r;
    }
    out.nonzero_part = gld_regression_fit(Wnz, ynz, par, cfg);
    if (ci_reps > 0 && out.nonzero_part.converged)
        out.nonzero_cis = simulate_coefficient_cis(out.nonzero_part, Wnz, cfg, ci_reps, ci_alpha,
                                                   cfg.seed ^ 0xC1, threads);
    return out;
}

struct ResidualReport {
    std::vector<double> error_residuals;    // y - W beta
    std::vector<double> quantile_residuals; // normal quantile of the fitted CDF
    std::vector<bool> out_of_support;       // residual beyond the fitted support
};

/// Error residuals and normalized quantile residuals of a fitted location
/// regression, evaluated on the non-zero subset.
inline ResidualReport regression_residuals(const RegressionFit& fit, const Matrix& W,
                                           const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (W.rows() != n) throw std::invalid_argument("regression_residuals: row mismatch");
    const GldParams errp = error_params(fit);
    ResidualReport out;
    out.error_residuals.resize(n);
    out.quantile_residuals.resize(n);
    out.out_of_support.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double fit_i = 0.0;
        for (std::size_t j = 0; j < W.cols(); ++j) fit_i += W(i, j) * fit.beta[j];
        const double e = y[i] - fit_i;
        out.error_residuals[i] = e;
        const double F = cdf(errp, e);
        out.quantile_residuals[i] = normal_quantile(F);
        out.out_of_support[i] = !std::isfinite(out.quantile_residuals[i]);
    }
    return out;
}

} // namespace gldfit
