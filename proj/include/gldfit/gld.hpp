#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gldfit/math.hpp"
#include "gldfit/rng.hpp"

namespace gldfit {

enum class Parametrization { RS, FKML };

inline const char* to_string(Parametrization p) {
    return p == Parametrization::RS ? "rs" : "fkml";
}

/// Four-parameter quantile-defined distribution.  lambda1 locates, lambda2
/// scales inversely, lambda3/lambda4 shape the left/right tails.  The two
/// parametrizations are distinct families: RS needs its validity inequality
/// certified (see rs_is_valid), FKML only needs lambda2 > 0 and supports the
/// shape -> 0 logarithmic limits.
struct GldParams {
    double lambda1 = 0.0;
    double lambda2 = 1.0;
    double lambda3 = 0.0;
    double lambda4 = 0.0;
    Parametrization parametrization = Parametrization::FKML;
};

inline GldParams rs_params(double l1, double l2, double l3, double l4) {
    return {l1, l2, l3, l4, Parametrization::RS};
}

inline GldParams fkml_params(double l1, double l2, double l3, double l4) {
    return {l1, l2, l3, l4, Parametrization::FKML};
}

struct Support {
    double lower = -kInf;
    double upper = kInf;
};

namespace detail {

// FKML shape threshold below which (u^l - 1)/l switches to its log(u) limit.
inline constexpr double kFkmlZeroShape = 1e-8;

/// (u^l - 1)/l with the l -> 0 limit; expm1 keeps the small-l regime exact.
inline double fkml_power_term(double u, double l) {
    if (std::fabs(l) < kFkmlZeroShape) return std::log(u);
    if (u == 0.0) return (l > 0.0) ? -1.0 / l : -kInf;
    return std::expm1(l * std::log(u)) / l;
}

/// Numerator of the RS quantile slope: l3*u^(l3-1) + l4*(1-u)^(l4-1).
/// The zero-shape terms vanish identically for u in (0,1).
inline double rs_slope_numerator(double u, double omu, double l3, double l4) {
    const double a = (l3 == 0.0) ? 0.0 : l3 * std::pow(u, l3 - 1.0);
    const double b = (l4 == 0.0) ? 0.0 : l4 * std::pow(omu, l4 - 1.0);
    return a + b;
}

/// O(1) necessary conditions for RS validity from the slope's endpoint
/// behaviour: whichever shape is below 1 (and nonzero) dominates the slope
/// numerator at its endpoint, so its sign must agree with lambda2's.
inline bool rs_sign_analysis_ok(double l2, double l3, double l4) {
    if (l2 == 0.0 || !std::isfinite(l2) || !std::isfinite(l3) || !std::isfinite(l4)) return false;
    if (l3 == 0.0 && l4 == 0.0) return false; // constant quantile, degenerate
    if (l3 != 0.0 && l3 < 1.0 && l3 * l2 < 0.0) return false;
    if (l4 != 0.0 && l4 < 1.0 && l4 * l2 < 0.0) return false;
    return true;
}

inline void check_rs_quick(const GldParams& p) {
    if (!rs_sign_analysis_ok(p.lambda2, p.lambda3, p.lambda4))
        throw std::domain_error("invalid RS parameter vector");
}

} // namespace detail

/// Quantile function evaluated from u and 1-u (callers that know 1-u to full
/// precision, e.g. quadrature rules, avoid cancellation near u = 1).
inline double quantile_uo(const GldParams& p, double u, double omu) {
    if (p.parametrization == Parametrization::RS) {
        detail::check_rs_quick(p);
        return p.lambda1 + (std::pow(u, p.lambda3) - std::pow(omu, p.lambda4)) / p.lambda2;
    }
    if (!(p.lambda2 > 0.0)) throw std::domain_error("FKML requires lambda2 > 0");
    return p.lambda1 +
           (detail::fkml_power_term(u, p.lambda3) - detail::fkml_power_term(omu, p.lambda4)) /
               p.lambda2;
}

inline double quantile(const GldParams& p, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("quantile: u outside [0,1]");
    return quantile_uo(p, u, 1.0 - u);
}

/// dQ/du; for FKML the power-term derivative u^(l-1) is exact for every
/// shape including zero.
inline double quantile_derivative(const GldParams& p, double u) {
    const double omu = 1.0 - u;
    if (p.parametrization == Parametrization::RS)
        return detail::rs_slope_numerator(u, omu, p.lambda3, p.lambda4) / p.lambda2;
    return (std::pow(u, p.lambda3 - 1.0) + std::pow(omu, p.lambda4 - 1.0)) / p.lambda2;
}

inline Support support(const GldParams& p) {
    return {quantile_uo(p, 0.0, 1.0), quantile_uo(p, 1.0, 0.0)};
}

namespace detail {

inline constexpr std::size_t kValidityGridSize = 4097; // dense certification grid
inline constexpr std::size_t kValidityCoarseStride = 128;
inline constexpr double kValidityEndpointInset = 1e-9;

inline double validity_grid_point(std::size_t i) {
    return kValidityEndpointInset +
           static_cast<double>(i) * (1.0 - 2.0 * kValidityEndpointInset) /
               static_cast<double>(kValidityGridSize - 1);
}

inline bool rs_grid_ok(const GldParams& p, std::size_t stride) {
    for (std::size_t i = 0; i < kValidityGridSize; i += stride) {
        const double u = validity_grid_point(i);
        const double slope = rs_slope_numerator(u, 1.0 - u, p.lambda3, p.lambda4) / p.lambda2;
        if (!(slope >= 0.0)) return false; // borderline negatives are rejected too
    }
    return true;
}

} // namespace detail

/// Certifies that an RS parameter vector defines a distribution: the quantile
/// slope must be nonnegative on all of [0,1].  Decided by endpoint sign
/// analysis plus a dense grid; vectors that dip below zero anywhere on the
/// grid (however slightly) are declared invalid.
inline bool rs_is_valid(const GldParams& p) {
    if (p.parametrization != Parametrization::RS)
        throw std::invalid_argument("rs_is_valid: RS parameters expected");
    if (!detail::rs_sign_analysis_ok(p.lambda2, p.lambda3, p.lambda4)) return false;
    return detail::rs_grid_ok(p, 1);
}

/// Cheap conservative screen used inside optimizer loops: anything that fails
/// here also fails rs_is_valid (the coarse grid is a subset of the full one).
inline bool rs_is_valid_coarse(const GldParams& p) {
    if (!detail::rs_sign_analysis_ok(p.lambda2, p.lambda3, p.lambda4)) return false;
    return detail::rs_grid_ok(p, detail::kValidityCoarseStride);
}

inline bool is_valid(const GldParams& p) {
    if (p.parametrization == Parametrization::RS) return rs_is_valid(p);
    return p.lambda2 > 0.0 && std::isfinite(p.lambda1) && std::isfinite(p.lambda2) &&
           std::isfinite(p.lambda3) && std::isfinite(p.lambda4);
}

namespace detail {

/// Solves Q(u) = x for u in [0,1] by bracketed Newton iteration with
/// bisection fallback; never throws.  `u0` is a warm start.  Sets
/// *non_monotone when a negative slope is observed along the way.
inline double invert_quantile(const GldParams& p, double x, double u0 = 0.5,
                              bool* non_monotone = nullptr) {
    double lo = 0.0, hi = 1.0;
    double u = (u0 > 0.0 && u0 < 1.0) ? u0 : 0.5;
    for (int it = 0; it < 200; ++it) {
        const double q = quantile_uo(p, u, 1.0 - u);
        if (q == x) return u;
        if (q > x)
            hi = u;
        else
            lo = u;
        if (hi - lo < 1e-13) break;
        const double d = quantile_derivative(p, u);
        if (non_monotone && d < 0.0) *non_monotone = true;
        double next = 0.5 * (lo + hi);
        if (std::isfinite(q) && std::isfinite(d) && d > 0.0) {
            const double newton = u - (q - x) / d;
            if (newton > lo && newton < hi) next = newton;
        }
        // Newton may approach one-sidedly, leaving the far bracket wall in
        // place; a stalled step means the root is resolved to precision
        if (std::fabs(next - u) <= 1e-15 * std::max(1.0, std::fabs(u))) return next;
        u = next;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// CDF by numerical inversion of the quantile function (absolute tolerance
/// 1e-12 in u).  Returns 0 or 1 outside the support.  Throws if a negative
/// quantile slope is detected, which can only happen for invalid RS vectors.
inline double cdf(const GldParams& p, double x) {
    const Support s = support(p);
    if (x <= s.lower) return 0.0;
    if (x >= s.upper) return 1.0;
    bool bad = false;
    const double u = detail::invert_quantile(p, x, 0.5, &bad);
    if (bad) throw std::domain_error("non-monotone quantile: invalid RS parameters");
    return u;
}

/// Density f(x) = 1 / Q'(F(x)); zero outside the support.
inline double pdf(const GldParams& p, double x) {
    const Support s = support(p);
    if (x < s.lower || x > s.upper) return 0.0;
    const double u = cdf(p, x);
    const double d = quantile_derivative(p, u);
    if (!(d > 0.0)) return kInf; // slope vanishing at a support endpoint
    return 1.0 / d;
}

/// The k-th moment exists iff min(lambda3, lambda4) > -1/k; shared by both
/// parametrizations.
inline bool moment_exists(const GldParams& p, int k) {
    if (k < 1) throw std::invalid_argument("moment_exists: k must be >= 1");
    return std::min(p.lambda3, p.lambda4) > -1.0 / static_cast<double>(k);
}

namespace detail {

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

/// E[Z^j] for Z ~ RS(0, l2, l3, l4); beta function through log-gamma so small
/// shapes do not overflow.
inline double rs_central_power_moment(int j, double l2, double l3, double l4) {
    double sum = 0.0;
    for (int i = 0; i <= j; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        sum += sign * binomial(j, i) *
               std::exp(log_beta(l3 * (j - i) + 1.0, l4 * i + 1.0));
    }
    return sum / std::pow(l2, j);
}

/// Standardized FKML power moment s_j = E[((X-b)/a)^j]; valid only for
/// shapes bounded away from zero.
inline double fkml_s_moment(int j, double l3, double l4) {
    double sum = 0.0;
    for (int i = 0; i <= j; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        sum += sign * binomial(j, i) * std::pow(l3, -(j - i)) * std::pow(l4, -i) *
               std::exp(log_beta(l3 * (j - i) + 1.0, l4 * i + 1.0));
    }
    return sum;
}

inline constexpr double kFkmlMomentShapeFloor = 1e-4;

} // namespace detail

/// Raw moment E[X^k].  RS moments come from the beta-function expansion with
/// a binomial shift for nonzero lambda1; FKML moments go through the
/// standardized s_k expansion, falling back to quadrature when either shape
/// is close enough to zero that the expansion loses precision.
inline double raw_moment(const GldParams& p, int k) {
    if (!moment_exists(p, k)) throw std::domain_error("raw_moment: moment does not exist");
    if (p.parametrization == Parametrization::RS) {
        detail::check_rs_quick(p);
        double total = 0.0;
        for (int j = 0; j <= k; ++j) {
            const double mj =
                (j == 0) ? 1.0
                         : detail::rs_central_power_moment(j, p.lambda2, p.lambda3, p.lambda4);
            total += detail::binomial(k, j) * std::pow(p.lambda1, k - j) * mj;
        }
        return total;
    }
    if (!(p.lambda2 > 0.0)) throw std::domain_error("FKML requires lambda2 > 0");
    if (std::min(std::fabs(p.lambda3), std::fabs(p.lambda4)) < detail::kFkmlMomentShapeFloor) {
        return tanh_sinh_unit(
            [&](double u, double omu) { return std::pow(quantile_uo(p, u, omu), k); }, 1e-12);
    }
    const double a = 1.0 / p.lambda2;
    const double b = p.lambda1 - 1.0 / (p.lambda2 * p.lambda3) + 1.0 / (p.lambda2 * p.lambda4);
    double total = 0.0;
    for (int j = 0; j <= k; ++j) {
        const double sj = (j == 0) ? 1.0 : detail::fkml_s_moment(j, p.lambda3, p.lambda4);
        total += detail::binomial(k, j) * std::pow(a, j) * std::pow(b, k - j) * sj;
    }
    return total;
}

/// Closed-form mean; requires min(lambda3, lambda4) > -1.
inline double mean(const GldParams& p) {
    if (!moment_exists(p, 1)) throw std::domain_error("mean: first moment does not exist");
    const double gap = 1.0 / (p.lambda3 + 1.0) - 1.0 / (p.lambda4 + 1.0);
    if (p.parametrization == Parametrization::RS) return p.lambda1 + gap / p.lambda2;
    return p.lambda1 - gap / p.lambda2;
}

/// Inverse-transform sampling from any uniform stream (a callable returning
/// doubles in [0,1)).
template <typename UniformStream>
inline std::vector<double> sample_with(const GldParams& p, std::size_t n, UniformStream&& next) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(quantile(p, next()));
    return out;
}

inline std::vector<double> sample(const GldParams& p, std::size_t n, Rng& rng) {
    return sample_with(p, n, [&rng]() { return rng.uniform_open(); });
}

} // namespace gldfit
