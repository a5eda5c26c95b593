#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>

namespace gldfit {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// log of the beta function; both arguments must be positive.
inline double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("log_beta: arguments must be positive");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double beta_function(double a, double b) { return std::exp(log_beta(a, b)); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace detail {

inline double rational_eval(const double* num, const double* den, int n, double x) {
    double u = num[n - 1];
    for (int i = n - 1; i > 0; --i) u = x * u + num[i - 1];
    double v = den[n - 1];
    for (int i = n - 1; i > 0; --i) v = x * v + den[i - 1];
    return u / v;
}

} // namespace detail

/// Inverse of the standard normal CDF (Wichura's rational approximations,
/// accurate to full double precision).
inline double normal_quantile(double p) {
    if (p < 0.0 || p > 1.0)
        throw std::domain_error("normal_quantile: p outside [0,1]");
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        static const double a[8] = {
            3.387132872796366608,  133.14166789178437745, 1971.5909503065514427,
            13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
            33430.575583588128105, 2509.0809287301226727};
        static const double b[8] = {
            1.0,                   42.313330701600911252, 687.1870074920579083,
            5394.1960214247511077, 21213.794301586595867, 39307.89580009271061,
            28729.085735721942674, 5226.495278852854561};
        const double r = 0.180625 - q * q;
        return q * detail::rational_eval(a, b, 8, r);
    }

    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        static const double a[8] = {
            1.42343711074968357734,   4.6303378461565452959,   5.7694972214606914055,
            3.64784832476320460504,   1.27045825245236838258,  0.24178072517745061177,
            0.0227238449892691845833, 7.7454501427834140764e-4};
        static const double b[8] = {
            1.0,                      2.05319162663775882187,  1.6763848301838038494,
            0.68976733498510000455,   0.14810397642748007459,  0.0151986665636164571966,
            5.475938084995344946e-4,  1.05075007164441684324e-9};
        value = detail::rational_eval(a, b, 8, r - 1.6);
    } else {
        static const double a[8] = {
            6.6579046435011037772,     5.4637849111641143699,    1.7848265399172913358,
            0.29656057182850489123,    0.026532189526576123093,  0.0012426609473880784386,
            2.71155556874348757815e-5, 2.01033439929228813265e-7};
        static const double b[8] = {
            1.0,                      0.59983220655588793769,  0.13692988092273580531,
            0.0148753612908506148525, 7.868691311456132591e-4, 1.8463183175100546818e-5,
            1.4215117583164458887e-7, 2.04426310338993978564e-15};
        value = detail::rational_eval(a, b, 8, r - 5.0);
    }
    return (q < 0.0) ? -value : value;
}

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
/// Non-finite function values are treated as zero so integrable endpoint
/// spikes do not poison the recursion.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int max_depth = 40) {
    auto safe = [&f](double x) {
        const double v = f(x);
        return std::isfinite(v) ? v : 0.0;
    };
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double eps,
            int depth) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lmid = 0.5 * (lo + mid);
        const double rmid = 0.5 * (mid + hi);
        const double flmid = safe(lmid);
        const double frmid = safe(rmid);
        const double h = hi - lo;
        const double whole = h / 6.0 * (flo + 4.0 * fmid + fhi);
        const double left = h / 12.0 * (flo + 4.0 * flmid + fmid);
        const double right = h / 12.0 * (fmid + 4.0 * frmid + fhi);
        const double delta = left + right - whole;
        if (depth <= 0 || std::fabs(delta) <= 15.0 * eps)
            return left + right + delta / 15.0;
        return rec(lo, mid, flo, flmid, fmid, 0.5 * eps, depth - 1) +
               rec(mid, hi, fmid, frmid, fhi, 0.5 * eps, depth - 1);
    };
    const double mid = 0.5 * (a + b);
    return rec(a, b, safe(a), safe(mid), safe(b), tol, max_depth);
}

/// Tanh-sinh quadrature of f over the open unit interval.  The integrand
/// receives both u and 1-u so it can stay accurate at either endpoint, and
/// integrable endpoint singularities are handled by the double-exponential
/// node clustering.
inline double tanh_sinh_unit(const std::function<double(double, double)>& f,
                             double tol = 1e-12, int max_level = 12) {
    // substitution u = 1/(1 + exp(-pi*sinh t)); node pair at +-t shares one weight
    auto node_pair = [&f](double t) -> double {
        const double es = std::exp(-kPi * std::sinh(t));
        if (es < 1e-300 || es > 1e300) return 0.0;
        const double denom = 1.0 + es;
        const double u_hi = 1.0 / denom;
        const double u_lo = es / denom;
        const double w = (kPi / 2.0) * std::cosh(t) * (4.0 * es / (denom * denom));
        if (w < 1e-300) return 0.0;
        const double fh = f(u_hi, u_lo);
        const double fl = f(u_lo, u_hi);
        double term = 0.0;
        if (std::isfinite(fh)) term += fh;
        if (std::isfinite(fl)) term += fl;
        return 0.5 * w * term;
    };

    double h = 1.0;
    double sum = (kPi / 4.0) * f(0.5, 0.5); // t = 0 node
    for (int k = 1; k * h < 7.0; ++k) {
        const double term = node_pair(k * h);
        sum += term;
        if (term == 0.0) break;
    }
    double integral = h * sum;
    for (int level = 1; level <= max_level; ++level) {
        h *= 0.5;
        for (int k = 1; k * h < 7.0; k += 2) sum += node_pair(k * h);
        const double refined = h * sum;
        if (level >= 3 &&
            std::fabs(refined - integral) <= tol * std::max(1.0, std::fabs(refined))) {
            return refined;
        }
        integral = refined;
    }
    return integral;
}

/// Bracketed scalar root finding (bisection with secant acceleration).
/// Requires f(lo) and f(hi) of opposite sign.
inline double find_root_bracketed(const std::function<double(double)>& f, double lo, double hi,
                                  double tol = 1e-12, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (!(flo * fhi < 0.0))
        throw std::invalid_argument("find_root_bracketed: endpoints do not bracket a root");
    for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
        double mid;
        if (std::isfinite(flo) && std::isfinite(fhi) && flo != fhi) {
            mid = lo - flo * (hi - lo) / (fhi - flo); // secant proposal
            const double margin = 0.01 * (hi - lo);
            if (!(mid > lo + margin && mid < hi - margin)) mid = 0.5 * (lo + hi);
        } else {
            mid = 0.5 * (lo + hi);
        }
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace gldfit
