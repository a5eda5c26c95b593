#pragma once

// Test-side oracles, kept independent of the library's own numerical paths:
// a graded Gauss-Legendre integrator for quantile-power moments, a one-sample
// Kolmogorov-Smirnov test, and a star-discrepancy estimator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace testutil {

// 16-point Gauss-Legendre nodes/weights on [-1, 1] (positive half; mirrored).
inline constexpr std::array<double, 8> kGlNodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
inline constexpr std::array<double, 8> kGlWeights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// Integrates f(u, 1-u) over an interval expressed in the coordinate that is
// small there, so endpoint precision survives.  `mirrored` means the
// coordinate is 1-u rather than u.
inline double gl16_interval(const std::function<double(double, double)>& f, double a, double b,
                            bool mirrored) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < 8; ++i) {
        for (int sign = -1; sign <= 1; sign += 2) {
            const double t = mid + sign * half * kGlNodes[i];
            const double u = mirrored ? 1.0 - t : t;
            const double omu = mirrored ? t : 1.0 - t;
            const double v = f(u, omu);
            if (std::isfinite(v)) sum += kGlWeights[i] * v;
        }
    }
    return sum * half;
}

/// Quadrature of f over (0,1) on dyadically graded panels toward both
/// endpoints; handles integrable power/log endpoint singularities.
inline double integrate_unit(const std::function<double(double, double)>& f, int levels = 220) {
    double total = 0.0;
    double hi = 0.5;
    for (int j = 0; j < levels; ++j) {
        const double lo = hi * 0.5;
        total += gl16_interval(f, lo, hi, false); // u in [lo, hi]
        total += gl16_interval(f, lo, hi, true);  // 1-u in [lo, hi]
        hi = lo;
    }
    return total;
}

/// Two-sided one-sample KS statistic against a reference CDF.
inline double ks_statistic(std::vector<double> data, const std::function<double(double)>& cdf) {
    std::sort(data.begin(), data.end());
    const std::size_t n = data.size();
    if (n == 0) throw std::invalid_argument("ks_statistic: empty sample");
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double F = cdf(data[i]);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n) - F;
        const double lo = F - static_cast<double>(i) / static_cast<double>(n);
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

/// Asymptotic two-sided KS p-value with Stephens' small-sample correction.
inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = d * (sn + 0.12 + 0.11 / sn);
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

/// Star-discrepancy estimate for points in [0,1]^2 over anchored boxes whose
/// corners run over a subsampled grid of the point coordinates.  An
/// underestimate of the true star discrepancy, but an even-handed one, which
/// is all a sequence comparison needs.
inline double discrepancy_estimate(const std::vector<std::array<double, 2>>& pts,
                                   std::size_t corners = 64) {
    const std::size_t n = pts.size();
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = pts[i][0];
        ys[i] = pts[i][1];
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    auto pick = [&](const std::vector<double>& v, std::size_t k) {
        return v[std::min(n - 1, k * n / corners)];
    };
    double worst = 0.0;
    for (std::size_t a = 1; a <= corners; ++a) {
        const double x = (a == corners) ? 1.0 : pick(xs, a);
        for (std::size_t b = 1; b <= corners; ++b) {
            const double y = (b == corners) ? 1.0 : pick(ys, b);
            std::size_t count = 0;
            for (const auto& p : pts) count += (p[0] < x && p[1] < y) ? 1 : 0;
            const double gap = std::fabs(static_cast<double>(count) / n - x * y);
            worst = std::max(worst, gap);
        }
    }
    return worst;
}

} // namespace testutil
