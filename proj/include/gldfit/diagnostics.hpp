#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gldfit/math.hpp"

namespace gldfit {

namespace detail {

// fourth and sixth derivatives of the standard normal density, up to sign
inline double phi4(double x) {
    const double x2 = x * x;
    return (x2 * x2 - 6.0 * x2 + 3.0) * normal_pdf(x);
}

inline double phi6(double x) {
    const double x2 = x * x;
    return ((x2 * x2 * x2) - 15.0 * x2 * x2 + 45.0 * x2 - 15.0) * normal_pdf(x);
}

/// Pairwise density-derivative functional estimate at bandwidth g.
template <typename Kernel>
inline double pair_functional(const std::vector<double>& x, double g, Kernel k, int power) {
    const std::size_t n = x.size();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) sum += k((x[i] - x[j]) / g);
    sum *= 2.0;
    return sum / (static_cast<double>(n) * static_cast<double>(n - 1) * std::pow(g, power));
}

inline double simple_quantile(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const std::size_t j = static_cast<std::size_t>(std::floor(h));
    if (j + 1 >= x.size()) return x.back();
    return x[j] + (h - std::floor(h)) * (x[j + 1] - x[j]);
}

} // namespace detail

struct BandwidthResult {
    double value = 0.0;
    bool fallback = false; // normal-reference rule used after a bracket failure
};

/// Solve-the-equation plug-in bandwidth for a Gaussian kernel.  The fixed
/// point of  h = [R(K) / (n * S(alpha2(h)))]^(1/5)  is located by bracketed
/// root search; when no bracket can be found the normal-reference rule is
/// returned with a flag.
inline BandwidthResult sheather_jones_bandwidth(const std::vector<double>& data) {
    const std::size_t n = data.size();
    if (n < 10) throw std::invalid_argument("sheather_jones_bandwidth: need at least 10 points");
    double m = 0.0;
    for (double t : data) m += t;
    m /= static_cast<double>(n);
    double s2 = 0.0;
    for (double t : data) s2 += (t - m) * (t - m);
    s2 /= static_cast<double>(n - 1);
    const double iqr =
        detail::simple_quantile(data, 0.75) - detail::simple_quantile(data, 0.25);
    double scale = std::sqrt(s2);
    if (iqr > 0.0) scale = std::min(scale, iqr / 1.349);
    if (!(scale > 0.0))
        throw std::runtime_error("sheather_jones_bandwidth: degenerate sample");

    const double nd = static_cast<double>(n);
    const double a = 0.920 * scale * std::pow(nd, -1.0 / 7.0);
    const double b = 0.912 * scale * std::pow(nd, -1.0 / 9.0);
    const double S_a = detail::pair_functional(data, a, detail::phi4, 5);
    const double T_b = -detail::pair_functional(data, b, detail::phi6, 7);

    const double hnr = 0.9 * scale * std::pow(nd, -0.2);
    BandwidthResult out;
    if (!(S_a > 0.0) || !(T_b > 0.0)) {
        out.value = hnr;
        out.fallback = true;
        return out;
    }

    const double rk = 1.0 / (2.0 * std::sqrt(kPi)); // roughness of the Gaussian kernel
    auto equation = [&](double h) {
        const double alpha2 = 1.357 * std::pow(S_a / T_b, 1.0 / 7.0) * std::pow(h, 5.0 / 7.0);
        const double S_h = detail::pair_functional(data, alpha2, detail::phi4, 5);
        // the pairwise functional can dip negative at small bandwidths,
        // where the equation is simply not defined
        if (!(S_h > 0.0)) return kNaN;
        return std::pow(rk / (nd * S_h), 0.2) - h;
    };

    // geometric scan for a sign change; NaN stretches are skipped
    const double lo_scan = 0.05 * hnr, hi_scan = 16.0 * hnr;
    const int steps = 48;
    const double ratio = std::pow(hi_scan / lo_scan, 1.0 / steps);
    double prev_h = lo_scan, prev_f = equation(lo_scan);
    double blo = 0.0, bhi = 0.0;
    for (int i = 1; i <= steps; ++i) {
        const double h = lo_scan * std::pow(ratio, i);
        const double fh = equation(h);
        if (prev_f > 0.0 && fh < 0.0) {
            blo = prev_h;
            bhi = h;
            break;
        }
        if (!std::isnan(fh)) {
            prev_h = h;
            prev_f = fh;
        }
    }
    if (blo == 0.0) {
        out.value = hnr;
        out.fallback = true;
        return out;
    }
    out.value = find_root_bracketed(equation, blo, bhi, 1e-10 * hnr);
    return out;
}

/// Gaussian kernel density estimate at fixed bandwidth.
class KdeEstimate {
public:
    KdeEstimate(std::vector<double> data, double bandwidth)
        : data_(std::move(data)), h_(bandwidth) {
        if (!(h_ > 0.0)) throw std::invalid_argument("KdeEstimate: bandwidth must be positive");
        if (data_.empty()) throw std::invalid_argument("KdeEstimate: empty sample");
    }

    double bandwidth() const { return h_; }
    const std::vector<double>& data() const { return data_; }

    double operator()(double y) const {
        double sum = 0.0;
        for (double x : data_) sum += normal_pdf((y - x) / h_);
        return sum / (static_cast<double>(data_.size()) * h_);
    }

private:
    std::vector<double> data_;
    double h_;
};

inline KdeEstimate kde(const std::vector<double>& data, double bandwidth) {
    return KdeEstimate(data, bandwidth);
}

struct DistanceReport {
    double global = 0.0; // mean squared pointwise gap over the data
    double l2 = 0.0;     // root integrated squared gap
    double linf = 0.0;   // largest absolute gap
};

/// Three distances between two densities: mean squared gap over the data
/// points, the L2 norm of the gap by adaptive quadrature, and the sup norm
/// over a dense grid on [lo, hi] with one golden-section refinement around
/// the grid argmax.  The L2 integral starts at zero when the grid does,
/// extending below only when the data do.
inline DistanceReport density_distances(const std::function<double(double)>& f,
                                        const std::function<double(double)>& g,
                                        const std::vector<double>& data, double lo, double hi,
                                        std::size_t grid_points = 4096) {
    if (!(hi > lo)) throw std::invalid_argument("density_distances: empty grid range");
    auto gap = [&](double y) { return std::fabs(f(y) - g(y)); };

    DistanceReport out;
    for (double y : data) {
        const double d = f(y) - g(y);
        out.global += d * d;
    }
    out.global /= static_cast<double>(data.size());

    const double l2_lo = std::min(0.0, lo);
    out.l2 = std::sqrt(adaptive_simpson(
        [&](double y) {
            const double d = f(y) - g(y);
            return d * d;
        },
        l2_lo, hi, 1e-11));

    double best_y = lo, best = 0.0;
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double y = lo + static_cast<double>(i) * step;
        const double d = gap(y);
        if (d > best) {
            best = d;
            best_y = y;
        }
    }
    // golden-section polish inside the bracketing grid cells
    {
        const double phi_ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = best_y - step, b = best_y + step;
        double c = b - phi_ratio * (b - a);
        double d = a + phi_ratio * (b - a);
        for (int it = 0; it < 60 && (b - a) > 1e-12 * (hi - lo); ++it) {
            if (gap(c) > gap(d)) {
                b = d;
            } else {
                a = c;
            }
            c = b - phi_ratio * (b - a);
            d = a + phi_ratio * (b - a);
        }
        best = std::max(best, gap(0.5 * (a + b)));
    }
    // the sup over the whole line dominates every data point gap
    for (double y : data) best = std::max(best, gap(y));
    out.linf = best;
    return out;
}

/// Convenience form: fitted density against a kernel estimate on the grid
/// spanning the data extended by three bandwidths.
inline DistanceReport density_distances(const std::function<double(double)>& fitted,
                                        const KdeEstimate& k, const std::vector<double>& data,
                                        std::size_t grid_points = 4096) {
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
    const double lo = *mn - 3.0 * k.bandwidth();
    const double hi = *mx + 3.0 * k.bandwidth();
    return density_distances(fitted, [&k](double y) { return k(y); }, data, lo, hi, grid_points);
}

/// Ordered-sample versus theoretical quantile pairs at plotting positions
/// (i - 1/2) / n.
inline std::vector<std::pair<double, double>> qq_points(
    const std::vector<double>& sample, const std::function<double(double)>& theoretical_quantile) {
    if (sample.empty()) throw std::invalid_argument("qq_points: empty sample");
    std::vector<double> x = sample;
    std::sort(x.begin(), x.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(x.size());
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / n;
        out.emplace_back(x[i], theoretical_quantile(p));
    }
    return out;
}

} // namespace gldfit
