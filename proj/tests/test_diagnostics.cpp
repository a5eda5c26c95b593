#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gldfit/diagnostics.hpp"
#include "gldfit/gld.hpp"
#include "gldfit/rng.hpp"
#include "testutil.hpp"

using namespace gldfit;

namespace {

// independent restatement of the plug-in equation, solved by plain bisection
double sj_oracle(const std::vector<double>& x) {
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);
    double m = 0.0;
    for (double t : x) m += t;
    m /= nd;
    double s2 = 0.0;
    for (double t : x) s2 += (t - m) * (t - m);
    s2 /= (nd - 1.0);
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    auto quant = [&](double p) {
        const double h = (nd - 1.0) * p;
        const std::size_t j = static_cast<std::size_t>(h);
        return sorted[j] + (h - std::floor(h)) * (sorted[j + 1] - sorted[j]);
    };
    const double lambda = std::min(std::sqrt(s2), (quant(0.75) - quant(0.25)) / 1.349);

    auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846); };
    auto sum_phi4 = [&](double g) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double d = (x[i] - x[j]) / g;
                s += (d * d * d * d - 6.0 * d * d + 3.0) * phi(d);
            }
        return s / (nd * (nd - 1.0) * std::pow(g, 5.0));
    };
    auto sum_phi6 = [&](double g) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double d = (x[i] - x[j]) / g;
                s += (std::pow(d, 6.0) - 15.0 * d * d * d * d + 45.0 * d * d - 15.0) * phi(d);
            }
        return -s / (nd * (nd - 1.0) * std::pow(g, 7.0));
    };

    const double a = 0.920 * lambda * std::pow(nd, -1.0 / 7.0);
    const double b = 0.912 * lambda * std::pow(nd, -1.0 / 9.0);
    const double Sa = sum_phi4(a);
    const double Tb = sum_phi6(b);
    auto eqn = [&](double h) {
        const double alpha2 = 1.357 * std::pow(Sa / Tb, 1.0 / 7.0) * std::pow(h, 5.0 / 7.0);
        return std::pow(1.0 / (2.0 * std::sqrt(3.14159265358979323846) * nd * sum_phi4(alpha2)),
                        0.2) -
               h;
    };
    // coarse scan for a positive-to-negative crossing, then pure bisection
    double lo = 0.0, hi = 0.0;
    double prev_h = 0.02 * lambda, prev_f = eqn(prev_h);
    for (int i = 1; i <= 300; ++i) {
        const double h = 0.02 * lambda * std::pow(1.05, i);
        const double fh = eqn(h);
        if (prev_f > 0.0 && fh < 0.0) {
            lo = prev_h;
            hi = h;
            break;
        }
        if (!std::isnan(fh)) {
            prev_h = h;
            prev_f = fh;
        }
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (eqn(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("sheather_jones_bandwidth: invariances and oracle agreement") {
    Rng rng(1001);
    std::vector<double> x;
    for (int i = 0; i < 400; ++i)
        x.push_back(normal_quantile(rng.uniform_open()));

    const double h = sheather_jones_bandwidth(x).value;
    CHECK(h > 0.0);

    std::vector<double> scaled, shifted;
    for (double t : x) scaled.push_back(3.0 * t);
    for (double t : x) shifted.push_back(t + 7.0);
    CHECK(sheather_jones_bandwidth(scaled).value == doctest::Approx(3.0 * h).epsilon(1e-8));
    CHECK(sheather_jones_bandwidth(shifted).value == doctest::Approx(h).epsilon(1e-10));

    CHECK_THROWS(sheather_jones_bandwidth({1.0, 2.0, 3.0}));
    CHECK_THROWS(sheather_jones_bandwidth(std::vector<double>(50, 2.0)));
}

TEST_CASE("sheather_jones_bandwidth: matches the direct numeric solution") {
    Rng rng(1002);
    std::vector<double> x;
    for (int i = 0; i < 1000; ++i) x.push_back(normal_quantile(rng.uniform_open()));
    const auto result = sheather_jones_bandwidth(x);
    CHECK_FALSE(result.fallback);
    CHECK(std::fabs(result.value - sj_oracle(x)) < 1e-6);
}

TEST_CASE("kde: closed-form points") {
    const KdeEstimate single({0.0}, 1.0);
    CHECK(single(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-12));
    CHECK(single(1e6) == 0.0);

    const KdeEstimate pair({-5.0, 5.0}, 1.0);
    CHECK(pair(5.0) == doctest::Approx(0.5 / std::sqrt(2.0 * kPi)).epsilon(1e-10));

    CHECK_THROWS(kde({}, 1.0));
    CHECK_THROWS(kde({1.0}, 0.0));
}

TEST_CASE("kde integrates to one") {
    Rng rng(1003);
    for (double bw : {0.2, 1.0, 3.5}) {
        std::vector<double> x;
        for (int i = 0; i < 150; ++i) x.push_back(rng.uniform() * 10.0 - 5.0);
        const KdeEstimate k(x, bw);
        const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
        const double mass = adaptive_simpson([&](double y) { return k(y); }, *mn - 8.0 * bw,
                                             *mx + 8.0 * bw, 1e-9);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("density_distances: hand values and properties") {
    // two constant heights 1 and 1/2 on a shared support of length one
    auto f = [](double y) { return (y >= 0.0 && y <= 1.0) ? 1.0 : 0.0; };
    auto g = [](double y) { return (y >= 0.0 && y <= 1.0) ? 0.5 : 0.0; };
    const std::vector<double> pts = {0.1, 0.4, 0.9};
    const auto rep = density_distances(f, g, pts, 0.0, 1.0, 2048);
    CHECK(rep.global == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rep.l2 == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(rep.linf == doctest::Approx(0.5).epsilon(1e-12));

    // identical inputs: all three distances vanish
    const auto zero = density_distances(f, f, pts, 0.0, 1.0, 256);
    CHECK(zero.global == 0.0);
    CHECK(zero.l2 == 0.0);
    CHECK(zero.linf == 0.0);

    // symmetric in the two densities
    const auto swapped = density_distances(g, f, pts, 0.0, 1.0, 2048);
    CHECK(swapped.global == doctest::Approx(rep.global).epsilon(1e-12));
    CHECK(swapped.l2 == doctest::Approx(rep.l2).epsilon(1e-10));
    CHECK(swapped.linf == doctest::Approx(rep.linf).epsilon(1e-12));

    // grid sup dominates the data-point gaps
    Rng rng(1004);
    std::vector<double> data;
    for (int i = 0; i < 100; ++i) data.push_back(rng.uniform() * 2.0 - 1.0);
    const KdeEstimate k(data, 0.4);
    const GldParams p = fkml_params(0, 1, 0.2, 0.2);
    auto fitted = [&](double y) { return pdf(p, y); };
    const auto rep2 = density_distances(fitted, k, data);
    for (double y : data) REQUIRE(rep2.linf >= std::fabs(fitted(y) - k(y)) - 1e-12);
}

TEST_CASE("qq_points") {
    const GldParams p = fkml_params(0, 1, 0.3, 0.3);
    // sample drawn exactly at the plotting positions sits on the diagonal
    std::vector<double> exact;
    for (int i = 0; i < 40; ++i) exact.push_back(quantile(p, (i + 0.5) / 40.0));
    for (const auto& [emp, theo] : qq_points(exact, [&](double u) { return quantile(p, u); }))
        REQUIRE(emp == doctest::Approx(theo).epsilon(1e-12));

    const auto one = qq_points({3.25}, [&](double u) { return quantile(p, u); });
    REQUIRE(one.size() == 1);
    CHECK(one[0].first == 3.25);
    CHECK(one[0].second == quantile(p, 0.5));

    // uniform sample against the uniform quantile: gaps bounded by DKW
    Rng rng(1005);
    std::vector<double> u(10000);
    for (auto& t : u) t = rng.uniform();
    double worst = 0.0;
    for (const auto& [emp, theo] : qq_points(u, [](double q) { return q; }))
        worst = std::max(worst, std::fabs(emp - theo));
    CHECK(worst < 0.03);

    CHECK_THROWS(qq_points({}, [](double q) { return q; }));
}
