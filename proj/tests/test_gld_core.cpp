#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gldfit/gld.hpp"
#include "gldfit/rng.hpp"
#include "testutil.hpp"

using namespace gldfit;

namespace {

// Parameter vectors exercised by the property suites: both parametrizations,
// finite and infinite support, shapes near and at the FKML zero limit.
std::vector<GldParams> property_test_set() {
    return {
        rs_params(0.0, 1.0, 1.0, 1.0),
        rs_params(4.74, 0.12, 0.0032, 0.20),
        rs_params(0.0, 0.2, 0.15, 0.15),
        rs_params(0.0, -1.0, -0.1, -0.1),
        rs_params(5.20, 0.11, 0.02, 0.18),
        rs_params(0.0, 1.0, 0.5, 2.0),
        fkml_params(0.0, 1.0, 0.0, 0.0),
        fkml_params(0.0, 2.0, 0.13, 0.13),
        fkml_params(0.0, 2.0, 1.0, 1.0),
        fkml_params(0.0, 1.0, -0.1, -0.2),
        fkml_params(5.74, 1.13, 0.78, 0.03),
        fkml_params(1.0, 1.0, 0.5, 0.0),
    };
}

} // namespace

TEST_CASE("quantile: fixed values") {
    CHECK(quantile(rs_params(0, 1, 1, 1), 0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(quantile(rs_params(4.74, 0.12, 0.0032, 0.20), 0.5) ==
          doctest::Approx(5.800281865231373).epsilon(1e-10));
    CHECK(quantile(fkml_params(0, 1, 0, 0), 0.9) ==
          doctest::Approx(2.1972245773362196).epsilon(1e-12));
}

TEST_CASE("quantile: domain errors") {
    CHECK_THROWS_AS((void)quantile(rs_params(0, 1, 1, 1), 1.5), std::domain_error);
    CHECK_THROWS_AS((void)quantile(rs_params(0, 1, 1, 1), -0.1), std::domain_error);
    // lambda4 below zero with positive lambda2 cannot be a valid RS vector
    CHECK_THROWS_AS((void)quantile(rs_params(0, 1, 1, -1), 0.3), std::domain_error);
    CHECK_THROWS_AS((void)quantile(fkml_params(0, -1, 0, 0), 0.3), std::domain_error);
}

TEST_CASE("pdf: fixed values") {
    CHECK(pdf(rs_params(0, 1, 1, 1), 0.0) == doctest::Approx(0.5).epsilon(1e-12));
    // FKML(0,2,1,1) is uniform on [-1/2, 1/2]: height 1/width = 1
    CHECK(pdf(fkml_params(0, 2, 1, 1), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pdf(fkml_params(0, 1, 0, 0), 0.0) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(pdf(rs_params(0, 1, 1, 1), 5.0) == 0.0);
    CHECK(pdf(rs_params(0, 1, 1, 1), -5.0) == 0.0);
}

TEST_CASE("cdf: fixed values and round trip") {
    CHECK(cdf(rs_params(0, 1, 1, 1), 0.5) == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(cdf(fkml_params(0, 1, 0, 0), 0.0) == doctest::Approx(0.5).epsilon(1e-10));
    for (const auto& p : property_test_set()) {
        const double x = quantile(p, 0.3);
        CHECK(cdf(p, x) == doctest::Approx(0.3).epsilon(1e-10));
    }
}

TEST_CASE("support: fixed values") {
    const Support a = support(rs_params(0, 1, 1, 1));
    CHECK(a.lower == doctest::Approx(-1.0));
    CHECK(a.upper == doctest::Approx(1.0));
    const Support b = support(fkml_params(0, 2, 1, 1));
    CHECK(b.lower == doctest::Approx(-0.5));
    CHECK(b.upper == doctest::Approx(0.5));
    const Support c = support(fkml_params(0, 1, 0, 0));
    CHECK(c.lower == -kInf);
    CHECK(c.upper == kInf);
}

TEST_CASE("rs_is_valid: certification") {
    CHECK(rs_is_valid(rs_params(0, 1, 1, 1)));
    CHECK(rs_is_valid(rs_params(0, -1, -0.1, -0.1)));
    CHECK_FALSE(rs_is_valid(rs_params(0, 1, 1, -1)));
    CHECK_FALSE(rs_is_valid(rs_params(0, 0, 1, 1)));
    CHECK_FALSE(rs_is_valid(rs_params(0, 1, 0, 0)));
    // mixed-sign pair that only the grid can reject: both shapes above 1,
    // negative lambda2 flips the slope sign everywhere
    CHECK_FALSE(rs_is_valid(rs_params(0, -1, 2, 2)));
}

TEST_CASE("moment_exists") {
    CHECK(moment_exists(rs_params(0, 1, 0.5, 0.5), 4));
    CHECK_FALSE(moment_exists(rs_params(0, 1, -0.3, 0.5), 4));
    CHECK(moment_exists(rs_params(0, 1, -0.3, 0.5), 2));
}

TEST_CASE("raw_moment: fixed values") {
    CHECK(raw_moment(rs_params(0, 1, 1, 1), 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(raw_moment(rs_params(0, 1, 1, 1), 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::fabs(raw_moment(fkml_params(0, 2, 0.13, 0.13), 1)) < 1e-10);
    CHECK_THROWS_AS((void)raw_moment(rs_params(0, 1, -0.3, 0.5), 4), std::domain_error);
}

TEST_CASE("raw_moment agrees with quadrature of Q(u)^k") {
    for (const auto& p : property_test_set()) {
        for (int k = 1; k <= 4; ++k) {
            if (!moment_exists(p, k)) continue;
            const double closed = raw_moment(p, k);
            const double quad = testutil::integrate_unit(
                [&](double u, double omu) { return std::pow(quantile_uo(p, u, omu), k); });
            CHECK(std::fabs(closed - quad) <= 1e-8 * std::max(1.0, std::fabs(quad)));
        }
    }
}

TEST_CASE("mean: fixed values") {
    CHECK(mean(rs_params(5, 2, 0.3, 0.3)) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(std::fabs(mean(rs_params(-1.43, 0.11, 0.0023, 0.19))) < 5e-3);
    CHECK(mean(fkml_params(7, 2, 0.13, 0.13)) == doctest::Approx(7.0).epsilon(1e-14));
}

TEST_CASE("round trip |cdf(quantile(u)) - u| on a u-grid") {
    for (const auto& p : property_test_set()) {
        for (int i = 1; i < 1000; ++i) {
            const double u = i / 1000.0;
            const double back = cdf(p, quantile(p, u));
            REQUIRE(std::fabs(back - u) <= 1e-10);
        }
    }
}

TEST_CASE("quantile is nondecreasing") {
    for (const auto& p : property_test_set()) {
        double prev = -kInf;
        for (int i = 0; i <= 500; ++i) {
            const double q = quantile(p, i / 500.0);
            REQUIRE(q >= prev);
            prev = q;
        }
    }
}

TEST_CASE("pdf integrates to one") {
    for (const auto& p : property_test_set()) {
        const double lo = quantile(p, 1e-9);
        const double hi = quantile(p, 1.0 - 1e-9);
        const double mass = adaptive_simpson([&](double x) { return pdf(p, x); }, lo, hi, 1e-9);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("symmetry: equal shapes reflect around lambda1") {
    const std::vector<GldParams> symmetric = {
        rs_params(3.0, 2.0, 0.25, 0.25),
        fkml_params(-1.0, 0.7, 0.4, 0.4),
    };
    for (const auto& p : symmetric) {
        for (int i = 1; i < 100; ++i) {
            const double u = i / 100.0;
            REQUIRE(quantile(p, u) + quantile(p, 1.0 - u) ==
                    doctest::Approx(2.0 * p.lambda1).epsilon(1e-12));
        }
    }
}

TEST_CASE("FKML zero-shape limit is continuous") {
    const GldParams at_zero = fkml_params(0, 1, 0.0, 0.25);
    const GldParams near_zero = fkml_params(0, 1, 1e-9, 0.25);
    for (int i = 1; i < 200; ++i) {
        const double u = i / 200.0;
        REQUIRE(std::fabs(quantile(at_zero, u) - quantile(near_zero, u)) < 1e-6);
    }
}

TEST_CASE("sample: inverse transform") {
    Rng rng(7);
    CHECK(sample(rs_params(0, 1, 1, 1), 0, rng).empty());

    std::size_t calls = 0;
    auto half = [&calls]() {
        ++calls;
        return 0.5;
    };
    const auto fixed = sample_with(rs_params(0, 1, 1, 1), 3, half);
    CHECK(calls == 3);
    for (double v : fixed) CHECK(v == doctest::Approx(0.0));

    Rng rng2(12345);
    const auto draws = sample(fkml_params(0, 2, 0.13, 0.13), 10000, rng2);
    double meanv = 0.0;
    for (double v : draws) meanv += v;
    meanv /= static_cast<double>(draws.size());
    CHECK(std::fabs(meanv) < 0.05);

    // determinism: same seed, same stream
    Rng a(99), b(99);
    CHECK(sample(fkml_params(0, 2, 0.13, 0.13), 5, a) ==
          sample(fkml_params(0, 2, 0.13, 0.13), 5, b));
}
