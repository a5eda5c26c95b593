#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gldfit/gpd.hpp"
#include "testutil.hpp"

using namespace gldfit;

TEST_CASE("gpd density/cdf/quantile: closed forms") {
    const GpdParams expo{0.0, 2.0, 0.0};
    CHECK(gpd_pdf(expo, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(gpd_pdf(expo, 2.0) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-14));
    CHECK(gpd_pdf(expo, -0.1) == 0.0);

    const GpdParams unit{0.0, 1.0, 1.0};
    CHECK(gpd_pdf(unit, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gpd_pdf(unit, 1.0) == doctest::Approx(0.25).epsilon(1e-14));

    CHECK(gpd_cdf(expo, 2.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS_AS((void)gpd_pdf(GpdParams{0.0, -1.0, 0.0}, 1.0), std::domain_error);
}

TEST_CASE("gpd cdf/quantile round trip across both branches") {
    const std::vector<GpdParams> ps = {{0.0, 2.0, 0.0},    {0.0, 1.0, 0.5},  {4.61, 1.80, -0.22},
                                       {0.0, 1.0, 1e-12},  {1.0, 0.5, -0.5}, {0.0, 3.0, 1.5}};
    for (const auto& p : ps) {
        for (int i = 1; i < 200; ++i) {
            const double u = i / 200.0;
            REQUIRE(std::fabs(gpd_cdf(p, gpd_quantile(p, u)) - u) <= 1e-12);
        }
    }
    // shape -> 0 continuity across a y-grid
    const GpdParams a{0.0, 2.0, 1e-12};
    const GpdParams b{0.0, 2.0, 0.0};
    for (double y = 0.0; y < 12.0; y += 0.25)
        REQUIRE(std::fabs(gpd_pdf(a, y) - gpd_pdf(b, y)) < 1e-8);
}

TEST_CASE("gpd_mean: closed form and quadrature") {
    CHECK(gpd_mean(GpdParams{4.61, 1.80, -0.22}) == doctest::Approx(6.08541).epsilon(1e-5));
    CHECK(gpd_mean(GpdParams{0.0, 2.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)gpd_mean(GpdParams{0.0, 1.0, 1.0}), std::domain_error);

    for (double xi : {-0.5, 0.0, 0.5}) {
        const GpdParams p{0.7, 1.3, xi};
        // quantile written against 1-u so the upper-tail panels keep full
        // precision where the integrand is singular
        const double quad = testutil::integrate_unit([&](double, double omu) {
            if (xi == 0.0) return p.alpha - p.tau * std::log(omu);
            return p.alpha + p.tau * std::expm1(-p.xi * std::log(omu)) / p.xi;
        });
        CHECK(std::fabs(gpd_mean(p) - quad) <= 1e-8 * std::max(1.0, std::fabs(quad)));
    }
}

TEST_CASE("gpd_mle_fit: recovery") {
    OptimizerConfig cfg;
    {
        Rng rng(301);
        const auto data = gpd_sample(GpdParams{0.0, 2.0, 0.0}, 5000, rng);
        const auto fit = gpd_mle_fit(data, 0.0, cfg);
        CHECK(std::fabs(fit.params.xi) < 0.05);
        CHECK(std::fabs(fit.params.tau - 2.0) < 0.1);

        // maximizer dominance over the generator parameters
        double at_truth = 0.0;
        for (double y : data) at_truth += gpd_log_density(GpdParams{0.0, 2.0, 0.0}, y);
        CHECK(fit.loglik >= at_truth - 1e-6);
    }
    {
        Rng rng(302);
        const GpdParams truth{4.61, 1.80, -0.22};
        const auto data = gpd_sample(truth, 5000, rng);
        const auto fit = gpd_mle_fit(data, 4.61, cfg);
        const double d =
            testutil::ks_statistic(data, [&](double y) { return gpd_cdf(fit.params, y); });
        CHECK(testutil::ks_pvalue(d, data.size()) > 0.01);
    }
    CHECK_THROWS(gpd_mle_fit(std::vector<double>(20, 3.0), 3.0));
    CHECK_THROWS(gpd_mle_fit({1.0, 2.0, 3.0, 4.0, 5.0}, 2.0)); // below threshold
}

TEST_CASE("gpd_glm_fit: nesting and recovery") {
    OptimizerConfig cfg;
    {
        // intercept-only model collapses to the plain MLE reparametrized
        Rng rng(303);
        const auto data = gpd_sample(GpdParams{0.0, 1.5, 0.2}, 2000, rng);
        Matrix X = make_design({}, data.size());
        const auto glm = gpd_glm_fit(X, data, 0.0, cfg);
        const auto mle = gpd_mle_fit(data, 0.0, cfg);
        const double mu_mle = gpd_mean(mle.params);
        CHECK(std::exp(glm.beta[0]) == doctest::Approx(mu_mle).epsilon(1e-4));
        CHECK(std::fabs(glm.loglik - mle.loglik) < 1e-6);
    }
    {
        // log-link coefficient recovery
        Rng rng(304);
        const std::size_t n = 5000;
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform() * 2.0;
            const double mu = std::exp(1.0 + 0.5 * x[i]);
            const GpdParams p = gpd_params_from_mean(0.0, mu, 0.3);
            y[i] = gpd_quantile(p, rng.uniform_open());
        }
        Matrix X = make_design({x}, n);
        const auto glm = gpd_glm_fit(X, y, 0.0, cfg);
        CHECK(std::fabs(glm.beta[0] - 1.0) < 0.05);
        CHECK(std::fabs(glm.beta[1] - 0.5) < 0.05);
        CHECK(std::fabs(glm.xi - 0.3) < 0.05);
        CHECK(glm.se_ok);
        REQUIRE(glm.p_values.size() == 3);
        CHECK(glm.p_values[1] < 1e-6); // intercept clearly nonzero
    }
    {
        // shape stays clamped below one even when the data say otherwise
        Rng rng(305);
        const auto heavy = gpd_sample(GpdParams{0.0, 1.0, 1.3}, 3000, rng);
        Matrix X = make_design({}, heavy.size());
        const auto glm = gpd_glm_fit(X, heavy, 0.0, cfg);
        CHECK(glm.xi < 1.0 - 1e-6 + 1e-12);
    }
}

TEST_CASE("hurdle_gpd_fit: exact zero mass and reduction") {
    Rng rng(306);
    std::vector<double> data(40, 0.0);
    const auto draws = gpd_sample(GpdParams{1.0, 2.0, 0.1}, 60, rng);
    data.insert(data.end(), draws.begin(), draws.end());
    const auto fit = hurdle_gpd_fit(data, 1.0);
    CHECK(fit.lambda0 == 0.4);
    REQUIRE(fit.continuous.has_value());

    const auto plain = gpd_mle_fit(draws, 1.0);
    const auto no_zero = hurdle_gpd_fit(draws, 1.0);
    CHECK(no_zero.lambda0 == 0.0);
    REQUIRE(no_zero.continuous.has_value());
    CHECK(no_zero.continuous->params.xi == plain.params.xi);
    CHECK(no_zero.continuous->params.tau == plain.params.tau);
}

TEST_CASE("hurdle_gpd_glm_fit: zero part recovery") {
    Rng rng(307);
    const std::size_t n = 2000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform() * 2.0 - 1.0;
        const double logit = 0.5 + 0.8 * x[i];
        const bool zero = rng.bernoulli(1.0 / (1.0 + std::exp(-logit)));
        if (zero) {
            y[i] = 0.0;
        } else {
            const double mu = std::exp(1.2 + 0.3 * x[i]);
            y[i] = gpd_quantile(gpd_params_from_mean(0.0, mu, 0.2), rng.uniform_open());
        }
    }
    Matrix X = make_design({x}, n);
    const auto fit = hurdle_gpd_glm_fit(X, X, y, 0.0);
    REQUIRE(fit.zero_part.has_value());
    CHECK(std::fabs(fit.zero_part->gamma[0] - 0.5) < 0.15);
    CHECK(std::fabs(fit.zero_part->gamma[1] - 0.8) < 0.2);
    CHECK(std::fabs(fit.nonzero_part.beta[0] - 1.2) < 0.15);
    CHECK(std::fabs(fit.nonzero_part.beta[1] - 0.3) < 0.25); // ~3 Monte Carlo SEs
}

TEST_CASE("gpd_residuals: reference points and law") {
    OptimizerConfig cfg;
    Rng rng(308);
    const std::size_t n = 5000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform();
        const double mu = std::exp(0.8 + 0.4 * x[i]);
        y[i] = gpd_quantile(gpd_params_from_mean(0.0, mu, 0.25), rng.uniform_open());
    }
    Matrix X = make_design({x}, n);
    const auto fit = gpd_glm_fit(X, y, 0.0, cfg);

    // y at the threshold: e = 0, r = -inf flagged
    {
        std::vector<double> y2 = y;
        y2[0] = 0.0;
        const auto rep = gpd_residuals(fit, X, y2);
        CHECK(rep.error_residuals[0] == 0.0);
        CHECK(rep.quantile_residuals[0] == -kInf);
        CHECK(rep.boundary[0]);
    }
    // y at the per-observation fitted median: r = 0
    {
        std::vector<double> y2 = y;
        const double mu0 = std::exp(fit.beta[0] + fit.beta[1] * x[0]);
        const GpdParams p0{0.0, (mu0 - 0.0) * (1.0 - fit.xi), fit.xi};
        y2[0] = gpd_quantile(p0, 0.5);
        const auto rep = gpd_residuals(fit, X, y2);
        CHECK(std::fabs(rep.quantile_residuals[0]) < 1e-9);
    }
    // under a correct model the scaled residuals follow the unit-mean law
    {
        const auto rep = gpd_residuals(fit, X, y);
        const GpdParams ref = gpd_error_residual_reference(fit.xi);
        const double d =
            testutil::ks_statistic(rep.error_residuals, [&](double e) { return gpd_cdf(ref, e); });
        CHECK(testutil::ks_pvalue(d, n) > 0.01);
    }
}
