// Minimal end-to-end use of the library: simulate a clumped-at-zero sample,
// fit the hurdle model in both parametrizations and print the results.

#include <cstdio>

#include "gldfit/hurdle.hpp"

using namespace gldfit;

int main() {
    Rng rng(2718);
    HurdleGldParams truth{0.35, rs_params(4.6, 0.11, 0.01, 0.18)};
    const std::vector<double> data = hurdle_sample(truth, 4000, rng);

    OptimizerConfig cfg;
    cfg.seed = 1;
    for (const Parametrization par : {Parametrization::RS, Parametrization::FKML}) {
        const HurdleFitReport fit = fit_hurdle(data, par, cfg);
        std::printf("%s: lambda0 = %.4f", to_string(par), fit.lambda0);
        if (fit.continuous) {
            const GldParams& p = fit.continuous->params;
            std::printf("  lambda = (%.4f, %.4f, %.4f, %.4f)  loglik = %.2f%s\n", p.lambda1,
                        p.lambda2, p.lambda3, p.lambda4, fit.continuous->loglik,
                        fit.continuous->converged ? "" : "  (not converged)");
        } else {
            std::printf("  continuous part failed: %s\n", fit.continuous_error.c_str());
        }
    }
    return 0;
}
