#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace gldfit {

struct NelderMeadOptions {
    double tolerance = 1e-8;   // absolute objective spread across the simplex
    int max_iterations = 2000; // iterations, not function evaluations
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
};

/// Downhill simplex minimizer.  Infinite objective values are legal and act
/// as rejections, so callers can encode hard constraints by returning +inf.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const std::vector<double>& step,
                                    const NelderMeadOptions& opt = {}) {
    const std::size_t dim = x0.size();
    NelderMeadResult result;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    std::vector<std::vector<double>> simplex(dim + 1, x0);
    std::vector<double> values(dim + 1);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step[i];
    for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    auto sort_simplex = [&]() {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    };

    int iter = 0;
    for (; iter < opt.max_iterations; ++iter) {
        sort_simplex();
        const std::size_t best = order[0];
        const std::size_t worst = order[dim];
        const std::size_t second_worst = order[dim - 1];
        if (std::isfinite(values[best])) {
            if (std::fabs(values[worst] - values[best]) < opt.tolerance) {
                result.converged = true;
                break;
            }
            // near a hard constraint some vertices stay rejected forever;
            // a fully collapsed simplex cannot move and has converged
            double diameter = 0.0;
            double scale = 1.0;
            for (std::size_t j = 0; j < dim; ++j)
                scale = std::max(scale, std::fabs(simplex[best][j]));
            for (std::size_t i = 0; i <= dim; ++i)
                for (std::size_t j = 0; j < dim; ++j)
                    diameter = std::max(diameter,
                                        std::fabs(simplex[i][j] - simplex[best][j]));
            if (diameter < 1e-10 * scale) {
                result.converged = true;
                break;
            }
        }

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        auto blend = [&](double t) {
            std::vector<double> x(dim);
            for (std::size_t j = 0; j < dim; ++j)
                x[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
            return x;
        };

        const std::vector<double> reflected = blend(-1.0);
        const double fr = eval(reflected);
        if (fr < values[order[0]]) {
            const std::vector<double> expanded = blend(-2.0);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        const std::vector<double> contracted = blend(outside ? -0.5 : 0.5);
        const double fc = eval(contracted);
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == order[0]) continue;
            for (std::size_t j = 0; j < dim; ++j)
                simplex[i][j] = simplex[order[0]][j] + 0.5 * (simplex[i][j] - simplex[order[0]][j]);
            values[i] = eval(simplex[i]);
        }
    }

    sort_simplex();
    result.x = simplex[order[0]];
    result.value = values[order[0]];
    result.iterations = iter;
    result.evaluations = evals;
    return result;
}

} // namespace gldfit
