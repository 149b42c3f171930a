#pragma once

// Downhill simplex minimizer. Deterministic given the start point, which is
// what makes repeated meta-d' fits on identical windows bit-identical.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace metasel {

struct NelderMeadOptions {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double tolerance = 1e-6; // converged when max-min objective spread over the simplex falls below this
    int max_iterations = 2000;
    double initial_step = 0.25;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fmin = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

inline NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                                    std::span<const double> start,
                                    const NelderMeadOptions& opts = {}) {
    const std::size_t n = start.size();
    auto eval = [&](const std::vector<double>& x) {
        const double f = objective(x);
        return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
    };

    std::vector<std::vector<double>> vertex(n + 1, std::vector<double>(start.begin(), start.end()));
    for (std::size_t i = 0; i < n; ++i) {
        vertex[i + 1][i] += opts.initial_step;
    }
    std::vector<double> fval(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fval[i] = eval(vertex[i]);

    std::vector<std::size_t> order(n + 1);
    NelderMeadResult result;
    result.iterations = opts.max_iterations;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fval[a] < fval[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[n > 0 ? n - 1 : 0];

        if (fval[worst] - fval[best] < opts.tolerance) {
            result.iterations = iter;
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += vertex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto along = [&](double scale) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) {
                p[j] = centroid[j] + scale * (centroid[j] - vertex[worst][j]);
            }
            return p;
        };

        std::vector<double> reflected = along(opts.reflection);
        const double f_reflected = eval(reflected);

        if (f_reflected < fval[best]) {
            std::vector<double> expanded = along(opts.reflection * opts.expansion);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                vertex[worst] = std::move(expanded);
                fval[worst] = f_expanded;
            } else {
                vertex[worst] = std::move(reflected);
                fval[worst] = f_reflected;
            }
        } else if (f_reflected < fval[second_worst]) {
            vertex[worst] = std::move(reflected);
            fval[worst] = f_reflected;
        } else {
            const bool outside = f_reflected < fval[worst];
            std::vector<double> contracted = along(outside ? opts.reflection * opts.contraction
                                                           : -opts.contraction);
            const double f_contracted = eval(contracted);
            if (f_contracted < (outside ? f_reflected : fval[worst])) {
                vertex[worst] = std::move(contracted);
                fval[worst] = f_contracted;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < n; ++j) {
                        vertex[i][j] = vertex[best][j] + opts.shrink * (vertex[i][j] - vertex[best][j]);
                    }
                    fval[i] = eval(vertex[i]);
                }
            }
        }
    }

    const std::size_t best = static_cast<std::size_t>(
        std::min_element(fval.begin(), fval.end()) - fval.begin());
    result.x = vertex[best];
    result.fmin = fval[best];
    return result;
}

} // namespace metasel
