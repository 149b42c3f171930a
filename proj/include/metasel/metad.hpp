#pragma once

// Windowed meta-d' estimation: quantile-bin the window's confidences, build
// the 2xK correct/incorrect rating table, and maximize the type-2 likelihood
// over (meta_d, criteria) with the type-1 sensitivity anchored to accuracy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "metasel/nelder_mead.hpp"
#include "metasel/normal.hpp"
#include "metasel/sdt.hpp"
#include "metasel/window.hpp"

namespace metasel {

inline constexpr int kDefaultBins = 4;
inline constexpr std::size_t kMinFitWindow = 20;

struct MetaDFit {
    double meta_d = 0.0;
    double type1_dprime = 0.0;
    std::vector<double> criteria;
    double log_likelihood = 0.0;
    bool converged = false;
    long long n_correct = 0;
    long long n_incorrect = 0;
    bool degenerate = false;
};

/// Type-1 d' implied by window accuracy under an unbiased criterion.
/// Accuracy is clamped to [1/(2n), 1 - 1/(2n)] so perfect windows stay finite.
inline double dprime_from_accuracy(long long n_correct, long long n_incorrect) {
    const long long n = n_correct + n_incorrect;
    if (n < 1) throw std::invalid_argument("dprime_from_accuracy: empty window");
    const double lo = 1.0 / (2.0 * static_cast<double>(n));
    const double acc = std::clamp(static_cast<double>(n_correct) / static_cast<double>(n), lo, 1.0 - lo);
    return 2.0 * std_normal_quantile(acc);
}

struct BinResult {
    std::vector<int> bins;     // 1..k_eff, aligned with window entries
    int k_eff = 0;             // <= K; 1 signals no confidence variation
    std::vector<double> edges; // strictly increasing cut points
};

/// Quantile binning of the window's confidences into at most K bins.
/// Edges sit at the j/K empirical quantiles, placed midway between adjacent
/// distinct values so ties never straddle a cut; duplicate edges merge.
inline BinResult bin_confidences(const PerformanceWindow& window, int num_bins) {
    if (window.empty()) throw std::invalid_argument("bin_confidences: empty window");
    if (num_bins < 2) throw std::invalid_argument("bin_confidences: K must be >= 2");

    const std::size_t n = window.size();
    std::vector<double> sorted;
    sorted.reserve(n);
    for (const auto& e : window.entries()) sorted.push_back(e.confidence);
    std::sort(sorted.begin(), sorted.end());

    BinResult result;
    for (int j = 1; j < num_bins; ++j) {
        const std::size_t idx = (static_cast<std::size_t>(j) * n) / static_cast<std::size_t>(num_bins);
        if (idx == 0) continue;
        const double v = sorted[idx - 1];
        auto next = std::upper_bound(sorted.begin(), sorted.end(), v);
        if (next == sorted.end()) continue;
        const double edge = v + 0.5 * (*next - v);
        if (result.edges.empty() || edge > result.edges.back()) {
            result.edges.push_back(edge);
        }
    }
    result.k_eff = static_cast<int>(result.edges.size()) + 1;

    result.bins.reserve(n);
    for (const auto& e : window.entries()) {
        // bin = 1 + number of edges strictly below the confidence
        const auto it = std::lower_bound(result.edges.begin(), result.edges.end(), e.confidence);
        result.bins.push_back(1 + static_cast<int>(it - result.edges.begin()));
    }
    return result;
}

namespace detail {

inline std::vector<double> criteria_from_steps(std::span<const double> log_steps) {
    std::vector<double> criteria;
    criteria.reserve(log_steps.size());
    double t = 0.0;
    for (double a : log_steps) {
        t += std::exp(a);
        criteria.push_back(t);
    }
    return criteria;
}

} // namespace detail

/// Maximum-likelihood meta-d' over a sliding window. Never throws on
/// degenerate inputs: short windows and collapsed confidence return a
/// flagged fit with meta_d = 0, and empty type-2 cells trigger +0.5
/// padding on every cell (also flagged).
inline MetaDFit fit_meta_d(const PerformanceWindow& window, int num_bins = kDefaultBins) {
    if (num_bins < 2) throw std::invalid_argument("fit_meta_d: K must be >= 2");

    MetaDFit fit;
    for (const auto& e : window.entries()) {
        if (e.reward) ++fit.n_correct;
        else ++fit.n_incorrect;
    }
    if (window.size() < kMinFitWindow) {
        fit.degenerate = true;
        if (window.size() > 0) fit.type1_dprime = dprime_from_accuracy(fit.n_correct, fit.n_incorrect);
        return fit;
    }

    fit.type1_dprime = dprime_from_accuracy(fit.n_correct, fit.n_incorrect);

    const BinResult binning = bin_confidences(window, num_bins);
    if (binning.k_eff < 2) {
        fit.degenerate = true;
        return fit;
    }
    const int k = binning.k_eff;

    std::vector<double> counts_correct(k, 0.0);
    std::vector<double> counts_incorrect(k, 0.0);
    std::size_t i = 0;
    for (const auto& e : window.entries()) {
        auto& cell = e.reward ? counts_correct : counts_incorrect;
        cell[binning.bins[i] - 1] += 1.0;
        ++i;
    }
    bool any_zero = false;
    for (int j = 0; j < k; ++j) {
        any_zero = any_zero || counts_correct[j] == 0.0 || counts_incorrect[j] == 0.0;
    }
    if (any_zero) {
        fit.degenerate = true;
        for (int j = 0; j < k; ++j) {
            counts_correct[j] += 0.5;
            counts_incorrect[j] += 0.5;
        }
    }

    // Parameters: [meta_d, a_2..a_K] with t_2 = exp(a_2), t_{j+1} = t_j + exp(a_{j+1}).
    auto objective = [&](std::span<const double> x) {
        const double meta_d = x[0];
        if (!std::isfinite(meta_d) || std::abs(meta_d) > kMetaDBound) {
            return std::numeric_limits<double>::infinity();
        }
        Type2Model model{meta_d, detail::criteria_from_steps(x.subspan(1))};
        double prev = 0.0;
        for (double t : model.criteria) {
            // exp underflow can collapse a step to zero; penalize instead of
            // letting model validation throw mid-optimization
            if (!std::isfinite(t) || t <= prev) return std::numeric_limits<double>::infinity();
            prev = t;
        }
        return -type2_log_likelihood(model, counts_correct, counts_incorrect);
    };

    // Start at the d' = meta-d' ideal observer with criteria evenly spaced
    // on (0, max(d', 1)).
    const double scale = std::max(fit.type1_dprime, 1.0);
    std::vector<double> start(static_cast<std::size_t>(k), 0.0);
    start[0] = std::clamp(fit.type1_dprime, -kMetaDBound, kMetaDBound);
    const double step = scale / static_cast<double>(k);
    for (int j = 1; j < k; ++j) start[j] = std::log(step);

    const NelderMeadResult opt = nelder_mead(objective, start);

    fit.meta_d = std::clamp(opt.x[0], -kMetaDBound, kMetaDBound);
    fit.criteria = detail::criteria_from_steps(std::span<const double>(opt.x).subspan(1));
    fit.log_likelihood = -opt.fmin;
    fit.converged = opt.converged;
    return fit;
}

/// Burn-in scores: one fitted meta-d' per model window.
inline std::vector<double> initial_scores(std::span<const PerformanceWindow> burnin_windows,
                                          int num_bins = kDefaultBins) {
    std::vector<double> scores;
    scores.reserve(burnin_windows.size());
    for (const auto& window : burnin_windows) {
        scores.push_back(fit_meta_d(window, num_bins).meta_d);
    }
    return scores;
}

} // namespace metasel
