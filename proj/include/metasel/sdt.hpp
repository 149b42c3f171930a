#pragma once

// Type-2 signal detection model: confidence-rating distributions conditioned
// on trial correctness, under an equal-variance evidence model with the
// type-1 criterion fixed at zero. Shared by the meta-d' estimator and the
// synthetic trace generator.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "metasel/normal.hpp"
#include "metasel/rng.hpp"

namespace metasel {

inline constexpr double kMetaDBound = 10.0;

/// Meta-level observer: sensitivity meta_d plus K-1 positive type-2
/// criteria t_2 < ... < t_K on the evidence axis (t_1 = 0, t_{K+1} = inf).
struct Type2Model {
    double meta_d = 0.0;
    std::vector<double> criteria;

    int num_bins() const { return static_cast<int>(criteria.size()) + 1; }

    void validate() const {
        if (!std::isfinite(meta_d) || std::abs(meta_d) > kMetaDBound) {
            throw std::invalid_argument("Type2Model: meta_d outside [-10, 10]");
        }
        if (criteria.empty()) {
            throw std::invalid_argument("Type2Model: need at least one criterion (K >= 2)");
        }
        double prev = 0.0;
        for (double t : criteria) {
            if (!std::isfinite(t) || t <= prev) {
                throw std::invalid_argument("Type2Model: criteria must be finite, positive, strictly increasing");
            }
            prev = t;
        }
    }
};

struct ConditionalProbs {
    std::vector<double> given_correct;
    std::vector<double> given_incorrect;
};

/// P(confidence bin | correct) and P(confidence bin | incorrect), each a
/// length-K probability vector.
inline ConditionalProbs type2_conditional_probs(const Type2Model& model) {
    model.validate();
    const double h = 0.5 * model.meta_d;
    const double denom_correct = std_normal_cdf(h);
    const double denom_incorrect = std_normal_cdf(-h);
    if (denom_correct <= 0.0 || denom_incorrect <= 0.0) {
        throw std::runtime_error("type2_conditional_probs: degenerate denominator");
    }
    const int k = model.num_bins();
    ConditionalProbs probs;
    probs.given_correct.resize(k);
    probs.given_incorrect.resize(k);
    for (int j = 0; j < k; ++j) {
        const double lo = (j == 0) ? 0.0 : model.criteria[j - 1];
        // upper edge of the top bin is +inf, so its Phi term vanishes
        const double hi_correct = (j + 1 < k) ? std_normal_cdf(h - model.criteria[j]) : 0.0;
        const double hi_incorrect = (j + 1 < k) ? std_normal_cdf(-h - model.criteria[j]) : 0.0;
        probs.given_correct[j] = std::max(0.0, (std_normal_cdf(h - lo) - hi_correct) / denom_correct);
        probs.given_incorrect[j] = std::max(0.0, (std_normal_cdf(-h - lo) - hi_incorrect) / denom_incorrect);
    }
    return probs;
}

/// Multinomial log-likelihood of binned confidence counts under the model.
/// Counts may be fractional (the estimator's zero-cell padding adds 0.5).
/// Zero-count cells contribute nothing even where the model puts p = 0;
/// a positive count on a zero-probability cell yields -inf.
inline double type2_log_likelihood(const Type2Model& model,
                                   std::span<const double> counts_correct,
                                   std::span<const double> counts_incorrect) {
    const std::size_t k = static_cast<std::size_t>(model.num_bins());
    if (counts_correct.size() != k || counts_incorrect.size() != k) {
        throw std::invalid_argument("type2_log_likelihood: count vectors must have length K");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (counts_correct[j] < 0.0 || counts_incorrect[j] < 0.0) {
            throw std::invalid_argument("type2_log_likelihood: counts must be nonnegative");
        }
        total += counts_correct[j] + counts_incorrect[j];
    }
    if (total <= 0.0) {
        throw std::invalid_argument("type2_log_likelihood: need at least one count");
    }
    const ConditionalProbs probs = type2_conditional_probs(model);
    double ll = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (counts_correct[j] > 0.0) {
            if (probs.given_correct[j] <= 0.0) return -std::numeric_limits<double>::infinity();
            ll += counts_correct[j] * std::log(probs.given_correct[j]);
        }
        if (counts_incorrect[j] > 0.0) {
            if (probs.given_incorrect[j] <= 0.0) return -std::numeric_limits<double>::infinity();
            ll += counts_incorrect[j] * std::log(probs.given_incorrect[j]);
        }
    }
    return ll;
}

/// Draw a 1-based confidence bin from the conditional matching `correct`.
inline int sample_conf_bin(const Type2Model& model, bool correct, Rng& rng) {
    const ConditionalProbs probs = type2_conditional_probs(model);
    const std::vector<double>& p = correct ? probs.given_correct : probs.given_incorrect;
    const double u = uniform01(rng);
    double cum = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        cum += p[j];
        if (u < cum) return static_cast<int>(j) + 1;
    }
    return static_cast<int>(p.size());
}

struct TrialSample {
    bool correct;
    int conf_bin; // 1..K
};

/// Generative counterpart of the fit: correctness from the type-1
/// sensitivity, then a confidence bin from the matching conditional.
inline TrialSample sample_trial(const Type2Model& model, double type1_dprime, Rng& rng) {
    if (type1_dprime < 0.0) {
        throw std::invalid_argument("sample_trial: type1_dprime must be >= 0");
    }
    const bool correct = uniform01(rng) < std_normal_cdf(0.5 * type1_dprime);
    return {correct, sample_conf_bin(model, correct, rng)};
}

} // namespace metasel
