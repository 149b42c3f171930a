#pragma once

// Linear contextual bandits over the 4-dimensional context
// [c_A, mu_A, c_B, mu_B]: LinUCB scoring and Thompson sampling from the
// Gaussian posterior, over shared per-arm statistics (A, b).

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "metasel/rng.hpp"

namespace metasel {

inline constexpr int kContextDim = 4;

/// Selection context: instantaneous confidence and windowed meta-d' per
/// model, in this fixed order.
struct ContextVector {
    double c_a = 0.0;
    double mu_a = 0.0;
    double c_b = 0.0;
    double mu_b = 0.0;

    Eigen::Vector4d vec() const { return {c_a, mu_a, c_b, mu_b}; }
};

/// Per-arm sufficient statistics. A starts at identity and accumulates
/// rank-1 context outer products, so it stays symmetric positive definite.
struct ArmState {
    Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
};

enum class Arm : int { A = 0, B = 1 };

enum class Policy { LinUCB, LinTS };

struct BanditConfig {
    Policy policy = Policy::LinUCB;
    double alpha = 1.0;    // LinUCB exploration width
    double sigma = 1.0;    // LinTS prior standard deviation
    double epsilon = 1e-6; // LinTS inverse regularizer
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (alpha < 0.0 || sigma < 0.0 || epsilon < 0.0) {
            throw std::invalid_argument("BanditConfig: alpha, sigma, epsilon must be >= 0");
        }
    }
};

namespace detail {

inline Eigen::LLT<Eigen::Matrix4d> cholesky_or_throw(const Eigen::Matrix4d& m) {
    Eigen::LLT<Eigen::Matrix4d> llt(m);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("bandit: arm matrix is not positive definite");
    }
    return llt;
}

} // namespace detail

/// UCB score theta_hat . s + alpha * sqrt(s^T A^{-1} s).
inline double score_linucb(const ArmState& arm, const ContextVector& context, double alpha) {
    const Eigen::Vector4d s = context.vec();
    const auto llt = detail::cholesky_or_throw(arm.a);
    const Eigen::Vector4d theta = llt.solve(arm.b);
    const double width = s.dot(llt.solve(s));
    return theta.dot(s) + alpha * std::sqrt(std::max(0.0, width));
}

/// Thompson sample theta_tilde ~ N(theta_hat, sigma^2 (A + eps I)^{-1}),
/// projected onto the context. The regularized inverse backs both the mean
/// and the covariance.
inline double score_lints(const ArmState& arm, const ContextVector& context, double sigma,
                          double epsilon, Rng& rng) {
    if (epsilon < 0.0) throw std::invalid_argument("score_lints: epsilon must be >= 0");
    const Eigen::Vector4d s = context.vec();
    const Eigen::Matrix4d regularized = arm.a + epsilon * Eigen::Matrix4d::Identity();
    const auto llt = detail::cholesky_or_throw(regularized);
    const Eigen::Vector4d theta = llt.solve(arm.b);
    if (sigma == 0.0) return theta.dot(s);
    // With A + eps I = L L^T, sigma L^{-T} z has covariance sigma^2 (A + eps I)^{-1}.
    Eigen::Vector4d z;
    for (int i = 0; i < kContextDim; ++i) z(i) = normal01(rng);
    const Eigen::Vector4d perturbation =
        llt.matrixU().solve(z);
    return (theta + sigma * perturbation).dot(s);
}

/// Pick the arm with the higher policy score; ties go to arm A.
inline Arm select(const ArmState& arm_a, const ArmState& arm_b, const ContextVector& context,
                  const BanditConfig& cfg, Rng& rng) {
    cfg.validate();
    double score_a = 0.0;
    double score_b = 0.0;
    if (cfg.policy == Policy::LinUCB) {
        score_a = score_linucb(arm_a, context, cfg.alpha);
        score_b = score_linucb(arm_b, context, cfg.alpha);
    } else {
        score_a = score_lints(arm_a, context, cfg.sigma, cfg.epsilon, rng);
        score_b = score_lints(arm_b, context, cfg.sigma, cfg.epsilon, rng);
    }
    return score_a >= score_b ? Arm::A : Arm::B;
}

/// Rank-1 statistics update for the chosen arm: A += s s^T, b += r s.
inline void update(ArmState& arm, const ContextVector& context, int reward) {
    if (reward != 0 && reward != 1) {
        throw std::invalid_argument("bandit update: reward must be 0 or 1");
    }
    const Eigen::Vector4d s = context.vec();
    arm.a += s * s.transpose();
    arm.b += static_cast<double>(reward) * s;
}

} // namespace metasel
