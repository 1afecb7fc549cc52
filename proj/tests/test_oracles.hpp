#pragma once

// Test-only oracles: finite differences, brute-force searches and closed
// forms kept independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "bridgegen/common.hpp"

namespace oracles {

using bridgegen::Mat;
using bridgegen::Vec;

// Central finite-difference gradient of a scalar function.
inline Vec fd_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline double rel_err(const Vec& a, const Vec& b, double floor = 1e-8) {
    return (a - b).norm() / std::max(b.norm(), floor);
}

inline double rel_err(double a, double b, double floor = 1e-12) {
    return std::abs(a - b) / std::max(std::abs(b), floor);
}

// Exact directed Hausdorff by exhaustive search.
inline double brute_hausdorff(const std::vector<Eigen::Vector2d>& gen,
                              const std::vector<Eigen::Vector2d>& ref) {
    double worst = 0.0;
    for (const auto& g : gen) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : ref) best = std::min(best, (g - r).squaredNorm());
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

// Discrete-grid LQ control oracle for dx = sigma u dt + sigma dw on [0, 1]
// with terminal cost 0.5 c ||x||^2 and x0 ~ N(0, I): backward Riccati
// recursion for the optimal feedback, then the optimal terminal E||x||^2 by
// forward variance propagation.
struct LqOracle {
    std::vector<double> feedback;  // K_i, u* = -K_i x
    double optimal_terminal_sq = 0.0;
    double baseline_terminal_sq = 0.0;
};

inline LqOracle lq_oracle(int m_steps, double c, double sigma, int dim) {
    double dt = 1.0 / m_steps;
    std::vector<double> K(static_cast<size_t>(m_steps));
    double P = c;
    for (int i = m_steps - 1; i >= 0; --i) {
        double k = P * sigma / (1.0 + P * sigma * sigma * dt);
        K[static_cast<size_t>(i)] = k;
        P = k * k * dt + P * (1.0 - sigma * k * dt) * (1.0 - sigma * k * dt);
    }
    double var = 1.0, var_base = 1.0;
    for (int i = 0; i < m_steps; ++i) {
        double f = 1.0 - sigma * K[static_cast<size_t>(i)] * dt;
        var = f * f * var + sigma * sigma * dt;
        var_base = var_base + sigma * sigma * dt;
    }
    LqOracle out;
    out.feedback = std::move(K);
    out.optimal_terminal_sq = dim * var;
    out.baseline_terminal_sq = dim * var_base;
    return out;
}

// One-sided binomial tail P(X >= k) for X ~ Binomial(n, 1/2), exact in logs.
inline double binom_tail_half(int n, int k) {
    double total = 0.0;
    for (int i = k; i <= n; ++i) {
        double logp = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                      n * std::log(2.0);
        total += std::exp(logp);
    }
    return total;
}

// Standard normal CDF.
inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracles
