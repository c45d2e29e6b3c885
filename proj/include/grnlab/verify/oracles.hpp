// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "grnlab/numerics/tensor.hpp"

/// Independent numerical oracles. Nothing here calls into grnlab::theory.
namespace grnlab::verify {

inline constexpr std::size_t kMinSteinSamples = 10000;
inline constexpr std::size_t kSteinSamples = 1000000;
inline constexpr std::size_t kRiskSamples = 100000;
inline constexpr double kMcBand = 3.0;

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    /// |mean - value| / se; 0 when both the gap and the standard error vanish.
    double z(double value) const;
    bool within(double value, double band = kMcBand) const { return z(value) <= band; }
};

/// Monte-Carlo moments of the ReLU sigma over x ~ N(0, I_d).
struct SteinMoments {
    /// E[sigma(w.x)^2 ||x||^2]
    Estimate scalar;
    /// Entries of E[sigma(w.x) x x^T] and their standard errors.
    Tensor matrix;
    Tensor matrix_se;
    /// Scalar functionals of the matrix moment: trace, w_hat^T M w_hat and
    /// u^T M u for a fixed unit u orthogonal to w (perp is unset when d = 1).
    Estimate trace;
    Estimate along;
    Estimate perp;
    bool has_perp = false;
};

/// Samples are drawn in fixed chunks with per-chunk seeds derived from `seed`
/// and summed in chunk order, so the result does not depend on the thread count.
/// Throws std::invalid_argument if n < kMinSteinSamples.
SteinMoments stein_moments_mc(std::span<const double> w, std::size_t n, std::uint64_t seed);

/// E||(A - est) x||^2 over x ~ N(0, I).
Estimate excess_risk_mc(const Tensor& target, const Tensor& est, std::size_t n, std::uint64_t seed);

/// Sum of the d - r smallest eigenvalues of E^T E, via the symmetric solver.
double tail_energy(const Tensor& e, std::size_t r);

/// Largest x in [lo, hi] with pred(x) true, for pred true on [lo, x*] and
/// false after. Returns lo if pred(lo) is false.
double bisect_last_true(const std::function<bool(double)>& pred, double lo, double hi, int iters = 200);

// Raw trade-off inequalities with the equal-parameter rank replaced by its
// lower bound: r <= d k^2 + (1 - k^2) * (r - penalty(r)).
bool raw_condition_v1(double kappa, double d, double r);
bool raw_condition_v2(double kappa, double d, double r);
bool raw_condition_v3(double kappa, double d, double r);
/// Largest r in [0, d) meeting each raw condition, found by bisection. The v1
/// value is returned as r / d to match threshold_v1.
double bisect_threshold_v1(double kappa, double d);
double bisect_threshold_v2(double kappa, double d);
double bisect_threshold_v3(double kappa, double d);

/// Percentile with linear interpolation between order statistics, q in [0, 100],
/// computed by repeated selection rather than a full sort.
double percentile_select(std::vector<double> values, double q);

}  // namespace grnlab::verify
