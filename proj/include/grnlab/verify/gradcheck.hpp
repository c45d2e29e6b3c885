// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "grnlab/autodiff/tape.hpp"
#include "grnlab/numerics/rng.hpp"

namespace grnlab::verify {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-5;

/// One differentiable function of a few tensor inputs, reduced to a scalar.
struct GradCase {
    std::string name;
    std::vector<Shape> inputs;
    /// Builds the scalar loss on `tape` from the input leaves.
    std::function<ad::Var(ad::Tape& tape, std::span<const ad::Var> in)> loss;
    /// Optional fix-up of sampled inputs (e.g. keeping ReLU inputs off the kink).
    std::function<void(std::vector<Tensor>& in)> prepare;
};

struct GradCheckResult {
    std::string name;
    std::uint64_t seed = 0;
    /// max over inputs of max|analytic - numeric| / max(max|analytic|, max|numeric|, 1e-8)
    double max_rel_error = 0.0;
    bool passed = false;
};

/// Central differences with step h on inputs drawn uniformly from [-1, 1].
GradCheckResult check_gradients(const GradCase& c, std::uint64_t seed, double h = kFdStep,
                                double tol = kFdTolerance);

/// Random fixed weights W of the given shape; sum(W * out) turns any output
/// into a scalar loss that depends on every entry.
ad::Var weighted_sum(ad::Var out, std::uint64_t salt);

/// Every primitive op, the fused GRN combines and multi-head attention.
std::vector<GradCase> standard_grad_cases();

}  // namespace grnlab::verify
