// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "grnlab/verify/gradcheck.hpp"
#include "grnlab/verify/oracles.hpp"

namespace grnlab::harness {

inline constexpr double kEquivalenceTol = 1e-10;
inline constexpr double kRetrofitEvalTol = 1e-6;
inline constexpr double kTruncationTol = 1e-12;
inline constexpr double kTailEnergyTol = 1e-10;
inline constexpr double kConstructionTol = 1e-9;
inline constexpr double kThresholdTol = 1e-9;
inline constexpr double kJacobianRankTol = 1e-6;
/// Band (in standard errors) for sampled cross-checks that back up an exact check.
inline constexpr double kSupplementaryMcBand = 4.0;

struct CheckRecord {
    std::string name;
    bool passed = false;
    nlohmann::ordered_json detail = nlohmann::ordered_json::object();
};

struct SuiteReport {
    std::string name;
    std::vector<CheckRecord> checks;
    bool passed() const;
    const CheckRecord& check(const std::string& name) const;
};

struct VerifyReport {
    std::vector<SuiteReport> suites;
    bool passed() const;
    nlohmann::ordered_json to_json() const;
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    std::size_t grad_seeds = 10;
    /// Empty means verify::standard_grad_cases().
    std::vector<verify::GradCase> grad_cases;
    std::size_t psd_targets = 100;
    std::size_t max_target_dim = 20;
    std::size_t soundness_specs = 50;
    std::size_t rank_points = 10;
    std::size_t stein_samples = verify::kSteinSamples;
    std::vector<std::size_t> stein_dims{1, 3, 10};
    std::size_t equivalence_seeds = 20;
};

/// Central-difference check of every case at seeds seed .. seed + grad_seeds - 1.
SuiteReport verify_grads(const VerifyOptions& o);
/// Risk bounds against SVD/eigen oracles, constructions, bound ordering,
/// thresholds against bisection of the raw inequalities, equal-parameter
/// ranks, gain trends and Jacobian rank caps.
SuiteReport verify_theory(const VerifyOptions& o);
/// Monte-Carlo adjudication of the Gaussian ReLU moments. The
/// "relu_norm_constant" check records the offset c in (d + c) / 2 that the
/// samples select.
SuiteReport verify_stein(const VerifyOptions& o);
/// DCA/transformer equivalence at init and after retrofit, and stack truncation.
SuiteReport verify_equivalence(const VerifyOptions& o);

/// suite: all | grads | theory | stein | equivalence. Suites run in that
/// fixed order. Throws ConfigError on an unknown suite name.
VerifyReport run_verify(const std::string& suite, const VerifyOptions& o = {});

}  // namespace grnlab::harness
