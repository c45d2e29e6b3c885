// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "grnlab/dca/checkpoint.hpp"
#include "grnlab/harness/config.hpp"
#include "grnlab/theory/theory.hpp"

namespace grnlab::harness {

/// Percentile of `values` with linear interpolation between sorted order
/// statistics at rank q / 100 * (n - 1). q in [0, 100].
double percentile(std::vector<double> values, double q);

/// Distribution of one stack column's combination weights in one GRN.
struct WeightStat {
    /// Block index, or "final" for the output combine.
    std::string block;
    /// q / k / v inside a DCA block, "mix" for a linear-model layer, "out" for the output combine.
    std::string role;
    std::size_t column = 0;
    std::size_t count = 0;
    double median = 0.0;
    double p05 = 0.0;
    double p95 = 0.0;
};

/// One record per (block, role, column) over every GRN "b" tensor in the
/// checkpoint, in checkpoint order. Throws std::invalid_argument when the
/// checkpoint holds no GRN weights.
std::vector<WeightStat> weight_stats(std::span<const dca::CheckpointEntry> entries);

inline constexpr const char* kWeightStatsHeader = "block,role,column,count,median,p05,p95";
std::string weight_stats_csv(const std::vector<WeightStat>& stats);

/// Reads `checkpoint` and writes the statistics to `csv`.
std::vector<WeightStat> dump_weights(const std::filesystem::path& checkpoint, const std::filesystem::path& csv);

theory::SweepGrid sweep_grid(const RunConfig& c);

/// Evaluates the sweep and writes out_dir/sweep.csv when out_dir is set.
std::vector<theory::SweepRow> run_theory_sweep(const RunConfig& c);

}  // namespace grnlab::harness
