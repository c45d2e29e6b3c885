// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "grnlab/grn/linear_model.hpp"
#include "grnlab/harness/config.hpp"

namespace grnlab::harness {

/// Target y = x A + bias on rows x; identity has A = I and bias = 0.
struct LinearTarget {
    Tensor A;
    Tensor bias;
};
LinearTarget make_target(const RunConfig& c);

grn::LinearModelConfig linear_model_config(const RunConfig& c);

struct LinearRunResult {
    std::string arch;
    double lr = 0.0;
    bool diverged = false;
    /// Training-batch loss (see RunConfig::loss), one entry per step.
    std::vector<double> train_loss;
    /// (step, held-out loss); step 0 is the untrained model.
    std::vector<std::pair<std::size_t, double>> eval_loss;

    double final_eval() const;
    /// Held-out loss recorded at `step`; throws if it was not evaluated there.
    double eval_at(std::size_t step) const;
};

/// Plain SGD at a fixed learning rate. Writes JSONL metrics when `metrics` is
/// non-empty and saves the final parameters to `checkpoint` when that is set.
/// A non-finite gradient ends the run with diverged = true, or throws when
/// metrics are being written.
LinearRunResult run_linear(const RunConfig& c, double lr, const std::filesystem::path& metrics = {},
                           const std::filesystem::path& checkpoint = {});

struct Figure1Result {
    LinearRunResult run;
    /// (lr, final eval loss or +inf) for every tried rate, in grid order.
    std::vector<std::pair<double, double>> tuning;
};

/// Runs the linear task with c.optimizer.lr, or with the grid rate giving the
/// lowest final held-out loss when lr is 0. The chosen run writes
/// out_dir/metrics.jsonl and out_dir/model.ckpt when out_dir is set. Throws
/// NumericError if the chosen run diverges.
Figure1Result run_figure1(const RunConfig& c);

}  // namespace grnlab::harness
