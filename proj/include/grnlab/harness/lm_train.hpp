// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "grnlab/dca/lm.hpp"
#include "grnlab/harness/config.hpp"

namespace grnlab::harness {

/// Byte-level token stream split into a training prefix and an evaluation suffix.
struct Corpus {
    std::vector<std::size_t> train;
    std::vector<std::size_t> eval;
};

/// Built-in deterministic corpora:
///   synthetic:repeat   one byte repeated
///   synthetic:pattern  cycles over a short alphabet with a fixed stride pattern
///   synthetic:text     pseudo-words from a fixed generator seeded by the name
std::vector<std::size_t> synthetic_corpus(const std::string& name, std::size_t length);

/// Reads c.corpus (a path or a synthetic: name), checks every token is below
/// c.vocab and that both splits hold at least one window of c.seq + 1 tokens.
Corpus load_corpus(const RunConfig& c);

dca::LmConfig lm_config(const RunConfig& c);

/// Warmup-then-inverse-sqrt: lr * min((t + 1) / W, sqrt(W / (t + 1))) for step index t.
double scheduled_lr(const OptimizerSpec& o, std::size_t t);

struct LmRunResult {
    std::vector<double> train_loss;
    std::vector<std::pair<std::size_t, double>> eval_loss;
    double final_eval() const;
    double final_perplexity() const;
};

/// Mean next-token loss over fixed, non-overlapping evaluation windows.
double lm_eval_loss(const dca::LmModel& m, const Corpus& corpus, const RunConfig& c);

/// Thrown when a step produces a non-finite loss or gradient. The checkpoint
/// on disk (if any) still holds the last finite parameters.
class TrainingAborted : public NumericError {
public:
    using NumericError::NumericError;
};

/// c.steps optimisation steps on `model`. Each batch item gets its own tape;
/// items run in parallel and their gradients are summed in batch order.
/// Writes metrics and checkpoints under c.out_dir when it is set.
LmRunResult train_lm(dca::LmModel& model, const RunConfig& c, const Corpus& corpus);

/// Builds the model named by c.arch ("transformer" or "dca"), optionally
/// loads c.init_checkpoint, trains it and saves out_dir/model.ckpt.
LmRunResult run_toy_lm(const RunConfig& c);

struct RetrofitResult {
    double baseline_eval = 0.0;
    /// Eval loss of the freshly wrapped model, before any further training.
    double retrofit_eval = 0.0;
    /// After c.steps more steps on each model; equal to the above when steps = 0.
    double baseline_continued = 0.0;
    double retrofit_continued = 0.0;
};

/// Loads a transformer checkpoint, wraps it in DCA (c.k selects k-DCA) and
/// compares evaluation losses, optionally after c.steps further steps each.
RetrofitResult run_retrofit(const RunConfig& c, const std::filesystem::path& checkpoint);

}  // namespace grnlab::harness
