// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace grnlab::harness {

inline constexpr int kConfigVersion = 1;
/// Scale that gives N(0, scale^2 / fan_in) the variance of U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline constexpr double kUniformFanInScale = 0.57735026918962573;

/// Invalid or incomplete run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Task { LinearIdentity, LinearRandomMap, ToyLm, TheorySweep, Verify };

std::string to_string(Task t);
Task parse_task(const std::string& s);

struct OptimizerSpec {
    /// "sgd" or "adamw".
    std::string kind = "sgd";
    /// Zero means: pick from lr_grid by final eval loss (linear tasks only).
    double lr = 0.0;
    std::vector<double> lr_grid{1.0, 0.5, 0.3, 0.2, 0.1, 0.05, 0.03, 0.01};
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
    double weight_decay = 0.0;
    /// "constant" or "inverse_sqrt" (linear warmup over `warmup` steps, then 1/sqrt).
    std::string schedule = "constant";
    std::size_t warmup = 100;
};

/// AdamW with decoupled decay 0.1 and inverse-sqrt warmup; lr stays 0 and must be set.
/// Toy-LM configs start from these values (and arch "dca") before their keys are read.
OptimizerSpec lm_optimizer_defaults();

/// One experiment. JSON schema (all keys optional except version and seed):
///   version: 1, task, arch, seed, out_dir, d, T, rank, ranks, k, init_scale, init ("fan_in" | "balanced"),
///   activation ("none" | "relu"), loss ("mse" | "sum_sq"), steps, batch, eval_size, eval_every,
///   optimizer { kind, lr, lr_grid, beta1, beta2, eps, weight_decay, schedule, warmup },
///   lm { vocab, heads, blocks, seq, ffn_mult, corpus, separate_qkv_norms,
///        zero_head, eval_fraction, checkpoint_every, init_checkpoint },
///   sweep { d, r_star, kappa, lambda_max }, suite, log_wall_ms
struct RunConfig {
    int version = kConfigVersion;
    Task task = Task::LinearIdentity;
    std::string arch = "v1";
    std::uint64_t seed = 0;
    std::string out_dir;

    std::size_t d = 100;
    std::size_t T = 10;
    std::size_t rank = 3;
    /// Per-layer ranks; empty means T copies of `rank`.
    std::vector<std::size_t> ranks;
    /// FirstLastK truncation depth; absent means the full stack.
    std::optional<std::size_t> k;
    double init_scale = kUniformFanInScale;
    /// "fan_in" or "balanced" (see grn::InitScheme).
    std::string init = "fan_in";
    std::string activation = "none";
    /// "mse": mean over all output entries; "sum_sq": squared norm per example, averaged over the batch.
    std::string loss = "mse";

    std::size_t steps = 1000;
    std::size_t batch = 100;
    std::size_t eval_size = 1000;
    std::size_t eval_every = 10;
    OptimizerSpec optimizer;

    std::size_t vocab = 256;
    std::size_t heads = 4;
    std::size_t blocks = 4;
    std::size_t seq = 64;
    std::size_t ffn_mult = 4;
    /// Path to a byte corpus, or "synthetic:<name>" for a built-in generator.
    std::string corpus;
    bool separate_qkv_norms = false;
    bool zero_head = false;
    double eval_fraction = 0.1;
    std::size_t checkpoint_every = 0;
    std::string init_checkpoint;

    std::vector<std::size_t> sweep_d{100, 500};
    std::vector<std::size_t> sweep_r_star{10, 20, 30, 40, 50, 60, 70, 80, 90};
    std::vector<double> sweep_kappa{0.5};
    double sweep_lambda_max = 10.0;

    std::string suite = "all";
    /// Wall-clock timings make metrics files differ between replays, so they are opt-in.
    bool log_wall_ms = false;

    std::vector<std::size_t> layer_ranks() const;
};

/// Throws ConfigError on unknown keys, wrong types, a missing seed or version,
/// or values outside their domain.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);
void validate(const RunConfig& c);

}  // namespace grnlab::harness
