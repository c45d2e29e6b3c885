// SPDX-License-Identifier: Apache-2.0
#include "grnlab/harness/config.hpp"

#include <fstream>
#include <set>

namespace grnlab::harness {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& dst, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        dst = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

}  // namespace

std::string to_string(Task t) {
    switch (t) {
        case Task::LinearIdentity: return "linear_identity";
        case Task::LinearRandomMap: return "linear_random_map";
        case Task::ToyLm: return "toy_lm";
        case Task::TheorySweep: return "theory_sweep";
        case Task::Verify: return "verify";
    }
    return "?";
}

Task parse_task(const std::string& s) {
    for (Task t : {Task::LinearIdentity, Task::LinearRandomMap, Task::ToyLm, Task::TheorySweep, Task::Verify}) {
        if (to_string(t) == s) return t;
    }
    throw ConfigError("unknown task '" + s + "'");
}

std::vector<std::size_t> RunConfig::layer_ranks() const {
    return ranks.empty() ? std::vector<std::size_t>(T, rank) : ranks;
}

OptimizerSpec lm_optimizer_defaults() {
    OptimizerSpec o;
    o.kind = "adamw";
    o.weight_decay = 0.1;
    o.schedule = "inverse_sqrt";
    o.warmup = 100;
    return o;
}

RunConfig config_from_json(const json& j) {
    reject_unknown(j,
                   {"version", "task", "arch", "seed", "out_dir", "d", "T", "rank", "ranks", "k", "init_scale", "init",
                    "activation", "loss", "steps", "batch", "eval_size", "eval_every", "optimizer", "lm", "sweep", "suite",
                    "log_wall_ms"},
                   "config");
    RunConfig c;
    if (!j.contains("version")) throw ConfigError("config: missing 'version'");
    read(j, "version", c.version, "config");
    if (c.version != kConfigVersion) {
        throw ConfigError("config: version " + std::to_string(c.version) + " is not supported (expected " +
                          std::to_string(kConfigVersion) + ")");
    }
    if (!j.contains("seed")) throw ConfigError("config: missing 'seed' (runs are never seeded from the clock)");
    read(j, "seed", c.seed, "config");
    std::string task = to_string(c.task);
    read(j, "task", task, "config");
    c.task = parse_task(task);
    if (c.task == Task::ToyLm) {
        c.arch = "dca";
        c.optimizer = lm_optimizer_defaults();
    }
    read(j, "arch", c.arch, "config");
    read(j, "out_dir", c.out_dir, "config");
    read(j, "d", c.d, "config");
    read(j, "T", c.T, "config");
    read(j, "rank", c.rank, "config");
    read(j, "ranks", c.ranks, "config");
    if (j.contains("k") && !j.at("k").is_null()) {
        std::size_t k = 0;
        read(j, "k", k, "config");
        c.k = k;
    }
    read(j, "init_scale", c.init_scale, "config");
    read(j, "init", c.init, "config");
    read(j, "activation", c.activation, "config");
    read(j, "loss", c.loss, "config");
    read(j, "steps", c.steps, "config");
    read(j, "batch", c.batch, "config");
    read(j, "eval_size", c.eval_size, "config");
    read(j, "eval_every", c.eval_every, "config");
    read(j, "suite", c.suite, "config");
    read(j, "log_wall_ms", c.log_wall_ms, "config");
    if (const auto it = j.find("optimizer"); it != j.end()) {
        const json& o = *it;
        reject_unknown(o, {"kind", "lr", "lr_grid", "beta1", "beta2", "eps", "weight_decay", "schedule", "warmup"},
                       "optimizer");
        OptimizerSpec& s = c.optimizer;
        read(o, "kind", s.kind, "optimizer");
        read(o, "lr", s.lr, "optimizer");
        read(o, "lr_grid", s.lr_grid, "optimizer");
        read(o, "beta1", s.beta1, "optimizer");
        read(o, "beta2", s.beta2, "optimizer");
        read(o, "eps", s.eps, "optimizer");
        read(o, "weight_decay", s.weight_decay, "optimizer");
        read(o, "schedule", s.schedule, "optimizer");
        read(o, "warmup", s.warmup, "optimizer");
    }
    if (const auto it = j.find("lm"); it != j.end()) {
        const json& o = *it;
        reject_unknown(o,
                       {"vocab", "heads", "blocks", "seq", "ffn_mult", "corpus", "separate_qkv_norms", "zero_head",
                        "eval_fraction", "checkpoint_every", "init_checkpoint"},
                       "lm");
        read(o, "vocab", c.vocab, "lm");
        read(o, "heads", c.heads, "lm");
        read(o, "blocks", c.blocks, "lm");
        read(o, "seq", c.seq, "lm");
        read(o, "ffn_mult", c.ffn_mult, "lm");
        read(o, "corpus", c.corpus, "lm");
        read(o, "separate_qkv_norms", c.separate_qkv_norms, "lm");
        read(o, "zero_head", c.zero_head, "lm");
        read(o, "eval_fraction", c.eval_fraction, "lm");
        read(o, "checkpoint_every", c.checkpoint_every, "lm");
        read(o, "init_checkpoint", c.init_checkpoint, "lm");
    }
    if (const auto it = j.find("sweep"); it != j.end()) {
        const json& o = *it;
        reject_unknown(o, {"d", "r_star", "kappa", "lambda_max"}, "sweep");
        read(o, "d", c.sweep_d, "sweep");
        read(o, "r_star", c.sweep_r_star, "sweep");
        read(o, "kappa", c.sweep_kappa, "sweep");
        read(o, "lambda_max", c.sweep_lambda_max, "sweep");
    }
    validate(c);
    return c;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["version"] = c.version;
    j["task"] = to_string(c.task);
    j["arch"] = c.arch;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["d"] = c.d;
    j["T"] = c.T;
    j["rank"] = c.rank;
    j["ranks"] = c.ranks;
    j["k"] = c.k ? json(*c.k) : json(nullptr);
    j["init_scale"] = c.init_scale;
    j["init"] = c.init;
    j["activation"] = c.activation;
    j["loss"] = c.loss;
    j["steps"] = c.steps;
    j["batch"] = c.batch;
    j["eval_size"] = c.eval_size;
    j["eval_every"] = c.eval_every;
    j["suite"] = c.suite;
    j["log_wall_ms"] = c.log_wall_ms;
    const OptimizerSpec& o = c.optimizer;
    j["optimizer"] = {{"kind", o.kind},         {"lr", o.lr},     {"lr_grid", o.lr_grid},
                      {"beta1", o.beta1},       {"beta2", o.beta2}, {"eps", o.eps},
                      {"weight_decay", o.weight_decay}, {"schedule", o.schedule}, {"warmup", o.warmup}};
    j["lm"] = {{"vocab", c.vocab},
               {"heads", c.heads},
               {"blocks", c.blocks},
               {"seq", c.seq},
               {"ffn_mult", c.ffn_mult},
               {"corpus", c.corpus},
               {"separate_qkv_norms", c.separate_qkv_norms},
               {"zero_head", c.zero_head},
               {"eval_fraction", c.eval_fraction},
               {"checkpoint_every", c.checkpoint_every},
               {"init_checkpoint", c.init_checkpoint}};
    j["sweep"] = {{"d", c.sweep_d}, {"r_star", c.sweep_r_star}, {"kappa", c.sweep_kappa},
                  {"lambda_max", c.sweep_lambda_max}};
    return j;
}

void validate(const RunConfig& c) {
    const auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (c.d == 0) fail("d must be positive");
    for (std::size_t r : c.layer_ranks())
        if (r == 0 || r > c.d) fail("every layer rank must lie in [1, d]");
    if (c.activation != "none" && c.activation != "relu") fail("activation must be 'none' or 'relu'");
    if (c.init != "fan_in" && c.init != "balanced") fail("init must be 'fan_in' or 'balanced'");
    if (!(c.init_scale > 0.0)) fail("init_scale must be positive");
    if (c.loss != "mse" && c.loss != "sum_sq") fail("loss must be 'mse' or 'sum_sq'");
    if (c.batch == 0) fail("batch must be positive");
    if (c.eval_size == 0) fail("eval_size must be positive");
    if (c.eval_every == 0) fail("eval_every must be positive");
    if (c.optimizer.kind != "sgd" && c.optimizer.kind != "adamw") fail("optimizer.kind must be 'sgd' or 'adamw'");
    if (c.optimizer.schedule != "constant" && c.optimizer.schedule != "inverse_sqrt") {
        fail("optimizer.schedule must be 'constant' or 'inverse_sqrt'");
    }
    if (c.optimizer.lr < 0.0) fail("optimizer.lr must be nonnegative");
    if (c.optimizer.lr == 0.0 && c.optimizer.lr_grid.empty()) fail("optimizer.lr is 0 and lr_grid is empty");
    for (double lr : c.optimizer.lr_grid)
        if (!(lr > 0.0)) fail("optimizer.lr_grid entries must be positive");
    if (c.optimizer.schedule == "inverse_sqrt" && c.optimizer.warmup == 0) fail("optimizer.warmup must be positive");
    if (c.task == Task::ToyLm) {
        if (c.heads == 0 || c.d % c.heads != 0) fail("d must be divisible by lm.heads");
        if (c.vocab == 0 || c.seq < 2 || c.ffn_mult == 0) fail("lm dimensions must be positive and seq >= 2");
        if (!(c.eval_fraction > 0.0 && c.eval_fraction < 1.0)) fail("lm.eval_fraction must lie in (0, 1)");
        if (c.arch != "dca" && c.arch != "transformer") fail("toy_lm arch must be 'dca' or 'transformer'");
        if (c.optimizer.lr == 0.0) fail("toy_lm needs an explicit optimizer.lr");
    }
    if (c.task == Task::TheorySweep) {
        if (c.sweep_d.empty() || c.sweep_r_star.empty() || c.sweep_kappa.empty()) fail("sweep grids must be nonempty");
        for (double k : c.sweep_kappa)
            if (!(k > 0.0 && k <= 1.0)) fail("sweep.kappa entries must lie in (0, 1]");
        for (std::size_t d : c.sweep_d)
            for (std::size_t r : c.sweep_r_star)
                if (r == 0 || r >= d) fail("sweep needs 1 <= r_star < d for every grid point");
        if (!(c.sweep_lambda_max > 0.0)) fail("sweep.lambda_max must be positive");
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace grnlab::harness
