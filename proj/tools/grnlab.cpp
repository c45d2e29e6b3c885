// SPDX-License-Identifier: Apache-2.0
// Command-line driver. Exit codes: 0 success, 1 verification or run failure, 2 config/input error.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "grnlab/dca/checkpoint.hpp"
#include "grnlab/harness/config.hpp"
#include "grnlab/harness/diagnostics.hpp"
#include "grnlab/harness/figure1.hpp"
#include "grnlab/harness/lm_train.hpp"
#include "grnlab/harness/verify_suites.hpp"

namespace {

using namespace grnlab;
using namespace grnlab::harness;
using json = nlohmann::ordered_json;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string arch;
    std::optional<std::size_t> k;
    std::string checkpoint;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON run config")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "master seed (overrides the config)");
    app->add_option("--out", c.out, "output directory (overrides the config)");
    app->add_option("--arch", c.arch, "architecture (overrides the config)");
    app->add_option("--k", c.k, "first-and-last-k truncation depth");
}

RunConfig resolve(const Common& o, std::initializer_list<Task> allowed) {
    RunConfig c;
    if (!o.config.empty()) {
        c = load_config(o.config);
    } else {
        c.task = *allowed.begin();
        if (c.task == Task::ToyLm) {
            c.arch = "dca";
            c.d = 64;
            c.corpus = "synthetic:text";
            c.optimizer = lm_optimizer_defaults();
            c.optimizer.lr = 1e-3;
            c.batch = 8;
            c.eval_size = 32;
            c.eval_every = 50;
        }
    }
    bool ok = false;
    for (Task t : allowed) ok = ok || c.task == t;
    if (!ok) throw ConfigError("config task " + to_string(c.task) + " does not fit this subcommand");
    if (o.seed) c.seed = *o.seed;
    if (!o.out.empty()) c.out_dir = o.out;
    if (!o.arch.empty()) c.arch = o.arch;
    if (o.k) c.k = *o.k;
    validate(c);
    return c;
}

void emit(const json& j, const std::string& out_dir, const char* file) {
    std::cout << j.dump(2) << '\n';
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / file) << j.dump(2) << '\n';
    }
}

json pairs(const std::vector<std::pair<double, double>>& v) {
    json a = json::array();
    for (const auto& [x, y] : v) a.push_back({x, y});
    return a;
}

int run_figure1_cmd(const Common& o) {
    const RunConfig c = resolve(o, {Task::LinearIdentity, Task::LinearRandomMap});
    const Figure1Result r = run_figure1(c);
    json j = {{"task", to_string(c.task)}, {"arch", c.arch},          {"lr", r.run.lr},
              {"eval_loss_step_0", r.run.eval_at(0)}, {"final_eval_loss", r.run.final_eval()}, {"tuning", pairs(r.tuning)}};
    emit(j, c.out_dir, "summary.json");
    return 0;
}

int run_train_lm_cmd(const Common& o) {
    const RunConfig c = resolve(o, {Task::ToyLm});
    const LmRunResult r = run_toy_lm(c);
    json j = {{"arch", c.arch}, {"steps", c.steps}, {"final_eval_loss", r.final_eval()},
              {"final_perplexity", r.final_perplexity()}};
    emit(j, c.out_dir, "summary.json");
    return 0;
}

int run_retrofit_cmd(const Common& o) {
    if (o.checkpoint.empty()) throw ConfigError("retrofit needs --checkpoint");
    RunConfig c = resolve(o, {Task::ToyLm});
    const RetrofitResult r = run_retrofit(c, o.checkpoint);
    const double delta = std::abs(r.retrofit_eval - r.baseline_eval);
    const bool ok = delta <= kRetrofitEvalTol;
    json j = {{"baseline_eval_loss", r.baseline_eval}, {"retrofit_eval_loss", r.retrofit_eval},
              {"abs_delta", delta}, {"tol", kRetrofitEvalTol}, {"passed", ok},
              {"baseline_continued", r.baseline_continued}, {"retrofit_continued", r.retrofit_continued}};
    emit(j, c.out_dir, "retrofit.json");
    return ok ? 0 : 1;
}

int run_sweep_cmd(const Common& o) {
    const RunConfig c = resolve(o, {Task::TheorySweep});
    const auto rows = run_theory_sweep(c);
    if (c.out_dir.empty()) std::cout << theory::sweep_csv(rows);
    else std::cout << "wrote " << (std::filesystem::path(c.out_dir) / "sweep.csv").string() << '\n';
    return 0;
}

int run_dump_cmd(const Common& o) {
    if (o.checkpoint.empty()) throw ConfigError("dump-weights needs --checkpoint");
    const std::filesystem::path csv =
        o.out.empty() ? std::filesystem::path(o.checkpoint).replace_extension(".weights.csv")
                      : std::filesystem::path(o.out) / "weights.csv";
    try {
        dump_weights(o.checkpoint, csv);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    std::cout << "wrote " << csv.string() << '\n';
    return 0;
}

int run_verify_cmd(const Common& o, const std::string& suite) {
    VerifyOptions opt;
    if (!o.config.empty()) opt.seed = load_config(o.config).seed;
    if (o.seed) opt.seed = *o.seed;
    const VerifyReport r = run_verify(suite, opt);
    json j = r.to_json();
    j["suite"] = suite;
    j["seed"] = opt.seed;
    emit(j, o.out, "verify_report.json");
    return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grnlab: generalized residual networks and DCA experiments"};
    app.require_subcommand(1);
    Common o;
    std::string suite = "all";

    auto* fig = app.add_subcommand("figure1", "low-rank linear stack on the identity or random-map task");
    add_common(fig, o);
    auto* lm = app.add_subcommand("train-lm", "train the toy byte-level language model");
    add_common(lm, o);
    auto* rf = app.add_subcommand("retrofit", "wrap a trained transformer checkpoint in DCA and compare eval loss");
    add_common(rf, o);
    rf->add_option("--checkpoint", o.checkpoint, "transformer checkpoint")->check(CLI::ExistingFile);
    auto* sw = app.add_subcommand("theory-sweep", "threshold and gain sweep as CSV");
    add_common(sw, o);
    auto* dw = app.add_subcommand("dump-weights", "per-column statistics of learned GRN weights");
    dw->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
    dw->add_option("--out", o.out, "directory for weights.csv");
    auto* vf = app.add_subcommand("verify", "run oracle suites and print a JSON report");
    vf->add_option("suite", suite, "all | grads | theory | stein | equivalence");
    vf->add_option("--config", o.config, "config supplying the seed")->check(CLI::ExistingFile);
    vf->add_option("--seed", o.seed, "master seed");
    vf->add_option("--out", o.out, "directory for verify_report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*fig) return run_figure1_cmd(o);
        if (*lm) return run_train_lm_cmd(o);
        if (*rf) return run_retrofit_cmd(o);
        if (*sw) return run_sweep_cmd(o);
        if (*dw) return run_dump_cmd(o);
        if (*vf) return run_verify_cmd(o, suite);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const dca::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
