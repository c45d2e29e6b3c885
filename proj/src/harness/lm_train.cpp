// SPDX-License-Identifier: Apache-2.0
#include "grnlab/harness/lm_train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>

#include "grnlab/autodiff/optim.hpp"
#include "grnlab/dca/checkpoint.hpp"
#include "grnlab/harness/metrics.hpp"
#include "grnlab/numerics/parallel.hpp"

namespace grnlab::harness {
namespace {

constexpr std::size_t kSyntheticLength = 1 << 15;

std::vector<ad::Parameter*> params_of(dca::LmModel& m) { return m.parameters(); }

std::vector<const ad::Parameter*> const_params(dca::LmModel& m) {
    auto p = m.parameters();
    return {p.begin(), p.end()};
}

void save(dca::LmModel& m, const std::filesystem::path& path) {
    const auto p = const_params(m);
    dca::save_checkpoint(path, p);
}

}  // namespace

std::vector<std::size_t> synthetic_corpus(const std::string& name, std::size_t length) {
    std::vector<std::size_t> out(length);
    if (name == "repeat") {
        std::fill(out.begin(), out.end(), std::size_t{'a'});
    } else if (name == "pattern") {
        static constexpr char kAlpha[] = "abcdefgh";
        for (std::size_t i = 0; i < length; ++i) out[i] = std::size_t(kAlpha[(i * 3 + i / 8) % 8]);
    } else if (name == "text") {
        static constexpr const char* kWords[] = {"the", "grn", "stack", "layer", "mixes", "inputs", "and",
                                                 "weights", "over", "depth", "residual", "attention"};
        Rng rng(derive_seed(0x7E57, 0));
        std::size_t i = 0;
        while (i < length) {
            const std::string w = kWords[rng.below(std::size(kWords))];
            for (char ch : w) {
                if (i < length) out[i++] = static_cast<unsigned char>(ch);
            }
            if (i < length) out[i++] = rng.below(8) == 0 ? '.' : ' ';
        }
    } else {
        throw ConfigError("unknown synthetic corpus '" + name + "' (expected repeat, pattern or text)");
    }
    return out;
}

Corpus load_corpus(const RunConfig& c) {
    std::vector<std::size_t> all;
    const std::string prefix = "synthetic:";
    if (c.corpus.rfind(prefix, 0) == 0) {
        all = synthetic_corpus(c.corpus.substr(prefix.size()), kSyntheticLength);
    } else {
        if (c.corpus.empty()) throw ConfigError("toy LM needs lm.corpus");
        std::ifstream f(c.corpus, std::ios::binary);
        if (!f) throw ConfigError("cannot open corpus " + c.corpus);
        for (auto it = std::istreambuf_iterator<char>(f); it != std::istreambuf_iterator<char>(); ++it) {
            all.push_back(static_cast<unsigned char>(*it));
        }
    }
    for (std::size_t t : all) {
        if (t >= c.vocab) {
            throw ConfigError("corpus byte " + std::to_string(t) + " is outside vocab " + std::to_string(c.vocab));
        }
    }
    const auto n_eval = static_cast<std::size_t>(std::floor(static_cast<double>(all.size()) * c.eval_fraction));
    Corpus out;
    out.train.assign(all.begin(), all.end() - static_cast<std::ptrdiff_t>(n_eval));
    out.eval.assign(all.end() - static_cast<std::ptrdiff_t>(n_eval), all.end());
    if (out.train.size() < c.seq + 1 || out.eval.size() < c.seq + 1) {
        throw ConfigError("corpus of " + std::to_string(all.size()) + " bytes is too short for windows of " +
                          std::to_string(c.seq + 1));
    }
    return out;
}

dca::LmConfig lm_config(const RunConfig& c) {
    dca::LmConfig m;
    try {
        m.arch = dca::parse_lm_arch(c.arch);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    m.vocab = c.vocab;
    m.d = c.d;
    m.heads = c.heads;
    m.blocks = c.blocks;
    m.seq = c.seq;
    m.ffn_mult = c.ffn_mult;
    m.stack = c.k ? grn::StackPolicy::first_last(*c.k) : grn::StackPolicy::full();
    m.separate_qkv_norms = c.separate_qkv_norms;
    m.zero_head = c.zero_head;
    return m;
}

double scheduled_lr(const OptimizerSpec& o, std::size_t t) {
    if (o.schedule == "constant") return o.lr;
    const double w = static_cast<double>(o.warmup), s = static_cast<double>(t + 1);
    return o.lr * std::min(s / w, std::sqrt(w / s));
}

double LmRunResult::final_eval() const {
    if (eval_loss.empty()) throw std::logic_error("LM run has no evaluations");
    return eval_loss.back().second;
}

double LmRunResult::final_perplexity() const { return std::exp(final_eval()); }

double lm_eval_loss(const dca::LmModel& m, const Corpus& corpus, const RunConfig& c) {
    const std::size_t windows = std::min(c.eval_size, (corpus.eval.size() - 1) / c.seq);
    std::vector<double> losses(windows);
    parallel_for(windows, [&](std::size_t w) {
        const std::span<const std::size_t> win(corpus.eval.data() + w * c.seq, c.seq + 1);
        losses[w] = m.loss_value(win);
    });
    double s = 0.0;
    for (double v : losses) s += v;
    return s / static_cast<double>(windows);
}

LmRunResult train_lm(dca::LmModel& model, const RunConfig& c, const Corpus& corpus) {
    if (c.optimizer.lr <= 0.0) throw ConfigError("toy LM needs a positive optimizer.lr");
    const std::filesystem::path dir = c.out_dir;
    std::optional<MetricsWriter> out;
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
        out.emplace(dir / "metrics.jsonl");
    }
    const auto ckpt = dir / "model.ckpt";
    const auto params = params_of(model);
    ad::AdamW adamw({c.optimizer.lr, c.optimizer.beta1, c.optimizer.beta2, c.optimizer.eps, c.optimizer.weight_decay});
    ad::Sgd sgd(c.optimizer.lr);
    Rng data = Rng::stream(c.seed, Stream::Data);
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t span_starts = corpus.train.size() - c.seq;

    LmRunResult r;
    r.eval_loss.emplace_back(0, lm_eval_loss(model, corpus, c));
    for (std::size_t step = 1; step <= c.steps; ++step) {
        std::vector<std::size_t> starts(c.batch);
        for (auto& s : starts) s = data.below(span_starts);
        std::vector<double> losses(c.batch);
        std::vector<ad::GradientMap> grads(c.batch);
        try {
            parallel_for(c.batch, [&](std::size_t b) {
                ad::Tape tape;
                const std::span<const std::size_t> win(corpus.train.data() + starts[b], c.seq + 1);
                const ad::Var loss = model.loss(tape, win);
                losses[b] = loss.value().item();
                grads[b] = tape.backward(loss);
            });
        } catch (const NumericError& e) {
            if (!dir.empty()) save(model, ckpt);
            throw TrainingAborted("toy LM: " + std::string(e.what()) + " at step " + std::to_string(step) +
                                  "; last finite parameters kept");
        }
        ad::GradientMap total;
        double loss = 0.0;
        for (std::size_t b = 0; b < c.batch; ++b) {
            loss += losses[b];
            for (const auto& [p, g] : grads[b].entries()) total.accumulate(p, g);
        }
        const double inv = 1.0 / static_cast<double>(c.batch);
        loss *= inv;
        total.scale_all(inv);
        double norm2 = 0.0;
        for (const auto& [p, g] : total.entries()) norm2 += frobenius_norm_sq(g);
        if (!std::isfinite(loss) || !std::isfinite(norm2)) {
            // Parameters are still those of the previous step.
            if (!dir.empty()) save(model, ckpt);
            throw TrainingAborted("toy LM: non-finite " + std::string(std::isfinite(loss) ? "gradient" : "loss") +
                                  " at step " + std::to_string(step) + "; last finite parameters kept");
        }
        const double lr = scheduled_lr(c.optimizer, step - 1);
        if (c.optimizer.kind == "adamw") {
            adamw.set_lr(lr);
            adamw.step(params, total);
        } else {
            sgd.set_lr(lr);
            sgd.step(params, total);
        }
        r.train_loss.push_back(loss);
        MetricsRecord rec{step, loss, std::nullopt, {{"lr", lr}, {"grad_norm", std::sqrt(norm2)}}};
        if (step % c.eval_every == 0 || step == c.steps) {
            const double ev = lm_eval_loss(model, corpus, c);
            r.eval_loss.emplace_back(step, ev);
            rec.extra.emplace_back("eval_loss", ev);
            rec.extra.emplace_back("perplexity", std::exp(ev));
        }
        if (out) {
            if (c.log_wall_ms) {
                rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
                                  .count();
            }
            out->write(rec);
        }
        if (!dir.empty() && c.checkpoint_every > 0 && step % c.checkpoint_every == 0) save(model, ckpt);
    }
    if (!dir.empty()) save(model, ckpt);
    return r;
}

LmRunResult run_toy_lm(const RunConfig& c) {
    validate(c);
    if (c.task != Task::ToyLm) throw ConfigError("train-lm needs task toy_lm, got " + to_string(c.task));
    const Corpus corpus = load_corpus(c);
    Rng init = Rng::stream(c.seed, Stream::Init);
    dca::LmModel model(lm_config(c), init);
    if (!c.init_checkpoint.empty()) {
        const auto entries = dca::load_checkpoint(c.init_checkpoint);
        const auto params = model.parameters();
        dca::load_into(entries, params);
    }
    if (!c.out_dir.empty()) {
        std::filesystem::create_directories(c.out_dir);
        std::ofstream(std::filesystem::path(c.out_dir) / "config.json") << config_to_json(c).dump(2) << '\n';
    }
    return train_lm(model, c, corpus);
}

RetrofitResult run_retrofit(const RunConfig& c, const std::filesystem::path& checkpoint) {
    validate(c);
    const Corpus corpus = load_corpus(c);
    dca::LmConfig base_cfg = lm_config(c);
    base_cfg.arch = dca::LmArch::Transformer;
    Rng scratch(0);
    dca::LmModel base(base_cfg, scratch);
    {
        const auto entries = dca::load_checkpoint(checkpoint);
        const auto params = base.parameters();
        try {
            dca::load_into(entries, params);
        } catch (const dca::CheckpointError& e) {
            throw ConfigError(std::string("checkpoint does not match a transformer with this config: ") + e.what());
        }
    }
    const auto wrapped = dca::retrofit(base, base_cfg.stack, c.separate_qkv_norms);
    RetrofitResult r;
    r.baseline_eval = lm_eval_loss(base, corpus, c);
    r.retrofit_eval = lm_eval_loss(*wrapped, corpus, c);
    r.baseline_continued = r.baseline_eval;
    r.retrofit_continued = r.retrofit_eval;
    if (c.steps > 0) {
        RunConfig sub = c;
        sub.out_dir = c.out_dir.empty() ? "" : (std::filesystem::path(c.out_dir) / "retrofit").string();
        r.retrofit_continued = train_lm(*wrapped, sub, corpus).final_eval();
        sub.out_dir = c.out_dir.empty() ? "" : (std::filesystem::path(c.out_dir) / "baseline").string();
        r.baseline_continued = train_lm(base, sub, corpus).final_eval();
    }
    return r;
}

}  // namespace grnlab::harness
