// SPDX-License-Identifier: Apache-2.0
#include "grnlab/harness/figure1.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include "grnlab/autodiff/ops.hpp"
#include "grnlab/autodiff/optim.hpp"
#include "grnlab/dca/checkpoint.hpp"
#include "grnlab/harness/metrics.hpp"

namespace grnlab::harness {
namespace {

Tensor apply_target(const LinearTarget& t, const Tensor& x) {
    Tensor y = matmul(x, t.A);
    for (std::size_t n = 0; n < y.rows(); ++n)
        for (std::size_t i = 0; i < y.cols(); ++i) y(n, i) += t.bias[i];
    return y;
}

double normaliser(const RunConfig& c, const Tensor& x) {
    return c.loss == "mse" ? static_cast<double>(x.size()) : static_cast<double>(x.rows());
}

ad::Var batch_loss(ad::Tape& tape, const RunConfig& c, const grn::LinearModel& m, const Tensor& x, const Tensor& y) {
    const ad::Var diff = ad::sub(m.forward(tape, tape.constant(x)), tape.constant(y));
    return ad::scale(ad::sum(ad::hadamard(diff, diff)), 1.0 / normaliser(c, x));
}

double eval_loss(const RunConfig& c, const grn::LinearModel& m, const Tensor& x, const Tensor& y) {
    return frobenius_norm_sq(sub(m.forward(x), y)) / normaliser(c, x);
}

}  // namespace

LinearTarget make_target(const RunConfig& c) {
    LinearTarget t;
    if (c.task == Task::LinearIdentity) {
        t.A = Tensor::identity(c.d);
        t.bias = Tensor({c.d});
    } else if (c.task == Task::LinearRandomMap) {
        Rng rng = Rng::stream(c.seed, Stream::Task);
        t.A = rng.normal_tensor({c.d, c.d});
        t.bias = rng.normal_tensor({c.d});
    } else {
        throw ConfigError("linear run needs task linear_identity or linear_random_map, got " + to_string(c.task));
    }
    return t;
}

grn::LinearModelConfig linear_model_config(const RunConfig& c) {
    grn::LinearModelConfig m;
    try {
        m.arch = grn::parse_arch(c.arch);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    m.d = c.d;
    m.ranks = c.layer_ranks();
    m.activation = c.activation == "relu" ? grn::Activation::Relu : grn::Activation::None;
    m.stack = c.k ? grn::StackPolicy::first_last(*c.k) : grn::StackPolicy::full();
    m.init = c.init == "balanced" ? grn::InitScheme::Balanced : grn::InitScheme::FanIn;
    m.init_scale = c.init_scale;
    return m;
}

double LinearRunResult::final_eval() const {
    if (eval_loss.empty()) throw std::logic_error("linear run has no evaluations");
    return eval_loss.back().second;
}

double LinearRunResult::eval_at(std::size_t step) const {
    for (const auto& [s, v] : eval_loss)
        if (s == step) return v;
    throw std::out_of_range("no held-out evaluation at step " + std::to_string(step));
}

LinearRunResult run_linear(const RunConfig& c, double lr, const std::filesystem::path& metrics,
                           const std::filesystem::path& checkpoint) {
    validate(c);
    const LinearTarget target = make_target(c);
    Rng init = Rng::stream(c.seed, Stream::Init);
    grn::LinearModel model(linear_model_config(c), init);
    Rng data = Rng::stream(c.seed, Stream::Data);
    Rng held = Rng::stream(c.seed, Stream::Eval);
    const Tensor ex = held.normal_tensor({c.eval_size, c.d});
    const Tensor ey = apply_target(target, ex);

    std::optional<MetricsWriter> out;
    if (!metrics.empty()) out.emplace(metrics);
    const auto t0 = std::chrono::steady_clock::now();

    LinearRunResult r;
    r.arch = c.arch;
    r.lr = lr;
    r.eval_loss.emplace_back(0, eval_loss(c, model, ex, ey));
    ad::Sgd sgd(lr);
    const auto params = model.parameters();
    for (std::size_t step = 1; step <= c.steps; ++step) {
        const Tensor x = data.normal_tensor({c.batch, c.d});
        const Tensor y = apply_target(target, x);
        ad::Tape tape;
        const ad::Var loss = batch_loss(tape, c, model, x, y);
        const double lv = loss.value().item();
        const ad::GradientMap grads = tape.backward(loss);
        if (!std::isfinite(lv)) {
            if (out) throw NumericError("linear run: loss is not finite at step " + std::to_string(step));
            r.diverged = true;
            return r;
        }
        try {
            sgd.step(params, grads);
        } catch (const NumericError&) {
            if (out) throw;
            r.diverged = true;
            return r;
        }
        r.train_loss.push_back(lv);
        MetricsRecord rec{step, lv, std::nullopt, {}};
        if (step % c.eval_every == 0 || step == c.steps) {
            const double ev = eval_loss(c, model, ex, ey);
            if (!std::isfinite(ev)) {
                if (out) throw NumericError("linear run: held-out loss is not finite at step " + std::to_string(step));
                r.diverged = true;
                return r;
            }
            r.eval_loss.emplace_back(step, ev);
            rec.extra.emplace_back("eval_loss", ev);
        }
        if (out) {
            if (c.log_wall_ms) {
                rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
                                  .count();
            }
            out->write(rec);
        }
    }
    if (!checkpoint.empty()) {
        const auto p = std::as_const(model).parameters();
        dca::save_checkpoint(checkpoint, p);
    }
    return r;
}

Figure1Result run_figure1(const RunConfig& c) {
    validate(c);
    Figure1Result res;
    double lr = c.optimizer.lr;
    if (c.optimizer.kind != "sgd") throw ConfigError("figure1 runs use plain SGD (optimizer.kind = \"sgd\")");
    if (lr == 0.0) {
        double best = std::numeric_limits<double>::infinity();
        for (double cand : c.optimizer.lr_grid) {
            const LinearRunResult t = run_linear(c, cand);
            const double v = t.diverged ? std::numeric_limits<double>::infinity() : t.final_eval();
            res.tuning.emplace_back(cand, v);
            if (v < best) {
                best = v;
                lr = cand;
            }
        }
        if (lr == 0.0) throw NumericError("figure1: every learning rate in the grid diverged");
    }
    if (c.out_dir.empty()) {
        res.run = run_linear(c, lr);
    } else {
        const std::filesystem::path dir = c.out_dir;
        std::filesystem::create_directories(dir);
        res.run = run_linear(c, lr, dir / "metrics.jsonl", dir / "model.ckpt");
    }
    if (res.run.diverged) throw NumericError("figure1: training diverged at lr " + std::to_string(lr));
    return res;
}

}  // namespace grnlab::harness
