// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>

#include "grnlab/autodiff/tape.hpp"

namespace grnlab::ad {

/// Throws NumericError naming the first parameter whose gradient is not finite.
void require_finite_gradients(const GradientMap& grads);

/// Plain SGD: p -= lr * g. Parameters absent from `grads` are left alone.
class Sgd {
public:
    explicit Sgd(double lr) : lr_(lr) {}
    void step(std::span<Parameter* const> params, const GradientMap& grads);
    double lr() const noexcept { return lr_; }
    void set_lr(double lr) noexcept { lr_ = lr; }

private:
    double lr_;
};

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// AdamW with bias correction and decoupled decay:
///   p <- p - lr * wd * p            (only for parameters with decay())
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
/// A parameter without a gradient this step is treated as having a zero gradient.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}
    void step(std::span<Parameter* const> params, const GradientMap& grads);

    const AdamWConfig& config() const noexcept { return cfg_; }
    void set_lr(double lr) noexcept { cfg_.lr = lr; }
    std::uint64_t steps() const noexcept { return t_; }

private:
    struct Moments {
        Tensor m;
        Tensor v;
    };
    AdamWConfig cfg_;
    std::uint64_t t_ = 0;
    std::unordered_map<const Parameter*, Moments> state_;
};

}  // namespace grnlab::ad
