// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "grnlab/autodiff/tape.hpp"
#include "grnlab/grn/combine.hpp"
#include "grnlab/grn/stack.hpp"
#include "grnlab/numerics/rng.hpp"

namespace grnlab::grn {

enum class Arch { Baseline, ResNet, V1, V2, V3 };

std::string to_string(Arch a);
Arch parse_arch(const std::string& s);
bool is_grn(Arch a);
Variant variant_of(Arch a);

enum class Activation { None, Relu };

/// FanIn: down ~ N(0, scale^2 / d), up ~ N(0, scale^2 / r).
/// Balanced: both factors ~ N(0, scale^2 / d), so they start with equal norms.
enum class InitScheme { FanIn, Balanced };

struct LinearModelConfig {
    Arch arch = Arch::ResNet;
    std::size_t d = 0;
    /// One rank per layer; the layer map is z -> act(z * down) * up with
    /// down [d x r] and up [r x d].
    std::vector<std::size_t> ranks;
    Activation activation = Activation::None;
    StackPolicy stack = StackPolicy::full();
    InitScheme init = InitScheme::FanIn;
    double init_scale = 1.0;
};

/// Residual stack of low-rank layers acting on rows: inputs are [N x d].
///
///   Baseline: h <- f_t(h)
///   ResNet:   h <- h + f_t(h)
///   GRN:      g_t = combine(G_t, b_t); push f_t(g_t); y = combine(G_{T+1}, b_{T+1})
class LinearModel {
public:
    LinearModel(LinearModelConfig cfg, Rng& init);
    LinearModel(const LinearModel&) = delete;
    LinearModel& operator=(const LinearModel&) = delete;

    ad::Var forward(ad::Tape& tape, ad::Var x) const;
    Tensor forward(const Tensor& x) const;

    const LinearModelConfig& config() const noexcept { return cfg_; }
    std::vector<ad::Parameter*> parameters();
    std::vector<const ad::Parameter*> parameters() const;
    const ad::Parameter& parameter(const std::string& name) const;
    ad::Parameter& parameter(const std::string& name);

    /// Scalars in the low-rank layer factors.
    std::size_t layer_parameter_count() const;
    /// Scalars in GRN weights (b and w), including the output combine.
    std::size_t grn_parameter_count() const;

private:
    ad::Var layer(ad::Tape& tape, std::size_t t, ad::Var z) const;
    ad::Var mix(ad::Tape& tape, std::size_t t, const LayerStack<ad::Var>& stack) const;

    LinearModelConfig cfg_;
    std::deque<ad::Parameter> params_;
    std::vector<ad::Parameter*> down_, up_, grn_b_, grn_w_;
};

}  // namespace grnlab::grn
