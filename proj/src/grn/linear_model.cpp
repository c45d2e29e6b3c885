// SPDX-License-Identifier: Apache-2.0
#include "grnlab/grn/linear_model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "grnlab/autodiff/ops.hpp"

namespace grnlab::grn {

std::string to_string(Arch a) {
    switch (a) {
        case Arch::Baseline: return "baseline";
        case Arch::ResNet: return "resnet";
        case Arch::V1: return "v1";
        case Arch::V2: return "v2";
        case Arch::V3: return "v3";
    }
    return "?";
}

Arch parse_arch(const std::string& s) {
    if (s == "baseline") return Arch::Baseline;
    if (s == "resnet") return Arch::ResNet;
    if (s == "v1" || s == "grn-v1") return Arch::V1;
    if (s == "v2" || s == "grn-v2") return Arch::V2;
    if (s == "v3" || s == "grn-v3") return Arch::V3;
    throw std::invalid_argument("unknown linear architecture '" + s + "'");
}

bool is_grn(Arch a) { return a == Arch::V1 || a == Arch::V2 || a == Arch::V3; }

Variant variant_of(Arch a) {
    switch (a) {
        case Arch::V1: return Variant::V1;
        case Arch::V2: return Variant::V2;
        case Arch::V3: return Variant::V3;
        default: throw std::invalid_argument("architecture '" + to_string(a) + "' has no GRN variant");
    }
}

LinearModel::LinearModel(LinearModelConfig cfg, Rng& init) : cfg_(std::move(cfg)) {
    if (cfg_.d == 0) throw std::invalid_argument("linear model: d must be positive");
    for (std::size_t t = 0; t < cfg_.ranks.size(); ++t) {
        const std::size_t r = cfg_.ranks[t];
        if (r == 0 || r > cfg_.d) {
            throw std::invalid_argument("linear model: layer " + std::to_string(t + 1) + " rank " + std::to_string(r) +
                                        " outside [1, " + std::to_string(cfg_.d) + "]");
        }
    }
    const std::size_t d = cfg_.d;
    for (std::size_t t = 0; t < cfg_.ranks.size(); ++t) {
        const std::size_t r = cfg_.ranks[t];
        const std::string prefix = "layer" + std::to_string(t + 1);
        params_.emplace_back(prefix + ".down", init.normal_tensor({d, r}, cfg_.init_scale / std::sqrt(double(d))));
        down_.push_back(&params_.back());
        const double up_fan = cfg_.init == InitScheme::Balanced ? double(d) : double(r);
        params_.emplace_back(prefix + ".up", init.normal_tensor({r, d}, cfg_.init_scale / std::sqrt(up_fan)));
        up_.push_back(&params_.back());
    }
    if (is_grn(cfg_.arch)) {
        const Variant v = variant_of(cfg_.arch);
        const std::size_t count = cfg_.ranks.size() + 1;
        for (std::size_t t = 1; t <= count; ++t) {
            const std::size_t width = cfg_.stack.width_after(t);
            const GrnParams p = GrnParams::init(v, d, width);
            const std::string prefix = t == count ? std::string("grn_out") : "grn" + std::to_string(t);
            params_.emplace_back(prefix + ".b", p.b, false);
            grn_b_.push_back(&params_.back());
            if (v == Variant::V3) {
                params_.emplace_back(prefix + ".w", p.w, false);
                grn_w_.push_back(&params_.back());
            }
        }
    }
}

ad::Var LinearModel::layer(ad::Tape& tape, std::size_t t, ad::Var z) const {
    ad::Var h = ad::matmul(z, tape.param(*down_[t]));
    if (cfg_.activation == Activation::Relu) h = ad::relu(h);
    return ad::matmul(h, tape.param(*up_[t]));
}

ad::Var LinearModel::mix(ad::Tape& tape, std::size_t t, const LayerStack<ad::Var>& stack) const {
    const Variant v = variant_of(cfg_.arch);
    ad::Var b = tape.param(*grn_b_[t]);
    ad::Var w = v == Variant::V3 ? tape.param(*grn_w_[t]) : ad::Var{};
    return combine(stack.columns(), v, b, w);
}

ad::Var LinearModel::forward(ad::Tape& tape, ad::Var x) const {
    if (x.value().rank() != 2 || x.value().cols() != cfg_.d) {
        throw ShapeError("linear model: input " + shape_string(x.shape()) + " is not [N x " + std::to_string(cfg_.d) +
                         "]");
    }
    const std::size_t layers = cfg_.ranks.size();
    switch (cfg_.arch) {
        case Arch::Baseline: {
            ad::Var h = x;
            for (std::size_t t = 0; t < layers; ++t) h = layer(tape, t, h);
            return h;
        }
        case Arch::ResNet: {
            ad::Var h = x;
            for (std::size_t t = 0; t < layers; ++t) h = ad::add(h, layer(tape, t, h));
            return h;
        }
        default: {
            LayerStack<ad::Var> stack(cfg_.stack);
            stack.push(x);
            for (std::size_t t = 0; t < layers; ++t) stack.push(layer(tape, t, mix(tape, t, stack)));
            return mix(tape, layers, stack);
        }
    }
}

Tensor LinearModel::forward(const Tensor& x) const {
    ad::Tape tape;
    return forward(tape, tape.constant(x)).value();
}

std::vector<ad::Parameter*> LinearModel::parameters() {
    std::vector<ad::Parameter*> out;
    for (ad::Parameter& p : params_) out.push_back(&p);
    return out;
}

std::vector<const ad::Parameter*> LinearModel::parameters() const {
    std::vector<const ad::Parameter*> out;
    for (const ad::Parameter& p : params_) out.push_back(&p);
    return out;
}

const ad::Parameter& LinearModel::parameter(const std::string& name) const {
    for (const ad::Parameter& p : params_)
        if (p.name() == name) return p;
    throw std::out_of_range("linear model: no parameter named '" + name + "'");
}

ad::Parameter& LinearModel::parameter(const std::string& name) {
    return const_cast<ad::Parameter&>(std::as_const(*this).parameter(name));
}

std::size_t LinearModel::layer_parameter_count() const {
    std::size_t n = 0;
    for (const ad::Parameter* p : down_) n += p->value().size();
    for (const ad::Parameter* p : up_) n += p->value().size();
    return n;
}

std::size_t LinearModel::grn_parameter_count() const {
    std::size_t n = 0;
    for (const ad::Parameter* p : grn_b_) n += p->value().size();
    for (const ad::Parameter* p : grn_w_) n += p->value().size();
    return n;
}

}  // namespace grnlab::grn
