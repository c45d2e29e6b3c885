// SPDX-License-Identifier: Apache-2.0
#include "grnlab/autodiff/optim.hpp"

#include <cmath>

namespace grnlab::ad {

void require_finite_gradients(const GradientMap& grads) {
    for (const auto& [p, g] : grads.entries()) {
        if (!g.all_finite()) throw NumericError("optimizer: non-finite gradient for parameter '" + p->name() + "'");
    }
}

void Sgd::step(std::span<Parameter* const> params, const GradientMap& grads) {
    require_finite_gradients(grads);
    for (Parameter* p : params) {
        const Tensor* g = grads.find(*p);
        if (!g) continue;
        axpy_inplace(p->value(), -lr_, *g);
    }
}

void AdamW::step(std::span<Parameter* const> params, const GradientMap& grads) {
    require_finite_gradients(grads);
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Parameter* p : params) {
        Tensor& w = p->value();
        auto [it, fresh] = state_.try_emplace(p);
        Moments& s = it->second;
        if (fresh) {
            s.m = Tensor(w.shape());
            s.v = Tensor(w.shape());
        }
        const Tensor* g = grads.find(*p);
        if (g) require_same_shape(w, *g, "adamw");
        const double decay = p->decay() ? cfg_.lr * cfg_.weight_decay : 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g ? (*g)[i] : 0.0;
            s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * gi;
            s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double mhat = s.m[i] / c1;
            const double vhat = s.v[i] / c2;
            w[i] -= decay * w[i];
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace grnlab::ad
