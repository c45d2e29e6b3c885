// SPDX-License-Identifier: Apache-2.0
#include "grnlab/autodiff/jacobian.hpp"

#include <string>

namespace grnlab::ad {

Tensor jacobian(const VectorMap& f, const Tensor& x) {
    const std::size_t d = x.size();
    if (x.rank() > 2 || (x.rank() == 2 && x.shape()[0] != 1)) {
        throw ShapeError("jacobian: expected a vector input, got " + shape_string(x.shape()));
    }
    Tape tape;
    Var in = tape.input(x.reshaped({1, d}));
    Var out = f(in);
    if (out.value().size() != d) {
        throw ShapeError("jacobian: map is not square, " + std::to_string(d) + " inputs but " +
                         std::to_string(out.value().size()) + " outputs");
    }
    Tensor jac({d, d});
    for (std::size_t i = 0; i < d; ++i) {
        tape.zero_grads();
        Tensor seed(out.shape());
        seed[i] = 1.0;
        tape.backward(out, seed);
        if (!tape.has_grad(in)) continue;
        const Tensor& g = tape.grad(in);
        for (std::size_t j = 0; j < d; ++j) jac(i, j) = g[j];
    }
    return jac;
}

}  // namespace grnlab::ad
