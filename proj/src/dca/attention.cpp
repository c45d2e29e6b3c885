// SPDX-License-Identifier: Apache-2.0
#include "grnlab/dca/attention.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "grnlab/autodiff/ops.hpp"

namespace grnlab::dca {

ad::Var causal_attention(ad::Var q, ad::Var k, ad::Var v, std::size_t heads) {
    const Shape& s = q.shape();
    if (s.size() != 2 || k.shape() != s || v.shape() != s) {
        throw ShapeError("attention: q, k, v must share one [seq x d] shape, got " + shape_string(s) + ", " +
                         shape_string(k.shape()) + ", " + shape_string(v.shape()));
    }
    const std::size_t d = s[1];
    if (heads == 0 || d % heads != 0) {
        throw ShapeError("attention: width " + std::to_string(d) + " is not divisible by " + std::to_string(heads) +
                         " heads");
    }
    const std::size_t dh = d / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<ad::Var> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t lo = h * dh, hi = lo + dh;
        ad::Var qh = heads == 1 ? q : ad::slice_cols(q, lo, hi);
        ad::Var kh = heads == 1 ? k : ad::slice_cols(k, lo, hi);
        ad::Var vh = heads == 1 ? v : ad::slice_cols(v, lo, hi);
        ad::Var scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt);
        ad::Var probs = ad::softmax(ad::causal_mask(scores), 1);
        outs.push_back(ad::matmul(probs, vh));
    }
    return heads == 1 ? outs[0] : ad::concat_cols(outs);
}

}  // namespace grnlab::dca
