// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "grnlab/autodiff/tape.hpp"
#include "grnlab/numerics/tensor.hpp"

namespace grnlab::grn {

enum class Variant { V1, V2, V3 };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

/// Combination weights for one GRN over a stack of `width` columns of size d.
///   V1: b has shape [width]
///   V2: b has shape [d x width]
///   V3: b has shape [d x width], w has shape [d]
/// Fresh parameters are b = 1 and w = 0, which reproduces a plain residual sum.
struct GrnParams {
    Variant variant = Variant::V1;
    Tensor b;
    Tensor w;

    static GrnParams init(Variant v, std::size_t d, std::size_t width);
    std::size_t width() const;
    std::size_t dim() const;
};

// Tensor-level combine. Every column has the same shape, either [d] or [N x d];
// rows are tokens and the same weights apply to each one.

/// sum_j b[j] * G_j
Tensor combine_v1(std::span<const Tensor> cols, const Tensor& b);
/// out[n, i] = sum_j G_j[n, i] * b[i, j]
Tensor combine_v2(std::span<const Tensor> cols, const Tensor& b);
/// out[n, i] = sum_j G_j[n, i] * (b[i, j] + relu(w . G_j[n, :]))
Tensor combine_v3(std::span<const Tensor> cols, const Tensor& b, const Tensor& w);
Tensor combine(std::span<const Tensor> cols, const GrnParams& p);

/// Differentiable combine recorded as a single fused node. `w` is ignored
/// unless variant is V3. Accumulation runs over columns in stack order from
/// zero, so with unit weights the result is bitwise the left-to-right sum.
ad::Var combine(std::span<const ad::Var> cols, Variant variant, ad::Var b, ad::Var w = {});

}  // namespace grnlab::grn
