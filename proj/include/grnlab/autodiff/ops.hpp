// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grnlab/autodiff/tape.hpp"

namespace grnlab::ad {

inline constexpr double kLayerNormEps = 1e-6;

// Operands must live on the same tape. Shape errors are thrown before
// anything is recorded.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
/// a[m x n] + row[n], the row broadcast down every row of a.
Var add_row(Var a, Var row);
/// a[m x n] * row[n] elementwise per row.
Var mul_row(Var a, Var row);
Var scale(Var a, double s);
/// Zero gradient at exactly zero.
Var relu(Var a);
Var transpose(Var a);

/// Softmax along `axis`. Entries equal to -inf receive zero probability;
/// a slice that is entirely -inf is rejected.
Var softmax(Var a, std::size_t axis);
/// (a - mean) / sqrt(var + eps) along `axis`, population variance.
Var layernorm(Var a, std::size_t axis, double eps = kLayerNormEps);

/// Rows of table[V x d] selected by ids; result is [ids.size() x d].
Var gather(Var table, std::span<const std::size_t> ids);
Var sum(Var a);
Var mean(Var a);
/// Mean over rows of -log softmax(logits)[row, target].
Var cross_entropy(Var logits, std::span<const std::size_t> targets);

Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
/// Sets entries above the diagonal of a square score matrix to -inf.
Var causal_mask(Var scores);

}  // namespace grnlab::ad
