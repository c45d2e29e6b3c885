// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "grnlab/autodiff/tape.hpp"

namespace grnlab::ad {

/// A map from a [1 x d] row to a [1 x d] row, built on the tape it is given.
using VectorMap = std::function<Var(Var x)>;

/// J[i][j] = d f_i / d x_j at x (length d), assembled row by row with one
/// seeded reverse sweep per output. Rejects maps whose output size differs from d.
Tensor jacobian(const VectorMap& f, const Tensor& x);

}  // namespace grnlab::ad
