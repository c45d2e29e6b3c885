// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "grnlab/autodiff/tape.hpp"

namespace grnlab::dca {

/// Causal multi-head scaled dot-product attention on already projected
/// q, k, v of shape [seq x d]. Head h uses columns [h*dh, (h+1)*dh) with
/// dh = d / heads; position i attends to positions j <= i.
ad::Var causal_attention(ad::Var q, ad::Var k, ad::Var v, std::size_t heads);

}  // namespace grnlab::dca
