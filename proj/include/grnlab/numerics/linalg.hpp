// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "grnlab/numerics/tensor.hpp"

namespace grnlab {

/// Full SVD of a square matrix, m = u * diag(s) * vt.
///
/// Singular values are sorted descending. Each left singular vector has its
/// first significant entry nonnegative (the matching row of vt is flipped
/// with it), which makes the factors deterministic for distinct values.
struct SvdResult {
    Tensor u;   // d x d, orthonormal columns
    Tensor s;   // length d, descending, >= 0
    Tensor vt;  // d x d, orthonormal rows
};

/// Eigendecomposition of a symmetric matrix, values descending, eigenvectors
/// stored as the columns of `vectors` under the same sign convention as SvdResult::u.
struct EigResult {
    Tensor values;
    Tensor vectors;
};

inline constexpr int kMaxJacobiSweeps = 60;
inline constexpr double kDefaultRankTolerance = 1e-8;

/// One-sided (Hestenes) Jacobi SVD. Throws NumericError on non-finite input
/// or when the sweep cap is reached before the columns are orthogonal.
SvdResult svd(const Tensor& m);

/// Cyclic Jacobi eigensolver. Stops once the off-diagonal Frobenius mass falls
/// below 1e-14 * ||m||_F; reaching the sweep cap is an error.
EigResult eigh(const Tensor& m);

/// Truncated SVD U_r S_r V_r^T, the Frobenius-optimal rank-r approximation.
Tensor best_rank_r(const Tensor& m, std::size_t r);
Tensor best_rank_r(const SvdResult& f, std::size_t r);

/// Number of singular values strictly above rel_tol * sigma_1. Rectangular
/// inputs are zero-padded to square, which leaves the nonzero spectrum unchanged.
std::size_t numeric_rank(const Tensor& m, double rel_tol = kDefaultRankTolerance);

/// Orthonormal basis for the column space of a square full-rank matrix
/// (the Q factor of a QR decomposition, with R having a positive diagonal).
Tensor qr_q(const Tensor& m);

Tensor symmetric_part(const Tensor& m);

}  // namespace grnlab
