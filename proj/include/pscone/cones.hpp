// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pscone/sparsity.hpp"

namespace pscone {

/// Length of the symmetric vectorization of an order-r matrix.
constexpr int svec_len(int r) { return r * (r + 1) / 2; }

/// Order recovered from a vectorization length; throws BadLengthError when n
/// is not triangular.
int svec_order(int n);

/// Column-major lower-triangular vectorization with off-diagonal entries
/// scaled by sqrt(2), so that dot(svec(X), svec(Y)) = tr(XY).
Vec svec(const Mat& X);
Mat smat(const Vec& x);

/// Vectorization of a pattern-supported symmetric matrix: one coefficient per
/// lower-triangular pattern entry in slot order, off-diagonal entries scaled
/// by sqrt(2).  Entries of X outside the pattern are ignored.
Vec vecV(const SparsityPattern& V, const Mat& X);
Mat matV(const SparsityPattern& V, const Vec& x);

/// Dense clique submatrix X[beta, beta] recovered from a pattern-space vector.
Mat clique_dense(const SparsityPattern& V, const Vec& x, const std::vector<int>& beta);

/// Slots gamma such that x[gamma] = svec(X[beta, beta]) for every
/// pattern-space x.  Throws CliqueNotInPatternError when beta-by-beta is not
/// fully contained in the pattern.
std::vector<int> gamma_from_clique(const SparsityPattern& V, const std::vector<int>& beta);

/// Membership test for the PSD-completable cone: every clique submatrix must
/// be PSD up to a relative tolerance.
bool completable_member(const SparsityPattern& V, const Vec& x, const CliqueTree& tree,
                        double tol = 1e-8);

/// Splits a pattern-supported PSD matrix into per-clique PSD blocks whose
/// scattered sum reproduces it.  Columns of a zero-fill Cholesky factorization
/// are assigned to the clique whose residual holds the eliminated vertex.
/// Throws NotPsdError when the matrix is not PSD on the pattern.
std::vector<Mat> psd_decompose(const SparsityPattern& V, const Vec& x, const CliqueTree& tree);

}  // namespace pscone
