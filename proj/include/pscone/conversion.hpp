// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "pscone/cones.hpp"

namespace pscone {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class BlockKind { Psd, NonNeg, Generic };

struct ConeBlock {
  BlockKind kind = BlockKind::Generic;
  int order = 0;  // matrix order, PSD blocks only
  int len = 0;    // vector length of the block

  static ConeBlock psd(int order) { return {BlockKind::Psd, order, svec_len(order)}; }
  static ConeBlock nonneg(int len) { return {BlockKind::NonNeg, 0, len}; }
  static ConeBlock generic(int len) { return {BlockKind::Generic, 0, len}; }
};

/// Conic LP over a matrix-cone pattern with an optional nonnegative tail:
/// minimize c'x subject to Ax = b, matV(x) in the PSD-completable cone,
/// tail(x) >= 0.  Columns 0..nnzLower-1 of A are pattern slots (vecV
/// scaling), the remaining `tail` columns are the orthant part.
struct ConicLP {
  SparsityPattern pattern;
  int tail = 0;
  SpMat A;
  Vec b;
  Vec c;

  int n() const { return pattern.nnzLower() + tail; }
  int m() const { return static_cast<int>(A.rows()); }
};

enum class Strategy { SingleCliqueFirst, SeparatorSubtraction };

/// One equalized coefficient pair x_child[childPos] = x_parent[parentPos].
struct ConsistencyEdge {
  int child = 0;
  int childPos = 0;
  int parent = 0;
  int parentPos = 0;
};

/// Clique-wise reformulation of a partially separable conic LP.  Blocks
/// 0..numCliqueBlocks-1 carry the replicated clique variables; an optional
/// trailing block carries auxiliary (non-replicated) variables.
struct ConvertedProblem {
  int nOrig = 0;
  std::vector<std::vector<int>> gammas;  // per block: original coefficient slots
  std::vector<ConeBlock> blocks;
  std::vector<int> parent;  // per clique block, -1 at roots
  int numCliqueBlocks = 0;
  std::vector<SpMat> Ablocks;  // each m x blocks[k].len
  Vec b;
  std::vector<Vec> cblocks;
  std::vector<ConsistencyEdge> edges;
  std::vector<int> multiplicity;  // per original slot
  std::vector<int> blockOffset;   // size blocks+1; stacked layout

  int ntilde() const { return blockOffset.back(); }
  int m() const { return static_cast<int>(b.size()); }
};

/// Converts a matrix-cone LP along a clique tree of its pattern.
ConvertedProblem convert(const ConicLP& lp, const CliqueTree& tree, Strategy strategy);

/// Re-indexes lp onto a pattern containing all of its entries.  The added
/// slots are free completion entries: zero cost and untouched by A, so the
/// feasible set and optimal value are unchanged.
ConicLP relax_to_pattern(const ConicLP& lp, const SparsityPattern& bigger);

/// Vector-level conversion for a general partially separable structure with
/// explicit index sets and tree.  Used directly by tests and by convert().
ConvertedProblem convert_structure(int n, const std::vector<std::vector<int>>& gammas,
                                   const std::vector<int>& parent,
                                   const std::vector<ConeBlock>& blocks, const SpMat& A,
                                   const Vec& b, const Vec& c, Strategy strategy);

/// x (length nOrig) -> stacked copies (length ntilde).
Vec expand(const ConvertedProblem& cp, const Vec& x);

/// Stacked vector -> averaged original coefficients.
Vec restrict_avg(const ConvertedProblem& cp, const Vec& xt);

/// Orthogonal projection onto the consistency subspace,
/// project_V = expand . restrict_avg.
Vec project_V(const ConvertedProblem& cp, const Vec& xt);

/// Correlative sparsity of the Schur complement: entry (i, j) is set when
/// rows i and j interact through a common block.  Dense-fill blocks (PSD or
/// generic) couple any two rows touching them; nonnegative blocks couple rows
/// only through shared columns.  The partition is present iff every row
/// touches exactly one dense-fill block and auxiliary columns are not shared
/// across groups.
struct CorrelativeReport {
  int m = 0;
  std::vector<std::vector<bool>> nz;
  std::optional<std::vector<std::vector<int>>> partition;  // rows per clique block
};

CorrelativeReport correlative_pattern(const ConvertedProblem& cp);

/// Equality-row form of the consistency constraints: per-block matrices B_k
/// (one row per consistency edge) such that sum_k B_k xt_k = 0 encodes the
/// subspace V.  Used to pose the converted problem as one plain conic LP.
std::vector<SpMat> consistency_rows(const ConvertedProblem& cp);

}  // namespace pscone
