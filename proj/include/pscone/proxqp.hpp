// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "pscone/conversion.hpp"

namespace pscone {

/// sigma-regularized conic QP over a product of PSD and nonnegative blocks:
///
///   minimize    sum_k c_k'x_k + (sigma_k/2) ||x_k - z_k||^2
///   subject to  sum_k A_k x_k = b,   x_k in C_k
///
/// PSD blocks use svec coordinates.  Blocks with sigma_k = 0 carry no
/// quadratic term and their center is ignored.
struct ProxQP {
  std::vector<ConeBlock> blocks;
  std::vector<double> sigma;
  std::vector<SpMat> A;  // each m x blocks[k].len
  Vec b;
  std::vector<Vec> c;
  std::vector<Vec> z;
  int numCliqueBlocks = 0;  // leading blocks eligible for row partitioning
  std::optional<std::vector<std::vector<int>>> rowPartition;
  std::vector<int> blockOffset;  // derived; set_offsets() fills it

  void set_offsets();
  int m() const { return static_cast<int>(b.size()); }
  int ntilde() const { return blockOffset.back(); }
  Eigen::VectorBlock<Vec> seg(Vec& v, int k) const {
    return v.segment(blockOffset[k], blocks[k].len);
  }
  Eigen::VectorBlock<const Vec> seg(const Vec& v, int k) const {
    return v.segment(blockOffset[k], blocks[k].len);
  }
};

/// Assembles the proximal subproblem of a converted problem: replicated
/// clique blocks get weight sigmaCommon, auxiliary blocks weight zero.
ProxQP make_prox_qp(const ConvertedProblem& cp, double sigmaCommon, const Vec& zStacked);

enum class IpmStatus { Optimal, MaxIter, NumericalFailure };

struct IpmConfig {
  double gapTol = 1e-8;
  double feasTol = 1e-8;
  int maxIter = 100;
  double stepFraction = 0.99;
};

struct IpmResult {
  IpmStatus status = IpmStatus::NumericalFailure;
  Vec x;  // stacked primal blocks
  Vec y;
  Vec s;  // stacked dual blocks
  int iterations = 0;
  double pres = 0.0, dres = 0.0, gap = 0.0, objective = 0.0;
};

/// Nesterov-Todd scaling of one block.  For PSD blocks W = Q diag(lam) Q' is
/// the inverse scaling point (W X W = S at the current iterate); for
/// nonnegative blocks lam_i = sqrt(s_i / x_i) and Q is unused.
struct Scaling {
  Mat Q;
  Vec lam;
};

/// Solves one Newton system
///   sigma_k dx_k + W_k dx_k W_k - A_k' dy = R_k,   sum_k A_k dx_k = r
/// by eigendecomposition elimination: per-block kernels 1/(sigma + lam_i
/// lam_j) reduce the system to a Schur complement in dy, factored blockwise
/// along the row partition when one is attached to the problem.
std::pair<Vec, Vec> kkt_solve(const ProxQP& qp, const std::vector<Scaling>& scaling,
                              const Vec& R, const Vec& r);

/// Customized NT-scaled Mehrotra predictor-corrector for ProxQP.
IpmResult solve_prox_qp(const ProxQP& qp, const IpmConfig& cfg = {});

/// Solves a row-partitioned ProxQP as independent subproblems, optionally on
/// a small thread pool.  Results are bitwise identical to sequential
/// execution.  Requires qp.rowPartition.
IpmResult solve_separable(const ProxQP& qp, int threads, const IpmConfig& cfg = {});

}  // namespace pscone
