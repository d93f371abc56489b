// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <ostream>
#include <vector>

#include "pscone/proxqp.hpp"
#include "pscone/sparsity.hpp"

namespace pscone {

/// The prox subproblem failed to reach usable accuracy.
class ProxFailure : public Error {
 public:
  using Error::Error;
};

struct SpingarnConfig {
  double sigma0 = 1.0;
  bool adaptive = true;
  double mu = 2.0;       // residual balance threshold, > 1
  double tauBase = 0.9;  // tau_k = 1 + tauBase^k
  /// A finite value replaces the tau_k schedule by a constant factor.
  double tauConst = std::numeric_limits<double>::quiet_NaN();
  double rho = 1.75;  // relaxation, in (0, 2)
  double epsP = 1e-4;
  double epsD = 1e-4;
  int maxIter = 1000;
  /// Rescale z about xTilde when sigma changes, preserving the implied v.
  bool rescaleZ = true;
  int threads = 1;  // forwarded to solve_separable when a partition exists
  IpmConfig prox;
};

struct LogRecord {
  int iter = 0;
  double sigma = 0.0;
  double relRp = 0.0;
  double relRd = 0.0;
  double objective = 0.0;
  double proxMs = 0.0;
};

/// Iterate state.  All vectors are stacked (length ntilde); on the auxiliary
/// tail blocks, which carry no quadratic weight, z and w track xTilde
/// directly so the residual identities hold on the full vectors.
struct SpingarnState {
  Vec z;       // governing sequence
  Vec xTilde;  // last prox output
  Vec w;       // last projected reflection P_V(2 xTilde - z)
  Vec v;       // sigma (z_prev - xTilde) on clique blocks, 0 on the tail
  Vec rP;      // P_V(xTilde) - xTilde
  Vec rD;      // -P_V(v)
  double sigma = 0.0;
  int iter = 0;
  std::vector<LogRecord> log;
  std::optional<std::vector<std::vector<int>>> partition;
};

enum class SolveStatus { Converged, MaxIter };

struct Solution {
  Vec x;       // averaged original coefficients
  Vec xTilde;  // stacked primal
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  std::vector<LogRecord> log;
};

/// Fresh state at z = 0 with the row partition (if any) detected once.
SpingarnState init_state(const ConvertedProblem& cp, const SpingarnConfig& cfg);

/// One splitting iteration: prox at z, projection, relaxation, residuals,
/// log append.  Throws ProxFailure when the subproblem solve is too coarse.
void step(const ConvertedProblem& cp, SpingarnState& st, const SpingarnConfig& cfg);

/// Residual-balancing steplength update; returns the new sigma and rescales
/// z unless disabled.  Zero residual or iterate norms skip the update.
double update_sigma(SpingarnState& st, const SpingarnConfig& cfg);

/// Runs the splitting loop on an already converted problem.
Solution solve_converted(const ConvertedProblem& cp, const SpingarnConfig& cfg = {});

/// Converts along the clique tree and solves.
Solution solve(const ConicLP& lp, const CliqueTree& tree, const SpingarnConfig& cfg = {},
               Strategy strategy = Strategy::SingleCliqueFirst);

/// Per-iteration convergence log as CSV.
void write_log_csv(std::ostream& os, const std::vector<LogRecord>& log);

}  // namespace pscone
