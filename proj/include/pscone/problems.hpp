// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "pscone/conversion.hpp"
#include "pscone/sparsity.hpp"

namespace pscone {

/// Raised when a measured pair falls outside the chordal embedding the
/// distance problem is posed over.
class EdgeNotCoveredError : public Error {
 public:
  using Error::Error;
};

/// Deterministic random stream with a fixed cross-platform draw sequence.
/// Uniforms take the top 53 bits of an mt19937_64 word; normals come from
/// Box-Muller on consecutive uniforms, with the spare cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0, 1).
  double uniform();

  /// Standard normal.
  double normal();

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

/// Block-arrow family: l diagonal blocks of order d glued to a shared arrow
/// head of width w, with s constraint rows per block.
struct BlockArrowSpec {
  int l = 1;
  int d = 1;
  int w = 1;
  int s = 1;
  std::uint64_t seed = 0;
};

/// Strictly feasible primal-dual pair planted by the generator, in pattern
/// coordinates (x = vecV(X), s = vecV(S)).
struct PlantedPoint {
  Vec x;
  Vec y;
  Vec s;
};

struct BlockArrowProblem {
  ConicLP lp;
  PlantedPoint planted;
};

BlockArrowProblem gen_block_arrow(const BlockArrowSpec& spec);

/// Sensor-network distance data.  The last node is the anchor; the Gram
/// variable ranges over the remaining nodes, with its sparsity given by a
/// chordal embedding of the measurement graph restricted to them.
struct EDMInstance {
  int nodes = 0;
  int dim = 0;
  Mat positions;  // dim x nodes ground truth, column per node; may be empty
  std::vector<std::pair<int, int>> edges;  // measured pairs (i, j), i < j
  Vec measurements;                        // squared distance per edge
  SparsityPattern pattern;
};

/// Random points in the unit cube with symmetric k-nearest-neighbor edges:
/// (i, j) is measured when either node ranks among the other's k nearest.
/// Measurements are exact squared distances plus noise * N(0, 1) per edge.
EDMInstance gen_sensor_network(int nodes, int dim, int kNN, std::uint64_t seed,
                               double noise = 0.0);

/// l1 fitting of a completable Gram matrix to the measurements:
/// minimize sum_e (u+_e + u-_e) subject to the per-edge fit equations, with
/// the 2|edges| split variables as the nonnegative tail.
ConicLP build_edm_problem(const EDMInstance& inst);

/// Absolute per-edge misfit of a pattern-coordinate Gram vector.
struct FitReport {
  Vec perEdge;
  double total = 0.0;
};

FitReport evaluate_fit(const EDMInstance& inst, const Vec& xPattern);

}  // namespace pscone
