// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include "pscone/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "pscone/cones.hpp"

namespace pscone {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double lambda_min(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Shift making W + alpha I comfortably positive definite.
double shift_for(double lmin) { return 1.1 * std::max(0.0, -lmin) + 0.1; }

}  // namespace

double Rng::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (hasSpare_) {
    hasSpare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  hasSpare_ = true;
  return r * std::cos(kTwoPi * u2);
}

BlockArrowProblem gen_block_arrow(const BlockArrowSpec& spec) {
  if (spec.l < 1 || spec.d < 1 || spec.w < 1 || spec.s < 1)
    throw Error("gen_block_arrow: l, d, w, s must all be positive");
  const int l = spec.l, d = spec.d, w = spec.w, s = spec.s;
  const int p = l * d + w;
  const int m = l * s;
  const int r = d + w;

  std::vector<std::vector<int>> cliques(l);
  for (int k = 0; k < l; ++k) {
    for (int t = 0; t < d; ++t) cliques[k].push_back(k * d + t);
    for (int t = 0; t < w; ++t) cliques[k].push_back(l * d + t);
  }
  SparsityPattern V = pattern_of_cliques(p, cliques);
  const int nv = V.nnzLower();

  Rng rng(spec.seed);

  // Rows of block k are dense on its clique submatrix, entries iid N(0, 1).
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m) * svec_len(r));
  for (int k = 0; k < l; ++k)
    for (int i = k * s; i < (k + 1) * s; ++i)
      for (int a = 0; a < r; ++a)
        for (int b = 0; b <= a; ++b) {
          const double v = rng.normal();
          const int slot = V.slot(cliques[k][a], cliques[k][b]);
          trip.emplace_back(i, slot, a == b ? v : std::numbers::sqrt2 * v);
        }
  SpMat A(m, nv);
  A.setFromTriplets(trip.begin(), trip.end());

  // X = W + alpha I with one shift making every clique submatrix positive
  // definite.
  Vec x(nv);
  {
    const auto& ent = V.entries();
    for (int slot = 0; slot < nv; ++slot) {
      const double v = rng.normal();
      x[slot] = ent[slot].first == ent[slot].second ? v : std::numbers::sqrt2 * v;
    }
    double lmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < l; ++k) lmin = std::min(lmin, lambda_min(clique_dense(V, x, cliques[k])));
    const double alpha = shift_for(lmin);
    for (int i = 0; i < p; ++i) x[V.slot(i, i)] += alpha;
  }

  Vec y(m);
  for (int i = 0; i < m; ++i) y[i] = rng.normal();

  // S is assembled per clique from dense W_k + alpha_k I, each block shifted
  // on its own.
  Vec sv = Vec::Zero(nv);
  for (int k = 0; k < l; ++k) {
    Mat Wk(r, r);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b <= a; ++b) {
        const double v = rng.normal();
        Wk(a, b) = v;
        Wk(b, a) = v;
      }
    const double ak = shift_for(lambda_min(Wk));
    Wk.diagonal().array() += ak;
    for (int a = 0; a < r; ++a)
      for (int b = 0; b <= a; ++b) {
        const int slot = V.slot(cliques[k][a], cliques[k][b]);
        sv[slot] += a == b ? Wk(a, b) : std::numbers::sqrt2 * Wk(a, b);
      }
  }

  Vec b = A * x;
  Vec c = sv + Vec(A.transpose() * y);
  ConicLP lp{std::move(V), 0, std::move(A), std::move(b), std::move(c)};
  return {std::move(lp), {std::move(x), std::move(y), std::move(sv)}};
}

EDMInstance gen_sensor_network(int nodes, int dim, int kNN, std::uint64_t seed, double noise) {
  if (nodes < 2) throw Error("gen_sensor_network: need at least two nodes");
  if (dim < 1) throw Error("gen_sensor_network: dimension must be positive");
  if (kNN < 1 || kNN >= nodes) throw Error("gen_sensor_network: kNN must lie in [1, nodes)");

  Rng rng(seed);
  Mat pos(dim, nodes);
  for (int j = 0; j < nodes; ++j)
    for (int i = 0; i < dim; ++i) pos(i, j) = rng.uniform();

  // (i, j) is measured when either endpoint is among the other's kNN nearest;
  // ties break to the lower index.
  std::set<std::pair<int, int>> edgeSet;
  for (int i = 0; i < nodes; ++i) {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(nodes - 1);
    for (int j = 0; j < nodes; ++j)
      if (j != i) dist.emplace_back((pos.col(i) - pos.col(j)).squaredNorm(), j);
    std::sort(dist.begin(), dist.end());
    for (int t = 0; t < kNN; ++t) {
      const int j = dist[t].second;
      edgeSet.insert({std::min(i, j), std::max(i, j)});
    }
  }
  std::vector<std::pair<int, int>> edges(edgeSet.begin(), edgeSet.end());

  Vec meas(static_cast<int>(edges.size()));
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    meas[static_cast<int>(e)] = (pos.col(i) - pos.col(j)).squaredNorm();
    if (noise != 0.0) meas[static_cast<int>(e)] += noise * rng.normal();
  }

  // Gram sparsity: measured pairs among the non-anchor nodes, then a chordal
  // embedding.
  const int p = nodes - 1;
  std::vector<std::pair<int, int>> ent;
  for (const auto& [i, j] : edges)
    if (j < p) ent.emplace_back(j, i);
  EmbedResult emb = chordal_embed(SparsityPattern(p, ent));
  return {nodes, dim, std::move(pos), std::move(edges), std::move(meas), std::move(emb.pattern)};
}

ConicLP build_edm_problem(const EDMInstance& inst) {
  const int p = inst.nodes - 1;
  const SparsityPattern& V = inst.pattern;
  if (V.order() != p) throw BadLengthError("build_edm_problem: pattern order must be nodes - 1");
  const int ne = static_cast<int>(inst.edges.size());
  if (static_cast<int>(inst.measurements.size()) != ne)
    throw BadLengthError("build_edm_problem: one measurement per edge required");

  const int nv = V.nnzLower();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(ne) * 5);
  for (int e = 0; e < ne; ++e) {
    const auto [i, j] = inst.edges[e];
    if (j < p) {
      const int off = V.slot(j, i);
      if (off < 0)
        throw EdgeNotCoveredError("build_edm_problem: measured pair (" + std::to_string(i) +
                                  ", " + std::to_string(j) + ") is outside the embedding");
      trip.emplace_back(e, V.slot(i, i), 1.0);
      trip.emplace_back(e, V.slot(j, j), 1.0);
      trip.emplace_back(e, off, -std::numbers::sqrt2);
    } else {
      // Anchor edge: the fit term is the single diagonal entry X_ii.
      trip.emplace_back(e, V.slot(i, i), 1.0);
    }
    trip.emplace_back(e, nv + 2 * e, -1.0);
    trip.emplace_back(e, nv + 2 * e + 1, 1.0);
  }
  SpMat A(ne, nv + 2 * ne);
  A.setFromTriplets(trip.begin(), trip.end());

  Vec c = Vec::Zero(nv + 2 * ne);
  c.tail(2 * ne).setOnes();
  return {V, 2 * ne, std::move(A), inst.measurements, std::move(c)};
}

FitReport evaluate_fit(const EDMInstance& inst, const Vec& xPattern) {
  const int p = inst.nodes - 1;
  const SparsityPattern& V = inst.pattern;
  if (static_cast<int>(xPattern.size()) != V.nnzLower())
    throw BadLengthError("evaluate_fit: expected one coefficient per pattern slot");

  const int ne = static_cast<int>(inst.edges.size());
  FitReport rep;
  rep.perEdge = Vec::Zero(ne);
  for (int e = 0; e < ne; ++e) {
    const auto [i, j] = inst.edges[e];
    double fit = xPattern[V.slot(i, i)];
    if (j < p) {
      const int off = V.slot(j, i);
      if (off < 0)
        throw EdgeNotCoveredError("evaluate_fit: measured pair (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ") is outside the embedding");
      fit += xPattern[V.slot(j, j)] - std::numbers::sqrt2 * xPattern[off];
    }
    rep.perEdge[e] = std::abs(fit - inst.measurements[e]);
    rep.total += rep.perEdge[e];
  }
  return rep;
}

}  // namespace pscone
