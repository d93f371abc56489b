// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pscone/cones.hpp"
#include "pscone/problems.hpp"
#include "pscone/spingarn.hpp"

using namespace pscone;

namespace {

double lambda_min(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Gram matrix of the non-anchor nodes relative to the anchor, which fits the
// exact measurements by construction.
Vec gram_vec(const EDMInstance& inst) {
  const int p = inst.nodes - 1;
  Mat D = inst.positions.leftCols(p).colwise() - inst.positions.col(p);
  Mat G = D.transpose() * D;
  return vecV(inst.pattern, G);
}

}  // namespace

TEST_CASE("block arrow instances have the documented shape") {
  BlockArrowProblem prob = gen_block_arrow({3, 2, 1, 2, 7});
  const ConicLP& lp = prob.lp;
  const SparsityPattern& V = lp.pattern;

  CHECK(V.order() == 7);
  CHECK(lp.tail == 0);
  CHECK(lp.m() == 6);
  CHECK(lp.A.cols() == V.nnzLower());

  const std::vector<std::vector<int>> want = {{0, 1, 6}, {2, 3, 6}, {4, 5, 6}};
  CHECK(extract_cliques(V) == want);

  // Row i of block k is supported exactly on the clique's slots.
  for (int k = 0; k < 3; ++k) {
    const std::vector<int> gamma = gamma_from_clique(V, want[k]);
    const std::set<int> expect(gamma.begin(), gamma.end());
    for (int i = 2 * k; i < 2 * k + 2; ++i) {
      std::set<int> got;
      for (SpMat::InnerIterator it(lp.A, i); it; ++it) got.insert(static_cast<int>(it.col()));
      CHECK(got == expect);
    }
  }

  // b matches the trace inner products of the dense reconstructions.
  const Mat X = matV(V, prob.planted.x);
  for (int i = 0; i < lp.m(); ++i) {
    const Mat Fi = matV(V, Vec(lp.A.row(i)));
    CHECK(std::abs((Fi * X).trace() - lp.b[i]) <= 1e-12 * std::max(1.0, std::abs(lp.b[i])));
  }
}

TEST_CASE("planted pair is strictly feasible on both sides") {
  BlockArrowProblem prob = gen_block_arrow({3, 2, 2, 2, 3});
  const ConicLP& lp = prob.lp;
  const SparsityPattern& V = lp.pattern;
  const PlantedPoint& pt = prob.planted;
  const std::vector<std::vector<int>> cliques = extract_cliques(V);
  const CliqueTree tree = build_clique_tree(cliques);

  for (const auto& beta : cliques) CHECK(lambda_min(clique_dense(V, pt.x, beta)) > 0.0);
  CHECK(completable_member(V, pt.x, tree));

  const std::vector<Mat> pieces = psd_decompose(V, pt.s, tree);
  for (const Mat& P : pieces) CHECK(lambda_min(P) >= -1e-10);

  // c = S + A' y exactly, and the duality gap is tr(SX) > 0.
  const Vec resid = lp.c - pt.s - Vec(lp.A.transpose() * pt.y);
  CHECK(resid.lpNorm<Eigen::Infinity>() <= 1e-13 * lp.c.lpNorm<Eigen::Infinity>());
  const double gap = pt.s.dot(pt.x);
  CHECK(gap > 0.0);
  const Mat S = matV(V, pt.s);
  const Mat X = matV(V, pt.x);
  CHECK(std::abs(gap - (S * X).trace()) <= 1e-10 * gap);
  CHECK(std::abs(lp.c.dot(pt.x) - lp.b.dot(pt.y) - gap) <= 1e-10 * gap);
}

TEST_CASE("generation is deterministic in the seed") {
  BlockArrowProblem a = gen_block_arrow({2, 2, 1, 1, 11});
  BlockArrowProblem b = gen_block_arrow({2, 2, 1, 1, 11});
  CHECK(Mat(a.lp.A) == Mat(b.lp.A));
  CHECK(a.lp.b == b.lp.b);
  CHECK(a.lp.c == b.lp.c);
  CHECK(a.planted.x == b.planted.x);
  CHECK(a.planted.y == b.planted.y);
  CHECK(a.planted.s == b.planted.s);

  BlockArrowProblem c = gen_block_arrow({2, 2, 1, 1, 12});
  CHECK(a.lp.b != c.lp.b);
}

TEST_CASE("conversion of a block arrow splits the rows by block") {
  BlockArrowProblem prob = gen_block_arrow({3, 2, 1, 2, 7});
  const CliqueTree tree = build_clique_tree(extract_cliques(prob.lp.pattern));
  const ConvertedProblem cp = convert(prob.lp, tree, Strategy::SingleCliqueFirst);

  CorrelativeReport rep = correlative_pattern(cp);
  REQUIRE(rep.partition.has_value());
  REQUIRE(rep.partition->size() == 3);
  for (int k = 0; k < 3; ++k) {
    const std::vector<int> want = {2 * k, 2 * k + 1};
    CHECK((*rep.partition)[k] == want);
  }
}

TEST_CASE("planted dual certificate pins the optimal value") {
  BlockArrowProblem prob = gen_block_arrow({2, 2, 1, 1, 5});
  ConicLP lp = prob.lp;
  lp.c = Vec(lp.A.transpose() * prob.planted.y);
  const double target = lp.b.dot(prob.planted.y);

  const CliqueTree tree = build_clique_tree(extract_cliques(lp.pattern));
  Solution sol = solve(lp, tree);
  CHECK(sol.status == SolveStatus::Converged);
  CHECK(std::abs(sol.objective - target) <= 1e-4 * std::max(1.0, std::abs(target)));
}

TEST_CASE("three nodes with two neighbors give the complete graph") {
  EDMInstance inst = gen_sensor_network(3, 2, 2, 1);
  const std::vector<std::pair<int, int>> want = {{0, 1}, {0, 2}, {1, 2}};
  CHECK(inst.edges == want);
  for (size_t e = 0; e < inst.edges.size(); ++e) {
    const auto [i, j] = inst.edges[e];
    const double d2 = (inst.positions.col(i) - inst.positions.col(j)).squaredNorm();
    CHECK(inst.measurements[static_cast<int>(e)] == doctest::Approx(d2).epsilon(1e-15));
  }
  CHECK(inst.pattern.order() == 2);
  CHECK(inst.pattern.contains(1, 0));
}

TEST_CASE("neighbor rule and chordality hold on a large network") {
  const int nodes = 500, kNN = 5;
  EDMInstance inst = gen_sensor_network(nodes, 2, kNN, 2);
  CHECK(2.0 * static_cast<double>(inst.edges.size()) / nodes >= kNN);
  CHECK(std::is_sorted(inst.edges.begin(), inst.edges.end()));

  std::vector<std::set<int>> nearest(nodes);
  for (int i = 0; i < nodes; ++i) {
    std::vector<std::pair<double, int>> dist;
    for (int j = 0; j < nodes; ++j)
      if (j != i) dist.emplace_back((inst.positions.col(i) - inst.positions.col(j)).squaredNorm(), j);
    std::sort(dist.begin(), dist.end());
    for (int t = 0; t < kNN; ++t) nearest[i].insert(dist[t].second);
  }
  for (const auto& [i, j] : inst.edges)
    CHECK((nearest[i].count(j) == 1 || nearest[j].count(i) == 1));

  CHECK(mcs(inst.pattern).chordal);
}

TEST_CASE("distance rows follow the fit equation layout") {
  Mat pos(2, 4);
  pos << 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 2.0;
  EDMInstance inst{4, 2, pos, {{0, 1}, {1, 2}, {0, 3}, {2, 3}}, Vec::Zero(4),
                   SparsityPattern(3, {{1, 0}, {2, 1}})};
  inst.measurements << 1.0, 2.0, 3.0, 4.0;

  ConicLP lp = build_edm_problem(inst);
  const SparsityPattern& V = lp.pattern;
  const int nv = V.nnzLower();
  CHECK(lp.tail == 8);
  CHECK(lp.m() == 4);
  CHECK(lp.b == inst.measurements);
  CHECK(lp.c.head(nv).isZero(0.0));
  CHECK(lp.c.tail(8) == Vec::Ones(8));

  Mat A(lp.A);
  Vec row0 = Vec::Zero(lp.n());
  row0[V.slot(0, 0)] = 1.0;
  row0[V.slot(1, 1)] = 1.0;
  row0[V.slot(1, 0)] = -std::numbers::sqrt2;
  row0[nv] = -1.0;
  row0[nv + 1] = 1.0;
  CHECK(Vec(A.row(0)) == row0);

  // Anchor rows only touch the diagonal of the non-anchor endpoint.
  Vec row2 = Vec::Zero(lp.n());
  row2[V.slot(0, 0)] = 1.0;
  row2[nv + 4] = -1.0;
  row2[nv + 5] = 1.0;
  CHECK(Vec(A.row(2)) == row2);

  EDMInstance bare = inst;
  bare.pattern = SparsityPattern(3, {});
  CHECK_THROWS_AS(build_edm_problem(bare), EdgeNotCoveredError);
  CHECK_THROWS_AS(evaluate_fit(bare, Vec::Zero(3)), EdgeNotCoveredError);
}

TEST_CASE("true gram matrix achieves zero misfit") {
  EDMInstance inst = gen_sensor_network(12, 2, 3, 4);
  const Vec g = gram_vec(inst);
  const double sumd = inst.measurements.sum();

  FitReport exact = evaluate_fit(inst, g);
  CHECK(exact.total <= 1e-12 * (1.0 + sumd));
  FitReport zero = evaluate_fit(inst, Vec::Zero(inst.pattern.nnzLower()));
  CHECK(zero.total == doctest::Approx(sumd).epsilon(1e-12));

  const CliqueTree tree = build_clique_tree(extract_cliques(inst.pattern));
  CHECK(completable_member(inst.pattern, g, tree));

  EDMInstance noisy = gen_sensor_network(12, 2, 3, 4, 0.1);
  CHECK(noisy.edges == inst.edges);
  CHECK(noisy.measurements != inst.measurements);
}

TEST_CASE("small distance problem solves to near zero misfit") {
  EDMInstance inst = gen_sensor_network(8, 2, 3, 6);
  ConicLP lp = build_edm_problem(inst);
  const CliqueTree tree = build_clique_tree(extract_cliques(inst.pattern));

  SpingarnConfig cfg;
  cfg.maxIter = 2000;
  Solution sol = solve(lp, tree, cfg);
  CHECK(sol.status == SolveStatus::Converged);

  FitReport fit = evaluate_fit(inst, sol.x.head(inst.pattern.nnzLower()));
  CHECK(fit.total <= 1e-3 * inst.measurements.sum());
}

TEST_CASE("generator arguments are validated") {
  CHECK_THROWS_AS(gen_block_arrow({0, 2, 1, 1, 0}), Error);
  CHECK_THROWS_AS(gen_block_arrow({2, 2, 0, 1, 0}), Error);
  CHECK_THROWS_AS(gen_sensor_network(1, 2, 1, 0), Error);
  CHECK_THROWS_AS(gen_sensor_network(5, 0, 2, 0), Error);
  CHECK_THROWS_AS(gen_sensor_network(5, 2, 0, 0), Error);
  CHECK_THROWS_AS(gen_sensor_network(5, 2, 5, 0), Error);

  EDMInstance inst = gen_sensor_network(5, 2, 2, 0);
  CHECK_THROWS_AS(evaluate_fit(inst, Vec::Zero(inst.pattern.nnzLower() + 1)), BadLengthError);
}
