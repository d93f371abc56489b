// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>
#include <string>

#include "pscone/spingarn.hpp"

using namespace pscone;

namespace {

SpMat sparse_from_triplets(int m, int n, const std::vector<Eigen::Triplet<double>>& t) {
  SpMat A(m, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

struct ArrowInstance {
  ConicLP lp;
  CliqueTree tree;
};

// 5x5 arrow pattern with cliques {0,1,4} and {2,3,4}, two constraint rows per
// clique, and one auxiliary nonnegative column per clique.  Primal and dual
// strictly feasible by construction (identity matrix on both sides).
ArrowInstance arrow_instance(unsigned seed) {
  SparsityPattern V(5, {{1, 0}, {3, 2}, {4, 0}, {4, 1}, {4, 2}, {4, 3}});
  CliqueTree tree = build_clique_tree(extract_cliques(V));
  const int nv = V.nnzLower();
  const int tail = 2;
  const int n = nv + tail;
  const int m = 4;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const std::vector<std::vector<int>> cliques = {{0, 1, 4}, {2, 3, 4}};
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < m; ++r) {
    const auto& cl = cliques[r / 2];
    for (size_t a = 0; a < cl.size(); ++a)
      for (size_t b = 0; b <= a; ++b) trip.emplace_back(r, V.slot(cl[a], cl[b]), g(rng));
    trip.emplace_back(r, nv + r / 2, g(rng));
  }
  SpMat A = sparse_from_triplets(m, n, trip);

  Vec x0 = Vec::Zero(n);
  for (int i = 0; i < 5; ++i) x0[V.slot(i, i)] = 1.0;
  x0[nv] = x0[nv + 1] = 1.0;
  Vec y0(m);
  for (int i = 0; i < m; ++i) y0[i] = g(rng);
  ConicLP lp{V, tail, A, A * x0, Vec(A.transpose() * y0) + x0};
  return {lp, tree};
}

// Plain conic solve of the converted problem: sigma = 0 everywhere and the
// consistency edges appended as equality rows.
IpmResult direct_solve(const ConvertedProblem& cp) {
  ProxQP qp = make_prox_qp(cp, 0.0, Vec::Zero(cp.ntilde()));
  const std::vector<SpMat> B = consistency_rows(cp);
  const int me = static_cast<int>(cp.edges.size());
  const int m = qp.m();
  for (size_t k = 0; k < qp.A.size(); ++k) {
    std::vector<Eigen::Triplet<double>> t;
    for (int r = 0; r < qp.A[k].outerSize(); ++r)
      for (SpMat::InnerIterator it(qp.A[k], r); it; ++it)
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int r = 0; r < B[k].outerSize(); ++r)
      for (SpMat::InnerIterator it(B[k], r); it; ++it)
        t.emplace_back(m + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    qp.A[k] = sparse_from_triplets(m + me, qp.blocks[k].len, t);
  }
  Vec bn = Vec::Zero(m + me);
  bn.head(m) = qp.b;
  qp.b = bn;
  IpmConfig cfg;
  cfg.gapTol = 1e-11;
  cfg.feasTol = 1e-10;
  cfg.maxIter = 200;
  return solve_prox_qp(qp, cfg);
}

ConvertedProblem dense_single_clique(unsigned seed) {
  SparsityPattern V(3, {{1, 0}, {2, 0}, {2, 1}});
  CliqueTree tree = build_clique_tree(extract_cliques(V));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 6; ++s) trip.emplace_back(r, s, g(rng));
  SpMat A = sparse_from_triplets(2, 6, trip);
  Vec x0 = Vec::Zero(6);
  for (int i = 0; i < 3; ++i) x0[V.slot(i, i)] = 1.0;
  Vec y0(2);
  y0 << g(rng), g(rng);
  ConicLP lp{V, 0, A, A * x0, Vec(A.transpose() * y0) + x0};
  return convert(lp, tree, Strategy::SingleCliqueFirst);
}

double max_edge_violation(const ConvertedProblem& cp, const Vec& xt) {
  double worst = 0.0;
  for (const ConsistencyEdge& e : cp.edges) {
    const double a = xt[cp.blockOffset[e.child] + e.childPos];
    const double b = xt[cp.blockOffset[e.parent] + e.parentPos];
    worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

}  // namespace

TEST_CASE("converted block arrow matches the direct conic solve") {
  auto [lp, tree] = arrow_instance(11);
  auto cp = convert(lp, tree, Strategy::SingleCliqueFirst);
  REQUIRE(cp.numCliqueBlocks == 2);
  REQUIRE(cp.blocks.back().kind == BlockKind::NonNeg);
  REQUIRE(cp.edges.size() == 1);

  const IpmResult ref = direct_solve(cp);
  REQUIRE(ref.status == IpmStatus::Optimal);

  SpingarnConfig cfg;
  cfg.epsP = cfg.epsD = 1e-6;
  cfg.maxIter = 3000;
  Solution sol = solve_converted(cp, cfg);
  REQUIRE(sol.status == SolveStatus::Converged);
  CHECK(sol.iterations < cfg.maxIter);
  CHECK(std::abs(sol.objective - ref.objective) <= 1e-3 * (1.0 + std::abs(ref.objective)));
  CHECK((sol.x - restrict_avg(cp, sol.xTilde)).norm() == 0.0);

  // each edge ties two copies of one coefficient, so its violation is at most
  // sqrt(2) times the primal residual norm
  const double scale = std::max(1.0, sol.xTilde.norm());
  const Vec rP = project_V(cp, sol.xTilde) - sol.xTilde;
  CHECK(rP.norm() <= cfg.epsP * scale);
  CHECK(max_edge_violation(cp, sol.xTilde) <= std::sqrt(2.0) * rP.norm() * (1.0 + 1e-12));

  // the log mirrors the run
  REQUIRE(static_cast<int>(sol.log.size()) == sol.iterations);
  CHECK(sol.log.front().iter == 1);
  CHECK(sol.log.back().relRp <= cfg.epsP);
  CHECK(sol.log.back().relRd <= cfg.epsD);
  CHECK(sol.log.back().objective == sol.objective);

  // the ConicLP entry point takes the same path
  Solution viaTree = solve(lp, tree, cfg);
  CHECK(viaTree.objective == sol.objective);
  CHECK(viaTree.iterations == sol.iterations);
}

TEST_CASE("adaptive steplength is optional and other starts still converge") {
  auto [lp, tree] = arrow_instance(11);
  auto cp = convert(lp, tree, Strategy::SingleCliqueFirst);

  SpingarnConfig fixed;
  fixed.adaptive = false;
  fixed.maxIter = 60;
  Solution frozen = solve_converted(cp, fixed);
  for (const LogRecord& r : frozen.log) CHECK(r.sigma == fixed.sigma0);

  SpingarnConfig cold;
  cold.sigma0 = 0.1;
  cold.maxIter = 2000;
  Solution sol = solve_converted(cp, cold);
  CHECK(sol.status == SolveStatus::Converged);

  SpingarnConfig capped;
  capped.maxIter = 1;
  Solution one = solve_converted(cp, capped);
  CHECK(one.status == SolveStatus::MaxIter);
  CHECK(one.iterations == 1);
}

TEST_CASE("error decomposition identity holds until the stopping test") {
  auto [lp, tree] = arrow_instance(7);
  auto cp = convert(lp, tree, Strategy::SingleCliqueFirst);
  SpingarnConfig cfg;
  SpingarnState st = init_state(cp, cfg);
  REQUIRE(st.partition.has_value());
  REQUIRE(st.z.norm() == 0.0);
  const int tailOff = cp.blockOffset[cp.numCliqueBlocks];
  const int tailLen = cp.ntilde() - tailOff;
  REQUIRE(tailLen == 2);

  bool converged = false;
  for (int k = 0; k < 1000 && !converged; ++k) {
    step(cp, st, cfg);
    const LogRecord& rec = st.log.back();
    const double lhs = (st.xTilde - st.w).squaredNorm();
    const double rhs = st.rP.squaredNorm() + st.rD.squaredNorm() / (rec.sigma * rec.sigma);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * lhs);
    // auxiliary blocks track the prox output exactly
    CHECK((st.z - st.xTilde).segment(tailOff, tailLen).norm() == 0.0);
    CHECK((st.w - st.xTilde).segment(tailOff, tailLen).norm() == 0.0);
    CHECK(st.v.segment(tailOff, tailLen).norm() == 0.0);
    converged = rec.relRp <= cfg.epsP && rec.relRd <= cfg.epsD;
    if (!converged) update_sigma(st, cfg);
  }
  CHECK(converged);
}

TEST_CASE("relaxation scales the z update linearly") {
  auto [lp, tree] = arrow_instance(3);
  auto cp = convert(lp, tree, Strategy::SingleCliqueFirst);
  SpingarnConfig base;
  base.adaptive = false;
  SpingarnState st = init_state(cp, base);
  for (int k = 0; k < 3; ++k) step(cp, st, base);

  SpingarnState full = st, half = st;
  SpingarnConfig c1 = base, c2 = base;
  c1.rho = 1.0;
  c2.rho = 1.75;
  step(cp, half, c1);
  step(cp, full, c2);
  CHECK((half.xTilde - full.xTilde).norm() == 0.0);
  CHECK((half.w - full.w).norm() == 0.0);

  const int tailOff = cp.blockOffset[cp.numCliqueBlocks];
  const Vec d1 = half.z - st.z;
  const Vec d2 = full.z - st.z;
  const double sc = std::max(1.0, d1.lpNorm<Eigen::Infinity>());
  CHECK((d2.head(tailOff) - 1.75 * d1.head(tailOff)).lpNorm<Eigen::Infinity>() <= 1e-12 * sc);
  CHECK((half.z - full.z).tail(cp.ntilde() - tailOff).norm() == 0.0);
}

TEST_CASE("single clique runs have zero primal residual throughout") {
  auto cp = dense_single_clique(23);
  REQUIRE(cp.numCliqueBlocks == 1);
  REQUIRE(cp.edges.empty());
  SpingarnConfig cfg;
  cfg.epsP = cfg.epsD = 1e-6;
  cfg.maxIter = 300;
  Solution sol = solve_converted(cp, cfg);
  REQUIRE(sol.status == SolveStatus::Converged);
  for (const LogRecord& r : sol.log) CHECK(r.relRp == 0.0);

  const IpmResult ref = direct_solve(cp);
  REQUIRE(ref.status == IpmStatus::Optimal);
  CHECK(std::abs(sol.objective - ref.objective) <= 1e-4 * (1.0 + std::abs(ref.objective)));
}

TEST_CASE("a zero of the splitting operator is a fixed point of one step") {
  // c lies in the row space, so the strictly interior z is its own prox
  SpMat A = sparse_from_triplets(1, 3, {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}});
  Vec b(1);
  b << 6.0;
  const Vec c = Vec::Constant(3, 2.0);
  auto cp = convert_structure(3, {{0, 1, 2}}, {-1}, {ConeBlock::nonneg(3)}, A, b, c,
                              Strategy::SingleCliqueFirst);
  SpingarnConfig cfg;
  SpingarnState st = init_state(cp, cfg);
  Vec z0(3);
  z0 << 1.0, 2.0, 3.0;
  st.z = z0;
  step(cp, st, cfg);
  CHECK((st.xTilde - z0).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK((st.w - st.xTilde).norm() <= 1e-6);
  CHECK((st.z - z0).norm() <= 1e-5);
  CHECK(st.log.back().relRp <= 1e-7);
  CHECK(st.log.back().relRd <= 1e-6);
}

TEST_CASE("update_sigma follows the balance rule") {
  const auto state_with = [](double rp, double sigma, int iter) {
    SpingarnState st;
    st.xTilde = Vec::Ones(1);
    st.v = Vec::Ones(1);
    st.rD = Vec::Ones(1);
    st.rP = Vec::Constant(1, rp);
    st.z = Vec::Constant(1, 3.0);
    st.sigma = sigma;
    st.iter = iter;
    return st;
  };
  SpingarnConfig cfg;
  cfg.tauConst = 1.5;

  SpingarnState grow = state_with(3.0, 5.0, 1);
  CHECK(update_sigma(grow, cfg) == doctest::Approx(7.5));
  CHECK(grow.z[0] == doctest::Approx(1.0 + (5.0 / 7.5) * 2.0));

  SpingarnState shrink = state_with(0.3, 5.0, 1);
  CHECK(update_sigma(shrink, cfg) == doctest::Approx(10.0 / 3.0));

  SpingarnState hold = state_with(1.0, 5.0, 1);
  CHECK(update_sigma(hold, cfg) == 5.0);
  CHECK(hold.z[0] == 3.0);

  // the default schedule tau_k = 1 + 0.9^k
  SpingarnConfig sched;
  SpingarnState first = state_with(3.0, 5.0, 1);
  CHECK(update_sigma(first, sched) == doctest::Approx(9.5));
  SpingarnState later = state_with(3.0, 5.0, 3);
  CHECK(update_sigma(later, sched) == doctest::Approx(5.0 * 1.729));

  // zero norms skip the update
  SpingarnState idle = state_with(3.0, 5.0, 1);
  idle.v.setZero();
  CHECK(update_sigma(idle, cfg) == 5.0);
  CHECK(idle.z[0] == 3.0);

  // rescaling can be disabled
  SpingarnConfig norescale;
  norescale.tauConst = 1.5;
  norescale.rescaleZ = false;
  SpingarnState frozen = state_with(3.0, 5.0, 1);
  CHECK(update_sigma(frozen, norescale) == doctest::Approx(7.5));
  CHECK(frozen.z[0] == 3.0);
}

TEST_CASE("per-iteration log serializes as csv") {
  auto [lp, tree] = arrow_instance(5);
  SpingarnConfig cfg;
  cfg.maxIter = 4;
  Solution sol = solve(lp, tree, cfg);
  REQUIRE(sol.log.size() == 4);

  std::ostringstream os;
  write_log_csv(os, sol.log);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "iter,sigma,rel_rp,rel_rd,objective,prox_ms");
  int rows = 0;
  while (std::getline(is, line)) {
    if (rows == 0) CHECK(line.rfind("1,", 0) == 0);
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(rows == 4);
}

TEST_CASE("configuration is validated") {
  auto cp = dense_single_clique(2);
  const auto expect_reject = [&](auto mutate) {
    SpingarnConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(init_state(cp, cfg), Error);
  };
  expect_reject([](SpingarnConfig& c) { c.sigma0 = 0.0; });
  expect_reject([](SpingarnConfig& c) { c.mu = 1.0; });
  expect_reject([](SpingarnConfig& c) { c.rho = 2.0; });
  expect_reject([](SpingarnConfig& c) { c.rho = 0.0; });
  expect_reject([](SpingarnConfig& c) { c.epsP = 0.0; });
  expect_reject([](SpingarnConfig& c) { c.maxIter = 0; });
  expect_reject([](SpingarnConfig& c) { c.tauBase = 1.0; });
  expect_reject([](SpingarnConfig& c) { c.tauConst = 1.0; });
  expect_reject([](SpingarnConfig& c) { c.threads = 0; });
}

TEST_CASE("an unsolvable prox subproblem raises ProxFailure") {
  SpMat A = sparse_from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
  Vec b(2);
  b << 1.0, 2.0;  // inconsistent rows
  auto cp = convert_structure(2, {{0, 1}}, {-1}, {ConeBlock::nonneg(2)}, A, b, Vec::Zero(2),
                              Strategy::SingleCliqueFirst);
  SpingarnConfig cfg;
  SpingarnState st = init_state(cp, cfg);
  CHECK_THROWS_AS(step(cp, st, cfg), ProxFailure);
}
