// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include "pscone/conversion.hpp"

#include <algorithm>
#include <map>

namespace pscone {

namespace {

int position_in(const std::vector<int>& sorted, int value) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), value);
  if (it == sorted.end() || *it != value) return -1;
  return static_cast<int>(it - sorted.begin());
}

}  // namespace

ConvertedProblem convert_structure(int n, const std::vector<std::vector<int>>& gammas,
                                   const std::vector<int>& parent,
                                   const std::vector<ConeBlock>& blocks, const SpMat& A,
                                   const Vec& b, const Vec& c, Strategy strategy) {
  const int L = static_cast<int>(gammas.size());
  if (blocks.size() != gammas.size() || parent.size() != gammas.size())
    throw BadLengthError("gammas, blocks and parent must have equal length");
  if (A.cols() != n || c.size() != n || A.rows() != b.size())
    throw BadLengthError("inconsistent A, b, c dimensions");

  ConvertedProblem cp;
  cp.nOrig = n;
  cp.gammas = gammas;
  cp.blocks = blocks;
  cp.parent = parent;
  cp.numCliqueBlocks = L;
  cp.b = b;

  cp.blockOffset.assign(L + 1, 0);
  for (int k = 0; k < L; ++k) {
    if (!std::is_sorted(cp.gammas[k].begin(), cp.gammas[k].end()))
      throw Error("gamma sets must be sorted");
    if (static_cast<int>(cp.gammas[k].size()) != blocks[k].len)
      throw BadLengthError("gamma length does not match block length");
    cp.blockOffset[k + 1] = cp.blockOffset[k] + blocks[k].len;
  }

  cp.multiplicity.assign(n, 0);
  for (const auto& g : cp.gammas)
    for (int s : g) {
      if (s < 0 || s >= n) throw Error("gamma slot out of range");
      ++cp.multiplicity[s];
    }
  for (int s = 0; s < n; ++s)
    if (cp.multiplicity[s] == 0)
      throw UnsupportedRowError("coefficient " + std::to_string(s) +
                                " is not covered by any block");

  // Consistency edges: alpha_k = gamma_k intersected with the parent's gamma.
  // The slot-level running intersection property is validated at the same
  // time (copies of a slot must induce a subtree).
  std::vector<int> sepCount(n, 0);
  for (int k = 0; k < L; ++k) {
    if (parent[k] < 0) continue;
    if (parent[k] >= L || parent[k] == k) throw Error("bad parent index");
    for (int pos = 0; pos < static_cast<int>(cp.gammas[k].size()); ++pos) {
      const int s = cp.gammas[k][pos];
      const int ppos = position_in(cp.gammas[parent[k]], s);
      if (ppos >= 0) {
        cp.edges.push_back({k, pos, parent[k], ppos});
        ++sepCount[s];
      }
    }
  }
  for (int s = 0; s < n; ++s)
    if (sepCount[s] != cp.multiplicity[s] - 1)
      throw RipViolationError("copies of coefficient " + std::to_string(s) +
                              " do not form a subtree");

  // Residual masks for the separator-subtraction rule: keep a slot in block k
  // iff the parent block does not also hold it.
  std::vector<std::vector<bool>> keep(L);
  for (int k = 0; k < L; ++k) keep[k].assign(cp.gammas[k].size(), true);
  for (const auto& e : cp.edges) keep[e.child][e.childPos] = false;

  // Per-slot owner list for single-clique row placement.
  std::vector<std::vector<int>> owners(n);
  for (int k = 0; k < L; ++k)
    for (int s : cp.gammas[k]) owners[s].push_back(k);

  std::vector<std::vector<Eigen::Triplet<double>>> trips(L);
  for (int i = 0; i < A.outerSize(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (SpMat::InnerIterator it(A, i); it; ++it)
      if (it.value() != 0.0) row.emplace_back(static_cast<int>(it.col()), it.value());
    if (row.empty()) continue;

    // Slots whose unique owner is a nonnegative block are auxiliary: they are
    // pinned to that owner and do not constrain the single-clique fit.
    int target = -1;
    std::vector<std::pair<int, double>> core, pinned;
    if (strategy == Strategy::SingleCliqueFirst) {
      for (const auto& sv : row) {
        const bool aux = cp.multiplicity[sv.first] == 1 &&
                         blocks[owners[sv.first][0]].kind == BlockKind::NonNeg;
        (aux ? pinned : core).push_back(sv);
      }
      // smallest block whose gamma covers the core of the row; ties to lowest
      // index
      size_t bestSize = 0;
      if (!core.empty())
        for (int k : owners[core[0].first]) {
          bool covers = true;
          for (const auto& [s, v] : core)
            if (position_in(cp.gammas[k], s) < 0) {
              covers = false;
              break;
            }
          if (covers && (target < 0 || cp.gammas[k].size() < bestSize)) {
            target = k;
            bestSize = cp.gammas[k].size();
          }
        }
    }
    if (target >= 0) {
      for (const auto& [s, v] : core)
        trips[target].emplace_back(i, position_in(cp.gammas[target], s), v);
      for (const auto& [s, v] : pinned)
        trips[owners[s][0]].emplace_back(i, position_in(cp.gammas[owners[s][0]], s), v);
    } else {
      for (const auto& [s, v] : row)
        for (int k : owners[s]) {
          const int pos = position_in(cp.gammas[k], s);
          if (keep[k][pos]) trips[k].emplace_back(i, pos, v);
        }
    }
  }

  cp.Ablocks.resize(L);
  cp.cblocks.resize(L);
  for (int k = 0; k < L; ++k) {
    cp.Ablocks[k] = SpMat(A.rows(), blocks[k].len);
    cp.Ablocks[k].setFromTriplets(trips[k].begin(), trips[k].end());
    cp.cblocks[k] = Vec::Zero(blocks[k].len);
  }
  // The objective is always split by separator subtraction so that its
  // scattered sum reproduces c exactly.
  for (int k = 0; k < L; ++k)
    for (int pos = 0; pos < static_cast<int>(cp.gammas[k].size()); ++pos)
      if (keep[k][pos]) cp.cblocks[k][pos] = c[cp.gammas[k][pos]];

  return cp;
}

ConvertedProblem convert(const ConicLP& lp, const CliqueTree& tree, Strategy strategy) {
  const int nV = lp.pattern.nnzLower();
  std::vector<std::vector<int>> gammas;
  std::vector<ConeBlock> blocks;
  std::vector<int> parent;
  for (int k = 0; k < tree.size(); ++k) {
    gammas.push_back(gamma_from_clique(lp.pattern, tree.cliques[k]));
    blocks.push_back(ConeBlock::psd(static_cast<int>(tree.cliques[k].size())));
    parent.push_back(tree.parent[k]);
  }
  int numClique = tree.size();
  if (lp.tail > 0) {
    std::vector<int> g(lp.tail);
    for (int t = 0; t < lp.tail; ++t) g[t] = nV + t;
    gammas.push_back(std::move(g));
    blocks.push_back(ConeBlock::nonneg(lp.tail));
    parent.push_back(-1);
  }
  ConvertedProblem cp = convert_structure(lp.n(), gammas, parent, blocks, lp.A, lp.b, lp.c,
                                          strategy);
  cp.numCliqueBlocks = numClique;
  // drop consistency edges that would tie the tail to anything (none exist by
  // construction since tail slots are owned by exactly one block)
  return cp;
}

Vec expand(const ConvertedProblem& cp, const Vec& x) {
  if (x.size() != cp.nOrig) throw BadLengthError("expand: wrong input length");
  Vec xt(cp.ntilde());
  for (size_t k = 0; k < cp.gammas.size(); ++k) {
    double* out = xt.data() + cp.blockOffset[k];
    for (size_t t = 0; t < cp.gammas[k].size(); ++t) out[t] = x[cp.gammas[k][t]];
  }
  return xt;
}

Vec restrict_avg(const ConvertedProblem& cp, const Vec& xt) {
  if (xt.size() != cp.ntilde()) throw BadLengthError("restrict: wrong input length");
  Vec x = Vec::Zero(cp.nOrig);
  for (size_t k = 0; k < cp.gammas.size(); ++k) {
    const double* in = xt.data() + cp.blockOffset[k];
    for (size_t t = 0; t < cp.gammas[k].size(); ++t) x[cp.gammas[k][t]] += in[t];
  }
  for (int s = 0; s < cp.nOrig; ++s) x[s] /= cp.multiplicity[s];
  return x;
}

Vec project_V(const ConvertedProblem& cp, const Vec& xt) {
  return expand(cp, restrict_avg(cp, xt));
}

CorrelativeReport correlative_pattern(const ConvertedProblem& cp) {
  const int m = cp.m();
  CorrelativeReport rep;
  rep.m = m;
  rep.nz.assign(m, std::vector<bool>(m, false));
  for (int i = 0; i < m; ++i) rep.nz[i][i] = true;

  const int L = static_cast<int>(cp.blocks.size());
  std::vector<std::vector<int>> denseRows(L);
  std::vector<std::vector<int>> rowDense(m);
  for (int k = 0; k < L; ++k) {
    std::vector<int> rows;
    for (int i = 0; i < cp.Ablocks[k].outerSize(); ++i) {
      SpMat::InnerIterator it(cp.Ablocks[k], i);
      if (it) rows.push_back(i);
    }
    if (cp.blocks[k].kind == BlockKind::NonNeg) {
      // diagonal scaling: rows couple only through shared columns
      std::map<int, std::vector<int>> colRows;
      for (int i : rows)
        for (SpMat::InnerIterator it(cp.Ablocks[k], i); it; ++it)
          colRows[static_cast<int>(it.col())].push_back(i);
      for (const auto& [col, rs] : colRows)
        for (size_t a = 0; a < rs.size(); ++a)
          for (size_t b = 0; b < rs.size(); ++b) rep.nz[rs[a]][rs[b]] = true;
    } else {
      for (size_t a = 0; a < rows.size(); ++a)
        for (size_t b = 0; b < rows.size(); ++b) rep.nz[rows[a]][rows[b]] = true;
      denseRows[k] = rows;
      for (int i : rows) rowDense[i].push_back(k);
    }
  }

  // Partition: every row in exactly one dense block, and auxiliary columns
  // shared only within a group.
  bool ok = true;
  for (int i = 0; i < m && ok; ++i)
    if (rowDense[i].size() != 1) ok = false;
  if (ok) {
    std::vector<std::vector<int>> part(cp.numCliqueBlocks);
    for (int i = 0; i < m; ++i) {
      int k = rowDense[i][0];
      if (k >= cp.numCliqueBlocks) {
        ok = false;
        break;
      }
      part[k].push_back(i);
    }
    for (int k = cp.numCliqueBlocks; k < L && ok; ++k) {
      std::map<int, int> colGroup;
      for (int i = 0; i < cp.Ablocks[k].outerSize() && ok; ++i)
        for (SpMat::InnerIterator it(cp.Ablocks[k], i); it; ++it) {
          auto [pos, inserted] = colGroup.try_emplace(static_cast<int>(it.col()),
                                                      rowDense[i][0]);
          if (!inserted && pos->second != rowDense[i][0]) {
            ok = false;
            break;
          }
        }
    }
    if (ok) rep.partition = std::move(part);
  }
  return rep;
}

ConicLP relax_to_pattern(const ConicLP& lp, const SparsityPattern& bigger) {
  const SparsityPattern& V = lp.pattern;
  if (bigger.order() != V.order())
    throw Error("relax_to_pattern: pattern orders must match");
  const int nv = V.nnzLower();
  const int nvBig = bigger.nnzLower();
  std::vector<int> map(nv);
  for (int s = 0; s < nv; ++s) {
    const auto [i, j] = V.entries()[s];
    map[s] = bigger.slot(i, j);
    if (map[s] < 0) throw Error("relax_to_pattern: target pattern misses an entry");
  }
  auto col = [&](int c) { return c < nv ? map[c] : nvBig + (c - nv); };

  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < lp.A.outerSize(); ++r)
    for (SpMat::InnerIterator it(lp.A, r); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), col(static_cast<int>(it.col())), it.value());
  SpMat A(lp.m(), nvBig + lp.tail);
  A.setFromTriplets(trip.begin(), trip.end());

  Vec c = Vec::Zero(nvBig + lp.tail);
  for (int s = 0; s < nv; ++s) c[map[s]] = lp.c[s];
  c.tail(lp.tail) = lp.c.tail(lp.tail);
  return {bigger, lp.tail, std::move(A), lp.b, std::move(c)};
}

std::vector<SpMat> consistency_rows(const ConvertedProblem& cp) {
  const int ne = static_cast<int>(cp.edges.size());
  std::vector<std::vector<Eigen::Triplet<double>>> trips(cp.blocks.size());
  for (int e = 0; e < ne; ++e) {
    const auto& ed = cp.edges[e];
    trips[ed.child].emplace_back(e, ed.childPos, 1.0);
    trips[ed.parent].emplace_back(e, ed.parentPos, -1.0);
  }
  std::vector<SpMat> rows(cp.blocks.size());
  for (size_t k = 0; k < cp.blocks.size(); ++k) {
    rows[k] = SpMat(ne, cp.blocks[k].len);
    rows[k].setFromTriplets(trips[k].begin(), trips[k].end());
  }
  return rows;
}

}  // namespace pscone
