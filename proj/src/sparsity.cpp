// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include "pscone/sparsity.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace pscone {

SparsityPattern::SparsityPattern(int order, const std::vector<std::pair<int, int>>& entries)
    : order_(order) {
  if (order <= 0) throw Error("pattern order must be positive");
  std::vector<std::set<int>> cols(order);
  for (int j = 0; j < order; ++j) cols[j].insert(j);  // diagonal always present
  for (auto [i, j] : entries) {
    if (i < 0 || j < 0 || i >= order || j >= order)
      throw Error("pattern entry out of range");
    if (i < j) std::swap(i, j);
    cols[j].insert(i);
  }
  colOffset_.assign(order + 1, 0);
  colRows_.resize(order);
  adj_.assign(order, {});
  for (int j = 0; j < order; ++j) {
    colRows_[j].assign(cols[j].begin(), cols[j].end());
    colOffset_[j + 1] = colOffset_[j] + static_cast<int>(colRows_[j].size());
    for (int i : colRows_[j]) {
      entries_.emplace_back(i, j);
      if (i != j) {
        adj_[i].push_back(j);
        adj_[j].push_back(i);
      }
    }
  }
  for (auto& a : adj_) std::sort(a.begin(), a.end());
}

int SparsityPattern::slot(int i, int j) const {
  if (i < j) std::swap(i, j);
  if (j < 0 || i >= order_) return -1;
  const auto& rows = colRows_[j];
  auto it = std::lower_bound(rows.begin(), rows.end(), i);
  if (it == rows.end() || *it != i) return -1;
  return colOffset_[j] + static_cast<int>(it - rows.begin());
}

bool SparsityPattern::hasEdge(int i, int j) const {
  return i != j && contains(i, j);
}

McsResult mcs(const SparsityPattern& pattern) {
  const int p = pattern.order();
  std::vector<int> weight(p, 0);
  std::vector<bool> numbered(p, false);
  McsResult res;
  res.order.assign(p, -1);
  // Visit vertices in order of decreasing final position; the reverse of the
  // visit order is a PEO when the graph is chordal.
  for (int pos = p - 1; pos >= 0; --pos) {
    int best = -1;
    for (int v = 0; v < p; ++v) {
      if (numbered[v]) continue;
      if (best < 0 || weight[v] > weight[best]) best = v;
    }
    numbered[best] = true;
    res.order[pos] = best;
    for (int u : pattern.adj()[best])
      if (!numbered[u]) ++weight[u];
  }
  res.chordal = is_peo(pattern, res.order);
  return res;
}

bool is_peo(const SparsityPattern& pattern, const std::vector<int>& order) {
  const int p = pattern.order();
  if (static_cast<int>(order.size()) != p) return false;
  std::vector<int> pos(p, -1);
  for (int k = 0; k < p; ++k) {
    int v = order[k];
    if (v < 0 || v >= p || pos[v] >= 0) return false;
    pos[v] = k;
  }
  for (int k = 0; k < p; ++k) {
    const int v = order[k];
    int follower = -1;  // later neighbor with the earliest position
    for (int u : pattern.adj()[v])
      if (pos[u] > k && (follower < 0 || pos[u] < pos[follower])) follower = u;
    if (follower < 0) continue;
    for (int u : pattern.adj()[v]) {
      if (pos[u] <= k || u == follower) continue;
      if (!pattern.hasEdge(follower, u)) return false;
    }
  }
  return true;
}

namespace {

EmbedResult eliminate(const SparsityPattern& pattern, const std::vector<int>& order) {
  const int p = pattern.order();
  std::vector<std::set<int>> adj(p);
  for (int v = 0; v < p; ++v)
    adj[v] = std::set<int>(pattern.adj()[v].begin(), pattern.adj()[v].end());
  std::vector<bool> gone(p, false);
  std::vector<std::pair<int, int>> fill;
  for (int v : order) {
    std::vector<int> nb;
    for (int u : adj[v])
      if (!gone[u]) nb.push_back(u);
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) {
        if (!adj[nb[a]].count(nb[b])) {
          adj[nb[a]].insert(nb[b]);
          adj[nb[b]].insert(nb[a]);
          fill.emplace_back(std::max(nb[a], nb[b]), std::min(nb[a], nb[b]));
        }
      }
    gone[v] = true;
  }
  std::vector<std::pair<int, int>> entries = pattern.entries();
  entries.insert(entries.end(), fill.begin(), fill.end());
  EmbedResult res{SparsityPattern(p, entries), order, static_cast<int>(fill.size())};
  return res;
}

std::vector<int> min_degree_order(const SparsityPattern& pattern) {
  const int p = pattern.order();
  std::vector<std::set<int>> adj(p);
  for (int v = 0; v < p; ++v)
    adj[v] = std::set<int>(pattern.adj()[v].begin(), pattern.adj()[v].end());
  std::vector<bool> gone(p, false);
  std::vector<int> order;
  order.reserve(p);
  for (int step = 0; step < p; ++step) {
    int best = -1;
    size_t bestDeg = 0;
    for (int v = 0; v < p; ++v) {
      if (gone[v]) continue;
      if (best < 0 || adj[v].size() < bestDeg) {
        best = v;
        bestDeg = adj[v].size();
      }
    }
    order.push_back(best);
    std::vector<int> nb(adj[best].begin(), adj[best].end());
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) {
        adj[nb[a]].insert(nb[b]);
        adj[nb[b]].insert(nb[a]);
      }
    for (int u : nb) adj[u].erase(best);
    gone[best] = true;
  }
  return order;
}

}  // namespace

EmbedResult chordal_embed(const SparsityPattern& pattern, EmbedHeuristic heuristic) {
  switch (heuristic) {
    case EmbedHeuristic::McsThenMinDegree: {
      McsResult m = mcs(pattern);
      if (m.chordal) return EmbedResult{pattern, m.order, 0};
      return eliminate(pattern, min_degree_order(pattern));
    }
    case EmbedHeuristic::MinDegree:
      return eliminate(pattern, min_degree_order(pattern));
    case EmbedHeuristic::Natural: {
      std::vector<int> order(pattern.order());
      std::iota(order.begin(), order.end(), 0);
      return eliminate(pattern, order);
    }
  }
  throw Error("unknown embed heuristic");
}

EmbedResult chordal_embed(const SparsityPattern& pattern, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != pattern.order())
    throw BadLengthError("elimination order length does not match pattern order");
  return eliminate(pattern, order);
}

std::vector<std::vector<int>> extract_cliques(const SparsityPattern& pattern,
                                              const std::vector<int>& peo) {
  const int p = pattern.order();
  if (!is_peo(pattern, peo))
    throw NotChordalError("ordering is not a perfect elimination ordering");
  std::vector<int> pos(p);
  for (int k = 0; k < p; ++k) pos[peo[k]] = k;
  // later[v] = higher-position neighbors of v; v plus later[v] is a clique.
  std::vector<std::vector<int>> later(p);
  for (int v = 0; v < p; ++v)
    for (int u : pattern.adj()[v])
      if (pos[u] > pos[v]) later[v].push_back(u);
  // Representative test: the clique of v is dominated iff some earlier vertex
  // u has v as its first follower and |later(u)| == |later(v)| + 1.
  std::vector<bool> dominated(p, false);
  for (int u = 0; u < p; ++u) {
    if (later[u].empty()) continue;
    int v = later[u][0];
    for (int w : later[u])
      if (pos[w] < pos[v]) v = w;
    if (later[u].size() == later[v].size() + 1) dominated[v] = true;
  }
  std::vector<std::vector<int>> cliques;
  for (int k = 0; k < p; ++k) {
    const int v = peo[k];
    if (dominated[v]) continue;
    std::vector<int> c = later[v];
    c.push_back(v);
    std::sort(c.begin(), c.end());
    cliques.push_back(std::move(c));
  }
  std::sort(cliques.begin(), cliques.end());
  return cliques;
}

std::vector<std::vector<int>> extract_cliques(const SparsityPattern& pattern) {
  McsResult m = mcs(pattern);
  if (!m.chordal) throw NotChordalError("pattern is not chordal");
  return extract_cliques(pattern, m.order);
}

namespace {

std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void finalize_tree(CliqueTree& t) {
  const int l = t.size();
  t.separators.assign(l, {});
  t.residuals.assign(l, {});
  t.treeWeight = 0;
  for (int k = 0; k < l; ++k) {
    if (t.parent[k] >= 0) {
      t.separators[k] = intersect_sorted(t.cliques[k], t.cliques[t.parent[k]]);
      t.treeWeight += static_cast<long long>(t.separators[k].size());
    }
    std::set_difference(t.cliques[k].begin(), t.cliques[k].end(), t.separators[k].begin(),
                        t.separators[k].end(), std::back_inserter(t.residuals[k]));
  }
  std::vector<std::vector<int>> children(l);
  std::vector<int> roots;
  for (int k = 0; k < l; ++k) {
    if (t.parent[k] < 0)
      roots.push_back(k);
    else
      children[t.parent[k]].push_back(k);
  }
  t.postorder.clear();
  std::vector<std::pair<int, size_t>> stack;
  for (int r : roots) {
    stack.emplace_back(r, 0);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < children[node].size()) {
        int c = children[node][next++];
        stack.emplace_back(c, 0);
      } else {
        t.postorder.push_back(node);
        stack.pop_back();
      }
    }
  }
}

void validate_tree(const CliqueTree& t) {
  const int l = t.size();
  // Cliques must be distinct and pairwise non-nested.
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b) {
      if (a == b) continue;
      if (std::includes(t.cliques[a].begin(), t.cliques[a].end(), t.cliques[b].begin(),
                        t.cliques[b].end()))
        throw RipViolationError("clique " + std::to_string(b) + " is nested in clique " +
                                std::to_string(a));
    }
  // Running intersection: for every vertex the cliques containing it induce a
  // subtree, i.e. edge count equals clique count minus one.
  std::vector<int> cv(t.order, 0), ev(t.order, 0);
  for (int k = 0; k < l; ++k)
    for (int v : t.cliques[k]) {
      if (v < 0 || v >= t.order) throw Error("clique vertex out of range");
      ++cv[v];
    }
  for (int k = 0; k < l; ++k)
    for (int v : t.separators[k]) ++ev[v];
  for (int v = 0; v < t.order; ++v) {
    if (cv[v] == 0) throw RipViolationError("vertex " + std::to_string(v) + " not covered");
    if (ev[v] != cv[v] - 1)
      throw RipViolationError("cliques containing vertex " + std::to_string(v) +
                              " do not form a subtree");
  }
}

}  // namespace

CliqueTree make_clique_tree(const std::vector<std::vector<int>>& cliques,
                            const std::vector<int>& parent) {
  if (cliques.empty()) throw Error("empty clique list");
  if (parent.size() != cliques.size())
    throw BadLengthError("parent array length does not match clique count");
  CliqueTree t;
  t.cliques = cliques;
  for (auto& c : t.cliques) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    if (c.empty()) throw Error("empty clique");
  }
  t.order = 0;
  for (const auto& c : t.cliques) t.order = std::max(t.order, c.back() + 1);
  t.parent = parent;
  finalize_tree(t);
  validate_tree(t);
  return t;
}

CliqueTree build_clique_tree(const std::vector<std::vector<int>>& cliques) {
  const int l = static_cast<int>(cliques.size());
  std::vector<std::vector<int>> sorted = cliques;
  for (auto& c : sorted) std::sort(c.begin(), c.end());
  std::vector<int> parent(l, -2);  // -2 = not yet in forest
  std::vector<int> bestW(l, -1), bestPar(l, -1);
  int placed = 0;
  while (placed < l) {
    // Root the next component at the clique containing the highest remaining
    // vertex; ties go to the highest clique index.
    int root = -1, rootTop = -1;
    for (int k = 0; k < l; ++k) {
      if (parent[k] != -2) continue;
      int top = sorted[k].back();
      if (top >= rootTop) {
        rootTop = top;
        root = k;
      }
    }
    parent[root] = -1;
    ++placed;
    for (int k = 0; k < l; ++k) {
      if (parent[k] != -2) continue;
      int w = static_cast<int>(intersect_sorted(sorted[k], sorted[root]).size());
      if (w > bestW[k]) {
        bestW[k] = w;
        bestPar[k] = root;
      }
    }
    while (true) {
      int next = -1;
      for (int k = 0; k < l; ++k) {
        if (parent[k] != -2 || bestW[k] <= 0) continue;
        if (next < 0 || bestW[k] > bestW[next] || (bestW[k] == bestW[next] && k > next))
          next = k;
      }
      if (next < 0) break;
      parent[next] = bestPar[next];
      ++placed;
      for (int k = 0; k < l; ++k) {
        if (parent[k] != -2) continue;
        int w = static_cast<int>(intersect_sorted(sorted[k], sorted[next]).size());
        if (w > bestW[k] || (w == bestW[k] && next > bestPar[k])) {
          bestW[k] = w;
          bestPar[k] = next;
        }
      }
    }
  }
  return make_clique_tree(sorted, parent);
}

CliqueTree merge_cliques(const CliqueTree& tree, int tFill, int tSize) {
  const int l = tree.size();
  std::vector<std::vector<int>> cliques = tree.cliques;
  std::vector<int> parent = tree.parent;
  std::vector<int> mergedInto(l, -1);
  auto resolve = [&](int k) {
    while (k >= 0 && mergedInto[k] >= 0) k = mergedInto[k];
    return k;
  };
  for (int k : tree.postorder) {
    int pa = resolve(parent[k]);
    if (pa < 0 || pa == k) continue;
    const auto sep = intersect_sorted(cliques[k], cliques[pa]);
    const int resK = static_cast<int>(cliques[k].size() - sep.size());
    const int resPaUp = [&] {
      int gp = resolve(parent[pa]);
      if (gp < 0) return static_cast<int>(cliques[pa].size());
      return static_cast<int>(cliques[pa].size() -
                              intersect_sorted(cliques[pa], cliques[gp]).size());
    }();
    const int fillCost = static_cast<int>(cliques[pa].size() - sep.size()) * resK;
    if (fillCost <= tFill || std::max(resK, resPaUp) <= tSize) {
      std::vector<int> merged;
      std::set_union(cliques[pa].begin(), cliques[pa].end(), cliques[k].begin(),
                     cliques[k].end(), std::back_inserter(merged));
      cliques[pa] = std::move(merged);
      mergedInto[k] = pa;
    }
  }
  std::vector<int> alive;
  for (int k = 0; k < l; ++k)
    if (mergedInto[k] < 0) alive.push_back(k);
  // Reindex in lexicographic clique order for determinism.
  std::sort(alive.begin(), alive.end(),
            [&](int a, int b) { return cliques[a] < cliques[b]; });
  std::vector<int> newIndex(l, -1);
  for (int i = 0; i < static_cast<int>(alive.size()); ++i) newIndex[alive[i]] = i;
  std::vector<std::vector<int>> outCliques;
  std::vector<int> outParent;
  for (int k : alive) {
    outCliques.push_back(cliques[k]);
    int pa = resolve(parent[k]);
    outParent.push_back(pa < 0 ? -1 : newIndex[pa]);
  }
  return make_clique_tree(outCliques, outParent);
}

SparsityPattern pattern_of_cliques(int order, const std::vector<std::vector<int>>& cliques) {
  std::vector<std::pair<int, int>> entries;
  for (const auto& c : cliques)
    for (size_t a = 0; a < c.size(); ++a)
      for (size_t b = a; b < c.size(); ++b) entries.emplace_back(c[b], c[a]);
  return SparsityPattern(order, entries);
}

}  // namespace pscone
