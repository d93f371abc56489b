// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pscone/types.hpp"

namespace pscone {

/// Result of a maximum cardinality search.
struct McsResult {
  /// order[k] is the vertex at position k; when the pattern is chordal this
  /// is a perfect elimination ordering.
  std::vector<int> order;
  bool chordal = false;
};

/// Maximum cardinality search with deterministic (lowest vertex index) tie
/// breaking.  The chordal flag is the perfect-elimination certificate of the
/// returned order.
McsResult mcs(const SparsityPattern& pattern);

/// True iff order (position -> vertex) is a perfect elimination ordering of
/// the pattern's graph.
bool is_peo(const SparsityPattern& pattern, const std::vector<int>& order);

enum class EmbedHeuristic {
  /// Use the MCS order when the pattern is already chordal (zero fill),
  /// otherwise fall back to minimum degree.
  McsThenMinDegree,
  /// Always run minimum-degree symbolic elimination.
  MinDegree,
  /// Eliminate in the natural order 0,...,p-1.
  Natural,
};

struct EmbedResult {
  SparsityPattern pattern;   // input plus fill
  std::vector<int> order;    // elimination order; a PEO of the filled pattern
  int fillCount = 0;         // number of added edges
};

EmbedResult chordal_embed(const SparsityPattern& pattern,
                          EmbedHeuristic heuristic = EmbedHeuristic::McsThenMinDegree);

/// Symbolic elimination in a caller-supplied order.
EmbedResult chordal_embed(const SparsityPattern& pattern, const std::vector<int>& order);

/// Maximal cliques of a chordal pattern, each sorted ascending, listed in
/// lexicographic order.  Throws NotChordalError if peo is not a perfect
/// elimination ordering.
std::vector<std::vector<int>> extract_cliques(const SparsityPattern& pattern,
                                              const std::vector<int>& peo);

/// Convenience overload that derives the PEO with mcs().
std::vector<std::vector<int>> extract_cliques(const SparsityPattern& pattern);

/// Rooted clique tree (a forest in general) with the running intersection
/// property.  Separator k is clique k intersected with its parent; residuals
/// partition the vertex set.
struct CliqueTree {
  int order = 0;  // number of vertices p of the underlying pattern
  std::vector<std::vector<int>> cliques;
  std::vector<int> parent;  // -1 for roots
  std::vector<std::vector<int>> separators;
  std::vector<std::vector<int>> residuals;
  std::vector<int> postorder;  // children before parents
  long long treeWeight = 0;    // sum of separator sizes

  int size() const { return static_cast<int>(cliques.size()); }
};

/// Builds a clique tree as a maximum-weight spanning forest of the clique
/// intersection graph.  Each component is rooted at the clique containing its
/// highest vertex (ties: highest clique index); Prim ties are broken toward
/// the highest joining clique index and the highest parent index.  Throws
/// RipViolationError if the input cliques admit no running-intersection tree.
CliqueTree build_clique_tree(const std::vector<std::vector<int>>& cliques);

/// Builds a clique tree with an explicit parent array and validates it.
CliqueTree make_clique_tree(const std::vector<std::vector<int>>& cliques,
                            const std::vector<int>& parent);

/// Greedy bottom-up clique merging.  A clique is absorbed into its parent when
/// (|b_pa| - |sep|)(|b_k| - |sep|) <= tFill or when
/// max(|b_k| - |sep_k|, |b_pa| - |sep_pa|) <= tSize.
CliqueTree merge_cliques(const CliqueTree& tree, int tFill = 5, int tSize = 5);

/// Pattern whose entries are the union of cliques-by-cliques blocks plus the
/// full diagonal.
SparsityPattern pattern_of_cliques(int order, const std::vector<std::vector<int>>& cliques);

}  // namespace pscone
