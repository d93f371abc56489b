// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pscone/conversion.hpp"
#include "pscone/sparsity.hpp"
#include "pscone/spingarn.hpp"

namespace pscone {

/// A file could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// One coefficient of an SDPA sparse file, 0-based indices, i <= j within the
/// block.  mat 0 is the cost matrix, mat r >= 1 belongs to constraint row r-1.
struct SdpaEntry {
  int mat = 0;
  int blk = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;

  friend bool operator==(const SdpaEntry&, const SdpaEntry&) = default;
};

/// In-memory image of an SDPA sparse (.dat-s) file.  Values are plain matrix
/// entries; nothing is rescaled, so serialization round trips bit-exactly.
/// Negative block sizes are diagonal blocks, as in the format.
struct SdpaProblem {
  std::vector<int> blockSizes;
  Vec rhs;
  std::vector<SdpaEntry> entries;  // sorted by (mat, blk, i, j)

  int m() const { return static_cast<int>(rhs.size()); }
};

/// Parses an SDPA sparse file.  Accepts '*' and '"' comment lines and the
/// usual brace/comma separators; throws ParseError with a line number on
/// malformed input, out-of-range indices, off-diagonal entries in diagonal
/// blocks, or duplicate coefficients.
SdpaProblem read_sdpa(std::istream& is);
SdpaProblem read_sdpa_file(const std::string& path);

/// Canonical serialization: no comments, entries sorted, full-precision
/// decimals.  write(read(write(P))) is byte-identical to write(P).
void write_sdpa(std::ostream& os, const SdpaProblem& sp);
void write_sdpa_file(const std::string& path, const SdpaProblem& sp);

/// Interprets the file data as a trace-equality conic LP: minimize tr(C X)
/// subject to tr(F_r X) = rhs_r with C the mat-0 coefficients.  PSD blocks
/// concatenate into one aggregate pattern (entries of every matrix define V),
/// diagonal blocks concatenate into the nonnegative tail.  Requires at least
/// one PSD block.
ConicLP sdpa_to_conic(const SdpaProblem& sp);

/// Writes lp as one PSD block (the pattern) plus one diagonal block for the
/// tail, dividing the sqrt(2) vectorization scaling back out.
SdpaProblem conic_to_sdpa(const ConicLP& lp);

/// Pattern coordinate file: first data token is the order p, followed by
/// 1-based "i j" pairs in either triangle.  '#' and '*' start comments.
SparsityPattern read_pattern(std::istream& is);
SparsityPattern read_pattern_file(const std::string& path);

void write_pattern(std::ostream& os, const SparsityPattern& pattern);

/// Clique tree as JSON with keys order, cliques, parent, separators,
/// residuals (0-based).  Parsing rebuilds the tree from cliques and parent,
/// validates it, and cross-checks separators and residuals when present.
std::string tree_to_json(const CliqueTree& tree);
CliqueTree tree_from_json(const std::string& text);

/// Solution file: '#' comment lines carry status, objective, and iteration
/// count; then one "i j value" triple per pattern slot (1-based, vecV
/// coefficient) and, after a "# tail" marker, one "t value" line per tail
/// entry.
void write_solution(std::ostream& os, const SparsityPattern& pattern, const Vec& x, int tail,
                    double objective, SolveStatus status, int iterations);

}  // namespace pscone
