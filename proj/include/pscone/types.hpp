// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pscone {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all recoverable pscone errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NotChordalError : public Error {
 public:
  using Error::Error;
};

class RipViolationError : public Error {
 public:
  using Error::Error;
};

class CliqueNotInPatternError : public Error {
 public:
  using Error::Error;
};

class BadLengthError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

class UnsupportedRowError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Symmetric sparsity pattern on {0,...,p-1}.  Only the lower triangle is
/// stored; the diagonal is always part of the pattern.  Entry slots are
/// numbered column-major over the lower triangle, which fixes the layout of
/// the vectorized matrix cone throughout the library.
class SparsityPattern {
 public:
  /// Entries are (row, col) pairs, 0-based, in either triangle; duplicates
  /// and diagonal entries are allowed and normalized away.
  SparsityPattern(int order, const std::vector<std::pair<int, int>>& entries);

  int order() const { return order_; }

  /// Number of stored lower-triangular entries, diagonal included.
  int nnzLower() const { return static_cast<int>(entries_.size()); }

  /// Lower-triangular entries (i >= j) in slot order.
  const std::vector<std::pair<int, int>>& entries() const { return entries_; }

  bool contains(int i, int j) const { return slot(i, j) >= 0; }

  /// Slot of entry (i, j) in the column-major lower-triangular numbering,
  /// or -1 if the entry is not in the pattern.
  int slot(int i, int j) const;

  /// Sorted neighbor lists (diagonal excluded).
  const std::vector<std::vector<int>>& adj() const { return adj_; }

  bool hasEdge(int i, int j) const;

  bool operator==(const SparsityPattern& other) const {
    return order_ == other.order_ && entries_ == other.entries_;
  }

 private:
  int order_ = 0;
  std::vector<std::pair<int, int>> entries_;  // (i, j), i >= j, column-major
  std::vector<int> colOffset_;                // size order_+1
  std::vector<std::vector<int>> colRows_;     // rows per column, ascending
  std::vector<std::vector<int>> adj_;
};

}  // namespace pscone
