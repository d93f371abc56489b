// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include "pscone/io.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace pscone {

namespace {

bool parse_double(const std::string& s, double& out) {
  const char* b = s.c_str();
  char* e = nullptr;
  out = std::strtod(b, &e);
  return e != b && *e == '\0';
}

bool parse_int(const std::string& s, long& out) {
  const char* b = s.c_str();
  char* e = nullptr;
  out = std::strtol(b, &e, 10);
  return e != b && *e == '\0';
}

bool has_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

/// Whitespace tokenizer with comment stripping and line tracking.  Brace,
/// comma, semicolon, and '=' separators are treated as whitespace.
class TokenStream {
 public:
  TokenStream(std::istream& is, std::string commentChars)
      : is_(is), comment_(std::move(commentChars)) {}

  bool next(std::string& tok) {
    while (true) {
      if (cur_ >> tok) return true;
      std::string line;
      if (!std::getline(is_, line)) return false;
      ++line_;
      const size_t first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || comment_.find(line[first]) != std::string::npos) continue;
      for (char& c : line)
        if (c == '{' || c == '}' || c == '(' || c == ')' || c == ',' || c == ';' || c == '=' ||
            c == '\r')
          c = ' ';
      cur_ = std::istringstream(line);
    }
  }

  int line() const { return line_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(line_) + ": " + msg);
  }

  /// Next fully numeric token; tokens without any digit (labels such as
  /// "mDIM") are skipped.  Used for the SDPA header section.
  double number_skipping_labels(const std::string& what) {
    std::string tok;
    while (next(tok)) {
      if (!has_digit(tok)) continue;
      double v = 0.0;
      if (!parse_double(tok, v)) fail("bad " + what + " '" + tok + "'");
      return v;
    }
    throw ParseError("unexpected end of file while reading " + what);
  }

  long integer_skipping_labels(const std::string& what) {
    const double v = number_skipping_labels(what);
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v) fail(what + " must be an integer");
    return n;
  }

  /// Strict numeric token for the entry section.
  double number(const std::string& what) {
    std::string tok;
    if (!next(tok)) throw ParseError("unexpected end of file while reading " + what);
    double v = 0.0;
    if (!parse_double(tok, v)) fail("bad " + what + " '" + tok + "'");
    return v;
  }

  long integer(const std::string& what) {
    const double v = number(what);
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v) fail(what + " must be an integer");
    return n;
  }

 private:
  std::istream& is_;
  std::string comment_;
  std::istringstream cur_;
  int line_ = 0;
};

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return f;
}

std::ofstream create_or_throw(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

struct PrecisionGuard {
  explicit PrecisionGuard(std::ostream& os)
      : os_(os), flags_(os.flags()), prec_(os.precision()) {
    os_ << std::setprecision(std::numeric_limits<double>::max_digits10);
  }
  ~PrecisionGuard() {
    os_.flags(flags_);
    os_.precision(prec_);
  }
  std::ostream& os_;
  std::ios::fmtflags flags_;
  std::streamsize prec_;
};

void sort_entries(std::vector<SdpaEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const SdpaEntry& a, const SdpaEntry& b) {
    return std::tie(a.mat, a.blk, a.i, a.j) < std::tie(b.mat, b.blk, b.i, b.j);
  });
}

}  // namespace

SdpaProblem read_sdpa(std::istream& is) {
  TokenStream ts(is, "*\"");
  const long m = ts.integer_skipping_labels("mDIM");
  if (m < 0) ts.fail("mDIM must be nonnegative");
  const long nb = ts.integer_skipping_labels("nBLOCK");
  if (nb < 1) ts.fail("nBLOCK must be positive");

  SdpaProblem sp;
  sp.blockSizes.resize(nb);
  for (long b = 0; b < nb; ++b) {
    const long s = ts.integer_skipping_labels("block size");
    if (s == 0) ts.fail("block size must be nonzero");
    sp.blockSizes[b] = static_cast<int>(s);
  }
  sp.rhs.resize(m);
  for (long i = 0; i < m; ++i) sp.rhs[i] = ts.number_skipping_labels("right-hand side");

  std::map<std::tuple<int, int, int, int>, int> seen;
  std::string tok;
  while (ts.next(tok)) {
    long mat = 0;
    double first = 0.0;
    if (!parse_double(tok, first)) ts.fail("bad matrix number '" + tok + "'");
    mat = static_cast<long>(first);
    if (static_cast<double>(mat) != first) ts.fail("matrix number must be an integer");
    const long blk = ts.integer("block number");
    long i = ts.integer("row index");
    long j = ts.integer("column index");
    const double value = ts.number("value");

    if (mat < 0 || mat > m) ts.fail("matrix number out of range");
    if (blk < 1 || blk > nb) ts.fail("block number out of range");
    const int size = std::abs(sp.blockSizes[blk - 1]);
    if (i < 1 || i > size || j < 1 || j > size) ts.fail("entry index out of range");
    if (sp.blockSizes[blk - 1] < 0 && i != j) ts.fail("off-diagonal entry in a diagonal block");
    if (i > j) std::swap(i, j);

    const auto key = std::make_tuple(static_cast<int>(mat), static_cast<int>(blk - 1),
                                     static_cast<int>(i - 1), static_cast<int>(j - 1));
    if (!seen.emplace(key, ts.line()).second) ts.fail("duplicate coefficient");
    sp.entries.push_back({static_cast<int>(mat), static_cast<int>(blk - 1),
                          static_cast<int>(i - 1), static_cast<int>(j - 1), value});
  }
  sort_entries(sp.entries);
  return sp;
}

SdpaProblem read_sdpa_file(const std::string& path) {
  std::ifstream f = open_or_throw(path);
  return read_sdpa(f);
}

void write_sdpa(std::ostream& os, const SdpaProblem& sp) {
  PrecisionGuard guard(os);
  os << sp.m() << "\n" << sp.blockSizes.size() << "\n";
  for (size_t b = 0; b < sp.blockSizes.size(); ++b)
    os << (b ? " " : "") << sp.blockSizes[b];
  os << "\n";
  for (int i = 0; i < sp.m(); ++i) os << (i ? " " : "") << sp.rhs[i];
  os << "\n";
  std::vector<SdpaEntry> entries = sp.entries;
  sort_entries(entries);
  for (const SdpaEntry& e : entries)
    os << e.mat << " " << e.blk + 1 << " " << e.i + 1 << " " << e.j + 1 << " " << e.value << "\n";
}

void write_sdpa_file(const std::string& path, const SdpaProblem& sp) {
  std::ofstream f = create_or_throw(path);
  write_sdpa(f, sp);
}

ConicLP sdpa_to_conic(const SdpaProblem& sp) {
  const int nb = static_cast<int>(sp.blockSizes.size());
  std::vector<int> psdOff(nb, -1), diagOff(nb, -1);
  int P = 0, tail = 0;
  for (int b = 0; b < nb; ++b) {
    if (sp.blockSizes[b] > 0) {
      psdOff[b] = P;
      P += sp.blockSizes[b];
    } else {
      diagOff[b] = tail;
      tail += -sp.blockSizes[b];
    }
  }
  if (P == 0) throw Error("sdpa_to_conic: at least one PSD block is required");

  std::vector<std::pair<int, int>> ent;
  for (const SdpaEntry& e : sp.entries)
    if (psdOff[e.blk] >= 0) ent.emplace_back(psdOff[e.blk] + e.j, psdOff[e.blk] + e.i);
  SparsityPattern V(P, ent);
  const int nv = V.nnzLower();

  Vec c = Vec::Zero(nv + tail);
  std::vector<Eigen::Triplet<double>> trip;
  for (const SdpaEntry& e : sp.entries) {
    int col = 0;
    double val = e.value;
    if (psdOff[e.blk] >= 0) {
      col = V.slot(psdOff[e.blk] + e.i, psdOff[e.blk] + e.j);
      if (e.i != e.j) val *= std::numbers::sqrt2;
    } else {
      col = nv + diagOff[e.blk] + e.i;
    }
    if (e.mat == 0)
      c[col] += val;
    else
      trip.emplace_back(e.mat - 1, col, val);
  }
  SpMat A(sp.m(), nv + tail);
  A.setFromTriplets(trip.begin(), trip.end());
  return {std::move(V), tail, std::move(A), sp.rhs, std::move(c)};
}

SdpaProblem conic_to_sdpa(const ConicLP& lp) {
  const SparsityPattern& V = lp.pattern;
  const int nv = V.nnzLower();
  SdpaProblem sp;
  sp.blockSizes.push_back(V.order());
  if (lp.tail > 0) sp.blockSizes.push_back(-lp.tail);
  sp.rhs = lp.b;

  auto push = [&](int mat, int col, double val) {
    if (val == 0.0) return;
    if (col < nv) {
      const auto [i, j] = V.entries()[col];
      sp.entries.push_back({mat, 0, j, i, i == j ? val : val / std::numbers::sqrt2});
    } else {
      sp.entries.push_back({mat, 1, col - nv, col - nv, val});
    }
  };
  for (int col = 0; col < static_cast<int>(lp.c.size()); ++col) push(0, col, lp.c[col]);
  for (int r = 0; r < lp.A.outerSize(); ++r)
    for (SpMat::InnerIterator it(lp.A, r); it; ++it)
      push(static_cast<int>(it.row()) + 1, static_cast<int>(it.col()), it.value());
  sort_entries(sp.entries);
  return sp;
}

SparsityPattern read_pattern(std::istream& is) {
  TokenStream ts(is, "#*");
  const long p = ts.integer("pattern order");
  if (p < 1) ts.fail("pattern order must be positive");
  std::vector<std::pair<int, int>> ent;
  std::string tok;
  while (ts.next(tok)) {
    long i = 0;
    if (!parse_int(tok, i)) ts.fail("bad row index '" + tok + "'");
    const long j = ts.integer("column index");
    if (i < 1 || i > p || j < 1 || j > p) ts.fail("entry index out of range");
    ent.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1));
  }
  return SparsityPattern(static_cast<int>(p), ent);
}

SparsityPattern read_pattern_file(const std::string& path) {
  std::ifstream f = open_or_throw(path);
  return read_pattern(f);
}

void write_pattern(std::ostream& os, const SparsityPattern& pattern) {
  os << pattern.order() << "\n";
  for (const auto& [i, j] : pattern.entries())
    if (i != j) os << i + 1 << " " << j + 1 << "\n";
}

std::string tree_to_json(const CliqueTree& tree) {
  nlohmann::json j;
  j["order"] = tree.order;
  j["cliques"] = tree.cliques;
  j["parent"] = tree.parent;
  j["separators"] = tree.separators;
  j["residuals"] = tree.residuals;
  return j.dump(2) + "\n";
}

CliqueTree tree_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    CliqueTree tree = make_clique_tree(j.at("cliques").get<std::vector<std::vector<int>>>(),
                                       j.at("parent").get<std::vector<int>>());
    if (j.contains("order") && j["order"].get<int>() != tree.order)
      throw ParseError("clique tree order does not match the cliques");
    if (j.contains("separators") &&
        j["separators"].get<std::vector<std::vector<int>>>() != tree.separators)
      throw ParseError("stored separators do not match the tree");
    if (j.contains("residuals") &&
        j["residuals"].get<std::vector<std::vector<int>>>() != tree.residuals)
      throw ParseError("stored residuals do not match the tree");
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("clique tree JSON: ") + e.what());
  }
}

void write_solution(std::ostream& os, const SparsityPattern& pattern, const Vec& x, int tail,
                    double objective, SolveStatus status, int iterations) {
  const int nv = pattern.nnzLower();
  if (static_cast<int>(x.size()) != nv + tail)
    throw BadLengthError("write_solution: x must hold the pattern slots plus the tail");
  PrecisionGuard guard(os);
  os << "# status " << (status == SolveStatus::Converged ? "Converged" : "MaxIter") << "\n";
  os << "# objective " << objective << "\n";
  os << "# iterations " << iterations << "\n";
  for (int slot = 0; slot < nv; ++slot) {
    const auto [i, j] = pattern.entries()[slot];
    os << i + 1 << " " << j + 1 << " " << x[slot] << "\n";
  }
  if (tail > 0) {
    os << "# tail\n";
    for (int t = 0; t < tail; ++t) os << t + 1 << " " << x[nv + t] << "\n";
  }
}

}  // namespace pscone
