// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include "pscone/cones.hpp"

#include <cmath>

namespace pscone {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

int svec_order(int n) {
  int r = static_cast<int>(std::floor(std::sqrt(2.0 * n)));
  while (svec_len(r) > n) --r;
  while (svec_len(r) < n) ++r;
  if (svec_len(r) != n) throw BadLengthError("length is not triangular");
  return r;
}

Vec svec(const Mat& X) {
  if (X.rows() != X.cols()) throw BadLengthError("svec needs a square matrix");
  const int r = static_cast<int>(X.rows());
  Vec x(svec_len(r));
  int t = 0;
  for (int j = 0; j < r; ++j)
    for (int i = j; i < r; ++i) x[t++] = (i == j) ? X(i, j) : kSqrt2 * X(i, j);
  return x;
}

Mat smat(const Vec& x) {
  const int r = svec_order(static_cast<int>(x.size()));
  Mat X(r, r);
  int t = 0;
  for (int j = 0; j < r; ++j)
    for (int i = j; i < r; ++i) {
      X(i, j) = (i == j) ? x[t] : x[t] / kSqrt2;
      X(j, i) = X(i, j);
      ++t;
    }
  return X;
}

Vec vecV(const SparsityPattern& V, const Mat& X) {
  if (X.rows() != V.order() || X.cols() != V.order())
    throw BadLengthError("matrix order does not match pattern");
  Vec x(V.nnzLower());
  int t = 0;
  for (auto [i, j] : V.entries()) x[t++] = (i == j) ? X(i, j) : kSqrt2 * X(i, j);
  return x;
}

Mat matV(const SparsityPattern& V, const Vec& x) {
  if (x.size() != V.nnzLower()) throw BadLengthError("vector length does not match pattern");
  Mat X = Mat::Zero(V.order(), V.order());
  int t = 0;
  for (auto [i, j] : V.entries()) {
    X(i, j) = (i == j) ? x[t] : x[t] / kSqrt2;
    X(j, i) = X(i, j);
    ++t;
  }
  return X;
}

Mat clique_dense(const SparsityPattern& V, const Vec& x, const std::vector<int>& beta) {
  if (x.size() != V.nnzLower()) throw BadLengthError("vector length does not match pattern");
  const int r = static_cast<int>(beta.size());
  Mat B(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b <= a; ++b) {
      int s = V.slot(beta[a], beta[b]);
      if (s < 0)
        throw CliqueNotInPatternError("clique entry (" + std::to_string(beta[a]) + "," +
                                      std::to_string(beta[b]) + ") not in pattern");
      double v = (beta[a] == beta[b]) ? x[s] : x[s] / kSqrt2;
      B(a, b) = v;
      B(b, a) = v;
    }
  return B;
}

std::vector<int> gamma_from_clique(const SparsityPattern& V, const std::vector<int>& beta) {
  const int r = static_cast<int>(beta.size());
  std::vector<int> gamma;
  gamma.reserve(svec_len(r));
  for (int b = 0; b < r; ++b)
    for (int a = b; a < r; ++a) {
      int s = V.slot(beta[a], beta[b]);
      if (s < 0)
        throw CliqueNotInPatternError("clique entry (" + std::to_string(beta[a]) + "," +
                                      std::to_string(beta[b]) + ") not in pattern");
      gamma.push_back(s);
    }
  return gamma;
}

bool completable_member(const SparsityPattern& V, const Vec& x, const CliqueTree& tree,
                        double tol) {
  for (const auto& beta : tree.cliques) {
    Mat B = clique_dense(V, x, beta);
    Eigen::SelfAdjointEigenSolver<Mat> es(B, Eigen::EigenvaluesOnly);
    double scale = std::max(1.0, B.norm());
    if (es.eigenvalues().minCoeff() < -tol * scale) return false;
  }
  return true;
}

std::vector<Mat> psd_decompose(const SparsityPattern& V, const Vec& x, const CliqueTree& tree) {
  const int p = V.order();
  // Eliminating residual sets in postorder is a perfect elimination ordering,
  // and every Cholesky column then has its support inside one clique.
  std::vector<int> order;
  order.reserve(p);
  std::vector<int> home(p, -1);
  for (int k : tree.postorder)
    for (int v : tree.residuals[k]) {
      order.push_back(v);
      home[v] = k;
    }
  if (static_cast<int>(order.size()) != p)
    throw Error("clique tree does not cover the pattern");

  Mat S = matV(V, x);
  Mat A(p, p);  // S permuted into elimination order
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) A(a, b) = S(order[a], order[b]);

  const double tol = 1e-10 * std::max(1.0, A.diagonal().maxCoeff());
  std::vector<Mat> blocks;
  blocks.reserve(tree.size());
  for (const auto& beta : tree.cliques)
    blocks.push_back(Mat::Zero(beta.size(), beta.size()));
  std::vector<std::vector<int>> local(tree.size());  // vertex -> position in clique
  for (int k = 0; k < tree.size(); ++k) {
    local[k].assign(p, -1);
    for (int a = 0; a < static_cast<int>(tree.cliques[k].size()); ++a)
      local[k][tree.cliques[k][a]] = a;
  }

  Vec col(p);
  for (int t = 0; t < p; ++t) {
    double piv = A(t, t);
    col.setZero();
    if (piv < -tol) throw NotPsdError("negative pivot in zero-fill factorization");
    if (piv <= tol) {
      // a PSD matrix with a zero diagonal entry must have a zero column
      for (int i = t + 1; i < p; ++i)
        if (std::abs(A(i, t)) > std::sqrt(tol) * std::max(1.0, A.diagonal().maxCoeff()))
          throw NotPsdError("zero pivot with nonzero column");
    } else {
      double root = std::sqrt(piv);
      col[t] = root;
      for (int i = t + 1; i < p; ++i) col[i] = A(i, t) / root;
      for (int i = t + 1; i < p; ++i)
        for (int j = t + 1; j <= i; ++j) {
          A(i, j) -= col[i] * col[j];
          A(j, i) = A(i, j);
        }
    }
    const int k = home[order[t]];
    auto& B = blocks[k];
    const auto& loc = local[k];
    for (int a = t; a < p; ++a) {
      if (col[a] == 0.0) continue;
      const int la = loc[order[a]];
      if (la < 0) throw Error("clique tree is inconsistent with the pattern");
      for (int b = t; b <= a; ++b) {
        if (col[b] == 0.0) continue;
        const int lb = loc[order[b]];
        double v = col[a] * col[b];
        B(la, lb) += v;
        if (la != lb) B(lb, la) += v;
      }
    }
  }
  return blocks;
}

}  // namespace pscone
