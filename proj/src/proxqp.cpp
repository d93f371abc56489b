// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include "pscone/proxqp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <thread>

#include "pscone/cones.hpp"

namespace pscone {

void ProxQP::set_offsets() {
  blockOffset.assign(blocks.size() + 1, 0);
  for (size_t k = 0; k < blocks.size(); ++k)
    blockOffset[k + 1] = blockOffset[k] + blocks[k].len;
}

ProxQP make_prox_qp(const ConvertedProblem& cp, double sigmaCommon, const Vec& zStacked) {
  ProxQP qp;
  qp.blocks = cp.blocks;
  qp.numCliqueBlocks = cp.numCliqueBlocks;
  qp.A = cp.Ablocks;
  qp.b = cp.b;
  qp.c = cp.cblocks;
  qp.set_offsets();
  if (zStacked.size() != qp.ntilde()) throw BadLengthError("center length mismatch");
  const size_t K = cp.blocks.size();
  qp.sigma.resize(K);
  qp.z.resize(K);
  for (size_t k = 0; k < K; ++k) {
    qp.sigma[k] = static_cast<int>(k) < cp.numCliqueBlocks ? sigmaCommon : 0.0;
    qp.z[k] = qp.seg(zStacked, k);
  }
  return qp;
}

namespace {

void validate(const ProxQP& qp) {
  const size_t K = qp.blocks.size();
  if (qp.blockOffset.size() != K + 1)
    throw BadLengthError("ProxQP::set_offsets must be called before solving");
  if (qp.sigma.size() != K || qp.A.size() != K || qp.c.size() != K || qp.z.size() != K)
    throw BadLengthError("ProxQP field sizes disagree");
  for (size_t k = 0; k < K; ++k) {
    const ConeBlock& blk = qp.blocks[k];
    if (blk.kind == BlockKind::Generic)
      throw Error("generic blocks are not supported by the interior-point solver");
    if (qp.A[k].rows() != qp.b.size() || qp.A[k].cols() != blk.len)
      throw BadLengthError("constraint block dimensions disagree");
    if (qp.c[k].size() != blk.len) throw BadLengthError("cost block length mismatch");
    if (qp.sigma[k] < 0.0) throw Error("sigma weights must be nonnegative");
    if (qp.sigma[k] > 0.0 && qp.z[k].size() != blk.len)
      throw BadLengthError("center block length mismatch");
  }
}

struct BlockRows {
  std::vector<int> rows;  // rows with a nonzero in this block
  std::vector<Mat> F;     // PSD blocks: smat of each such row
  std::vector<std::vector<std::pair<int, double>>> cols;  // orthant: per column (row, coeff)
};

std::vector<BlockRows> build_rows(const ProxQP& qp) {
  std::vector<BlockRows> out(qp.blocks.size());
  for (size_t k = 0; k < qp.blocks.size(); ++k) {
    const SpMat& A = qp.A[k];
    BlockRows& br = out[k];
    if (qp.blocks[k].kind == BlockKind::Psd) {
      Vec row(A.cols());
      for (int i = 0; i < A.rows(); ++i) {
        if (!SpMat::InnerIterator(A, i)) continue;
        row.setZero();
        for (SpMat::InnerIterator it(A, i); it; ++it) row[it.col()] = it.value();
        br.rows.push_back(i);
        br.F.push_back(smat(row));
      }
    } else {
      br.cols.resize(A.cols());
      for (int i = 0; i < A.rows(); ++i) {
        bool any = false;
        for (SpMat::InnerIterator it(A, i); it; ++it) {
          br.cols[it.col()].emplace_back(i, it.value());
          any = true;
        }
        if (any) br.rows.push_back(i);
      }
    }
  }
  return out;
}

// G is the Todd-Toh-Tutuncu congruence: G^-1 X G^-T = G' S G = diag(gam),
// and W = G^-T G^-1 is the matching inverse scaling point.
struct PsdState {
  Mat X, S, Lx, Ls, G, Gi;
  Vec gam;
};

// Extended precision for the elimination.  Reducing to the Schur complement
// in dy cancels intermediates of size ~1/mu down to O(1) results, which in
// plain double caps the attainable complementarity gap; 80-bit arithmetic
// inside the context pushes that floor three orders further down.
using Ld = long double;
using MatL = Eigen::Matrix<Ld, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<Ld, Eigen::Dynamic, 1>;

MatL smat_l(const VecL& x) {
  const int r = svec_order(static_cast<int>(x.size()));
  const Ld rt2 = std::sqrt(static_cast<Ld>(2));
  MatL X(r, r);
  int t = 0;
  for (int j = 0; j < r; ++j)
    for (int i = j; i < r; ++i) {
      X(i, j) = (i == j) ? x[t] : x[t] / rt2;
      X(j, i) = X(i, j);
      ++t;
    }
  return X;
}

VecL svec_l(const MatL& X) {
  const int r = static_cast<int>(X.rows());
  const Ld rt2 = std::sqrt(static_cast<Ld>(2));
  VecL x(svec_len(r));
  int t = 0;
  for (int j = 0; j < r; ++j)
    for (int i = j; i < r; ++i) x[t++] = (i == j) ? X(i, j) : rt2 * X(i, j);
  return x;
}

// One factored Newton system: per-block inverse metrics in the scaled
// eigenbasis plus a Schur complement in dy, factored along the row partition
// when the problem carries one.
class KktContext {
 public:
  KktContext(const ProxQP& qp, const std::vector<Scaling>& sc,
             const std::vector<BlockRows>& rows)
      : qp_(qp), rows_(rows) {
    const int m = qp.m();
    const size_t K = qp.blocks.size();
    Q_.resize(K);
    Ker_.resize(K);
    Met_.resize(K);
    kerv_.resize(K);
    metv_.resize(K);
    Fhat_.resize(K);
    for (size_t k = 0; k < K; ++k) {
      if (qp.blocks[k].kind == BlockKind::Psd) {
        const VecL lam = sc[k].lam.cast<Ld>();
        Q_[k] = sc[k].Q.cast<Ld>();
        Met_[k] = ((lam * lam.transpose()).array() + static_cast<Ld>(qp.sigma[k])).matrix();
        Ker_[k] = Met_[k].cwiseInverse();
        Fhat_[k].reserve(rows[k].F.size());
        for (const Mat& F : rows[k].F)
          Fhat_[k].push_back(Q_[k].transpose() * F.cast<Ld>() * Q_[k]);
      } else {
        const VecL lam = sc[k].lam.cast<Ld>();
        metv_[k] = (lam.array().square() + static_cast<Ld>(qp.sigma[k])).matrix();
        kerv_[k] = metv_[k].cwiseInverse();
      }
    }
    if (m == 0) return;

    MatL H = MatL::Zero(m, m);
    for (size_t k = 0; k < K; ++k) {
      const auto& br = rows_[k];
      if (qp.blocks[k].kind == BlockKind::Psd) {
        const auto& fh = Fhat_[k];
        std::vector<MatL> Kf(fh.size());
        for (size_t i = 0; i < fh.size(); ++i) Kf[i] = Ker_[k].cwiseProduct(fh[i]);
        for (size_t i = 0; i < fh.size(); ++i)
          for (size_t j = i; j < fh.size(); ++j) {
            const Ld v = fh[i].cwiseProduct(Kf[j]).sum();
            H(br.rows[i], br.rows[j]) += v;
            if (i != j) H(br.rows[j], br.rows[i]) += v;
          }
      } else {
        for (size_t c = 0; c < br.cols.size(); ++c)
          for (size_t a = 0; a < br.cols[c].size(); ++a)
            for (size_t b = a; b < br.cols[c].size(); ++b) {
              const auto [i, vi] = br.cols[c][a];
              const auto [j, vj] = br.cols[c][b];
              const Ld v = kerv_[k][static_cast<int>(c)] * static_cast<Ld>(vi) * static_cast<Ld>(vj);
              H(i, j) += v;
              if (i != j) H(j, i) += v;
            }
      }
    }

    if (qp.rowPartition) {
      std::vector<char> covered(m, 0);
      for (const auto& grp : *qp.rowPartition) {
        if (grp.empty()) continue;
        std::vector<int> g(grp);
        std::sort(g.begin(), g.end());
        for (int i : g) covered[i] = 1;
        groups_.push_back(std::move(g));
      }
      std::vector<int> rest;
      for (int i = 0; i < m; ++i)
        if (!covered[i]) rest.push_back(i);
      if (!rest.empty()) groups_.push_back(std::move(rest));
    } else {
      std::vector<int> all(m);
      for (int i = 0; i < m; ++i) all[i] = i;
      groups_.push_back(std::move(all));
    }
    for (const auto& g : groups_) {
      MatL Hg(g.size(), g.size());
      for (size_t a = 0; a < g.size(); ++a)
        for (size_t b = 0; b < g.size(); ++b) Hg(a, b) = H(g[a], g[b]);
      factors_.emplace_back(Hg);
    }
  }

  Vec apply_metric_inverse(int k, const Vec& v) const {
    return v_minv(k, v.cast<Ld>()).cast<double>();
  }

  Vec apply_metric(int k, const Vec& v) const {
    return v_met(k, v.cast<Ld>()).cast<double>();
  }

  void solve(const Vec& R, const Vec& r, Vec& dx, Vec& dy) const {
    const VecL RL = R.cast<Ld>();
    const VecL rL = r.cast<Ld>();
    VecL dxL, dyL;
    solve_once(RL, rL, dxL, dyL);
    // refinement against the unreduced block system
    for (int pass = 0; pass < 2; ++pass) {
      VecL Rres(qp_.ntilde());
      VecL rres = rL;
      for (size_t k = 0; k < qp_.blocks.size(); ++k) {
        const int kk = static_cast<int>(k);
        segL(Rres, kk) = segL(RL, kk) - v_met(kk, segL(dxL, kk)) + at_mul(kk, dyL);
        rres -= a_mul(kk, segL(dxL, kk));
      }
      VecL ex, ey;
      solve_once(Rres, rres, ex, ey);
      dxL += ex;
      dyL += ey;
    }
    dx = dxL.cast<double>();
    dy = dyL.cast<double>();
  }

 private:
  Eigen::VectorBlock<VecL> segL(VecL& v, int k) const {
    return v.segment(qp_.blockOffset[k], qp_.blocks[k].len);
  }
  Eigen::VectorBlock<const VecL> segL(const VecL& v, int k) const {
    return v.segment(qp_.blockOffset[k], qp_.blocks[k].len);
  }

  VecL a_mul(int k, const VecL& v) const {
    VecL out = VecL::Zero(qp_.m());
    const SpMat& A = qp_.A[k];
    for (int o = 0; o < A.outerSize(); ++o)
      for (SpMat::InnerIterator it(A, o); it; ++it)
        out[it.row()] += static_cast<Ld>(it.value()) * v[it.col()];
    return out;
  }

  VecL at_mul(int k, const VecL& y) const {
    VecL out = VecL::Zero(qp_.blocks[k].len);
    const SpMat& A = qp_.A[k];
    for (int o = 0; o < A.outerSize(); ++o)
      for (SpMat::InnerIterator it(A, o); it; ++it)
        out[it.col()] += static_cast<Ld>(it.value()) * y[it.row()];
    return out;
  }

  VecL v_minv(int k, const VecL& v) const {
    if (qp_.blocks[k].kind == BlockKind::Psd) {
      const MatL Vh = Q_[k].transpose() * smat_l(v) * Q_[k];
      return svec_l(Q_[k] * Ker_[k].cwiseProduct(Vh) * Q_[k].transpose());
    }
    return kerv_[k].cwiseProduct(v);
  }

  VecL v_met(int k, const VecL& v) const {
    if (qp_.blocks[k].kind == BlockKind::Psd) {
      const MatL Vh = Q_[k].transpose() * smat_l(v) * Q_[k];
      return svec_l(Q_[k] * Met_[k].cwiseProduct(Vh) * Q_[k].transpose());
    }
    return metv_[k].cwiseProduct(v);
  }

  void solve_once(const VecL& R, const VecL& r, VecL& dx, VecL& dy) const {
    const int m = qp_.m();
    const size_t K = qp_.blocks.size();
    dx.resize(qp_.ntilde());
    for (size_t k = 0; k < K; ++k)
      segL(dx, static_cast<int>(k)) = v_minv(static_cast<int>(k), segL(R, static_cast<int>(k)));
    dy = VecL::Zero(m);
    if (m == 0) return;
    VecL g = r;
    for (size_t k = 0; k < K; ++k) g -= a_mul(static_cast<int>(k), segL(dx, static_cast<int>(k)));
    for (size_t gi = 0; gi < groups_.size(); ++gi) {
      const auto& grp = groups_[gi];
      VecL rhs(grp.size());
      for (size_t a = 0; a < grp.size(); ++a) rhs[a] = g[grp[a]];
      const VecL sol = factors_[gi].solve(rhs);
      for (size_t a = 0; a < grp.size(); ++a) dy[grp[a]] = sol[a];
    }
    for (size_t k = 0; k < K; ++k) {
      const VecL aty = at_mul(static_cast<int>(k), dy);
      segL(dx, static_cast<int>(k)) += v_minv(static_cast<int>(k), aty);
    }
  }

  const ProxQP& qp_;
  const std::vector<BlockRows>& rows_;
  std::vector<MatL> Q_;
  std::vector<MatL> Ker_;
  std::vector<MatL> Met_;
  std::vector<VecL> kerv_;
  std::vector<VecL> metv_;
  std::vector<std::vector<MatL>> Fhat_;
  std::vector<std::vector<int>> groups_;
  std::vector<Eigen::LDLT<MatL>> factors_;
};

bool compute_scaling(const ProxQP& qp, const Vec& x, const Vec& s,
                     std::vector<Scaling>& sc, std::vector<PsdState>& ps) {
  const size_t K = qp.blocks.size();
  for (size_t k = 0; k < K; ++k) {
    const int kk = static_cast<int>(k);
    if (qp.blocks[k].kind == BlockKind::Psd) {
      PsdState& st = ps[k];
      st.X = smat(qp.seg(x, kk));
      st.S = smat(qp.seg(s, kk));
      Eigen::LLT<Mat> lltX(st.X);
      if (lltX.info() != Eigen::Success) return false;
      Eigen::LLT<Mat> lltS(st.S);
      if (lltS.info() != Eigen::Success) return false;
      st.Lx = lltX.matrixL();
      st.Ls = lltS.matrixL();
      Eigen::JacobiSVD<Mat> svd(st.Ls.transpose() * st.Lx,
                                Eigen::ComputeFullU | Eigen::ComputeFullV);
      st.gam = svd.singularValues();
      if (st.gam.minCoeff() <= 0.0) return false;
      st.G = st.Lx * svd.matrixV() * st.gam.cwiseSqrt().cwiseInverse().asDiagonal();
      Mat Li = Mat::Identity(st.X.rows(), st.X.cols());
      st.Lx.triangularView<Eigen::Lower>().solveInPlace(Li);
      st.Gi = st.gam.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * Li;
      // W = (G G')^-1; the SVD of G reads off its eigenpairs with full
      // relative accuracy at both ends of the spectrum
      Eigen::JacobiSVD<Mat> svdG(st.G, Eigen::ComputeFullU);
      const Vec& th = svdG.singularValues();
      if (th.minCoeff() <= 0.0 || !std::isfinite(th.maxCoeff())) return false;
      sc[k].Q = svdG.matrixU();
      sc[k].lam = th.array().square().inverse().matrix();
    } else {
      const auto xk = qp.seg(x, kk);
      const auto sk = qp.seg(s, kk);
      if (xk.minCoeff() <= 0.0 || sk.minCoeff() <= 0.0) return false;
      sc[k].lam = (sk.cwiseQuotient(xk)).cwiseSqrt();
    }
  }
  return true;
}

double max_step_psd(const Mat& L, const Vec& d) {
  const Mat D = smat(d);
  const Mat T = L.triangularView<Eigen::Lower>().solve(D);
  const Mat M = L.triangularView<Eigen::Lower>().solve(T.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double max_step_orthant(const Vec& x, const Vec& d) {
  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.size(); ++i)
    if (d[i] < 0.0) a = std::min(a, -x[i] / d[i]);
  return a;
}

double max_step(const ProxQP& qp, const std::vector<PsdState>& ps, bool dualSide,
                const Vec& v, const Vec& dv) {
  double a = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < qp.blocks.size(); ++k) {
    const int kk = static_cast<int>(k);
    if (qp.blocks[k].kind == BlockKind::Psd)
      a = std::min(a, max_step_psd(dualSide ? ps[k].Ls : ps[k].Lx, qp.seg(dv, kk)));
    else
      a = std::min(a, max_step_orthant(qp.seg(v, kk), qp.seg(dv, kk)));
  }
  return a;
}

struct Residuals {
  Vec rp, Rd;
  double pres, dres, gap, objective;
};

Residuals eval_residuals(const ProxQP& qp, const Vec& x, const Vec& y, const Vec& s,
                         double bScale, double dScale) {
  Residuals out;
  out.rp = qp.b;
  out.Rd.resize(qp.ntilde());
  out.objective = 0.0;
  for (size_t k = 0; k < qp.blocks.size(); ++k) {
    const int kk = static_cast<int>(k);
    const auto xk = qp.seg(x, kk);
    out.rp -= qp.A[k] * xk;
    Vec rd = qp.c[k] - qp.A[k].transpose() * y - qp.seg(s, kk);
    out.objective += qp.c[k].dot(xk);
    if (qp.sigma[k] > 0.0) {
      const Vec d = xk - qp.z[k];
      rd += qp.sigma[k] * d;
      out.objective += 0.5 * qp.sigma[k] * d.squaredNorm();
    }
    qp.seg(out.Rd, kk) = rd;
  }
  out.pres = out.rp.norm() / bScale;
  out.dres = out.Rd.norm() / dScale;
  out.gap = x.dot(s);
  return out;
}

Vec identity_point(const ProxQP& qp, double& nu) {
  Vec e = Vec::Zero(qp.ntilde());
  nu = 0.0;
  for (size_t k = 0; k < qp.blocks.size(); ++k) {
    const int off = qp.blockOffset[k];
    if (qp.blocks[k].kind == BlockKind::Psd) {
      const int r = qp.blocks[k].order;
      nu += r;
      for (int a = 0, p = off; a < r; ++a, p += r - a + 1) e[p] = 1.0;
    } else {
      nu += qp.blocks[k].len;
      e.segment(off, qp.blocks[k].len).setOnes();
    }
  }
  return e;
}

}  // namespace

std::pair<Vec, Vec> kkt_solve(const ProxQP& qp, const std::vector<Scaling>& scaling,
                              const Vec& R, const Vec& r) {
  validate(qp);
  if (scaling.size() != qp.blocks.size()) throw BadLengthError("one scaling per block required");
  if (R.size() != qp.ntilde() || r.size() != qp.m()) throw BadLengthError("KKT rhs length mismatch");
  for (size_t k = 0; k < qp.blocks.size(); ++k) {
    const ConeBlock& blk = qp.blocks[k];
    if (blk.kind == BlockKind::Psd &&
        (scaling[k].Q.rows() != blk.order || scaling[k].Q.cols() != blk.order ||
         scaling[k].lam.size() != blk.order))
      throw BadLengthError("scaling dimensions disagree with block order");
    if (blk.kind != BlockKind::Psd && scaling[k].lam.size() != blk.len)
      throw BadLengthError("scaling dimensions disagree with block length");
  }
  const auto rows = build_rows(qp);
  KktContext ctx(qp, scaling, rows);
  Vec dx, dy;
  ctx.solve(R, r, dx, dy);
  return {dx, dy};
}

IpmResult solve_prox_qp(const ProxQP& qp, const IpmConfig& cfg) {
  validate(qp);
  const size_t K = qp.blocks.size();
  const int m = qp.m();
  const auto rows = build_rows(qp);

  double nu = 0.0;
  const Vec e = identity_point(qp, nu);
  Vec cStack = Vec::Zero(qp.ntilde()), szStack = Vec::Zero(qp.ntilde());
  for (size_t k = 0; k < K; ++k) {
    qp.seg(cStack, static_cast<int>(k)) = qp.c[k];
    if (qp.sigma[k] > 0.0) qp.seg(szStack, static_cast<int>(k)) = qp.sigma[k] * qp.z[k];
  }
  const double bScale = 1.0 + (m ? qp.b.norm() : 0.0);
  const double dScale = 1.0 + cStack.norm() + szStack.norm();
  const double tau = std::sqrt(std::max(
      {1.0, m ? qp.b.lpNorm<Eigen::Infinity>() : 0.0, cStack.lpNorm<Eigen::Infinity>(),
       szStack.size() ? szStack.lpNorm<Eigen::Infinity>() : 0.0}));

  Vec x = tau * e, s = tau * e, y = Vec::Zero(m);
  std::vector<Scaling> sc(K);
  std::vector<PsdState> ps(K);

  IpmResult res;
  res.status = IpmStatus::MaxIter;
  // best iterate seen so far; late steps can bounce off the numerical floor
  double bestMerit = std::numeric_limits<double>::infinity();
  const auto track = [&](const Residuals& rr) {
    const double merit = std::max(
        {rr.pres, rr.dres, rr.gap / std::max(1.0, std::abs(rr.objective))});
    if (merit < bestMerit) {
      bestMerit = merit;
      res.x = x;
      res.y = y;
      res.s = s;
      res.pres = rr.pres;
      res.dres = rr.dres;
      res.gap = rr.gap;
      res.objective = rr.objective;
    }
  };
  for (int it = 0; it < cfg.maxIter; ++it) {
    const Residuals rr = eval_residuals(qp, x, y, s, bScale, dScale);
    res.iterations = it;
    track(rr);
    if (rr.pres <= cfg.feasTol && rr.dres <= cfg.feasTol &&
        rr.gap <= cfg.gapTol * std::max(1.0, std::abs(rr.objective))) {
      res.status = IpmStatus::Optimal;
      break;
    }

    if (!compute_scaling(qp, x, s, sc, ps)) {
      res.status = IpmStatus::NumericalFailure;
      break;
    }
    const KktContext ctx(qp, sc, rows);
    const double mu = rr.gap / nu;

    // predictor
    Vec dxa, dya;
    ctx.solve(-rr.Rd - s, rr.rp, dxa, dya);
    Vec dsa(qp.ntilde());
    for (size_t k = 0; k < K; ++k) {
      const int kk = static_cast<int>(k);
      qp.seg(dsa, kk) = qp.sigma[k] * qp.seg(dxa, kk) - qp.A[k].transpose() * dya +
                        qp.seg(rr.Rd, kk);
    }
    const double apa = std::min(1.0, max_step(qp, ps, false, x, dxa));
    const double ada = std::min(1.0, max_step(qp, ps, true, s, dsa));
    const double muAff = (x + apa * dxa).dot(s + ada * dsa) / nu;
    double sigc = std::pow(std::max(muAff, 0.0) / mu, 3);
    sigc = std::min(1.0, std::max(1e-10, sigc));
    const double muHat = sigc * mu;

    // corrector right-hand side in the scaled eigenbasis
    const auto buildR3 = [&](double mh, bool secondOrder) {
      Vec R3(qp.ntilde());
      for (size_t k = 0; k < K; ++k) {
        const int kk = static_cast<int>(k);
        if (qp.blocks[k].kind == BlockKind::Psd) {
          // scaled frame: X and S are both diag(gam); the corrected target
          // gam_i dT_ij + dT_ij gam_j = 2 mh I - 2 diag(gam)^2 - Ktilde
          // solves entrywise, then maps back through G
          const Mat& G = ps[k].G;
          const Mat& Gi = ps[k].Gi;
          const Vec& gam = ps[k].gam;
          const int r = qp.blocks[k].order;
          Mat Kt = Mat::Zero(r, r);
          if (secondOrder) {
            const Mat dXt = Gi * smat(qp.seg(dxa, kk)) * Gi.transpose();
            const Mat dSt = G.transpose() * smat(qp.seg(dsa, kk)) * G;
            Kt = dXt * dSt + dSt * dXt;
          }
          Mat R3t(r, r);
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
              const double diag = i == j ? 2.0 * (mh - gam[i] * gam[i]) : 0.0;
              R3t(i, j) = (diag - Kt(i, j)) / (gam[i] + gam[j]);
            }
          qp.seg(R3, kk) = svec(Gi.transpose() * R3t * Gi);
        } else {
          const auto xk = qp.seg(x, kk);
          Vec rk = mh * xk.cwiseInverse() - qp.seg(s, kk);
          if (secondOrder)
            rk -= qp.seg(dxa, kk).cwiseProduct(qp.seg(dsa, kk)).cwiseQuotient(xk);
          qp.seg(R3, kk) = rk;
        }
      }
      return R3;
    };
    const auto dualStep = [&](const Vec& dx, const Vec& dy) {
      Vec ds(qp.ntilde());
      for (size_t k = 0; k < K; ++k) {
        const int kk = static_cast<int>(k);
        qp.seg(ds, kk) = qp.sigma[k] * qp.seg(dx, kk) - qp.A[k].transpose() * dy +
                         qp.seg(rr.Rd, kk);
      }
      return ds;
    };

    Vec dx, dy;
    ctx.solve(-rr.Rd + buildR3(muHat, true), rr.rp, dx, dy);
    Vec ds = dualStep(dx, dy);
    double amax = std::min(max_step(qp, ps, false, x, dx), max_step(qp, ps, true, s, ds));
    double alpha = std::min(1.0, cfg.stepFraction * amax);
    if (alpha < 0.05) {
      // fallback: drop the second-order term and recenter when the corrected step collapses
      Vec dxc, dyc;
      ctx.solve(-rr.Rd + buildR3(std::max(0.5, sigc) * mu, false), rr.rp, dxc, dyc);
      const Vec dsc = dualStep(dxc, dyc);
      const double amaxc =
          std::min(max_step(qp, ps, false, x, dxc), max_step(qp, ps, true, s, dsc));
      const double alphac = std::min(1.0, cfg.stepFraction * amaxc);
      if (alphac > alpha) {
        dx = dxc;
        dy = dyc;
        ds = dsc;
        amax = amaxc;
        alpha = alphac;
      }
    }
    if (const char* dbg = std::getenv("PSCONE_IPM_TRACE"); dbg && *dbg == '1')
      std::fprintf(stderr, "it=%d mu=%.3e sigc=%.3e apa=%.3e ada=%.3e alpha=%.3e pres=%.3e dres=%.3e\n",
                   it, mu, sigc, apa, ada, alpha, rr.pres, rr.dres);
    if (alpha < 1e-9) {
      res.status = IpmStatus::NumericalFailure;
      break;
    }
    x += alpha * dx;
    y += alpha * dy;
    s += alpha * ds;
  }

  if (res.status == IpmStatus::MaxIter) {
    const Residuals rr = eval_residuals(qp, x, y, s, bScale, dScale);
    res.iterations = cfg.maxIter;
    track(rr);
  }
  if (res.pres <= cfg.feasTol && res.dres <= cfg.feasTol &&
      res.gap <= cfg.gapTol * std::max(1.0, std::abs(res.objective)))
    res.status = IpmStatus::Optimal;
  return res;
}

IpmResult solve_separable(const ProxQP& qp, int threads, const IpmConfig& cfg) {
  validate(qp);
  if (!qp.rowPartition) throw Error("solve_separable requires a row partition");
  const auto& part = *qp.rowPartition;
  const int G = static_cast<int>(part.size());
  if (G != qp.numCliqueBlocks) throw BadLengthError("one partition group per clique block required");
  const int m = qp.m();
  const int K = static_cast<int>(qp.blocks.size());

  std::vector<int> rowGroup(m, -1);
  for (int g = 0; g < G; ++g)
    for (int i : part[g]) {
      if (i < 0 || i >= m) throw Error("row partition index out of range");
      if (rowGroup[i] != -1) throw Error("row partition repeats a row");
      rowGroup[i] = g;
    }
  for (int i = 0; i < m; ++i)
    if (rowGroup[i] == -1) throw Error("row partition does not cover all rows");

  // owner group of each auxiliary column; columns no row touches go to group 0
  std::vector<std::vector<int>> owner(K);
  for (int k = qp.numCliqueBlocks; k < K; ++k) {
    owner[k].assign(qp.blocks[k].len, -1);
    for (int i = 0; i < m; ++i)
      for (SpMat::InnerIterator it(qp.A[k], i); it; ++it) {
        const int g = rowGroup[i];
        if (owner[k][it.col()] == -1)
          owner[k][it.col()] = g;
        else if (owner[k][it.col()] != g)
          throw Error("auxiliary column is shared across partition groups");
      }
    for (int& o : owner[k])
      if (o == -1) o = 0;
  }

  struct Sub {
    ProxQP qp;
    std::vector<int> rows;
    std::vector<std::pair<int, int>> tailCols;  // (source block, source column)
    IpmResult res;
  };
  std::vector<Sub> subs(G);
  for (int g = 0; g < G; ++g) {
    Sub& sub = subs[g];
    sub.rows = part[g];
    std::sort(sub.rows.begin(), sub.rows.end());
    std::vector<int> localRow(m, -1);
    for (size_t a = 0; a < sub.rows.size(); ++a) localRow[sub.rows[a]] = static_cast<int>(a);
    const int mg = static_cast<int>(sub.rows.size());

    auto slice = [&](int k, const std::vector<int>& colsKeep) {
      std::vector<Eigen::Triplet<double>> trips;
      std::vector<int> localCol(qp.blocks[k].len, -1);
      for (size_t a = 0; a < colsKeep.size(); ++a) localCol[colsKeep[a]] = static_cast<int>(a);
      for (int i = 0; i < m; ++i) {
        if (localRow[i] == -1) continue;
        for (SpMat::InnerIterator it(qp.A[k], i); it; ++it)
          if (localCol[it.col()] != -1)
            trips.emplace_back(localRow[i], localCol[it.col()], it.value());
      }
      SpMat As(mg, static_cast<int>(colsKeep.size()));
      As.setFromTriplets(trips.begin(), trips.end());
      return As;
    };

    std::vector<int> all(qp.blocks[g].len);
    for (int i = 0; i < qp.blocks[g].len; ++i) all[i] = i;
    sub.qp.blocks.push_back(qp.blocks[g]);
    sub.qp.sigma.push_back(qp.sigma[g]);
    sub.qp.A.push_back(slice(g, all));
    sub.qp.c.push_back(qp.c[g]);
    sub.qp.z.push_back(qp.sigma[g] > 0.0 ? qp.z[g] : Vec());
    for (int k = qp.numCliqueBlocks; k < K; ++k) {
      std::vector<int> keep;
      for (int c = 0; c < qp.blocks[k].len; ++c)
        if (owner[k][c] == g) keep.push_back(c);
      if (keep.empty()) continue;
      ConeBlock blk = qp.blocks[k];
      blk.len = static_cast<int>(keep.size());
      blk.order = 0;
      sub.qp.blocks.push_back(blk);
      sub.qp.sigma.push_back(qp.sigma[k]);
      sub.qp.A.push_back(slice(k, keep));
      Vec ck(keep.size()), zk;
      for (size_t a = 0; a < keep.size(); ++a) ck[a] = qp.c[k][keep[a]];
      if (qp.sigma[k] > 0.0) {
        zk.resize(keep.size());
        for (size_t a = 0; a < keep.size(); ++a) zk[a] = qp.z[k][keep[a]];
      }
      sub.qp.c.push_back(ck);
      sub.qp.z.push_back(zk);
      for (int c : keep) sub.tailCols.emplace_back(k, c);
    }
    sub.qp.b.resize(mg);
    for (int a = 0; a < mg; ++a) sub.qp.b[a] = qp.b[sub.rows[a]];
    sub.qp.numCliqueBlocks = 1;
    sub.qp.set_offsets();
  }

  auto solveOne = [&](int g) { subs[g].res = solve_prox_qp(subs[g].qp, cfg); };
  if (threads <= 1 || G <= 1) {
    for (int g = 0; g < G; ++g) solveOne(g);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int T = std::min(threads, G);
    pool.reserve(T);
    for (int t = 0; t < T; ++t)
      pool.emplace_back([&] {
        for (int g = next.fetch_add(1); g < G; g = next.fetch_add(1)) solveOne(g);
      });
    for (auto& th : pool) th.join();
  }

  IpmResult res;
  res.status = IpmStatus::Optimal;
  res.x = Vec::Zero(qp.ntilde());
  res.s = Vec::Zero(qp.ntilde());
  res.y = Vec::Zero(m);
  res.iterations = 0;
  for (int g = 0; g < G; ++g) {
    const Sub& sub = subs[g];
    if (sub.res.status == IpmStatus::NumericalFailure)
      res.status = IpmStatus::NumericalFailure;
    else if (sub.res.status == IpmStatus::MaxIter && res.status == IpmStatus::Optimal)
      res.status = IpmStatus::MaxIter;
    res.iterations = std::max(res.iterations, sub.res.iterations);
    qp.seg(res.x, g) = sub.qp.seg(sub.res.x, 0);
    qp.seg(res.s, g) = sub.qp.seg(sub.res.s, 0);
    int p = sub.qp.blockOffset[1];
    for (const auto& [k, c] : sub.tailCols) {
      res.x[qp.blockOffset[k] + c] = sub.res.x[p];
      res.s[qp.blockOffset[k] + c] = sub.res.s[p];
      ++p;
    }
    for (size_t a = 0; a < sub.rows.size(); ++a) res.y[sub.rows[a]] = sub.res.y[a];
  }

  Vec cStack = Vec::Zero(qp.ntilde()), szStack = Vec::Zero(qp.ntilde());
  for (int k = 0; k < K; ++k) {
    qp.seg(cStack, k) = qp.c[k];
    if (qp.sigma[k] > 0.0) qp.seg(szStack, k) = qp.sigma[k] * qp.z[k];
  }
  const Residuals rr = eval_residuals(qp, res.x, res.y, res.s, 1.0 + qp.b.norm(),
                                      1.0 + cStack.norm() + szStack.norm());
  res.pres = rr.pres;
  res.dres = rr.dres;
  res.gap = rr.gap;
  res.objective = rr.objective;
  return res;
}

}  // namespace pscone
