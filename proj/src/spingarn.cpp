// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include "pscone/spingarn.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace pscone {

namespace {

void validate(const SpingarnConfig& cfg) {
  if (!(cfg.sigma0 > 0.0)) throw Error("spingarn: sigma0 must be positive");
  if (!(cfg.mu > 1.0)) throw Error("spingarn: mu must exceed 1");
  if (!(cfg.rho > 0.0 && cfg.rho < 2.0)) throw Error("spingarn: rho must lie in (0, 2)");
  if (!(cfg.epsP > 0.0) || !(cfg.epsD > 0.0))
    throw Error("spingarn: tolerances must be positive");
  if (cfg.maxIter < 1) throw Error("spingarn: maxIter must be at least 1");
  if (!(cfg.tauBase > 0.0 && cfg.tauBase < 1.0))
    throw Error("spingarn: tauBase must lie in (0, 1)");
  if (std::isfinite(cfg.tauConst) && !(cfg.tauConst > 1.0))
    throw Error("spingarn: tauConst must exceed 1");
  if (cfg.threads < 1) throw Error("spingarn: threads must be at least 1");
}

double stacked_objective(const ConvertedProblem& cp, const Vec& xt) {
  double obj = 0.0;
  for (size_t k = 0; k < cp.blocks.size(); ++k)
    obj += cp.cblocks[k].dot(xt.segment(cp.blockOffset[k], cp.blocks[k].len));
  return obj;
}

}  // namespace

SpingarnState init_state(const ConvertedProblem& cp, const SpingarnConfig& cfg) {
  validate(cfg);
  SpingarnState st;
  const int nt = cp.ntilde();
  st.z = Vec::Zero(nt);
  st.xTilde = Vec::Zero(nt);
  st.w = Vec::Zero(nt);
  st.v = Vec::Zero(nt);
  st.rP = Vec::Zero(nt);
  st.rD = Vec::Zero(nt);
  st.sigma = cfg.sigma0;
  st.partition = correlative_pattern(cp).partition;
  return st;
}

void step(const ConvertedProblem& cp, SpingarnState& st, const SpingarnConfig& cfg) {
  ProxQP qp = make_prox_qp(cp, st.sigma, st.z);
  qp.rowPartition = st.partition;

  const auto t0 = std::chrono::steady_clock::now();
  const IpmResult res = st.partition.has_value() ? solve_separable(qp, cfg.threads, cfg.prox)
                                                 : solve_prox_qp(qp, cfg.prox);
  const auto t1 = std::chrono::steady_clock::now();
  const double proxMs = std::chrono::duration<double, std::milli>(t1 - t0).count();

  if (res.pres > 1e-6 || res.dres > 1e-6 ||
      res.gap > 1e-6 * std::max(1.0, std::abs(res.objective))) {
    std::ostringstream msg;
    msg << "spingarn: prox subproblem too inaccurate at iteration " << st.iter + 1
        << " (pres " << res.pres << ", dres " << res.dres << ", gap " << res.gap << ")";
    throw ProxFailure(msg.str());
  }

  const Vec zPrev = st.z;
  st.xTilde = res.x;

  st.v.setZero();
  for (int k = 0; k < cp.numCliqueBlocks; ++k) {
    const int off = cp.blockOffset[k];
    const int len = cp.blocks[k].len;
    st.v.segment(off, len) = st.sigma * (zPrev.segment(off, len) - st.xTilde.segment(off, len));
  }

  st.rP = project_V(cp, st.xTilde) - st.xTilde;
  st.rD = -project_V(cp, st.v);

  st.w = project_V(cp, 2.0 * st.xTilde - zPrev);
  const int tailOff = cp.blockOffset[cp.numCliqueBlocks];
  const int tailLen = cp.ntilde() - tailOff;
  st.w.segment(tailOff, tailLen) = st.xTilde.segment(tailOff, tailLen);

  st.z = zPrev + cfg.rho * (st.w - st.xTilde);
  st.z.segment(tailOff, tailLen) = st.xTilde.segment(tailOff, tailLen);

  ++st.iter;
  LogRecord rec;
  rec.iter = st.iter;
  rec.sigma = st.sigma;
  rec.relRp = st.rP.norm() / std::max(1.0, st.xTilde.norm());
  rec.relRd = st.rD.norm() / std::max(1.0, st.v.norm());
  rec.objective = stacked_objective(cp, st.xTilde);
  rec.proxMs = proxMs;
  st.log.push_back(rec);
}

double update_sigma(SpingarnState& st, const SpingarnConfig& cfg) {
  const double nx = st.xTilde.norm();
  const double nv = st.v.norm();
  const double nrd = st.rD.norm();
  if (nx == 0.0 || nv == 0.0 || nrd == 0.0) return st.sigma;
  const double t = (st.rP.norm() / nx) * (nv / nrd);
  const double tau =
      std::isfinite(cfg.tauConst) ? cfg.tauConst : 1.0 + std::pow(cfg.tauBase, st.iter);
  double next = st.sigma;
  if (t > cfg.mu)
    next = st.sigma * tau;
  else if (t < 1.0 / cfg.mu)
    next = st.sigma / tau;
  if (next != st.sigma && cfg.rescaleZ) st.z = st.xTilde + (st.sigma / next) * (st.z - st.xTilde);
  st.sigma = next;
  return next;
}

Solution solve_converted(const ConvertedProblem& cp, const SpingarnConfig& cfg) {
  SpingarnState st = init_state(cp, cfg);
  SolveStatus status = SolveStatus::MaxIter;
  while (st.iter < cfg.maxIter) {
    step(cp, st, cfg);
    const LogRecord& rec = st.log.back();
    if (rec.relRp <= cfg.epsP && rec.relRd <= cfg.epsD) {
      status = SolveStatus::Converged;
      break;
    }
    if (cfg.adaptive) update_sigma(st, cfg);
  }
  Solution sol;
  sol.x = restrict_avg(cp, st.xTilde);
  sol.xTilde = st.xTilde;
  sol.objective = st.log.empty() ? 0.0 : st.log.back().objective;
  sol.status = status;
  sol.iterations = st.iter;
  sol.log = std::move(st.log);
  return sol;
}

Solution solve(const ConicLP& lp, const CliqueTree& tree, const SpingarnConfig& cfg,
               Strategy strategy) {
  return solve_converted(convert(lp, tree, strategy), cfg);
}

void write_log_csv(std::ostream& os, const std::vector<LogRecord>& log) {
  os << "iter,sigma,rel_rp,rel_rd,objective,prox_ms\n";
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(12);
  for (const LogRecord& r : log)
    os << r.iter << ',' << r.sigma << ',' << r.relRp << ',' << r.relRd << ',' << r.objective
       << ',' << r.proxMs << '\n';
  os.flags(flags);
  os.precision(prec);
}

}  // namespace pscone
