// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include "pscone.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "pscone/io.hpp"
#include "pscone/problems.hpp"
#include "pscone/spingarn.hpp"

struct psc_pattern {
  pscone::SparsityPattern v;
};

struct psc_cliquetree {
  pscone::CliqueTree tree;
  int fillAdded = 0;
};

struct psc_problem {
  pscone::ConicLP lp;
};

struct psc_solution {
  pscone::SparsityPattern pattern;
  int tail = 0;
  pscone::Solution sol;
};

namespace {

thread_local std::string g_error;

template <typename F>
psc_status guarded(F&& f) {
  try {
    f();
    g_error.clear();
    return PSC_OK;
  } catch (const pscone::ParseError& e) {
    g_error = e.what();
    return PSC_ERR_PARSE;
  } catch (const pscone::IoError& e) {
    g_error = e.what();
    return PSC_ERR_IO;
  } catch (const pscone::ProxFailure& e) {
    g_error = e.what();
    return PSC_ERR_SOLVE;
  } catch (const pscone::Error& e) {
    g_error = e.what();
    return PSC_ERR_INVALID_ARG;
  } catch (const std::exception& e) {
    g_error = e.what();
    return PSC_ERR_INTERNAL;
  }
}

psc_status invalid(const char* msg) {
  g_error = msg;
  return PSC_ERR_INVALID_ARG;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

/// Embedding + merge pipeline shared by psc_cliquetree_build and psc_solve.
pscone::CliqueTree build_tree(const pscone::SparsityPattern& v, int tFill, int tSize,
                              int* fillAdded) {
  pscone::EmbedResult emb = pscone::chordal_embed(v);
  pscone::CliqueTree tree =
      pscone::build_clique_tree(pscone::extract_cliques(emb.pattern, emb.order));
  tree = pscone::merge_cliques(tree, tFill, tSize);
  if (fillAdded != nullptr) {
    const pscone::SparsityPattern merged = pscone::pattern_of_cliques(v.order(), tree.cliques);
    *fillAdded = merged.nnzLower() - v.nnzLower();
  }
  return tree;
}

}  // namespace

extern "C" {

const char* psc_last_error(void) { return g_error.c_str(); }

const char* psc_version(void) { return "0.1.0"; }

void psc_string_free(char* s) { delete[] s; }

psc_status psc_pattern_read(const char* path, psc_pattern** out) {
  if (path == nullptr || out == nullptr) return invalid("psc_pattern_read: null argument");
  return guarded([&] { *out = new psc_pattern{pscone::read_pattern_file(path)}; });
}

int psc_pattern_order(const psc_pattern* p) { return p == nullptr ? 0 : p->v.order(); }

int psc_pattern_nnz_lower(const psc_pattern* p) { return p == nullptr ? 0 : p->v.nnzLower(); }

void psc_pattern_free(psc_pattern* p) { delete p; }

psc_status psc_cliquetree_build(const psc_pattern* p, int tFill, int tSize,
                                psc_cliquetree** out) {
  if (p == nullptr || out == nullptr) return invalid("psc_cliquetree_build: null argument");
  return guarded([&] {
    int fill = 0;
    pscone::CliqueTree tree = build_tree(p->v, tFill, tSize, &fill);
    *out = new psc_cliquetree{std::move(tree), fill};
  });
}

int psc_cliquetree_count(const psc_cliquetree* t) { return t == nullptr ? 0 : t->tree.size(); }

int psc_cliquetree_max_clique(const psc_cliquetree* t) {
  if (t == nullptr) return 0;
  int mx = 0;
  for (const auto& cl : t->tree.cliques) mx = std::max(mx, static_cast<int>(cl.size()));
  return mx;
}

double psc_cliquetree_avg_clique(const psc_cliquetree* t) {
  if (t == nullptr || t->tree.size() == 0) return 0.0;
  double sum = 0.0;
  for (const auto& cl : t->tree.cliques) sum += static_cast<double>(cl.size());
  return sum / t->tree.size();
}

int psc_cliquetree_fill_added(const psc_cliquetree* t) { return t == nullptr ? 0 : t->fillAdded; }

psc_status psc_cliquetree_json(const psc_cliquetree* t, char** out) {
  if (t == nullptr || out == nullptr) return invalid("psc_cliquetree_json: null argument");
  return guarded([&] { *out = copy_string(pscone::tree_to_json(t->tree)); });
}

void psc_cliquetree_free(psc_cliquetree* t) { delete t; }

psc_status psc_problem_read_sdpa(const char* path, psc_problem** out) {
  if (path == nullptr || out == nullptr) return invalid("psc_problem_read_sdpa: null argument");
  return guarded(
      [&] { *out = new psc_problem{pscone::sdpa_to_conic(pscone::read_sdpa_file(path))}; });
}

psc_status psc_problem_write_sdpa(const psc_problem* p, const char* path) {
  if (p == nullptr || path == nullptr) return invalid("psc_problem_write_sdpa: null argument");
  return guarded([&] { pscone::write_sdpa_file(path, pscone::conic_to_sdpa(p->lp)); });
}

psc_status psc_problem_gen_block_arrow(int l, int d, int w, int s, uint64_t seed,
                                       psc_problem** out) {
  if (out == nullptr) return invalid("psc_problem_gen_block_arrow: null argument");
  return guarded([&] {
    *out = new psc_problem{pscone::gen_block_arrow({l, d, w, s, seed}).lp};
  });
}

psc_status psc_problem_gen_edm(int nodes, int dim, int knn, uint64_t seed, double noise,
                               psc_problem** out) {
  if (out == nullptr) return invalid("psc_problem_gen_edm: null argument");
  return guarded([&] {
    *out = new psc_problem{
        pscone::build_edm_problem(pscone::gen_sensor_network(nodes, dim, knn, seed, noise))};
  });
}

int psc_problem_rows(const psc_problem* p) { return p == nullptr ? 0 : p->lp.m(); }

int psc_problem_cols(const psc_problem* p) { return p == nullptr ? 0 : p->lp.n(); }

int psc_problem_order(const psc_problem* p) { return p == nullptr ? 0 : p->lp.pattern.order(); }

int psc_problem_tail(const psc_problem* p) { return p == nullptr ? 0 : p->lp.tail; }

void psc_problem_free(psc_problem* p) { delete p; }

void psc_solve_options_default(psc_solve_options* opt) {
  if (opt == nullptr) return;
  pscone::SpingarnConfig cfg;
  opt->sigma0 = cfg.sigma0;
  opt->adaptive = cfg.adaptive ? 1 : 0;
  opt->mu = cfg.mu;
  opt->rho = cfg.rho;
  opt->eps_primal = cfg.epsP;
  opt->eps_dual = cfg.epsD;
  opt->max_iter = cfg.maxIter;
  opt->threads = cfg.threads;
  opt->strategy = 0;
  opt->embed = 1;
  opt->t_fill = 5;
  opt->t_size = 5;
}

psc_status psc_solve(const psc_problem* p, const psc_solve_options* opt, psc_solution** out) {
  if (p == nullptr || out == nullptr) return invalid("psc_solve: null argument");
  psc_solve_options defaults;
  psc_solve_options_default(&defaults);
  if (opt == nullptr) opt = &defaults;
  return guarded([&] {
    pscone::SpingarnConfig cfg;
    cfg.sigma0 = opt->sigma0;
    cfg.adaptive = opt->adaptive != 0;
    cfg.mu = opt->mu;
    cfg.rho = opt->rho;
    cfg.epsP = opt->eps_primal;
    cfg.epsD = opt->eps_dual;
    cfg.maxIter = opt->max_iter;
    cfg.threads = opt->threads;
    const pscone::Strategy strategy = opt->strategy == 1
                                          ? pscone::Strategy::SeparatorSubtraction
                                          : pscone::Strategy::SingleCliqueFirst;

    pscone::ConicLP lp = p->lp;
    pscone::CliqueTree tree{};
    if (opt->embed != 0) {
      tree = build_tree(lp.pattern, opt->t_fill, opt->t_size, nullptr);
      lp = pscone::relax_to_pattern(
          lp, pscone::pattern_of_cliques(lp.pattern.order(), tree.cliques));
    } else {
      pscone::McsResult res = pscone::mcs(lp.pattern);
      if (!res.chordal)
        throw pscone::NotChordalError("psc_solve: pattern is not chordal; enable embedding");
      tree = pscone::build_clique_tree(pscone::extract_cliques(lp.pattern, res.order));
    }
    pscone::Solution sol = pscone::solve(lp, tree, cfg, strategy);
    *out = new psc_solution{std::move(lp.pattern), lp.tail, std::move(sol)};
  });
}

int psc_solution_status(const psc_solution* s) {
  return s != nullptr && s->sol.status == pscone::SolveStatus::Converged ? 0 : 1;
}

double psc_solution_objective(const psc_solution* s) {
  return s == nullptr ? 0.0 : s->sol.objective;
}

int psc_solution_iterations(const psc_solution* s) {
  return s == nullptr ? 0 : s->sol.iterations;
}

int psc_solution_entry_count(const psc_solution* s) {
  return s == nullptr ? 0 : s->pattern.nnzLower();
}

psc_status psc_solution_entry(const psc_solution* s, int idx, int* i, int* j, double* value) {
  if (s == nullptr || idx < 0 || idx >= s->pattern.nnzLower())
    return invalid("psc_solution_entry: bad handle or index");
  const auto [ei, ej] = s->pattern.entries()[idx];
  if (i != nullptr) *i = ei;
  if (j != nullptr) *j = ej;
  if (value != nullptr) *value = s->sol.x[idx];
  g_error.clear();
  return PSC_OK;
}

int psc_solution_tail_len(const psc_solution* s) { return s == nullptr ? 0 : s->tail; }

double psc_solution_tail(const psc_solution* s, int t) {
  if (s == nullptr || t < 0 || t >= s->tail) return 0.0;
  return s->sol.x[s->pattern.nnzLower() + t];
}

psc_status psc_solution_write(const psc_solution* s, const char* path) {
  if (s == nullptr || path == nullptr) return invalid("psc_solution_write: null argument");
  return guarded([&] {
    std::ofstream f(path);
    if (!f) throw pscone::IoError("cannot open '" + std::string(path) + "' for writing");
    pscone::write_solution(f, s->pattern, s->sol.x, s->tail, s->sol.objective, s->sol.status,
                           s->sol.iterations);
  });
}

psc_status psc_solution_log_csv(const psc_solution* s, char** out) {
  if (s == nullptr || out == nullptr) return invalid("psc_solution_log_csv: null argument");
  return guarded([&] {
    std::ostringstream os;
    pscone::write_log_csv(os, s->sol.log);
    *out = copy_string(os.str());
  });
}

void psc_solution_free(psc_solution* s) { delete s; }

}  // extern "C"
