/* Copyright the pscone authors */
/* SPDX-License-Identifier: Apache-2.0 */

/* C interface to the pscone solver toolkit.  All objects are opaque handles
 * created and destroyed through this API; every fallible call returns a
 * psc_status, with a thread-local message available from psc_last_error().
 * Indices returned by accessors are 0-based; the file formats are 1-based. */

#ifndef PSCONE_H
#define PSCONE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psc_status {
  PSC_OK = 0,
  PSC_ERR_INVALID_ARG = 1,
  PSC_ERR_PARSE = 2,
  PSC_ERR_IO = 3,
  PSC_ERR_SOLVE = 4,
  PSC_ERR_INTERNAL = 5
} psc_status;

/* Message describing the most recent failure on the calling thread; empty
 * after a successful call. */
const char* psc_last_error(void);

const char* psc_version(void);

/* Frees a string returned through a char** out parameter. */
void psc_string_free(char* s);

typedef struct psc_pattern psc_pattern;
typedef struct psc_cliquetree psc_cliquetree;
typedef struct psc_problem psc_problem;
typedef struct psc_solution psc_solution;

/* ---- sparsity patterns ---- */

/* Reads a pattern coordinate file (first token: order; then 1-based "i j"
 * pairs; '#' and '*' comment lines). */
psc_status psc_pattern_read(const char* path, psc_pattern** out);
int psc_pattern_order(const psc_pattern* p);
int psc_pattern_nnz_lower(const psc_pattern* p);
void psc_pattern_free(psc_pattern* p);

/* ---- clique trees ---- */

/* Chordal embedding, maximal clique extraction, maximum-weight spanning
 * tree, then greedy clique merging with thresholds tFill and tSize.
 * Negative thresholds leave the tree unmerged. */
psc_status psc_cliquetree_build(const psc_pattern* p, int tFill, int tSize,
                                psc_cliquetree** out);
int psc_cliquetree_count(const psc_cliquetree* t);
int psc_cliquetree_max_clique(const psc_cliquetree* t);
double psc_cliquetree_avg_clique(const psc_cliquetree* t);
/* Pattern entries added relative to the input, embedding and merge fill
 * combined. */
int psc_cliquetree_fill_added(const psc_cliquetree* t);
/* JSON object with keys order, cliques, parent, separators, residuals. */
psc_status psc_cliquetree_json(const psc_cliquetree* t, char** out);
void psc_cliquetree_free(psc_cliquetree* t);

/* ---- problems ---- */

/* Reads an SDPA sparse (.dat-s) file as a trace-equality conic LP: the
 * aggregate pattern of all coefficient matrices defines the matrix cone,
 * diagonal blocks become the nonnegative tail, and the mat-0 matrix is the
 * cost. */
psc_status psc_problem_read_sdpa(const char* path, psc_problem** out);
psc_status psc_problem_write_sdpa(const psc_problem* p, const char* path);
psc_status psc_problem_gen_block_arrow(int l, int d, int w, int s, uint64_t seed,
                                       psc_problem** out);
psc_status psc_problem_gen_edm(int nodes, int dim, int knn, uint64_t seed, double noise,
                               psc_problem** out);
int psc_problem_rows(const psc_problem* p);
int psc_problem_cols(const psc_problem* p);
int psc_problem_order(const psc_problem* p);
int psc_problem_tail(const psc_problem* p);
void psc_problem_free(psc_problem* p);

/* ---- solving ---- */

typedef struct psc_solve_options {
  double sigma0;
  int adaptive; /* nonzero enables the residual-balancing steplength */
  double mu;
  double rho;
  double eps_primal;
  double eps_dual;
  int max_iter;
  int threads;
  int strategy; /* 0 single-clique-first, 1 separator-subtraction */
  int embed;    /* nonzero: chordal embedding + clique merging pipeline */
  int t_fill;   /* merge thresholds; negative disables merging */
  int t_size;
} psc_solve_options;

void psc_solve_options_default(psc_solve_options* opt);

psc_status psc_solve(const psc_problem* p, const psc_solve_options* opt, psc_solution** out);

/* 0 converged, 1 iteration limit. */
int psc_solution_status(const psc_solution* s);
double psc_solution_objective(const psc_solution* s);
int psc_solution_iterations(const psc_solution* s);
/* Solution entries over the (possibly enlarged) solve pattern. */
int psc_solution_entry_count(const psc_solution* s);
psc_status psc_solution_entry(const psc_solution* s, int idx, int* i, int* j, double* value);
int psc_solution_tail_len(const psc_solution* s);
double psc_solution_tail(const psc_solution* s, int t);
/* Writes the solution file ("i j value" triples, then the tail). */
psc_status psc_solution_write(const psc_solution* s, const char* path);
/* Per-iteration convergence log as CSV:
 * iter,sigma,rel_rp,rel_rd,objective,prox_ms */
psc_status psc_solution_log_csv(const psc_solution* s, char** out);
void psc_solution_free(psc_solution* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PSCONE_H */
