// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "pscone.h"

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  REQUIRE(f.good());
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("version and null argument handling") {
  CHECK(std::string(psc_version()) == "0.1.0");
  CHECK(psc_pattern_read(nullptr, nullptr) == PSC_ERR_INVALID_ARG);
  CHECK(std::string(psc_last_error()).find("null") != std::string::npos);
  CHECK(psc_solve(nullptr, nullptr, nullptr) == PSC_ERR_INVALID_ARG);
  CHECK(psc_problem_read_sdpa("/nonexistent/file.dat-s", nullptr) == PSC_ERR_INVALID_ARG);
}

TEST_CASE("pattern files surface parse and io errors") {
  psc_pattern* p = nullptr;
  CHECK(psc_pattern_read("capi_missing.txt", &p) == PSC_ERR_IO);

  TempFile bad("capi_bad_pattern.txt");
  write_file(bad.path, "3\n1 9\n");
  CHECK(psc_pattern_read(bad.path.c_str(), &p) == PSC_ERR_PARSE);
  CHECK(std::string(psc_last_error()).find("line 2") != std::string::npos);

  TempFile good("capi_pattern.txt");
  write_file(good.path, "5\n1 2\n3 4\n1 5\n2 5\n3 5\n4 5\n");
  REQUIRE(psc_pattern_read(good.path.c_str(), &p) == PSC_OK);
  CHECK(std::string(psc_last_error()).empty());
  CHECK(psc_pattern_order(p) == 5);
  CHECK(psc_pattern_nnz_lower(p) == 11);
  psc_pattern_free(p);
}

TEST_CASE("clique tree stats and merging") {
  TempFile file("capi_arrow.txt");
  write_file(file.path, "5\n1 2\n3 4\n1 5\n2 5\n3 5\n4 5\n");
  psc_pattern* p = nullptr;
  REQUIRE(psc_pattern_read(file.path.c_str(), &p) == PSC_OK);

  psc_cliquetree* raw = nullptr;
  REQUIRE(psc_cliquetree_build(p, -1, -1, &raw) == PSC_OK);
  CHECK(psc_cliquetree_count(raw) == 2);
  CHECK(psc_cliquetree_max_clique(raw) == 3);
  CHECK(psc_cliquetree_avg_clique(raw) == doctest::Approx(3.0));
  CHECK(psc_cliquetree_fill_added(raw) == 0);

  char* json = nullptr;
  REQUIRE(psc_cliquetree_json(raw, &json) == PSC_OK);
  CHECK(std::string(json).find("\"cliques\"") != std::string::npos);
  psc_string_free(json);
  psc_cliquetree_free(raw);

  // Default thresholds absorb the two cliques into one dense block.
  psc_cliquetree* merged = nullptr;
  REQUIRE(psc_cliquetree_build(p, 5, 5, &merged) == PSC_OK);
  CHECK(psc_cliquetree_count(merged) == 1);
  CHECK(psc_cliquetree_max_clique(merged) == 5);
  CHECK(psc_cliquetree_fill_added(merged) == 4);
  psc_cliquetree_free(merged);
  psc_pattern_free(p);
}

TEST_CASE("generated block arrow solves and round trips") {
  psc_problem* prob = nullptr;
  REQUIRE(psc_problem_gen_block_arrow(2, 2, 1, 2, 42, &prob) == PSC_OK);
  CHECK(psc_problem_rows(prob) == 4);
  CHECK(psc_problem_order(prob) == 5);
  CHECK(psc_problem_tail(prob) == 0);

  TempFile f1("capi_arrow1.dat-s"), f2("capi_arrow2.dat-s");
  REQUIRE(psc_problem_write_sdpa(prob, f1.path.c_str()) == PSC_OK);
  psc_problem* again = nullptr;
  REQUIRE(psc_problem_gen_block_arrow(2, 2, 1, 2, 42, &again) == PSC_OK);
  REQUIRE(psc_problem_write_sdpa(again, f2.path.c_str()) == PSC_OK);
  CHECK(read_file(f1.path) == read_file(f2.path));
  psc_problem_free(again);

  psc_problem* back = nullptr;
  REQUIRE(psc_problem_read_sdpa(f1.path.c_str(), &back) == PSC_OK);
  CHECK(psc_problem_rows(back) == 4);
  CHECK(psc_problem_cols(back) == psc_problem_cols(prob));

  psc_solution* sol = nullptr;
  REQUIRE(psc_solve(back, nullptr, &sol) == PSC_OK);
  CHECK(psc_solution_status(sol) == 0);
  CHECK(psc_solution_iterations(sol) >= 1);
  CHECK(psc_solution_entry_count(sol) >= psc_pattern_nnz_lower(nullptr));

  int i = -1, j = -1;
  double v = 0.0;
  REQUIRE(psc_solution_entry(sol, 0, &i, &j, &v) == PSC_OK);
  CHECK(i == 0);
  CHECK(j == 0);
  CHECK(psc_solution_entry(sol, -1, &i, &j, &v) == PSC_ERR_INVALID_ARG);

  char* csv = nullptr;
  REQUIRE(psc_solution_log_csv(sol, &csv) == PSC_OK);
  CHECK(std::string(csv).rfind("iter,sigma,rel_rp,rel_rd,objective,prox_ms\n", 0) == 0);
  psc_string_free(csv);

  TempFile out("capi_solution.txt");
  REQUIRE(psc_solution_write(sol, out.path.c_str()) == PSC_OK);
  CHECK(read_file(out.path).rfind("# status Converged\n", 0) == 0);

  psc_solution_free(sol);
  psc_problem_free(back);
  psc_problem_free(prob);
}

TEST_CASE("distance problems solve through the api") {
  psc_problem* prob = nullptr;
  REQUIRE(psc_problem_gen_edm(8, 2, 3, 6, 0.0, &prob) == PSC_OK);
  CHECK(psc_problem_order(prob) == 7);
  CHECK(psc_problem_tail(prob) == 2 * psc_problem_rows(prob));

  psc_solve_options opt;
  psc_solve_options_default(&opt);
  CHECK(opt.sigma0 == 1.0);
  CHECK(opt.embed == 1);
  opt.max_iter = 2000;

  psc_solution* sol = nullptr;
  REQUIRE(psc_solve(prob, &opt, &sol) == PSC_OK);
  CHECK(psc_solution_status(sol) == 0);
  CHECK(psc_solution_objective(sol) >= -1e-8);
  CHECK(psc_solution_objective(sol) <= 0.05);
  CHECK(psc_solution_tail_len(sol) == psc_problem_tail(prob));
  psc_solution_free(sol);
  psc_problem_free(prob);
}

TEST_CASE("nonchordal aggregate requires the embedding pipeline") {
  TempFile file("capi_cycle.dat-s");
  write_file(file.path,
             "1\n1\n4\n0\n"
             "0 1 1 1 1\n0 1 2 2 1\n0 1 3 3 1\n0 1 4 4 1\n"
             "1 1 1 2 1\n1 1 2 3 1\n1 1 3 4 1\n1 1 1 4 1\n");
  psc_problem* prob = nullptr;
  REQUIRE(psc_problem_read_sdpa(file.path.c_str(), &prob) == PSC_OK);

  psc_solve_options opt;
  psc_solve_options_default(&opt);
  opt.embed = 0;
  psc_solution* sol = nullptr;
  CHECK(psc_solve(prob, &opt, &sol) == PSC_ERR_INVALID_ARG);
  CHECK(std::string(psc_last_error()).find("chordal") != std::string::npos);

  opt.embed = 1;
  REQUIRE(psc_solve(prob, &opt, &sol) == PSC_OK);
  CHECK(psc_solution_status(sol) == 0);
  CHECK(psc_solution_objective(sol) <= 1e-3);
  psc_solution_free(sol);
  psc_problem_free(prob);
}

TEST_CASE("empty constraint set minimizes over the cone alone") {
  TempFile file("capi_unconstrained.dat-s");
  write_file(file.path, "0\n1\n2\n\n0 1 1 1 1\n0 1 2 2 1\n");
  psc_problem* prob = nullptr;
  REQUIRE(psc_problem_read_sdpa(file.path.c_str(), &prob) == PSC_OK);
  CHECK(psc_problem_rows(prob) == 0);

  psc_solution* sol = nullptr;
  REQUIRE(psc_solve(prob, nullptr, &sol) == PSC_OK);
  CHECK(psc_solution_status(sol) == 0);
  CHECK(psc_solution_objective(sol) >= -1e-10);
  CHECK(psc_solution_objective(sol) <= 1e-3);
  psc_solution_free(sol);
  psc_problem_free(prob);
}
