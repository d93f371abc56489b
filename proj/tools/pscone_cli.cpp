// Copyright the pscone authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pscone.h"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int fail(const std::string& context) {
  std::cerr << context << ": " << psc_last_error() << "\n";
  return 1;
}

bool write_text(const std::string& path, const std::string& text, const std::string& context) {
  std::ofstream f(path);
  if (!f) {
    std::cerr << context << ": cannot open '" << path << "' for writing\n";
    return false;
  }
  f << text;
  return true;
}

bool write_manifest(const std::string& path, const nlohmann::json& manifest) {
  if (path.empty()) return true;
  return write_text(path, manifest.dump(2) + "\n", "manifest");
}

struct EmbedArgs {
  std::string input, output, manifest;
  int tFill = 5, tSize = 5;
  bool noMerge = false;
};

int run_embed(const EmbedArgs& a) {
  const auto t0 = Clock::now();
  psc_pattern* pattern = nullptr;
  if (psc_pattern_read(a.input.c_str(), &pattern) != PSC_OK) return fail("embed");
  const int tf = a.noMerge ? -1 : a.tFill;
  const int ts = a.noMerge ? -1 : a.tSize;
  psc_cliquetree* tree = nullptr;
  if (psc_cliquetree_build(pattern, tf, ts, &tree) != PSC_OK) {
    psc_pattern_free(pattern);
    return fail("embed");
  }

  std::cout << "order: " << psc_pattern_order(pattern) << "\n"
            << "cliques: " << psc_cliquetree_count(tree) << "\n"
            << "max clique: " << psc_cliquetree_max_clique(tree) << "\n"
            << "avg clique: " << psc_cliquetree_avg_clique(tree) << "\n"
            << "fill added: " << psc_cliquetree_fill_added(tree) << "\n";

  int rc = 0;
  if (!a.output.empty()) {
    char* json = nullptr;
    if (psc_cliquetree_json(tree, &json) != PSC_OK) {
      rc = fail("embed");
    } else {
      if (!write_text(a.output, json, "embed")) rc = 1;
      psc_string_free(json);
    }
  }
  if (rc == 0) {
    nlohmann::json manifest = {
        {"command", "embed"},
        {"inputs", {{"pattern", a.input}}},
        {"outputs", {{"tree", a.output}}},
        {"config", {{"t_fill", tf}, {"t_size", ts}}},
        {"timings", {{"total_ms", ms_since(t0)}}},
        {"status", "ok"}};
    if (!write_manifest(a.manifest, manifest)) rc = 1;
  }
  psc_cliquetree_free(tree);
  psc_pattern_free(pattern);
  return rc;
}

struct SolveArgs {
  std::string input, output, logPath, manifest;
  psc_solve_options opt{};
  double eps = 1e-4;
  std::string strategy = "single";
  bool adaptive = true;
  bool embed = true;
};

int run_solve(const SolveArgs& a) {
  const auto t0 = Clock::now();
  psc_problem* prob = nullptr;
  if (psc_problem_read_sdpa(a.input.c_str(), &prob) != PSC_OK) return fail("solve");

  psc_solve_options opt = a.opt;
  opt.adaptive = a.adaptive ? 1 : 0;
  opt.eps_primal = a.eps;
  opt.eps_dual = a.eps;
  opt.strategy = a.strategy == "separator" ? 1 : 0;
  opt.embed = a.embed ? 1 : 0;

  const auto tSolve = Clock::now();
  psc_solution* sol = nullptr;
  if (psc_solve(prob, &opt, &sol) != PSC_OK) {
    psc_problem_free(prob);
    return fail("solve");
  }
  const double solveMs = ms_since(tSolve);

  const std::string outPath = a.output.empty() ? a.input + ".sol" : a.output;
  const std::string logPath = a.logPath.empty() ? a.input + ".log.csv" : a.logPath;
  int rc = psc_solution_status(sol) == 0 ? 0 : 2;
  if (psc_solution_write(sol, outPath.c_str()) != PSC_OK) rc = fail("solve");
  char* csv = nullptr;
  if (rc != 1 && psc_solution_log_csv(sol, &csv) == PSC_OK) {
    if (!write_text(logPath, csv, "solve")) rc = 1;
    psc_string_free(csv);
  }

  const char* status = psc_solution_status(sol) == 0 ? "Converged" : "MaxIter";
  std::cout << "status: " << status << "\n"
            << "objective: " << psc_solution_objective(sol) << "\n"
            << "iterations: " << psc_solution_iterations(sol) << "\n";

  if (rc != 1) {
    nlohmann::json manifest = {
        {"command", "solve"},
        {"inputs", {{"problem", a.input}}},
        {"outputs", {{"solution", outPath}, {"log", logPath}}},
        {"config",
         {{"sigma0", opt.sigma0},
          {"adaptive", opt.adaptive != 0},
          {"mu", opt.mu},
          {"rho", opt.rho},
          {"eps", a.eps},
          {"max_iter", opt.max_iter},
          {"strategy", a.strategy},
          {"threads", opt.threads},
          {"embed", a.embed},
          {"t_fill", opt.t_fill},
          {"t_size", opt.t_size}}},
        {"timings", {{"total_ms", ms_since(t0)}, {"solve_ms", solveMs}}},
        {"status", status}};
    if (!write_manifest(a.manifest, manifest)) rc = 1;
  }
  psc_solution_free(sol);
  psc_problem_free(prob);
  return rc;
}

int write_generated(psc_problem* prob, const std::string& output, const std::string& manifest,
                    const nlohmann::json& config, std::uint64_t seed, Clock::time_point t0) {
  if (prob == nullptr) return fail("generate");
  int rc = 0;
  if (psc_problem_write_sdpa(prob, output.c_str()) != PSC_OK) rc = fail("generate");
  if (rc == 0) {
    std::cout << "wrote " << output << " (" << psc_problem_rows(prob) << " rows, order "
              << psc_problem_order(prob) << ", tail " << psc_problem_tail(prob) << ")\n";
    nlohmann::json m = {{"command", "generate"},
                        {"inputs", nlohmann::json::object()},
                        {"outputs", {{"problem", output}}},
                        {"config", config},
                        {"seed", seed},
                        {"timings", {{"total_ms", ms_since(t0)}}},
                        {"status", "ok"}};
    if (!write_manifest(manifest, m)) rc = 1;
  }
  psc_problem_free(prob);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pscone: clique-tree decomposition solver for sparse conic programs"};
  app.require_subcommand(1);
  int rc = 0;

  EmbedArgs ea;
  CLI::App* embed = app.add_subcommand("embed", "Chordal embedding and clique tree of a pattern");
  embed->add_option("input", ea.input, "pattern coordinate file")->required();
  embed->add_option("-o,--output", ea.output, "clique tree JSON path");
  embed->add_option("--tfill", ea.tFill, "merge fill threshold")->capture_default_str();
  embed->add_option("--tsize", ea.tSize, "merge size threshold")->capture_default_str();
  embed->add_flag("--no-merge", ea.noMerge, "skip clique merging");
  embed->add_option("--manifest", ea.manifest, "run manifest JSON path");
  embed->callback([&] { rc = run_embed(ea); });

  SolveArgs sa;
  psc_solve_options_default(&sa.opt);
  CLI::App* solve = app.add_subcommand("solve", "Solve an SDPA sparse problem");
  solve->add_option("input", sa.input, "SDPA sparse (.dat-s) file")->required();
  solve->add_option("-o,--output", sa.output, "solution path (default: input + .sol)");
  solve->add_option("--log", sa.logPath, "iteration CSV path (default: input + .log.csv)");
  solve->add_option("--sigma0", sa.opt.sigma0, "initial steplength")->capture_default_str();
  solve->add_flag("--adaptive,!--no-adaptive", sa.adaptive, "residual-balancing steplength");
  solve->add_option("--mu", sa.opt.mu, "balance threshold")->capture_default_str();
  solve->add_option("--rho", sa.opt.rho, "relaxation parameter")->capture_default_str();
  solve->add_option("--eps", sa.eps, "primal and dual stopping tolerance")
      ->capture_default_str();
  solve->add_option("--max-iter", sa.opt.max_iter, "iteration limit")->capture_default_str();
  solve->add_option("--strategy", sa.strategy, "row placement: single or separator")
      ->check(CLI::IsMember({"single", "separator"}))
      ->capture_default_str();
  solve->add_option("--threads", sa.opt.threads, "prox subproblem threads")
      ->capture_default_str();
  solve->add_flag("--embed,!--no-embed", sa.embed, "chordal embedding and clique merging");
  solve->add_option("--tfill", sa.opt.t_fill, "merge fill threshold")->capture_default_str();
  solve->add_option("--tsize", sa.opt.t_size, "merge size threshold")->capture_default_str();
  solve->add_option("--manifest", sa.manifest, "run manifest JSON path");
  solve->callback([&] { rc = run_solve(sa); });

  CLI::App* gen = app.add_subcommand("generate", "Generate benchmark instances");
  gen->require_subcommand(1);

  struct {
    int l = 4, d = 3, w = 2, s = 2;
    std::uint64_t seed = 0;
    std::string output, manifest;
  } ba;
  CLI::App* arrow = gen->add_subcommand("block-arrow", "Random block-arrow SDP");
  arrow->add_option("-l", ba.l, "diagonal blocks")->capture_default_str();
  arrow->add_option("-d", ba.d, "diagonal block order")->capture_default_str();
  arrow->add_option("-w", ba.w, "arrow width")->capture_default_str();
  arrow->add_option("-s", ba.s, "constraint rows per block")->capture_default_str();
  arrow->add_option("--seed", ba.seed, "random seed")->capture_default_str();
  arrow->add_option("-o,--output", ba.output, "output .dat-s path")->required();
  arrow->add_option("--manifest", ba.manifest, "run manifest JSON path");
  arrow->callback([&] {
    const auto t0 = Clock::now();
    psc_problem* prob = nullptr;
    if (psc_problem_gen_block_arrow(ba.l, ba.d, ba.w, ba.s, ba.seed, &prob) != PSC_OK) {
      rc = fail("generate");
      return;
    }
    nlohmann::json config = {
        {"kind", "block-arrow"}, {"l", ba.l}, {"d", ba.d}, {"w", ba.w}, {"s", ba.s}};
    rc = write_generated(prob, ba.output, ba.manifest, config, ba.seed, t0);
  });

  struct {
    int nodes = 30, dim = 2, knn = 5;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string output, manifest;
  } ed;
  CLI::App* edm = gen->add_subcommand("edm", "Sensor-network distance fitting instance");
  edm->add_option("--nodes", ed.nodes, "number of sensors")->capture_default_str();
  edm->add_option("--dim", ed.dim, "ambient dimension")->capture_default_str();
  edm->add_option("--knn", ed.knn, "nearest neighbors per node")->capture_default_str();
  edm->add_option("--noise", ed.noise, "measurement noise level")->capture_default_str();
  edm->add_option("--seed", ed.seed, "random seed")->capture_default_str();
  edm->add_option("-o,--output", ed.output, "output .dat-s path")->required();
  edm->add_option("--manifest", ed.manifest, "run manifest JSON path");
  edm->callback([&] {
    const auto t0 = Clock::now();
    psc_problem* prob = nullptr;
    if (psc_problem_gen_edm(ed.nodes, ed.dim, ed.knn, ed.seed, ed.noise, &prob) != PSC_OK) {
      rc = fail("generate");
      return;
    }
    nlohmann::json config = {{"kind", "edm"},
                             {"nodes", ed.nodes},
                             {"dim", ed.dim},
                             {"knn", ed.knn},
                             {"noise", ed.noise}};
    rc = write_generated(prob, ed.output, ed.manifest, config, ed.seed, t0);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return rc;
}
