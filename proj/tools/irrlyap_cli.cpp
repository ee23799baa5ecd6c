#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "irrlyap/irr.hpp"
#include "irrlyap/rng.hpp"
#include "irrlyap/trace_io.hpp"

namespace {

using namespace irrlyap;

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitConfig = 2;

struct ProblemArgs {
  std::string gen;
  Index n = 0;
  std::string mass = "random";
  std::string manifest;
  std::uint64_t seed = 0;
};

struct SolverArgs {
  int metric = 1;
  std::string precond = "proposed";
  double tol = 1e-6;
  Index p_min = 1;
  Index p_max = 40;
  Index p_inc = 1;
  Index max_outer = 500;
  double inner_tol_floor = 1e-6;
};

void add_problem_options(CLI::App* cmd, ProblemArgs& args) {
  cmd->add_option("--gen", args.gen, "Problem generator")
      ->check(CLI::IsMember({"poisson"}));
  cmd->add_option("--n", args.n, "Dimension for the generator")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--mass", args.mass, "Mass matrix for the generator")
      ->check(CLI::IsMember({"random", "identity"}));
  cmd->add_option("--manifest", args.manifest,
                  "Problem manifest naming a=, m=, b= Matrix Market files");
  cmd->add_option("--seed", args.seed, "Seed for generation and initial factor");
}

void add_solver_options(CLI::App* cmd, SolverArgs& args) {
  cmd->add_option("--metric", args.metric, "Riemannian metric")
      ->check(CLI::IsMember({1, 2, 3}));
  cmd->add_option("--precond", args.precond, "Preconditioner")
      ->check(CLI::IsMember({"none", "proposed", "bart"}));
  cmd->add_option("--tol", args.tol, "Target relative residual")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--p-min", args.p_min, "Initial rank")->check(CLI::PositiveNumber);
  cmd->add_option("--p-max", args.p_max, "Maximum rank")->check(CLI::PositiveNumber);
  cmd->add_option("--p-inc", args.p_inc, "Rank increment")->check(CLI::PositiveNumber);
  cmd->add_option("--max-outer", args.max_outer, "Outer iterations per rank")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--inner-tol-floor", args.inner_tol_floor,
                  "Upper bound on the per-rank gradient reduction")
      ->check(CLI::PositiveNumber);
}

MassKind mass_kind(const std::string& name) {
  return name == "identity" ? MassKind::identity : MassKind::random;
}

LyapunovProblem make_problem(const ProblemArgs& args) {
  const bool generated = !args.gen.empty();
  const bool loaded = !args.manifest.empty();
  if (generated == loaded)
    throw ConfigError("exactly one of --gen or --manifest is required");
  if (loaded) return load_manifest(args.manifest);
  if (args.n < 2) throw ConfigError("--gen poisson requires --n >= 2");
  return gen_poisson(args.n, args.seed, mass_kind(args.mass));
}

IrrResult run_irr(const LyapunovProblem& problem, const SolverArgs& args,
                  std::uint64_t seed) {
  IrrConfig irr;
  irr.p_min = args.p_min;
  irr.p_max = std::min<Index>(args.p_max, problem.n());
  irr.p_inc = args.p_inc;
  irr.tau = args.tol;
  irr.inner_tol_floor = args.inner_tol_floor;
  irr.seed = seed;
  TnewtonConfig tn;
  tn.max_outer = args.max_outer;
  return solve_increasing_rank(problem, metric_from_int(args.metric), irr, tn,
                               precond_from_string(args.precond));
}

void print_error(const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  std::cout << j.dump() << '\n';
}

int cmd_solve(const ProblemArgs& pargs, const SolverArgs& sargs,
              const std::string& trace_out, const std::string& summary_out) {
  const LyapunovProblem problem = make_problem(pargs);
  const IrrResult result = run_irr(problem, sargs, pargs.seed);
  const RunSummary summary = summarize(result);
  if (!trace_out.empty()) write_trace_csv(trace_out, result.trace);
  if (!summary_out.empty()) write_summary_json(summary_out, summary);
  std::cout << summary_to_json(summary) << '\n';
  if (!result.converged) {
    std::ostringstream msg;
    msg << "relative residual " << result.rel_res << " above tolerance "
        << sargs.tol << " at rank " << result.final_rank();
    print_error("tolerance_not_reached", msg.str());
    return kExitSolver;
  }
  return kExitOk;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct BenchArgs {
  Index n = 1000;
  Index p = 3;
  std::string metrics = "1,2,3";
  std::string preconds = "none,proposed,bart";
  std::string masses = "random,identity";
  double grad_tol = 1e-12;
  Index max_outer = 500;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_bench(const BenchArgs& args) {
  if (args.out.empty()) throw ConfigError("--out is required");
  if (args.p < 1 || args.p > args.n) throw ConfigError("--p must lie in [1, n]");
  std::ofstream out(args.out);
  if (!out) throw Error("cannot write " + args.out);
  out << "mass,n,p,metric,precond,iter,nH,relres,ms,status\n"
      << std::setprecision(10);
  for (const std::string& mass : split(args.masses)) {
    if (mass != "random" && mass != "identity")
      throw ConfigError("unknown mass '" + mass + "'");
    const LyapunovProblem problem = gen_poisson(args.n, args.seed, mass_kind(mass));
    for (const std::string& metric_text : split(args.metrics)) {
      const Metric metric = metric_from_int(std::stoi(metric_text));
      for (const std::string& pc_text : split(args.preconds)) {
        const PrecondKind pc = precond_from_string(pc_text);
        out << mass << ',' << args.n << ',' << args.p << ','
            << metric_text << ',' << pc_text << ',';
        try {
          Rng rng(args.seed);
          const FactorPoint y0(rng.normal_matrix(args.n, args.p));
          TnewtonConfig cfg;
          cfg.grad_tol_rel = args.grad_tol;
          cfg.max_outer = args.max_outer;
          const FixedRankResult r = solve_fixed_rank(problem, metric, y0, cfg, pc);
          out << r.outer_iterations << ',' << r.trace.total_nh() << ','
              << r.trace.records.back().relres << ',' << r.trace.total_ms() << ','
              << (r.converged ? "ok" : "max_outer") << '\n';
        } catch (const Error& e) {
          out << "nan,nan,nan,nan,error\n";
          std::cerr << "cell " << mass << "/m" << metric_text << "/" << pc_text
                    << " failed: " << e.what() << '\n';
        }
        out.flush();
      }
    }
  }
  return kExitOk;
}

int cmd_oracle_check(const ProblemArgs& pargs, const SolverArgs& sargs,
                     Index dense_limit, const std::string& out_path,
                     const std::string& summary_out) {
  const LyapunovProblem problem = make_problem(pargs);
  if (problem.n() > dense_limit)
    throw ConfigError("n = " + std::to_string(problem.n()) +
                      " exceeds --dense-limit " + std::to_string(dense_limit));
  DenseOracleOptions opts;
  opts.dense_limit = dense_limit;
  const Matrix x = dense_oracle_solve(problem, opts);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x);
  const IrrResult result = run_irr(problem, sargs, pargs.seed);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw Error("cannot write " + out_path);
    out = &file;
  }
  *out << "p,best_relres,irr_relres\n" << std::setprecision(10);
  for (const RankSummary& rank : result.ranks) {
    const Index p = rank.p;
    const Vector lambda = eig.eigenvalues().tail(p).cwiseMax(0.0);
    const Matrix y = eig.eigenvectors().rightCols(p) * lambda.cwiseSqrt().asDiagonal();
    *out << p << ',' << relative_residual(problem, y) << ',' << rank.rel_res
         << '\n';
  }
  if (!summary_out.empty()) write_summary_json(summary_out, summarize(result));
  if (!result.converged) {
    print_error("tolerance_not_reached",
                "relative residual above tolerance at the maximum rank");
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_generate(const ProblemArgs& args, const std::string& out_dir) {
  if (args.gen.empty()) throw ConfigError("--gen is required");
  const LyapunovProblem problem = make_problem(args);
  std::cout << write_problem(problem, out_dir) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank solver for generalized Lyapunov equations A X M + M X A = B B^T"};
  app.require_subcommand(1);

  ProblemArgs pargs;
  SolverArgs sargs;
  std::string trace_out, summary_out, csv_out, out_dir;
  Index dense_limit = 2000;
  BenchArgs bargs;

  CLI::App* solve = app.add_subcommand("solve", "Increasing-rank solve");
  add_problem_options(solve, pargs);
  add_solver_options(solve, sargs);
  solve->add_option("--trace-out", trace_out, "Per-iteration trace CSV");
  solve->add_option("--summary-out", summary_out, "Summary JSON");

  CLI::App* bench = app.add_subcommand("bench", "Fixed-rank metric x preconditioner sweep");
  bench->add_option("--n", bargs.n, "Dimension")->check(CLI::PositiveNumber);
  bench->add_option("--p", bargs.p, "Fixed rank")->check(CLI::PositiveNumber);
  bench->add_option("--metrics", bargs.metrics, "Comma-separated metrics");
  bench->add_option("--preconds", bargs.preconds, "Comma-separated preconditioners");
  bench->add_option("--masses", bargs.masses, "Comma-separated mass kinds");
  bench->add_option("--grad-tol", bargs.grad_tol, "Relative gradient tolerance")
      ->check(CLI::PositiveNumber);
  bench->add_option("--max-outer", bargs.max_outer, "Outer iteration limit");
  bench->add_option("--seed", bargs.seed, "Seed");
  bench->add_option("--out", bargs.out, "Output CSV")->required();

  CLI::App* oracle = app.add_subcommand("oracle-check", "Compare against the dense solution per rank");
  add_problem_options(oracle, pargs);
  add_solver_options(oracle, sargs);
  oracle->add_option("--dense-limit", dense_limit, "Largest n for the dense solve");
  oracle->add_option("--out", csv_out, "Per-rank CSV (stdout when omitted)");
  oracle->add_option("--summary-out", summary_out, "Summary JSON");

  CLI::App* generate = app.add_subcommand("generate", "Write a generated problem as Matrix Market files");
  add_problem_options(generate, pargs);
  generate->add_option("--out-dir", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve) return cmd_solve(pargs, sargs, trace_out, summary_out);
    if (*bench) return cmd_bench(bargs);
    if (*oracle) return cmd_oracle_check(pargs, sargs, dense_limit, csv_out, summary_out);
    if (*generate) return cmd_generate(pargs, out_dir);
  } catch (const ConfigError& e) {
    print_error("config", e.what());
    std::cerr << app.help() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    print_error("parse", e.what());
    return kExitSolver;
  } catch (const Error& e) {
    print_error("solver", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitSolver;
  }
  return kExitConfig;
}
