#pragma once

#include <cstdint>
#include <vector>

#include "irrlyap/errors.hpp"
#include "irrlyap/tnewton.hpp"

namespace irrlyap {

struct IrrConfig {
  Index p_min = 1;
  Index p_max = 40;
  Index p_inc = 1;
  /// Target relative residual.
  double tau = 1e-6;
  /// Rank-p solves stop at ||grad|| <= min(inner_tol_floor, r_p / 10) times
  /// the initial gradient norm at that rank.
  double inner_tol_floor = 1e-6;
  std::uint64_t seed = 0;

  /// Throws ConfigError when inconsistent with a problem of dimension n.
  void validate(Index n) const;
};

struct RankSummary {
  Index p = 0;
  double rel_res = 0.0;
  double cost = 0.0;
  Index outer_iterations = 0;
  Index nh = 0;
  bool inner_converged = false;
  /// The warm start that produced this rank's initial factor fell back to
  /// jitter.
  bool warm_start_fallback = false;
};

struct IrrResult {
  FactorPoint point;
  SolveTrace trace;
  std::vector<RankSummary> ranks;
  bool converged = false;
  double rel_res = 1.0;

  Index final_rank() const { return point.p(); }
  std::vector<Index> ranks_visited() const;
};

/// Raised when a rank-p solve fails; carries the trace up to the failure.
class IrrSolveError : public NumericalError {
 public:
  IrrSolveError(const std::string& what, SolveTrace partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const SolveTrace& partial_trace() const { return partial_; }

 private:
  SolveTrace partial_;
};

struct WarmStartResult {
  FactorPoint point;
  /// Backtracking did not find a decrease; `point` is the seeded start.
  bool fallback = false;
};

/// Pads y_p with p_inc columns along the most negative eigendirections of
/// grad h(Y_p Y_p^T), scaled to 1e-4 ||Y_p||_F, then takes one Euclidean
/// steepest-descent step with Armijo backtracking.
WarmStartResult warm_start(const LyapunovProblem& problem,
                           const FactorPoint& y_p, Index p_inc);

/// Increasing-rank Riemannian truncated Newton.
IrrResult solve_increasing_rank(const LyapunovProblem& problem, Metric metric,
                                const IrrConfig& config,
                                const TnewtonConfig& tnewton_config,
                                PrecondKind precond);

}  // namespace irrlyap
