#pragma once

#include <functional>
#include <vector>

#include "irrlyap/manifold.hpp"
#include "irrlyap/precond.hpp"

namespace irrlyap {

struct TnewtonConfig {
  double chi1 = 1e-4;
  double chi2 = 1e-4;
  double eps_curv = 1e-10;
  double forcing_beta = 0.1;
  double forcing_t = 1.0;
  double grad_tol_rel = 1e-6;
  Index max_outer = 500;
  /// 0 selects the dimension of the horizontal space.
  Index max_inner = 0;
  Index ls_max_backtracks = 50;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Linear operator and inner product on a space of matrices. tpcg is generic
/// so that it can run on the horizontal space or on plain R^d.
using LinearOperator = std::function<Matrix(const Matrix&)>;
using InnerProduct = std::function<double(const Matrix&, const Matrix&)>;

struct TpcgState {
  Matrix eta;
  Matrix r;
  Matrix y;
  Matrix d;
  double delta = 0.0;
  Index i = 0;
};

enum class TpcgExit { negative_curvature, residual, max_inner };

struct TpcgResult {
  Matrix eta;
  TpcgExit exit = TpcgExit::max_inner;
  /// Inner iterations started (equals the number of Hessian actions).
  Index iterations = 0;
  /// ||r|| / ||grad|| at exit.
  double residual_ratio = 1.0;
};

struct TpcgOptions {
  double eps_curv = 1e-10;
  double phi = 0.1;
  Index max_inner = 1000;
  /// When set, receives the state at the start of every inner iteration.
  std::vector<TpcgState>* history = nullptr;
};

/// Truncated preconditioned CG for Hess[eta] = -grad. `precond` applies an
/// approximation of the inverse Hessian. Throws NumericalError naming the
/// inner index when a non-finite quantity appears.
TpcgResult tpcg(const Matrix& gradient, const LinearOperator& hess,
                const LinearOperator& precond, const InnerProduct& inner,
                const TpcgOptions& options);

struct LineSearchResult {
  double alpha = 0.0;
  /// f(R(alpha eta)) - f(Y).
  double decrease = 0.0;
  double f_new = 0.0;
  Index trials = 0;
  bool condition4 = false;
  bool condition5 = false;
  bool armijo = false;
};

/// Backtracking from alpha = 1 with h(a) = f(Y + a eta). A trial is accepted
/// when
///   (4) h(a) - h(0) <= -chi1 h'(0)^2 / ||eta||^2   or
///   (A) h(a) - h(0) <= chi2 a h'(0)
/// holds. (A) is the Armijo condition and is implied by
///   (5) h(a) - h(0) <= chi2 h'(0),
/// whose status is reported alongside (4). New trials come from quadratic
/// interpolation clamped to [0.1 a, 0.5 a]. Rank-deficient trials count as
/// rejections. `slope0` = g(grad, eta) and `eta_norm_sq` = g(eta, eta).
LineSearchResult line_search(const LyapunovProblem& problem,
                             const FactorPoint& point, const Matrix& direction,
                             double f0, double slope0, double eta_norm_sq,
                             const TnewtonConfig& config);

struct TraceRecord {
  Index k = 0;
  Index p = 0;
  double f = 0.0;
  double gradnorm = 0.0;
  double relres = 0.0;
  Index inner_iters = 0;
  /// Cumulative Hessian actions.
  Index nh = 0;
  double alpha = 0.0;
  /// Cumulative wall-clock milliseconds.
  double ms = 0.0;
};

struct SolveTrace {
  std::vector<TraceRecord> records;

  Index total_nh() const { return records.empty() ? 0 : records.back().nh; }
  double total_ms() const { return records.empty() ? 0.0 : records.back().ms; }
};

struct FixedRankResult {
  FactorPoint point;
  SolveTrace trace;
  /// Tolerance met, or stagnated.
  bool converged = false;
  /// Stopped because the gradient or the predicted decrease reached
  /// rounding level before the tolerance.
  bool stagnated = false;
  Index outer_iterations = 0;
  double initial_grad_norm = 0.0;
  double final_grad_norm = 0.0;
};

/// Riemannian truncated Newton at fixed rank. The first trace record
/// (k = 0) describes y0; each further record is one outer iteration.
/// `audit`, when set, receives the line-search result of every iteration.
FixedRankResult solve_fixed_rank(const LyapunovProblem& problem, Metric metric,
                                 const FactorPoint& y0,
                                 const TnewtonConfig& config,
                                 PrecondKind precond,
                                 std::vector<LineSearchResult>* audit = nullptr);

}  // namespace irrlyap
