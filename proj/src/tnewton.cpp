#include "irrlyap/tnewton.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <limits>
#include <sstream>

#include "irrlyap/errors.hpp"

namespace irrlyap {

namespace {

void require_finite(double value, const char* what, Index i) {
  if (!std::isfinite(value))
    throw NumericalError(std::string("tpcg: non-finite ") + what +
                         " at inner iteration " + std::to_string(i));
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

// grad h(Y Y^T) Y is a difference of three products; once it is within a few
// ulps of their sizes its direction is rounding noise.
bool at_rounding_floor(const PointContext& ctx) {
  const LyapunovProblem& problem = ctx.problem();
  const double scale =
      ctx.ay().norm() * ctx.ymy().norm() + ctx.my().norm() * ctx.yay().norm() +
      problem.b().norm() * (problem.b().transpose() * ctx.y()).norm();
  return ctx.grad_h_y().norm() <=
         10.0 * std::numeric_limits<double>::epsilon() * scale;
}

}  // namespace

void TnewtonConfig::validate() const {
  auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open_unit(chi1)) throw ConfigError("chi1 must lie in (0, 1)");
  if (!open_unit(chi2)) throw ConfigError("chi2 must lie in (0, 1)");
  if (!(eps_curv > 0.0)) throw ConfigError("eps_curv must be positive");
  if (!(forcing_beta > 0.0 && forcing_beta <= 1.0))
    throw ConfigError("forcing_beta must lie in (0, 1]");
  if (!(forcing_t > 0.0 && forcing_t <= 1.0))
    throw ConfigError("forcing_t must lie in (0, 1]");
  if (!(grad_tol_rel > 0.0)) throw ConfigError("grad_tol_rel must be positive");
  if (max_outer < 0) throw ConfigError("max_outer must be non-negative");
  if (max_inner < 0) throw ConfigError("max_inner must be non-negative");
  if (ls_max_backtracks < 1)
    throw ConfigError("ls_max_backtracks must be at least 1");
}

TpcgResult tpcg(const Matrix& gradient, const LinearOperator& hess,
                const LinearOperator& precond, const InnerProduct& inner,
                const TpcgOptions& options) {
  const double grad_norm = std::sqrt(inner(gradient, gradient));
  if (!(grad_norm > 0.0)) throw ConfigError("tpcg requires a nonzero gradient");
  if (options.max_inner < 1) throw ConfigError("tpcg requires max_inner >= 1");

  TpcgResult result;
  Matrix eta = Matrix::Zero(gradient.rows(), gradient.cols());
  Matrix r = -gradient;
  Matrix y = precond(r);
  Matrix d = y;
  const Matrix d0 = d;
  double ry = inner(r, y);
  double delta = inner(y, y);
  require_finite(ry, "preconditioned residual", 0);

  for (Index i = 0; i < options.max_inner; ++i) {
    if (options.history)
      options.history->push_back(TpcgState{eta, r, y, d, delta, i});
    const Matrix q = hess(d);
    result.iterations = i + 1;
    const double dq = inner(d, q);
    require_finite(dq, "curvature", i);
    if (dq <= options.eps_curv * delta) {
      result.exit = TpcgExit::negative_curvature;
      result.eta = i == 0 ? d0 : eta;
      result.residual_ratio = std::sqrt(inner(r, r)) / grad_norm;
      return result;
    }
    const double alpha = ry / dq;
    eta += alpha * d;
    r -= alpha * q;
    const double r_norm = std::sqrt(inner(r, r));
    require_finite(r_norm, "residual", i);
    result.residual_ratio = r_norm / grad_norm;
    if (result.residual_ratio <= options.phi) {
      result.exit = TpcgExit::residual;
      result.eta = eta;
      return result;
    }
    y = precond(r);
    const double ry_next = inner(r, y);
    require_finite(ry_next, "preconditioned residual", i + 1);
    if (ry_next <= 0.0) {
      result.eta = eta;
      return result;
    }
    const double beta = ry_next / ry;
    d = y + beta * d;
    delta = inner(y, y) + beta * beta * delta;
    ry = ry_next;
  }
  result.exit = TpcgExit::max_inner;
  result.eta = eta;
  return result;
}

LineSearchResult line_search(const LyapunovProblem& problem,
                             const FactorPoint& point, const Matrix& direction,
                             double f0, double slope0, double eta_norm_sq,
                             const TnewtonConfig& config) {
  if (!(slope0 < 0.0))
    throw ConfigError("line search needs a descent direction (slope " +
                      std::to_string(slope0) + ")");
  if (!(eta_norm_sq > 0.0))
    throw ConfigError("line search needs a nonzero direction");
  const CostAlongLine line(problem, point.y(), direction);
  const double bound4 = -config.chi1 * slope0 * slope0 / eta_norm_sq;
  const double bound5 = config.chi2 * slope0;

  LineSearchResult out;
  double alpha = 1.0;
  for (Index trial = 0; trial <= config.ls_max_backtracks; ++trial) {
    out.trials = trial + 1;
    bool full_rank = true;
    try {
      FactorPoint candidate(point.y() + alpha * direction);
    } catch (const NumericalError&) {
      full_rank = false;
    }
    const double dec = line.increment(alpha);
    if (full_rank && std::isfinite(dec)) {
      const bool c4 = dec <= bound4;
      const bool c5 = dec <= bound5;
      const bool armijo = dec <= config.chi2 * alpha * slope0;
      if (c4 || armijo) {
        out.alpha = alpha;
        out.decrease = dec;
        out.f_new = f0 + dec;
        out.condition4 = c4;
        out.condition5 = c5;
        out.armijo = armijo;
        return out;
      }
    }
    double next = 0.5 * alpha;
    if (full_rank && std::isfinite(dec)) {
      // Minimizer of the quadratic through h(0), h'(0) and h(alpha).
      const double curvature = dec - slope0 * alpha;
      if (curvature > 0.0) next = -slope0 * alpha * alpha / (2.0 * curvature);
    }
    alpha = std::clamp(next, 0.1 * alpha, 0.5 * alpha);
  }
  std::ostringstream msg;
  msg << "line search failed after " << config.ls_max_backtracks
      << " backtracks (slope " << slope0 << ", last step " << alpha << ")";
  throw NumericalError(msg.str());
}

FixedRankResult solve_fixed_rank(const LyapunovProblem& problem, Metric metric,
                                 const FactorPoint& y0,
                                 const TnewtonConfig& config,
                                 PrecondKind precond,
                                 std::vector<LineSearchResult>* audit) {
  config.validate();
  if (y0.n() != problem.n())
    throw DimensionError("initial factor has " + std::to_string(y0.n()) +
                         " rows, problem has n = " + std::to_string(problem.n()));
  const auto start = std::chrono::steady_clock::now();
  const Index p = y0.p();
  const Index max_inner = config.max_inner > 0
                              ? config.max_inner
                              : horizontal_dimension(problem.n(), p);

  FixedRankResult result{y0, {}, false, false, 0, 0.0, 0.0};
  auto ctx = std::make_unique<PointContext>(problem, y0);
  HorizontalVector grad = riemannian_gradient(metric, *ctx);
  double grad_norm = std::sqrt(metric_inner(metric, *ctx, grad.value, grad.value));
  double f = ctx->cost();
  if (!std::isfinite(f) || !std::isfinite(grad_norm))
    throw NumericalError("non-finite cost or gradient at the initial factor");
  result.initial_grad_norm = grad_norm;
  const double target = config.grad_tol_rel * grad_norm;

  Index nh = 0;
  result.trace.records.push_back(TraceRecord{
      0, p, f, grad_norm, relative_residual(problem, ctx->point()), 0, 0, 0.0,
      elapsed_ms(start)});

  for (Index k = 1; k <= config.max_outer; ++k) {
    if (grad_norm <= target || grad_norm == 0.0) break;
    if (at_rounding_floor(*ctx)) {
      result.stagnated = true;
      break;
    }

    const double phi =
        std::min(config.forcing_beta, std::pow(grad_norm, config.forcing_t));

    std::unique_ptr<Preconditioner> pc;
    if (precond != PrecondKind::none)
      pc = std::make_unique<Preconditioner>(metric, *ctx, precond);
    const PointContext& c = *ctx;
    const LinearOperator hess = [&](const Matrix& x) {
      return hessian_action(metric, c, HorizontalVector{x, metric}).value;
    };
    const LinearOperator apply_pc = [&](const Matrix& x) -> Matrix {
      if (!pc) return x;
      return pc->apply(HorizontalVector{x, metric}).value;
    };
    const InnerProduct inner = [&](const Matrix& a, const Matrix& b) {
      return metric_inner(metric, c, a, b);
    };
    TpcgOptions opts;
    opts.eps_curv = config.eps_curv;
    opts.phi = phi;
    opts.max_inner = max_inner;
    const TpcgResult inner_result = tpcg(grad.value, hess, apply_pc, inner, opts);
    nh += inner_result.iterations;

    Matrix eta = project_horizontal(metric, c, inner_result.eta);
    double slope = inner(grad.value, eta);
    if (!(slope < 0.0)) {
      eta = -grad.value;
      slope = -grad_norm * grad_norm;
    }
    LineSearchResult ls;
    try {
      ls = line_search(problem, c.point(), eta, f, slope, inner(eta, eta), config);
    } catch (const NumericalError&) {
      const CostAlongLine line(problem, c.y(), eta);
      if (std::abs(slope) > 100.0 * line.slope_error()) throw;
      result.stagnated = true;
      break;
    }
    if (audit) audit->push_back(ls);

    FactorPoint next = retract(c.point(), eta, ls.alpha);
    ctx = std::make_unique<PointContext>(problem, std::move(next));
    grad = riemannian_gradient(metric, *ctx);
    grad_norm = std::sqrt(metric_inner(metric, *ctx, grad.value, grad.value));
    f = ls.f_new;
    if (!std::isfinite(f) || !std::isfinite(grad_norm))
      throw NumericalError("non-finite cost or gradient at outer iteration " +
                           std::to_string(k));
    result.outer_iterations = k;
    result.trace.records.push_back(TraceRecord{
        k, p, f, grad_norm, relative_residual(problem, ctx->point()),
        inner_result.iterations, nh, ls.alpha, elapsed_ms(start)});
  }

  result.point = ctx->point();
  result.final_grad_norm = grad_norm;
  result.converged =
      grad_norm <= target || grad_norm == 0.0 || result.stagnated;
  return result;
}

}  // namespace irrlyap
