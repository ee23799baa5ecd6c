#include "irrlyap/irr.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "irrlyap/rng.hpp"

namespace irrlyap {

namespace {

// Eigenvectors of grad h(Y Y^T) = U V^T + V U^T - B B^T for its `count`
// smallest eigenvalues, computed in the range of [U V B].
Matrix most_negative_directions(const LyapunovProblem& problem,
                                const Matrix& y, Index count) {
  const Index n = problem.n();
  const Index p = y.cols();
  const Index s = problem.rhs_rank();
  Matrix stacked(n, 2 * p + s);
  stacked << problem.a() * y, problem.m() * y, problem.b();
  Eigen::HouseholderQR<Matrix> qr(stacked);
  const Index k = std::min(n, stacked.cols());
  const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix rj(k, stacked.cols());
  rj.leftCols(p) = r.middleCols(p, p);
  rj.middleCols(p, p) = r.leftCols(p);
  rj.rightCols(s) = -r.rightCols(s);
  Matrix core = rj * r.transpose();
  core = (0.5 * (core + core.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(core);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  const Index take = std::min(count, k);
  Matrix out = Matrix::Zero(n, count);
  out.leftCols(take) = q * eig.eigenvectors().leftCols(take);
  return out;
}

}  // namespace

void IrrConfig::validate(Index n) const {
  if (p_min < 1) throw ConfigError("p_min must be at least 1");
  if (p_max < p_min) throw ConfigError("p_max must be at least p_min");
  if (p_max > n)
    throw ConfigError("p_max = " + std::to_string(p_max) +
                      " exceeds the problem dimension " + std::to_string(n));
  if (p_inc < 1) throw ConfigError("p_inc must be at least 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(inner_tol_floor > 0.0))
    throw ConfigError("inner_tol_floor must be positive");
}

std::vector<Index> IrrResult::ranks_visited() const {
  std::vector<Index> out;
  out.reserve(ranks.size());
  for (const auto& r : ranks) out.push_back(r.p);
  return out;
}

WarmStartResult warm_start(const LyapunovProblem& problem,
                           const FactorPoint& y_p, Index p_inc) {
  if (p_inc < 1) throw ConfigError("p_inc must be at least 1");
  const Index n = y_p.n();
  const Index p = y_p.p();
  if (p + p_inc > n)
    throw ConfigError("warm start would exceed the problem dimension");
  const double scale = y_p.y().norm();

  Matrix padded(n, p + p_inc);
  padded.leftCols(p) = y_p.y();
  padded.rightCols(p_inc) =
      1e-4 * scale * most_negative_directions(problem, y_p.y(), p_inc);

  // A rank-deficient padded factor receives a small deterministic jitter.
  bool jittered = false;
  try {
    FactorPoint check(padded);
  } catch (const NumericalError&) {
    Rng rng(static_cast<std::uint64_t>(n * 1000003 + p));
    padded.rightCols(p_inc) += 1e-8 * scale * rng.normal_matrix(n, p_inc);
    jittered = true;
  }

  const Matrix g = euclidean_gradient(problem, padded);
  const double g_sq = g.squaredNorm();
  if (!(g_sq > 0.0)) return WarmStartResult{FactorPoint(padded), true};
  const CostAlongLine line(problem, padded, -g);
  double alpha = padded.norm() / std::sqrt(g_sq);
  for (int trial = 0; trial < 60; ++trial, alpha *= 0.5) {
    const double dec = line.increment(alpha);
    if (!(std::isfinite(dec) && dec <= -1e-4 * alpha * g_sq)) continue;
    try {
      return WarmStartResult{FactorPoint(padded - alpha * g), jittered};
    } catch (const NumericalError&) {
    }
  }
  return WarmStartResult{FactorPoint(padded), true};
}

IrrResult solve_increasing_rank(const LyapunovProblem& problem, Metric metric,
                                const IrrConfig& config,
                                const TnewtonConfig& tnewton_config,
                                PrecondKind precond) {
  config.validate(problem.n());
  tnewton_config.validate();

  Rng rng(config.seed);
  FactorPoint y(rng.normal_matrix(problem.n(), config.p_min));
  bool fallback = false;

  IrrResult result{y, {}, {}, false, 1.0};
  Index k_offset = 0;
  Index nh_offset = 0;
  double ms_offset = 0.0;

  for (Index p = config.p_min;; p += config.p_inc) {
    const double r_initial = relative_residual(problem, y);
    TnewtonConfig cfg = tnewton_config;
    cfg.grad_tol_rel = std::min(config.inner_tol_floor, r_initial / 10.0);

    FixedRankResult solved{y, {}, false, false, 0, 0.0, 0.0};
    try {
      solved = solve_fixed_rank(problem, metric, y, cfg, precond);
    } catch (const Error& e) {
      throw IrrSolveError("rank " + std::to_string(p) + " solve failed: " +
                              e.what(),
                          result.trace);
    }
    for (TraceRecord rec : solved.trace.records) {
      rec.k += k_offset;
      rec.nh += nh_offset;
      rec.ms += ms_offset;
      result.trace.records.push_back(rec);
    }
    k_offset = result.trace.records.back().k + 1;
    nh_offset = result.trace.total_nh();
    ms_offset = result.trace.total_ms();

    y = solved.point;
    const double r_p = relative_residual(problem, y);
    result.ranks.push_back(RankSummary{p, r_p, cost(problem, y),
                                       solved.outer_iterations,
                                       solved.trace.total_nh(), solved.converged,
                                       fallback});
    result.point = y;
    result.rel_res = r_p;
    if (r_p <= config.tau) {
      result.converged = true;
      return result;
    }
    if (p + config.p_inc > config.p_max) return result;

    const WarmStartResult next = warm_start(problem, y, config.p_inc);
    y = next.point;
    fallback = next.fallback;
  }
}

}  // namespace irrlyap
