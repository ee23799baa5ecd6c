#include "irrlyap/manifold.hpp"

#include <limits>

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "irrlyap/errors.hpp"

namespace irrlyap {

namespace {

Matrix skew(const Matrix& x) { return 0.5 * (x - x.transpose()); }
Matrix sym(const Matrix& x) { return 0.5 * (x + x.transpose()); }

void check_shape(const PointContext& ctx, const Matrix& x, const char* name) {
  if (x.rows() != ctx.n() || x.cols() != ctx.p())
    throw DimensionError(std::string(name) + " is " + std::to_string(x.rows()) +
                         "x" + std::to_string(x.cols()) + ", expected " +
                         std::to_string(ctx.n()) + "x" + std::to_string(ctx.p()));
}

// Solves omega W + W omega = rhs for symmetric positive-definite W through
// the eigendecomposition of W.
Matrix solve_gram_sylvester(const Matrix& w, const Matrix& rhs) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w);
  const Matrix& u = eig.eigenvectors();
  const Vector& d = eig.eigenvalues();
  Matrix core = u.transpose() * rhs * u;
  for (Index j = 0; j < core.cols(); ++j)
    for (Index i = 0; i < core.rows(); ++i) core(i, j) /= d(i) + d(j);
  return u * core * u.transpose();
}

}  // namespace

Metric metric_from_int(int value) {
  switch (value) {
    case 1:
      return Metric::m1;
    case 2:
      return Metric::m2;
    case 3:
      return Metric::m3;
    default:
      throw ConfigError("metric must be 1, 2 or 3, got " + std::to_string(value));
  }
}

int to_int(Metric metric) { return static_cast<int>(metric); }

PointContext::PointContext(const LyapunovProblem& problem, FactorPoint point)
    : problem_(&problem), point_(std::move(point)) {
  if (point_.n() != problem.n())
    throw DimensionError("Y has " + std::to_string(point_.n()) +
                         " rows but the problem has dimension " +
                         std::to_string(problem.n()));
  const Matrix& y = point_.y();
  ay_ = problem.a() * y;
  my_ = problem.m() * y;
  gram_ = y.transpose() * y;
  yay_ = y.transpose() * ay_;
  ymy_ = y.transpose() * my_;
  yay_ = sym(yay_);
  ymy_ = sym(ymy_);
  bty_ = problem.b().transpose() * y;
  gram_llt_.compute(gram_);
  if (gram_llt_.info() != Eigen::Success)
    throw NumericalError("factor is rank deficient (Y^T Y not positive definite)");
  grad_h_y_ = ay_ * ymy_ + my_ * yay_ - problem.b() * bty_;
  cost_ = (yay_.cwiseProduct(ymy_)).sum() - bty_.squaredNorm();
}

Matrix PointContext::right_solve_gram(const Matrix& x) const {
  return gram_llt_.solve(x.transpose()).transpose();
}

Matrix PointContext::left_solve_gram(const Matrix& x) const {
  return gram_llt_.solve(x);
}

Matrix PointContext::grad_h_times(const Matrix& v) const {
  return ay_ * (my_.transpose() * v) + my_ * (ay_.transpose() * v) -
         problem_->b() * (problem_->b().transpose() * v);
}

Matrix PointContext::hess_h_lift(const Matrix& eta) const {
  return hess_h_lift(eta, problem_->a() * eta, problem_->m() * eta);
}

Matrix PointContext::hess_h_lift(const Matrix& eta, const Matrix& a_eta,
                                 const Matrix& m_eta) const {
  // F = Y eta^T + eta Y^T; F M Y = Y (eta^T M Y) + eta (Y^T M Y).
  return ay_ * (my_.transpose() * eta).transpose() + a_eta * ymy_ +
         my_ * (ay_.transpose() * eta).transpose() + m_eta * yay_;
}

Matrix PointContext::complement_project(const Matrix& x) const {
  return x - y() * left_solve_gram(y().transpose() * x);
}

double cost(const LyapunovProblem& problem, const FactorPoint& point) {
  return cost(problem, point.y());
}

double cost(const LyapunovProblem& problem, const Matrix& y) {
  if (y.rows() != problem.n())
    throw DimensionError("Y has " + std::to_string(y.rows()) +
                         " rows but the problem has dimension " +
                         std::to_string(problem.n()));
  const Matrix yay = y.transpose() * (problem.a() * y);
  const Matrix ymy = y.transpose() * (problem.m() * y);
  const Matrix bty = problem.b().transpose() * y;
  return yay.cwiseProduct(ymy.transpose()).sum() - bty.squaredNorm();
}

Matrix euclidean_gradient(const LyapunovProblem& problem, const Matrix& y) {
  if (y.rows() != problem.n())
    throw DimensionError("Y has " + std::to_string(y.rows()) +
                         " rows but the problem has dimension " +
                         std::to_string(problem.n()));
  const Matrix ay = problem.a() * y;
  const Matrix my = problem.m() * y;
  return 2.0 * (ay * (y.transpose() * my) + my * (y.transpose() * ay) -
                problem.b() * (problem.b().transpose() * y));
}

CostAlongLine::CostAlongLine(const LyapunovProblem& problem, const Matrix& y,
                             const Matrix& direction) {
  if (y.rows() != problem.n() || direction.rows() != y.rows() ||
      direction.cols() != y.cols())
    throw DimensionError("line direction does not match Y");
  const Matrix ay = problem.a() * y;
  const Matrix my = problem.m() * y;
  const Matrix ad = problem.a() * direction;
  const Matrix md = problem.m() * direction;
  const Matrix a0 = y.transpose() * ay;
  const Matrix m0 = y.transpose() * my;
  const Matrix a1 = y.transpose() * ad + ad.transpose() * y;
  const Matrix m1 = y.transpose() * md + md.transpose() * y;
  const Matrix a2 = direction.transpose() * ad;
  const Matrix m2 = direction.transpose() * md;
  const Matrix by = problem.b().transpose() * y;
  const Matrix bd = problem.b().transpose() * direction;
  // tr(P Q) with P, Q symmetric is the sum of the elementwise product.
  auto tr = [](const Matrix& p, const Matrix& q) {
    return p.cwiseProduct(q.transpose()).sum();
  };
  coeff_[0] = tr(a0, m1) + tr(a1, m0) - 2.0 * by.cwiseProduct(bd).sum();
  slope_error_ = 8.0 * std::numeric_limits<double>::epsilon() *
                 (a0.norm() * m1.norm() + a1.norm() * m0.norm() +
                  2.0 * by.norm() * bd.norm());
  coeff_[1] = tr(a0, m2) + tr(a1, m1) + tr(a2, m0) - bd.squaredNorm();
  coeff_[2] = tr(a1, m2) + tr(a2, m1);
  coeff_[3] = tr(a2, m2);
}

double CostAlongLine::increment(double t) const {
  return t * (coeff_[0] + t * (coeff_[1] + t * (coeff_[2] + t * coeff_[3])));
}

double metric_inner(Metric metric, const PointContext& ctx, const Matrix& xi,
                    const Matrix& eta) {
  check_shape(ctx, xi, "xi");
  check_shape(ctx, eta, "eta");
  switch (metric) {
    case Metric::m1: {
      const Matrix& y = ctx.y();
      const Matrix& w = ctx.gram();
      const Matrix ytxi = y.transpose() * xi;
      const Matrix yteta = y.transpose() * eta;
      const Matrix xteta = xi.transpose() * eta;
      double value = 2.0 * (ytxi.cwiseProduct(yteta.transpose()).sum() +
                            w.cwiseProduct(xteta.transpose()).sum());
      // Vertical parts xi^V = Y omega_xi; zero for horizontal arguments.
      const Matrix omega_xi = skew(ctx.left_solve_gram(ytxi));
      const Matrix omega_eta = skew(ctx.left_solve_gram(yteta));
      value += (w * omega_xi.transpose() * w * omega_eta).trace();
      return value;
    }
    case Metric::m2:
      return (ctx.gram() * (xi.transpose() * eta)).trace();
    case Metric::m3:
      return xi.cwiseProduct(eta).sum();
  }
  throw ConfigError("unknown metric");
}

double metric_inner(Metric metric, const FactorPoint& point, const Matrix& xi,
                    const Matrix& eta) {
  // The metric does not depend on A, M, B; any problem of matching size works.
  const Index n = point.n();
  const LyapunovProblem unit(SpdSparseMatrix::identity(n),
                             SpdSparseMatrix::identity(n), Matrix::Zero(n, 1));
  return metric_inner(metric, PointContext(unit, point), xi, eta);
}

TangentDecomposition project_decompose(Metric metric, const PointContext& ctx,
                                       const Matrix& ambient) {
  check_shape(ctx, ambient, "ambient");
  const Matrix yt_amb = ctx.y().transpose() * ambient;
  TangentDecomposition out;
  switch (metric) {
    case Metric::m1:
    case Metric::m2:
      out.omega = skew(ctx.left_solve_gram(yt_amb));
      break;
    case Metric::m3:
      out.omega = skew(solve_gram_sylvester(ctx.gram(),
                                            yt_amb - yt_amb.transpose()));
      break;
  }
  out.vertical = ctx.y() * out.omega;
  out.horizontal = ambient - out.vertical;
  return out;
}

TangentDecomposition project_decompose(Metric metric, const FactorPoint& point,
                                       const Matrix& ambient) {
  const Index n = point.n();
  const LyapunovProblem unit(SpdSparseMatrix::identity(n),
                             SpdSparseMatrix::identity(n), Matrix::Zero(n, 1));
  return project_decompose(metric, PointContext(unit, point), ambient);
}

Matrix project_horizontal(Metric metric, const PointContext& ctx,
                          const Matrix& ambient) {
  return project_decompose(metric, ctx, ambient).horizontal;
}

FactorPoint retract(const FactorPoint& point, const HorizontalVector& direction,
                    double step) {
  return retract(point, direction.value, step);
}

FactorPoint retract(const FactorPoint& point, const Matrix& direction,
                    double step) {
  if (direction.rows() != point.n() || direction.cols() != point.p())
    throw DimensionError("retraction direction does not match Y");
  if (step == 0.0) return point;
  Matrix next = point.y() + step * direction;
  if (!next.allFinite()) throw NumericalError("retraction left the manifold");
  Eigen::LLT<Matrix> llt(next.transpose() * next);
  if (llt.info() != Eigen::Success)
    throw NumericalError("retraction left the manifold");
  return FactorPoint(std::move(next));
}

HorizontalVector riemannian_gradient(Metric metric, const PointContext& ctx) {
  const Matrix& g0 = ctx.grad_h_y();
  HorizontalVector out;
  out.metric = metric;
  switch (metric) {
    case Metric::m1: {
      // (I - P_Y / 2) grad h Y (Y^T Y)^{-1}
      const Matrix gw = ctx.right_solve_gram(g0);
      out.value = gw - 0.5 * ctx.y() * ctx.left_solve_gram(ctx.y().transpose() * gw);
      break;
    }
    case Metric::m2:
      out.value = 2.0 * ctx.right_solve_gram(g0);
      break;
    case Metric::m3:
      out.value = 2.0 * g0;
      break;
  }
  return out;
}

HorizontalVector riemannian_gradient(Metric metric,
                                     const LyapunovProblem& problem,
                                     const FactorPoint& point) {
  return riemannian_gradient(metric, PointContext(problem, point));
}

HorizontalVector hessian_action(Metric metric, const PointContext& ctx,
                                const HorizontalVector& eta) {
  if (eta.metric != metric)
    throw ConfigError("Hessian requested under metric " +
                      std::to_string(to_int(metric)) +
                      " for a vector that is horizontal under metric " +
                      std::to_string(to_int(eta.metric)));
  check_shape(ctx, eta.value, "eta");
  const Matrix& y = ctx.y();
  const Matrix& v = eta.value;
  const Matrix lift = ctx.hess_h_lift(v);
  HorizontalVector out;
  out.metric = metric;
  switch (metric) {
    case Metric::m1: {
      // (I - P_Y/2) Hess h[Y v^T + v Y^T] Y W^{-1}
      //   + (I - P_Y) grad h (I - P_Y) v W^{-1}
      const Matrix lw = ctx.right_solve_gram(lift);
      const Matrix main = lw - 0.5 * y * ctx.left_solve_gram(y.transpose() * lw);
      const Matrix curv = ctx.complement_project(
          ctx.grad_h_times(ctx.complement_project(v)));
      out.value = main + ctx.right_solve_gram(curv);
      break;
    }
    case Metric::m2: {
      // Levi-Civita connection of tr(W xi^T eta) lifted horizontally:
      //   2 Hess h[.] Y W^{-1} + P^H( 2 grad h v W^{-1}
      //     - 2 grad h Y W^{-1} sym(Y^T v) W^{-1}
      //     + v sym(Y^T G) W^{-1} - Y sym(v^T G) W^{-1} ),  G = grad
      const Matrix grad = 2.0 * ctx.right_solve_gram(ctx.grad_h_y());
      const Matrix ytv = y.transpose() * v;
      Matrix rest = 2.0 * ctx.grad_h_times(v);
      rest -= 2.0 * ctx.right_solve_gram(ctx.grad_h_y()) * sym(ytv);
      rest += v * sym(y.transpose() * grad);
      rest -= y * sym(v.transpose() * grad);
      out.value = 2.0 * ctx.right_solve_gram(lift) +
                  project_horizontal(metric, ctx, ctx.right_solve_gram(rest));
      break;
    }
    case Metric::m3:
      out.value = 2.0 * lift +
                  2.0 * project_horizontal(metric, ctx, ctx.grad_h_times(v));
      break;
  }
  return out;
}

HorizontalVector hessian_action(Metric metric, const LyapunovProblem& problem,
                                const FactorPoint& point,
                                const HorizontalVector& eta) {
  return hessian_action(metric, PointContext(problem, point), eta);
}

Index horizontal_dimension(Index n, Index p) { return n * p - p * (p - 1) / 2; }

std::vector<Matrix> horizontal_basis(Metric metric, const PointContext& ctx) {
  const Index n = ctx.n();
  const Index p = ctx.p();
  const Index dim = horizontal_dimension(n, p);
  std::vector<Matrix> basis;
  basis.reserve(static_cast<std::size_t>(dim));
  for (Index k = 0; k < n * p && static_cast<Index>(basis.size()) < dim; ++k) {
    Matrix e = Matrix::Zero(n, p);
    e(k % n, k / n) = 1.0;
    Matrix v = project_horizontal(metric, ctx, e);
    const double initial = std::sqrt(metric_inner(metric, ctx, v, v));
    if (initial == 0.0) continue;
    // Two passes of classical Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass)
      for (const Matrix& b : basis) v -= metric_inner(metric, ctx, b, v) * b;
    const double norm = std::sqrt(metric_inner(metric, ctx, v, v));
    if (norm > 1e-8 * initial) basis.push_back(v / norm);
  }
  if (static_cast<Index>(basis.size()) != dim)
    throw NumericalError("horizontal basis construction found " +
                         std::to_string(basis.size()) + " of " +
                         std::to_string(dim) + " directions");
  return basis;
}

Matrix assemble_operator(Metric metric, const PointContext& ctx,
                         const std::vector<Matrix>& basis,
                         const std::function<Matrix(const Matrix&)>& op) {
  const Index dim = static_cast<Index>(basis.size());
  Matrix out(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    const Matrix image = op(basis[static_cast<std::size_t>(j)]);
    for (Index i = 0; i < dim; ++i)
      out(i, j) = metric_inner(metric, ctx, basis[static_cast<std::size_t>(i)], image);
  }
  return out;
}

}  // namespace irrlyap
