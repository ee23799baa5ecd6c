#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "irrlyap/manifold.hpp"
#include "irrlyap/precond.hpp"
#include "irrlyap/problems.hpp"
#include "irrlyap/rng.hpp"

namespace irrlyap::testing {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

inline LMatrix to_long(const Matrix& x) { return x.cast<long double>(); }

/// A Y Y^T M + M Y Y^T A - B B^T formed as a dense n x n matrix in extended
/// precision.
inline double dense_residual_fro(const LyapunovProblem& problem, const Matrix& y) {
  const LMatrix ay = to_long(Matrix(problem.a() * y));
  const LMatrix my = to_long(Matrix(problem.m() * y));
  const LMatrix b = to_long(problem.b());
  const LMatrix axm = ay * my.transpose();
  const LMatrix r = axm + axm.transpose() - b * b.transpose();
  return static_cast<double>(r.norm());
}

inline double dense_rhs_norm(const LyapunovProblem& problem) {
  const LMatrix b = to_long(problem.b());
  return static_cast<double>((b * b.transpose()).norm());
}

/// tr(X A X M) - tr(X C) with X = Y Y^T, formed densely in extended precision.
inline double dense_cost(const LyapunovProblem& problem, const Matrix& y) {
  const LMatrix a = to_long(problem.a().dense());
  const LMatrix m = to_long(problem.m().dense());
  const LMatrix b = to_long(problem.b());
  const LMatrix x = to_long(y) * to_long(y).transpose();
  return static_cast<double>((x * a * x * m).trace() -
                             (x * b * b.transpose()).trace());
}

/// Kronecker operator A (x) M + M (x) A, acting on column-major vec(X).
inline Matrix kronecker_operator(const Matrix& a, const Matrix& m) {
  const Index n = a.rows();
  Matrix op(n * n, n * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      op.block(i * n, j * n, n, n) = a(i, j) * m + m(i, j) * a;
  return op;
}

/// Solves (A (x) M + M (x) A) vec(X) = vec(C) with a dense Cholesky.
inline Matrix kronecker_solve_dense(const Matrix& a, const Matrix& m,
                                    const Matrix& c) {
  const Index n = a.rows();
  const Matrix op = kronecker_operator(a, m);
  const Vector rhs = Eigen::Map<const Vector>(c.data(), n * n);
  const Vector x = op.llt().solve(rhs);
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

/// Solves A X M + M X A = C by conjugate gradients on the Kronecker operator
/// applied matrix-free, stopping at ||residual|| <= tol ||C||.
inline Matrix kronecker_solve_cg(const Matrix& a, const Matrix& m, const Matrix& c,
                                 double tol = 1e-14, int max_iter = 20000) {
  auto apply = [&](const Matrix& x) {
    const Matrix axm = a * x * m;
    return Matrix(axm + m * x * a);
  };
  Matrix x = Matrix::Zero(c.rows(), c.cols());
  Matrix r = c;
  Matrix d = r;
  double rr = r.squaredNorm();
  const double stop = tol * tol * c.squaredNorm();
  for (int it = 0; it < max_iter && rr > stop; ++it) {
    const Matrix q = apply(d);
    const double alpha = rr / d.cwiseProduct(q).sum();
    x += alpha * d;
    r -= alpha * q;
    const double rr_next = r.squaredNorm();
    d = r + (rr_next / rr) * d;
    rr = rr_next;
  }
  return x;
}

inline Matrix vec_to_mat(const Vector& v, Index n, Index p) {
  return Eigen::Map<const Matrix>(v.data(), n, p);
}

inline Vector mat_to_vec(const Matrix& x) {
  return Eigen::Map<const Vector>(x.data(), x.size());
}

/// Matrix G(Y) of the ambient metric, g_Y(xi, eta) = vec(xi)^T G vec(eta).
inline Matrix metric_matrix(Metric metric, const Matrix& y) {
  const Index n = y.rows();
  const Index p = y.cols();
  const Index d = n * p;
  const FactorPoint point(y);
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i) {
    const Matrix ei = vec_to_mat(Vector::Unit(d, i), n, p);
    for (Index j = 0; j < d; ++j)
      g(i, j) = metric_inner(metric, point, ei, vec_to_mat(Vector::Unit(d, j), n, p));
  }
  return g;
}

/// Riemannian Hessian lift from the Levi-Civita connection of the ambient
/// metric, with every derivative taken by central differences:
///   Hess[eta] = P^H(D grad[eta] + Gamma(eta, grad)),
///   Gamma(u, v) = G^{-1} (DG[u] v + DG[v] u - w) / 2,
///   w_k = v^T (dG/dy_k) u.
inline Matrix koszul_hessian(Metric metric, const LyapunovProblem& problem,
                             const Matrix& y, const Matrix& eta, double h = 1e-5) {
  const Index n = y.rows();
  const Index p = y.cols();
  const Index d = n * p;
  auto grad_at = [&](const Matrix& z) {
    return riemannian_gradient(metric, problem, FactorPoint(z)).value;
  };
  auto dmetric = [&](const Matrix& v) {
    return Matrix((metric_matrix(metric, y + h * v) -
                   metric_matrix(metric, y - h * v)) /
                  (2.0 * h));
  };
  const Matrix grad = grad_at(y);
  const Matrix dgrad = (grad_at(y + h * eta) - grad_at(y - h * eta)) / (2.0 * h);
  const Vector u = mat_to_vec(eta);
  const Vector v = mat_to_vec(grad);
  Vector w(d);
  for (Index k = 0; k < d; ++k)
    w(k) = v.dot(dmetric(vec_to_mat(Vector::Unit(d, k), n, p)) * u);
  const Matrix g = metric_matrix(metric, y);
  const Vector gamma = 0.5 * g.ldlt().solve(dmetric(eta) * v + dmetric(grad) * u - w);
  const PointContext ctx(problem, FactorPoint(y));
  return project_horizontal(metric, ctx, dgrad + vec_to_mat(gamma, n, p));
}

/// Left side of the preconditioner's defining equation, formed densely:
/// the metric-specific lift of Hess h[Y xi^T + xi Y^T] Y, projected
/// horizontally. For the mass-blind variant M is replaced by I.
inline Matrix defining_operator(Metric metric, const PointContext& ctx, const Matrix& xi,
                                PrecondKind kind) {
  const Index n = ctx.n();
  const Matrix a = ctx.problem().a().dense();
  const Matrix m = kind == PrecondKind::bart ? Matrix::Identity(n, n)
                                             : ctx.problem().m().dense();
  const Matrix& y = ctx.y();
  const Matrix f = y * xi.transpose() + xi * y.transpose();
  const Matrix lift = (a * f * m + m * f * a) * y;
  const Matrix gram_inv = ctx.gram().inverse();
  const Matrix py = y * gram_inv * y.transpose();
  Matrix out;
  switch (metric) {
    case Metric::m1:
      out = (Matrix::Identity(n, n) - 0.5 * py) * lift * gram_inv;
      break;
    case Metric::m2:
      out = 2.0 * lift * gram_inv;
      break;
    case Metric::m3:
      out = 2.0 * lift;
      break;
  }
  return project_horizontal(metric, ctx, out);
}

/// Relative residual of the rank-p truncation of the eigendecomposition of X.
inline double truncated_eig_relres(const LyapunovProblem& problem,
                                   const Eigen::SelfAdjointEigenSolver<Matrix>& eig,
                                   Index p) {
  const Vector lambda = eig.eigenvalues().tail(p).cwiseMax(0.0);
  const Matrix y = eig.eigenvectors().rightCols(p) * lambda.cwiseSqrt().asDiagonal();
  return dense_residual_fro(problem, y) / dense_rhs_norm(problem);
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace irrlyap::testing
