#pragma once

#include <functional>
#include <vector>

#include <Eigen/Cholesky>

#include "irrlyap/problems.hpp"

namespace irrlyap {

/// Riemannian metric on the total space of R_*^{n x p} / O_p.
///
///   m1: 2 tr(Y^T xi Y^T eta + Y^T Y xi^T eta) + tr(Y^T Y (xi^V)^T eta^V)
///   m2: tr(Y^T Y xi^T eta)
///   m3: tr(xi^T eta)
enum class Metric { m1 = 1, m2 = 2, m3 = 3 };

/// Accepts 1, 2 or 3.
Metric metric_from_int(int value);
int to_int(Metric metric);

/// Ambient n x p matrix lying in the horizontal space of `metric` at the
/// point it was computed for.
struct HorizontalVector {
  Matrix value;
  Metric metric = Metric::m1;
};

/// ambient = vertical + horizontal, vertical = Y * omega with omega skew.
struct TangentDecomposition {
  Matrix vertical;
  Matrix horizontal;
  Matrix omega;
};

/// Products and factorizations at a fixed Y that every geometric operation
/// needs. Holds a reference to the problem; the problem must outlive it.
class PointContext {
 public:
  PointContext(const LyapunovProblem& problem, FactorPoint point);

  const LyapunovProblem& problem() const { return *problem_; }
  const FactorPoint& point() const { return point_; }
  const Matrix& y() const { return point_.y(); }
  Index n() const { return point_.n(); }
  Index p() const { return point_.p(); }

  const Matrix& ay() const { return ay_; }
  const Matrix& my() const { return my_; }
  /// Y^T Y.
  const Matrix& gram() const { return gram_; }
  /// Y^T A Y and Y^T M Y.
  const Matrix& yay() const { return yay_; }
  const Matrix& ymy() const { return ymy_; }

  /// x (Y^T Y)^{-1}.
  Matrix right_solve_gram(const Matrix& x) const;
  /// (Y^T Y)^{-1} x.
  Matrix left_solve_gram(const Matrix& x) const;

  /// grad h(Y Y^T) v = A Y (Y^T M v) + M Y (Y^T A v) - B (B^T v).
  Matrix grad_h_times(const Matrix& v) const;
  /// grad h(Y Y^T) Y, cached.
  const Matrix& grad_h_y() const { return grad_h_y_; }

  /// Hess h(Y Y^T)[Y eta^T + eta Y^T] Y, i.e. (A F M + M F A) Y.
  Matrix hess_h_lift(const Matrix& eta) const;
  /// Same with explicit A eta and M eta, for callers that already hold them.
  Matrix hess_h_lift(const Matrix& eta, const Matrix& a_eta,
                     const Matrix& m_eta) const;

  /// (I - Y (Y^T Y)^{-1} Y^T) x.
  Matrix complement_project(const Matrix& x) const;

  double cost() const { return cost_; }

 private:
  const LyapunovProblem* problem_;
  FactorPoint point_;
  Matrix ay_, my_, gram_, yay_, ymy_, bty_, grad_h_y_;
  Eigen::LLT<Matrix> gram_llt_;
  double cost_ = 0.0;
};

/// f(Y) = tr(Y^T A Y Y^T M Y) - ||B^T Y||_F^2.
double cost(const LyapunovProblem& problem, const FactorPoint& point);
/// Raw overload; accepts rank-deficient Y (including Y = 0).
double cost(const LyapunovProblem& problem, const Matrix& y);

/// Euclidean gradient of Y -> f(Y) on R^{n x p}: 2 grad h(Y Y^T) Y.
/// Accepts any Y, including rank-deficient ones.
Matrix euclidean_gradient(const LyapunovProblem& problem, const Matrix& y);

/// f(Y + t D) - f(Y) as an exact quartic in t. Evaluating the increment from
/// its coefficients avoids cancelling against the large value f(Y).
class CostAlongLine {
 public:
  CostAlongLine(const LyapunovProblem& problem, const Matrix& y,
                const Matrix& direction);
  double increment(double t) const;
  /// d/dt at t = 0.
  double slope() const { return coeff_[0]; }
  /// Rounding-error bound on slope(); slopes below it carry no sign.
  double slope_error() const { return slope_error_; }

 private:
  double coeff_[4] = {0.0, 0.0, 0.0, 0.0};
  double slope_error_ = 0.0;
};

double metric_inner(Metric metric, const PointContext& ctx, const Matrix& xi,
                    const Matrix& eta);
double metric_inner(Metric metric, const FactorPoint& point, const Matrix& xi,
                    const Matrix& eta);

TangentDecomposition project_decompose(Metric metric, const PointContext& ctx,
                                       const Matrix& ambient);
TangentDecomposition project_decompose(Metric metric, const FactorPoint& point,
                                       const Matrix& ambient);

/// Horizontal part only.
Matrix project_horizontal(Metric metric, const PointContext& ctx,
                          const Matrix& ambient);

/// pi(Y + step * Z). Throws NumericalError("retraction left the manifold")
/// when the result is rank deficient.
FactorPoint retract(const FactorPoint& point, const HorizontalVector& direction,
                    double step);
FactorPoint retract(const FactorPoint& point, const Matrix& direction,
                    double step);

HorizontalVector riemannian_gradient(Metric metric, const PointContext& ctx);
HorizontalVector riemannian_gradient(Metric metric,
                                     const LyapunovProblem& problem,
                                     const FactorPoint& point);

HorizontalVector hessian_action(Metric metric, const PointContext& ctx,
                                const HorizontalVector& eta);
HorizontalVector hessian_action(Metric metric, const LyapunovProblem& problem,
                                const FactorPoint& point,
                                const HorizontalVector& eta);

/// Dimension of the quotient manifold, n p - p (p - 1) / 2.
Index horizontal_dimension(Index n, Index p);

/// Metric-orthonormal basis of the horizontal space, by Gram-Schmidt over the
/// projected unit ambient directions. Dense; intended for small n p.
std::vector<Matrix> horizontal_basis(Metric metric, const PointContext& ctx);

/// Matrix of a linear map on the horizontal space in a metric-orthonormal
/// basis: entry (i, j) = g(basis_i, op(basis_j)).
Matrix assemble_operator(Metric metric, const PointContext& ctx,
                         const std::vector<Matrix>& basis,
                         const std::function<Matrix(const Matrix&)>& op);

}  // namespace irrlyap
