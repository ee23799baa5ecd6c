#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include "irrlyap/manifold.hpp"

namespace irrlyap {

enum class PrecondKind {
  none,
  /// Hessian with the residual-dependent term dropped, inverted exactly.
  proposed,
  /// Same construction with M replaced by I inside Hess h (the mass-blind
  /// variant); the metric is unchanged.
  bart,
};

PrecondKind precond_from_string(const std::string& name);
std::string to_string(PrecondKind kind);

/// Per-point data for the p shifted saddle-point systems
///
///   [ A + lambda_i M   Vhat ] [x]   [rhs]
///   [ Vhat^T           0    ] [y] = [ 0 ]
///
/// where L L^T = Y^T M Y, Q Lambda Q^T = L^{-1} Y^T A Y L^{-T} and Vhat is an
/// orthonormal basis of range(M Y). Solves eliminate the Schur complement
/// S_i = Vhat^T (A + lambda_i M)^{-1} Vhat.
class ShiftSystemCache {
 public:
  /// `my` = M Y, `ymy` = Y^T M Y, `yay` = Y^T A Y.
  ShiftSystemCache(const SparseMatrix& a, const SparseMatrix& m,
                   const Matrix& my, const Matrix& yay, const Matrix& ymy);

  Index size() const { return shifts_.size(); }
  const Vector& shifts() const { return shifts_; }
  double shift(Index i) const { return shifts_(i); }
  const Matrix& vhat() const { return vhat_; }
  /// L^{-T} Q; satisfies T^T (Y^T M Y) T = I and T^T (Y^T A Y) T = Lambda.
  const Matrix& transform() const { return transform_; }
  const Matrix& schur(Index i) const { return schur_[static_cast<std::size_t>(i)]; }

  /// Returns x with Vhat^T x = 0 and (A + lambda_i M) x + Vhat y = rhs.
  Matrix saddle_solve(Index i, const Matrix& rhs, Matrix* multiplier = nullptr) const;

 private:
  using Factor = Eigen::SimplicialLDLT<SparseMatrix>;
  Vector shifts_;
  Matrix vhat_;
  Matrix transform_;
  std::vector<std::unique_ptr<Factor>> factors_;
  std::vector<Matrix> shifted_vhat_;  // (A + lambda_i M)^{-1} Vhat
  std::vector<Matrix> schur_;
  std::vector<Eigen::LLT<Matrix>> schur_llt_;
};

/// Preconditioner at one point. apply() solves
///
///   m1: (I - P_Y/2) Hess h[Y xi^T + xi Y^T] Y (Y^T Y)^{-1} = eta
///   m2: 2 Hess h[Y xi^T + xi Y^T] Y (Y^T Y)^{-1}           = eta
///   m3: 2 Hess h[Y xi^T + xi Y^T] Y                          = eta
///
/// for horizontal xi. The left-hand side is inverse_apply().
///
/// Keeps a reference to `ctx`, which must outlive the preconditioner.
class Preconditioner {
 public:
  Preconditioner(Metric metric, const PointContext& ctx,
                 PrecondKind kind = PrecondKind::proposed);

  Metric metric() const { return metric_; }
  PrecondKind kind() const { return kind_; }
  const ShiftSystemCache& cache() const { return *cache_; }

  HorizontalVector apply(const HorizontalVector& eta) const;
  Matrix inverse_apply(const Matrix& xi) const;

  /// Dense p^2 x p^2 matrix K + Pi K Pi of the coupled symmetric system.
  Matrix coupled_matrix() const;

 private:
  Matrix rhs_for(const Matrix& eta) const;

  Metric metric_;
  PrecondKind kind_;
  const PointContext* ctx_;
  SparseMatrix identity_mass_;
  Matrix my_, ymy_;
  std::unique_ptr<ShiftSystemCache> cache_;
  std::vector<Matrix> coupling_;  // X_i = T_i^{-1}(2 A Y T)
  std::vector<Matrix> blocks_;    // K_i = 2 lambda_i I - T^T Y^T A X_i
  Eigen::FullPivLU<Matrix> coupled_lu_;
};

HorizontalVector apply_preconditioner(Metric metric,
                                      const LyapunovProblem& problem,
                                      const FactorPoint& point,
                                      const HorizontalVector& eta);

HorizontalVector apply_bart_preconditioner(Metric metric,
                                           const LyapunovProblem& problem,
                                           const FactorPoint& point,
                                           const HorizontalVector& eta);

/// Matrix of the preconditioner's inverse in a metric-orthonormal horizontal
/// basis. Requires n <= 60.
Matrix assemble_precond_operator_dense(Metric metric,
                                       const LyapunovProblem& problem,
                                       const FactorPoint& point,
                                       PrecondKind kind = PrecondKind::proposed);

}  // namespace irrlyap
