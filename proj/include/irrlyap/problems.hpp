#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "irrlyap/errors.hpp"

namespace irrlyap {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric positive-definite sparse operator.
///
/// Symmetry is checked entry by entry on construction. Definiteness is
/// checked by a sparse LDL^T factorization whose pivots must all be positive.
class SpdSparseMatrix {
 public:
  explicit SpdSparseMatrix(SparseMatrix matrix);

  static SpdSparseMatrix identity(Index n);

  Index n() const { return matrix_.rows(); }
  const SparseMatrix& matrix() const { return matrix_; }
  bool is_identity() const { return is_identity_; }

  Matrix operator*(const Matrix& x) const { return matrix_ * x; }
  Matrix dense() const { return Matrix(matrix_); }

 private:
  SpdSparseMatrix(SparseMatrix matrix, bool is_identity);

  SparseMatrix matrix_;
  bool is_identity_ = false;
};

/// Generalized Lyapunov equation A X M + M X A = B B^T.
class LyapunovProblem {
 public:
  LyapunovProblem(SpdSparseMatrix a, SpdSparseMatrix m, Matrix b);

  /// Factor a dense symmetric PSD right-hand side C = B B^T, dropping
  /// eigenvalues below 1e-12 of the largest.
  static LyapunovProblem from_dense_rhs(SpdSparseMatrix a, SpdSparseMatrix m,
                                        const Matrix& c);

  Index n() const { return a_.n(); }
  Index rhs_rank() const { return b_.cols(); }

  const SpdSparseMatrix& a() const { return a_; }
  const SpdSparseMatrix& m() const { return m_; }
  const Matrix& b() const { return b_; }

  /// ||B B^T||_F, evaluated as ||B^T B||_F.
  double rhs_norm() const { return rhs_norm_; }

  /// Copy with the mass matrix replaced by the identity.
  LyapunovProblem with_identity_mass() const;

 private:
  SpdSparseMatrix a_;
  SpdSparseMatrix m_;
  Matrix b_;
  double rhs_norm_ = 0.0;
};

/// Full-rank n x p representative of a point on the quotient manifold.
class FactorPoint {
 public:
  /// Throws NumericalError unless Y^T Y admits a Cholesky factorization.
  explicit FactorPoint(Matrix y);

  const Matrix& y() const { return y_; }
  Index n() const { return y_.rows(); }
  Index p() const { return y_.cols(); }

 private:
  Matrix y_;
};

/// ||A Y Y^T M + M Y Y^T A - B B^T||_F without forming an n x n matrix.
double residual_fro(const LyapunovProblem& problem, const Matrix& y);
double residual_fro(const LyapunovProblem& problem, const FactorPoint& point);

/// residual_fro divided by ||B B^T||_F. Throws ConfigError for B = 0.
double relative_residual(const LyapunovProblem& problem, const Matrix& y);
double relative_residual(const LyapunovProblem& problem,
                         const FactorPoint& point);

struct DenseOracleOptions {
  Index dense_limit = 2000;
};

/// Direct dense solve through the generalized eigendecomposition of (A, M).
Matrix dense_oracle_solve(const LyapunovProblem& problem,
                          const DenseOracleOptions& options = {});

enum class MassKind { random, identity };

/// One-dimensional finite-difference Laplacian with a random diagonal mass
/// matrix and a rank-one right-hand side.
///
/// A = (1/h^2) tridiag(-1, 2, -1), h = 1/(n+1);
/// M = diag([u_1 .. u_{n-1}, 0] + 0.1), u_i uniform on [0,1);
/// B = c, c standard normal. MassKind::identity replaces M with I.
LyapunovProblem gen_poisson(Index n, std::uint64_t seed,
                            MassKind mass = MassKind::random);

/// Dense random SPD coefficients (stored sparse) and an n x s right-hand
/// side factor. Used for oracle cross-checks at small n.
LyapunovProblem gen_random_dense(Index n, Index s, std::uint64_t seed);

/// Read A, M (Matrix Market coordinate) and B (array or coordinate).
LyapunovProblem load_matrix_market(const std::string& path_a,
                                   const std::string& path_m,
                                   const std::string& path_b);

/// Read a manifest of key=value lines naming a=, m=, b= Matrix Market files.
/// Relative paths resolve against the manifest's directory.
LyapunovProblem load_manifest(const std::string& path);

/// Write A.mtx, M.mtx, B.mtx and problem.manifest into a directory.
/// Returns the manifest path.
std::string write_problem(const LyapunovProblem& problem,
                          const std::string& directory);

}  // namespace irrlyap
