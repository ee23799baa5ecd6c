#include <gtest/gtest.h>

#include "irrlyap/problems.hpp"
#include "support.hpp"

namespace irrlyap {
namespace {

using testing::dense_residual_fro;
using testing::dense_rhs_norm;
using testing::rel_diff;

SparseMatrix sparse_from(const Matrix& dense) { return dense.sparseView(); }

TEST(SpdSparseMatrix, AcceptsSymmetricPositiveDefinite) {
  Matrix a(2, 2);
  a << 2, -1, -1, 2;
  const SpdSparseMatrix spd(sparse_from(a));
  EXPECT_EQ(spd.n(), 2);
  EXPECT_FALSE(spd.is_identity());
}

TEST(SpdSparseMatrix, RejectsAsymmetric) {
  Matrix a(2, 2);
  a << 2, 1, 0, 2;
  EXPECT_THROW(SpdSparseMatrix{sparse_from(a)}, NumericalError);
}

TEST(SpdSparseMatrix, RejectsIndefinite) {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_THROW(SpdSparseMatrix{sparse_from(a)}, NumericalError);
}

TEST(SpdSparseMatrix, RejectsNonSquare) {
  EXPECT_THROW(SpdSparseMatrix{SparseMatrix(2, 3)}, DimensionError);
}

TEST(LyapunovProblem, RejectsMismatchedShapes) {
  EXPECT_THROW(LyapunovProblem(SpdSparseMatrix::identity(3), SpdSparseMatrix::identity(4),
                               Matrix::Ones(3, 1)),
               DimensionError);
  EXPECT_THROW(LyapunovProblem(SpdSparseMatrix::identity(3), SpdSparseMatrix::identity(3),
                               Matrix::Ones(4, 1)),
               DimensionError);
}

TEST(LyapunovProblem, FromDenseRhsReproducesRhs) {
  Rng rng(3);
  const Matrix g = rng.normal_matrix(8, 2);
  const Matrix c = g * g.transpose();
  const LyapunovProblem problem = LyapunovProblem::from_dense_rhs(
      SpdSparseMatrix::identity(8), SpdSparseMatrix::identity(8), c);
  EXPECT_EQ(problem.rhs_rank(), 2);
  EXPECT_LT(rel_diff(Matrix(problem.b() * problem.b().transpose()), c), 1e-12);
}

TEST(FactorPoint, RejectsRankDeficient) {
  Matrix y = Matrix::Zero(5, 2);
  y(0, 0) = 1.0;
  EXPECT_THROW(FactorPoint{y}, NumericalError);
  EXPECT_THROW(FactorPoint{Matrix::Ones(2, 3)}, DimensionError);
}

TEST(GenPoisson, MatchesStencilAndMassLayout) {
  const Index n = 10;
  const LyapunovProblem problem = gen_poisson(n, 4);
  const double h = 1.0 / static_cast<double>(n + 1);
  const Matrix a = problem.a().dense();
  const Matrix m = problem.m().dense();
  for (Index i = 0; i < n; ++i) {
    EXPECT_NEAR(a(i, i), 2.0 / (h * h), 1e-9);
    if (i + 1 < n) {
      EXPECT_NEAR(a(i, i + 1), -1.0 / (h * h), 1e-9);
      EXPECT_NEAR(a(i + 1, i), -1.0 / (h * h), 1e-9);
    }
    EXPECT_GE(m(i, i), 0.1);
    EXPECT_LT(m(i, i), 1.1);
  }
  EXPECT_DOUBLE_EQ(m(n - 1, n - 1), 0.1);
  EXPECT_EQ(problem.rhs_rank(), 1);
  EXPECT_TRUE(gen_poisson(n, 4, MassKind::identity).m().is_identity());
}

TEST(GenPoisson, IsDeterministicPerSeed) {
  const LyapunovProblem p1 = gen_poisson(20, 9);
  const LyapunovProblem p2 = gen_poisson(20, 9);
  const LyapunovProblem p3 = gen_poisson(20, 10);
  EXPECT_EQ(p1.b(), p2.b());
  EXPECT_EQ(p1.m().dense(), p2.m().dense());
  EXPECT_NE(p1.b(), p3.b());
}

TEST(ResidualFro, MatchesDenseFormation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 30 + static_cast<Index>(seed) * 7;
    const LyapunovProblem problem =
        seed % 2 == 0 ? gen_poisson(n, seed) : gen_random_dense(n, 2, seed);
    Rng rng(seed + 100);
    const Matrix y = rng.normal_matrix(n, 1 + static_cast<Index>(seed % 4));
    EXPECT_LT(rel_diff(residual_fro(problem, y), dense_residual_fro(problem, y)), 1e-10)
        << "seed " << seed;
    EXPECT_LT(rel_diff(problem.rhs_norm(), dense_rhs_norm(problem)), 1e-12);
  }
}

TEST(ResidualFro, ZeroFactorGivesRhsNorm) {
  const LyapunovProblem problem = gen_poisson(15, 1);
  EXPECT_NEAR(relative_residual(problem, Matrix::Zero(15, 2)), 1.0, 1e-14);
}

TEST(ResidualFro, RejectsZeroRhs) {
  const LyapunovProblem problem(SpdSparseMatrix::identity(3), SpdSparseMatrix::identity(3),
                                Matrix::Zero(3, 1));
  EXPECT_THROW(relative_residual(problem, Matrix::Ones(3, 1)), ConfigError);
}

TEST(DenseOracle, MatchesKroneckerSolve) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Index n = 12 + static_cast<Index>(seed) * 4;
    const LyapunovProblem problem = gen_random_dense(n, 1 + seed % 2, seed);
    const Matrix c = problem.b() * problem.b().transpose();
    const Matrix expected =
        testing::kronecker_solve_dense(problem.a().dense(), problem.m().dense(), c);
    EXPECT_LT(rel_diff(dense_oracle_solve(problem), expected), 1e-10) << "seed " << seed;
  }
}

TEST(DenseOracle, IdentityCoefficientsGiveHalfRhs) {
  Rng rng(2);
  const Matrix b = rng.normal_matrix(6, 2);
  const LyapunovProblem problem(SpdSparseMatrix::identity(6), SpdSparseMatrix::identity(6), b);
  EXPECT_LT(rel_diff(dense_oracle_solve(problem), Matrix(0.5 * b * b.transpose())), 1e-13);
}

TEST(DenseOracle, RespectsDenseLimit) {
  DenseOracleOptions opts;
  opts.dense_limit = 10;
  EXPECT_THROW(dense_oracle_solve(gen_poisson(11, 0), opts), ConfigError);
}

}  // namespace
}  // namespace irrlyap
