#include <gtest/gtest.h>

#include "irrlyap/precond.hpp"
#include "irrlyap/tnewton.hpp"
#include "support.hpp"

namespace irrlyap {
namespace {

using testing::defining_operator;
using testing::rel_diff;

constexpr Metric kMetrics[] = {Metric::m1, Metric::m2, Metric::m3};

struct Point {
  LyapunovProblem problem;
  Matrix y;
};

Point poisson_point(Index n, Index p, std::uint64_t seed,
                    MassKind mass = MassKind::random) {
  Rng rng(seed + 1000);
  return Point{gen_poisson(n, seed, mass), rng.normal_matrix(n, p)};
}

TEST(PrecondKind, ParsesNames) {
  EXPECT_EQ(precond_from_string("none"), PrecondKind::none);
  EXPECT_EQ(precond_from_string("proposed"), PrecondKind::proposed);
  EXPECT_EQ(precond_from_string("bart"), PrecondKind::bart);
  EXPECT_EQ(to_string(PrecondKind::bart), "bart");
  EXPECT_THROW(precond_from_string("jacobi"), ConfigError);
}

class ShiftSystemTest : public ::testing::Test {
 protected:
  void SetUp() override {
    problem_ = std::make_unique<LyapunovProblem>(gen_random_dense(40, 1, 21));
    Rng rng(22);
    y_ = rng.normal_matrix(40, 3);
    const Matrix my = problem_->m() * y_;
    const Matrix yay = y_.transpose() * (problem_->a() * y_);
    const Matrix ymy = y_.transpose() * my;
    cache_ = std::make_unique<ShiftSystemCache>(problem_->a().matrix(),
                                                problem_->m().matrix(), my, yay, ymy);
  }

  std::unique_ptr<LyapunovProblem> problem_;
  Matrix y_;
  std::unique_ptr<ShiftSystemCache> cache_;
};

TEST_F(ShiftSystemTest, ShiftsArePositiveAndTransformDiagonalizes) {
  ASSERT_EQ(cache_->size(), 3);
  EXPECT_GT(cache_->shifts().minCoeff(), 0.0);
  const Matrix& t = cache_->transform();
  const Matrix ymy = y_.transpose() * (problem_->m() * y_);
  const Matrix yay = y_.transpose() * (problem_->a() * y_);
  EXPECT_LT((t.transpose() * ymy * t - Matrix::Identity(3, 3)).norm(), 1e-10);
  EXPECT_LT((t.transpose() * yay * t - Matrix(cache_->shifts().asDiagonal())).norm(),
            1e-10 * cache_->shifts().maxCoeff());
  EXPECT_LT((cache_->vhat().transpose() * cache_->vhat() - Matrix::Identity(3, 3)).norm(),
            1e-12);
}

TEST_F(ShiftSystemTest, MatchesDenseBlockSolve) {
  const Index n = 40;
  const Index p = 3;
  Rng rng(23);
  const Matrix rhs = rng.normal_matrix(n, 2);
  for (Index i = 0; i < p; ++i) {
    Matrix block = Matrix::Zero(n + p, n + p);
    block.topLeftCorner(n, n) =
        problem_->a().dense() + cache_->shift(i) * problem_->m().dense();
    block.topRightCorner(n, p) = cache_->vhat();
    block.bottomLeftCorner(p, n) = cache_->vhat().transpose();
    Matrix full_rhs = Matrix::Zero(n + p, 2);
    full_rhs.topRows(n) = rhs;
    const Matrix expected = block.fullPivLu().solve(full_rhs);
    Matrix multiplier;
    const Matrix x = cache_->saddle_solve(i, rhs, &multiplier);
    EXPECT_LT(rel_diff(x, Matrix(expected.topRows(n))), 1e-10);
    EXPECT_LT(rel_diff(multiplier, Matrix(expected.bottomRows(p))), 1e-10);
    EXPECT_LT((cache_->vhat().transpose() * x).norm(), 1e-10 * x.norm());
  }
}

TEST_F(ShiftSystemTest, RangeOfVhatGivesZeroSolution) {
  Matrix multiplier;
  const Matrix x = cache_->saddle_solve(0, cache_->vhat(), &multiplier);
  EXPECT_LT(x.norm(), 1e-10);
  EXPECT_LT((multiplier - Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST_F(ShiftSystemTest, CompatibleRhsHasZeroMultiplier) {
  const Matrix shifted =
      problem_->a().dense() + cache_->shift(1) * problem_->m().dense();
  Rng rng(24);
  Matrix x0 = rng.normal_matrix(40, 1);
  x0 -= cache_->vhat() * (cache_->vhat().transpose() * x0);
  const Matrix rhs = shifted * x0;
  Matrix multiplier;
  const Matrix x = cache_->saddle_solve(1, rhs, &multiplier);
  EXPECT_LT(rel_diff(x, x0), 1e-10);
  EXPECT_LT(multiplier.norm(), 1e-10 * rhs.norm());
}

TEST(Preconditioner, SolvesDefiningEquation) {
  for (Index n : {50, 100, 200}) {
    for (Index p : {2, 3, 5}) {
      const Point pt = poisson_point(n, p, static_cast<std::uint64_t>(n + p));
      const PointContext ctx(pt.problem, FactorPoint(pt.y));
      Rng rng(static_cast<std::uint64_t>(7 * n + p));
      for (Metric metric : kMetrics) {
        for (PrecondKind kind : {PrecondKind::proposed, PrecondKind::bart}) {
          const Preconditioner precond(metric, ctx, kind);
          const Matrix eta = project_horizontal(metric, ctx, rng.normal_matrix(n, p));
          const Matrix xi = precond.apply(HorizontalVector{eta, metric}).value;
          const Matrix back = defining_operator(metric, ctx, xi, kind);
          EXPECT_LT(rel_diff(back, eta), 1e-8)
              << "n " << n << " p " << p << " metric " << to_int(metric) << " "
              << to_string(kind);
        }
      }
    }
  }
}

TEST(Preconditioner, IsLinearAndSelfAdjoint) {
  const Point pt = poisson_point(60, 3, 5);
  const PointContext ctx(pt.problem, FactorPoint(pt.y));
  Rng rng(6);
  for (Metric metric : kMetrics) {
    for (PrecondKind kind : {PrecondKind::proposed, PrecondKind::bart}) {
      const Preconditioner precond(metric, ctx, kind);
      for (int trial = 0; trial < 10; ++trial) {
        const Matrix eta = project_horizontal(metric, ctx, rng.normal_matrix(60, 3));
        const Matrix xi = project_horizontal(metric, ctx, rng.normal_matrix(60, 3));
        const Matrix pe = precond.apply(HorizontalVector{eta, metric}).value;
        const Matrix px = precond.apply(HorizontalVector{xi, metric}).value;
        const Matrix p2e = precond.apply(HorizontalVector{Matrix(2.0 * eta), metric}).value;
        EXPECT_LT(rel_diff(p2e, Matrix(2.0 * pe)), 1e-12);
        const double lhs = metric_inner(metric, ctx, pe, xi);
        const double rhs = metric_inner(metric, ctx, eta, px);
        const double scale = std::sqrt(metric_inner(metric, ctx, eta, eta) *
                                       metric_inner(metric, ctx, px, px));
        EXPECT_LT(std::abs(lhs - rhs), 1e-9 * scale);
        EXPECT_GT(metric_inner(metric, ctx, eta, pe), 0.0);
      }
    }
  }
}

TEST(Preconditioner, BartCoincidesWithProposedForIdentityMass) {
  const Point pt = poisson_point(80, 3, 8, MassKind::identity);
  const PointContext ctx(pt.problem, FactorPoint(pt.y));
  Rng rng(9);
  for (Metric metric : kMetrics) {
    const Matrix eta = project_horizontal(metric, ctx, rng.normal_matrix(80, 3));
    const Matrix proposed = apply_preconditioner(metric, pt.problem, FactorPoint(pt.y),
                                                 HorizontalVector{eta, metric})
                                .value;
    const Matrix bart = apply_bart_preconditioner(metric, pt.problem, FactorPoint(pt.y),
                                                  HorizontalVector{eta, metric})
                            .value;
    EXPECT_LT(rel_diff(bart, proposed), 1e-10);
  }
}

TEST(Preconditioner, CoupledMatrixPreservesSymmetry) {
  const Point pt = poisson_point(30, 3, 10);
  const PointContext ctx(pt.problem, FactorPoint(pt.y));
  const Preconditioner precond(Metric::m1, ctx);
  const Matrix k = precond.coupled_matrix();
  Rng rng(11);
  const Matrix s0 = rng.normal_matrix(3, 3);
  const Matrix s = s0 + s0.transpose();
  const Vector out = k * testing::mat_to_vec(s);
  const Matrix out_mat = testing::vec_to_mat(out, 3, 3);
  EXPECT_LT((out_mat - out_mat.transpose()).norm(), 1e-10 * out_mat.norm());
}

TEST(Preconditioner, DiffersFromHessianByResidualTerm) {
  const Point pt = poisson_point(40, 3, 12);
  const PointContext ctx(pt.problem, FactorPoint(pt.y));
  const Preconditioner precond(Metric::m1, ctx);
  Rng rng(13);
  const Matrix eta = project_horizontal(Metric::m1, ctx, rng.normal_matrix(40, 3));
  const Matrix hess = hessian_action(Metric::m1, ctx, HorizontalVector{eta, Metric::m1}).value;
  const Matrix model = defining_operator(Metric::m1, ctx, eta, PrecondKind::proposed);
  const Matrix y = ctx.y();
  const Matrix a = pt.problem.a().dense();
  const Matrix m = pt.problem.m().dense();
  const Matrix b = pt.problem.b();
  const Matrix x = y * y.transpose();
  const Matrix grad_h = a * x * m + m * x * a - b * b.transpose();
  const Matrix gram_inv = ctx.gram().inverse();
  const Matrix perp = Matrix::Identity(40, 40) - y * gram_inv * y.transpose();
  const Matrix t1 = project_horizontal(Metric::m1, ctx, perp * grad_h * perp * eta * gram_inv);
  EXPECT_LT((hess - model - t1).norm(), 1e-9 * hess.norm());
}

TEST(Preconditioner, EqualsHessianInverseAtExactSolution) {
  // With A = M and B = sqrt(2) A Y*, X = Y* Y*^T solves the equation, the
  // residual vanishes at Y* and the preconditioned Hessian is the identity.
  const Index n = 30;
  const Index p = 3;
  const LyapunovProblem base = gen_random_dense(n, 1, 14);
  Rng rng(15);
  const Matrix ystar = rng.normal_matrix(n, p);
  const LyapunovProblem problem(base.a(), base.a(), std::sqrt(2.0) * (base.a() * ystar));
  EXPECT_LT(relative_residual(problem, ystar), 1e-14);
  const PointContext ctx(problem, FactorPoint(ystar));
  const Preconditioner precond(Metric::m1, ctx);
  const InnerProduct inner = [&](const Matrix& u, const Matrix& v) {
    return metric_inner(Metric::m1, ctx, u, v);
  };
  const LinearOperator hess = [&](const Matrix& v) {
    return hessian_action(Metric::m1, ctx, HorizontalVector{v, Metric::m1}).value;
  };
  const LinearOperator apply = [&](const Matrix& v) {
    return precond.apply(HorizontalVector{v, Metric::m1}).value;
  };
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix g = project_horizontal(Metric::m1, ctx, rng.normal_matrix(n, p));
    const Matrix pg = apply(hess(g));
    EXPECT_LT(rel_diff(pg, g), 1e-8);
    TpcgOptions opts;
    opts.phi = 1e-8;
    opts.max_inner = 50;
    const TpcgResult r = tpcg(g, hess, apply, inner, opts);
    EXPECT_EQ(r.exit, TpcgExit::residual);
    EXPECT_LE(r.iterations, 2);
    const Matrix residual = hess(r.eta) + g;
    EXPECT_LE(std::sqrt(inner(residual, residual)), 1e-8 * std::sqrt(inner(g, g)));
  }
}

TEST(Preconditioner, AssembledInverseWithinKroneckerBounds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 8 + static_cast<Index>(seed);
    const Index p = 1 + static_cast<Index>(seed % 3);
    const LyapunovProblem problem = gen_random_dense(n, 1, seed);
    Rng rng(seed + 40);
    const FactorPoint point(rng.normal_matrix(n, p));
    const Matrix op = testing::kronecker_operator(problem.a().dense(), problem.m().dense());
    const Eigen::SelfAdjointEigenSolver<Matrix> lyap(op);
    const double lo = lyap.eigenvalues().minCoeff();
    const double hi = lyap.eigenvalues().maxCoeff();
    const Matrix assembled = assemble_precond_operator_dense(Metric::m1, problem, point);
    EXPECT_LT((assembled - assembled.transpose()).norm(), 1e-10 * assembled.norm());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (assembled + assembled.transpose()));
    EXPECT_GE(eig.eigenvalues().minCoeff(), lo - 1e-8 * hi) << "seed " << seed;
    EXPECT_LE(eig.eigenvalues().maxCoeff(), hi + 1e-8 * hi) << "seed " << seed;
  }
}

TEST(Preconditioner, AssembledInverseIsTwoForIdentityCoefficients) {
  Rng rng(3);
  const LyapunovProblem problem(SpdSparseMatrix::identity(10), SpdSparseMatrix::identity(10),
                                rng.normal_matrix(10, 1));
  const FactorPoint point(rng.normal_matrix(10, 2));
  const Matrix assembled = assemble_precond_operator_dense(Metric::m1, problem, point);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (assembled + assembled.transpose()));
  EXPECT_NEAR(eig.eigenvalues().minCoeff(), 2.0, 1e-8 * 2.0);
  EXPECT_NEAR(eig.eigenvalues().maxCoeff(), 2.0, 1e-8 * 2.0);
}

TEST(Preconditioner, DenseAssemblyHasSizeLimit) {
  Rng rng(1);
  const LyapunovProblem problem = gen_poisson(61, 1);
  EXPECT_THROW(assemble_precond_operator_dense(Metric::m1, problem,
                                               FactorPoint(rng.normal_matrix(61, 2))),
               ConfigError);
}

}  // namespace
}  // namespace irrlyap
