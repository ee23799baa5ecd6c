#include "irrlyap/precond.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "irrlyap/errors.hpp"

namespace irrlyap {

namespace {

// Index pairs (i <= j) parametrizing a symmetric p x p matrix.
std::vector<std::pair<Index, Index>> upper_pairs(Index p) {
  std::vector<std::pair<Index, Index>> pairs;
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i <= j; ++i) pairs.emplace_back(i, j);
  return pairs;
}

}  // namespace

PrecondKind precond_from_string(const std::string& name) {
  if (name == "none") return PrecondKind::none;
  if (name == "proposed") return PrecondKind::proposed;
  if (name == "bart") return PrecondKind::bart;
  throw ConfigError("preconditioner must be none, proposed or bart, got '" +
                    name + "'");
}

std::string to_string(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::none:
      return "none";
    case PrecondKind::proposed:
      return "proposed";
    case PrecondKind::bart:
      return "bart";
  }
  return "unknown";
}

ShiftSystemCache::ShiftSystemCache(const SparseMatrix& a, const SparseMatrix& m,
                                   const Matrix& my, const Matrix& yay,
                                   const Matrix& ymy) {
  const Index n = a.rows();
  const Index p = my.cols();

  Eigen::LLT<Matrix> llt(ymy);
  if (llt.info() != Eigen::Success)
    throw NumericalError("Y^T M Y is not positive definite");
  const Matrix l = llt.matrixL();
  // L^{-1} (Y^T A Y) L^{-T}
  Matrix reduced = l.triangularView<Eigen::Lower>().solve(yay);
  reduced = Matrix(l.triangularView<Eigen::Lower>().solve(Matrix(reduced.transpose()))).transpose();
  reduced = (0.5 * (reduced + reduced.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced);
  shifts_ = eig.eigenvalues();
  if ((shifts_.array() <= 0.0).any())
    throw NumericalError("non-positive shift; Y^T A Y is not positive definite");
  transform_ = l.transpose().triangularView<Eigen::Upper>().solve(eig.eigenvectors());

  Eigen::HouseholderQR<Matrix> qr(my);
  vhat_ = qr.householderQ() * Matrix::Identity(n, p);

  factors_.reserve(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    SparseMatrix shifted = a + shifts_(i) * m;
    auto factor = std::make_unique<Factor>(shifted);
    if (factor->info() != Eigen::Success)
      throw NumericalError("factorization of A + lambda_" + std::to_string(i) +
                           " M failed");
    Matrix w = factor->solve(vhat_);
    Matrix s = vhat_.transpose() * w;
    s = (0.5 * (s + s.transpose())).eval();
    Eigen::LLT<Matrix> s_llt(s);
    if (s_llt.info() != Eigen::Success)
      throw NumericalError("Schur complement " + std::to_string(i) +
                           " is not positive definite");
    factors_.push_back(std::move(factor));
    shifted_vhat_.push_back(std::move(w));
    schur_.push_back(std::move(s));
    schur_llt_.push_back(std::move(s_llt));
  }
}

Matrix ShiftSystemCache::saddle_solve(Index i, const Matrix& rhs,
                                      Matrix* multiplier) const {
  if (i < 0 || i >= size())
    throw DimensionError("shift index " + std::to_string(i) + " out of range");
  if (rhs.rows() != vhat_.rows())
    throw DimensionError("saddle right-hand side has " +
                         std::to_string(rhs.rows()) + " rows, expected " +
                         std::to_string(vhat_.rows()));
  const auto k = static_cast<std::size_t>(i);
  const Matrix x0 = factors_[k]->solve(rhs);
  const Matrix y = schur_llt_[k].solve(vhat_.transpose() * x0);
  if (multiplier) *multiplier = y;
  return x0 - shifted_vhat_[k] * y;
}

Preconditioner::Preconditioner(Metric metric, const PointContext& ctx,
                               PrecondKind kind)
    : metric_(metric), kind_(kind), ctx_(&ctx) {
  if (kind == PrecondKind::none)
    throw ConfigError("PrecondKind::none has no preconditioner object");
  const LyapunovProblem& problem = ctx.problem();
  const SparseMatrix* mass = &problem.m().matrix();
  if (kind == PrecondKind::bart) {
    identity_mass_.resize(ctx.n(), ctx.n());
    identity_mass_.setIdentity();
    mass = &identity_mass_;
    my_ = ctx.y();
    ymy_ = ctx.gram();
  } else {
    my_ = ctx.my();
    ymy_ = ctx.ymy();
  }
  cache_ = std::make_unique<ShiftSystemCache>(problem.a().matrix(), *mass, my_,
                                              ctx.yay(), ymy_);

  const Index p = ctx.p();
  const Matrix& t = cache_->transform();
  const Matrix two_ayt = 2.0 * ctx.ay() * t;
  const Matrix tt_yta = t.transpose() * ctx.ay().transpose();
  coupling_.reserve(static_cast<std::size_t>(p));
  blocks_.reserve(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    Matrix x = cache_->saddle_solve(i, two_ayt);
    Matrix k = 2.0 * cache_->shift(i) * Matrix::Identity(p, p) - tt_yta * x;
    coupling_.push_back(std::move(x));
    blocks_.push_back(std::move(k));
  }

  // Restrict K + Pi K Pi to symmetric arguments and symmetric equations.
  const auto pairs = upper_pairs(p);
  const auto m = static_cast<Index>(pairs.size());
  Matrix restricted(m, m);
  for (Index c = 0; c < m; ++c) {
    Matrix s = Matrix::Zero(p, p);
    s(pairs[static_cast<std::size_t>(c)].first, pairs[static_cast<std::size_t>(c)].second) = 1.0;
    s(pairs[static_cast<std::size_t>(c)].second, pairs[static_cast<std::size_t>(c)].first) = 1.0;
    Matrix image(p, p);
    for (Index j = 0; j < p; ++j)
      image.col(j) = blocks_[static_cast<std::size_t>(j)] * s.col(j);
    image += image.transpose().eval();
    for (Index r = 0; r < m; ++r)
      restricted(r, c) = image(pairs[static_cast<std::size_t>(r)].first,
                               pairs[static_cast<std::size_t>(r)].second);
  }
  coupled_lu_.compute(restricted);
  if (!coupled_lu_.isInvertible())
    throw NumericalError(
        "coupled p^2 system is singular; fall back to the identity "
        "preconditioner");
}

Matrix Preconditioner::rhs_for(const Matrix& eta) const {
  const PointContext& ctx = *ctx_;
  switch (metric_) {
    case Metric::m1: {
      // (I + P_Y) eta W
      const Matrix ew = eta * ctx.gram();
      return ew + ctx.y() * ctx.left_solve_gram(ctx.y().transpose() * ew);
    }
    case Metric::m2:
      return 0.5 * eta * ctx.gram();
    case Metric::m3:
      return 0.5 * eta;
  }
  throw ConfigError("unknown metric");
}

HorizontalVector Preconditioner::apply(const HorizontalVector& eta) const {
  if (eta.metric != metric_)
    throw ConfigError("preconditioner built for metric " +
                      std::to_string(to_int(metric_)) +
                      " applied to a vector of metric " +
                      std::to_string(to_int(eta.metric)));
  const PointContext& ctx = *ctx_;
  if (eta.value.rows() != ctx.n() || eta.value.cols() != ctx.p())
    throw DimensionError("preconditioner argument has the wrong shape");
  const Index p = ctx.p();
  const Matrix& t = cache_->transform();

  const Matrix rhs = rhs_for(eta.value);
  const Matrix rhs_t = rhs * t;
  const Matrix tt_yta = t.transpose() * ctx.ay().transpose();

  Matrix u(ctx.n(), p);
  Matrix v(p, p);
  for (Index i = 0; i < p; ++i) {
    u.col(i) = cache_->saddle_solve(i, rhs_t.col(i));
    v.col(i) = tt_yta * u.col(i);
  }
  Matrix r = t.transpose() * (ctx.y().transpose() * rhs) * t - v - v.transpose();
  r = (0.5 * (r + r.transpose())).eval();

  const auto pairs = upper_pairs(p);
  Vector rvec(static_cast<Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k)
    rvec(static_cast<Index>(k)) = r(pairs[k].first, pairs[k].second);
  const Vector svec = coupled_lu_.solve(rvec);
  Matrix s_tilde(p, p);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    s_tilde(pairs[k].first, pairs[k].second) = svec(static_cast<Index>(k));
    s_tilde(pairs[k].second, pairs[k].first) = svec(static_cast<Index>(k));
  }

  Matrix z_tilde = u;
  for (Index i = 0; i < p; ++i)
    z_tilde.col(i) -= coupling_[static_cast<std::size_t>(i)] * s_tilde.col(i);

  // xi = Y S + Z with S = T S~ T^T, Z = Z~ T^T; drop the vertical part.
  const Matrix xi = ctx.y() * (t * s_tilde * t.transpose()) + z_tilde * t.transpose();
  HorizontalVector out;
  out.metric = metric_;
  out.value = project_horizontal(metric_, ctx, xi);
  if (!out.value.allFinite())
    throw NumericalError("preconditioner produced non-finite values");
  return out;
}

Matrix Preconditioner::inverse_apply(const Matrix& xi) const {
  const PointContext& ctx = *ctx_;
  const LyapunovProblem& problem = ctx.problem();
  const Matrix a_xi = problem.a() * xi;
  const Matrix m_xi = kind_ == PrecondKind::bart ? xi : Matrix(problem.m() * xi);
  // (A F M + M F A) Y with F = Y xi^T + xi Y^T, M possibly replaced by I.
  const Matrix lift = ctx.ay() * (my_.transpose() * xi).transpose() +
                      a_xi * ymy_ + my_ * (ctx.ay().transpose() * xi).transpose() +
                      m_xi * ctx.yay();
  switch (metric_) {
    case Metric::m1: {
      const Matrix lw = ctx.right_solve_gram(lift);
      return lw - 0.5 * ctx.y() * ctx.left_solve_gram(ctx.y().transpose() * lw);
    }
    case Metric::m2:
      return 2.0 * ctx.right_solve_gram(lift);
    case Metric::m3:
      return 2.0 * lift;
  }
  throw ConfigError("unknown metric");
}

Matrix Preconditioner::coupled_matrix() const {
  const Index p = ctx_->p();
  Matrix k = Matrix::Zero(p * p, p * p);
  for (Index i = 0; i < p; ++i)
    k.block(i * p, i * p, p, p) = blocks_[static_cast<std::size_t>(i)];
  // Perfect shuffle: (Pi vec X) = vec(X^T), column-major vec.
  Matrix shuffle = Matrix::Zero(p * p, p * p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) shuffle(i * p + j, j * p + i) = 1.0;
  return k + shuffle * k * shuffle;
}

HorizontalVector apply_preconditioner(Metric metric,
                                      const LyapunovProblem& problem,
                                      const FactorPoint& point,
                                      const HorizontalVector& eta) {
  const PointContext ctx(problem, point);
  return Preconditioner(metric, ctx, PrecondKind::proposed).apply(eta);
}

HorizontalVector apply_bart_preconditioner(Metric metric,
                                           const LyapunovProblem& problem,
                                           const FactorPoint& point,
                                           const HorizontalVector& eta) {
  const PointContext ctx(problem, point);
  return Preconditioner(metric, ctx, PrecondKind::bart).apply(eta);
}

Matrix assemble_precond_operator_dense(Metric metric,
                                       const LyapunovProblem& problem,
                                       const FactorPoint& point,
                                       PrecondKind kind) {
  if (problem.n() > 60)
    throw ConfigError("dense preconditioner assembly is limited to n <= 60");
  const PointContext ctx(problem, point);
  const Preconditioner precond(metric, ctx, kind);
  const auto basis = horizontal_basis(metric, ctx);
  Matrix op = assemble_operator(metric, ctx, basis, [&](const Matrix& x) {
    return precond.inverse_apply(x);
  });
  return op;
}

}  // namespace irrlyap
