#include "irrlyap/problems.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "irrlyap/errors.hpp"
#include "irrlyap/matrix_market.hpp"
#include "irrlyap/rng.hpp"

namespace irrlyap {

namespace {

bool exactly_symmetric(const SparseMatrix& m) {
  SparseMatrix t = m.transpose();
  SparseMatrix diff = m - t;
  diff.prune(0.0, 0.0);
  return diff.nonZeros() == 0;
}

void check_positive_definite(const SparseMatrix& m) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(m);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("matrix is not positive definite (LDL^T failed)");
  if ((ldlt.vectorD().array() <= 0.0).any())
    throw NumericalError("matrix is not positive definite (non-positive pivot)");
}

}  // namespace

SpdSparseMatrix::SpdSparseMatrix(SparseMatrix matrix)
    : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols())
    throw DimensionError("SPD matrix must be square, got " +
                         std::to_string(matrix_.rows()) + "x" +
                         std::to_string(matrix_.cols()));
  if (matrix_.rows() == 0) throw DimensionError("SPD matrix must be non-empty");
  matrix_.makeCompressed();
  if (!exactly_symmetric(matrix_))
    throw NumericalError("matrix is not symmetric");
  check_positive_definite(matrix_);
}

SpdSparseMatrix::SpdSparseMatrix(SparseMatrix matrix, bool is_identity)
    : matrix_(std::move(matrix)), is_identity_(is_identity) {
  matrix_.makeCompressed();
}

SpdSparseMatrix SpdSparseMatrix::identity(Index n) {
  if (n <= 0) throw DimensionError("identity dimension must be positive");
  SparseMatrix eye(n, n);
  eye.setIdentity();
  return SpdSparseMatrix(std::move(eye), true);
}

LyapunovProblem::LyapunovProblem(SpdSparseMatrix a, SpdSparseMatrix m, Matrix b)
    : a_(std::move(a)), m_(std::move(m)), b_(std::move(b)) {
  if (m_.n() != a_.n())
    throw DimensionError("M has dimension " + std::to_string(m_.n()) +
                         " but A has dimension " + std::to_string(a_.n()));
  if (b_.rows() != a_.n())
    throw DimensionError("B has " + std::to_string(b_.rows()) +
                         " rows but A has dimension " + std::to_string(a_.n()));
  if (b_.cols() < 1) throw DimensionError("B must have at least one column");
  rhs_norm_ = (b_.transpose() * b_).norm();
}

LyapunovProblem LyapunovProblem::from_dense_rhs(SpdSparseMatrix a,
                                                SpdSparseMatrix m,
                                                const Matrix& c) {
  if (c.rows() != c.cols() || c.rows() != a.n())
    throw DimensionError("C must be " + std::to_string(a.n()) + "x" +
                         std::to_string(a.n()));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (c + c.transpose()));
  const Vector& lambda = eig.eigenvalues();
  const double lmax = std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
  std::vector<Index> keep;
  for (Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > 1e-12 * lmax) keep.push_back(i);
  Matrix b(c.rows(), std::max<Index>(1, static_cast<Index>(keep.size())));
  b.setZero();
  for (std::size_t j = 0; j < keep.size(); ++j)
    b.col(static_cast<Index>(j)) =
        eig.eigenvectors().col(keep[j]) * std::sqrt(lambda(keep[j]));
  return LyapunovProblem(std::move(a), std::move(m), std::move(b));
}

LyapunovProblem LyapunovProblem::with_identity_mass() const {
  return LyapunovProblem(a_, SpdSparseMatrix::identity(n()), b_);
}

FactorPoint::FactorPoint(Matrix y) : y_(std::move(y)) {
  if (y_.cols() < 1 || y_.rows() < y_.cols())
    throw DimensionError("factor must be n x p with 1 <= p <= n, got " +
                         std::to_string(y_.rows()) + "x" +
                         std::to_string(y_.cols()));
  if (!y_.allFinite()) throw NumericalError("factor has non-finite entries");
  Eigen::LLT<Matrix> llt(y_.transpose() * y_);
  if (llt.info() != Eigen::Success)
    throw NumericalError("factor is rank deficient (Y^T Y not positive definite)");
}

double residual_fro(const LyapunovProblem& problem, const Matrix& y) {
  if (y.rows() != problem.n())
    throw DimensionError("Y has " + std::to_string(y.rows()) +
                         " rows but the problem has dimension " +
                         std::to_string(problem.n()));
  const Index n = problem.n();
  const Index p = y.cols();
  const Index s = problem.rhs_rank();
  // R = [U V B] J [U V B]^T with J = [[0 I 0]; [I 0 0]; [0 0 -I]].
  // A thin QR of the stacked factor reduces ||R||_F to a small core.
  Matrix stacked(n, 2 * p + s);
  stacked << problem.a() * y, problem.m() * y, problem.b();
  Eigen::HouseholderQR<Matrix> qr(stacked);
  const Index k = std::min(n, stacked.cols());
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix rj(k, stacked.cols());
  rj.leftCols(p) = r.middleCols(p, p);
  rj.middleCols(p, p) = r.leftCols(p);
  rj.rightCols(s) = -r.rightCols(s);
  return (rj * r.transpose()).norm();
}

double residual_fro(const LyapunovProblem& problem, const FactorPoint& point) {
  return residual_fro(problem, point.y());
}

double relative_residual(const LyapunovProblem& problem, const Matrix& y) {
  if (problem.rhs_norm() == 0.0) throw ConfigError("zero right-hand side");
  return residual_fro(problem, y) / problem.rhs_norm();
}

double relative_residual(const LyapunovProblem& problem,
                         const FactorPoint& point) {
  return relative_residual(problem, point.y());
}

Matrix dense_oracle_solve(const LyapunovProblem& problem,
                          const DenseOracleOptions& options) {
  const Index n = problem.n();
  if (n > options.dense_limit)
    throw ConfigError("dimension " + std::to_string(n) +
                      " exceeds the dense limit " +
                      std::to_string(options.dense_limit));
  const Matrix a = problem.a().dense();
  const Matrix m = problem.m().dense();
  // A V = M V diag(lambda), V^T M V = I.
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(
      a, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (eig.info() != Eigen::Success)
    throw NumericalError("generalized eigendecomposition failed (M not SPD?)");
  const Matrix& v = eig.eigenvectors();
  const Vector& lambda = eig.eigenvalues();
  const Matrix vb = v.transpose() * problem.b();
  Matrix core = vb * vb.transpose();
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) core(i, j) /= lambda(i) + lambda(j);
  Matrix x = v * core * v.transpose();
  return 0.5 * (x + x.transpose());
}

LyapunovProblem gen_poisson(Index n, std::uint64_t seed, MassKind mass) {
  if (n < 2) throw ConfigError("poisson generator needs n >= 2");
  Rng rng(seed);
  const double h = 1.0 / static_cast<double>(n + 1);
  const double scale = 1.0 / (h * h);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(3 * n));
  for (Index i = 0; i < n; ++i) {
    entries.emplace_back(i, i, 2.0 * scale);
    if (i + 1 < n) {
      entries.emplace_back(i, i + 1, -scale);
      entries.emplace_back(i + 1, i, -scale);
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());

  // Draw the mass diagonal unconditionally so both mass kinds share c.
  Vector diag(n);
  for (Index i = 0; i + 1 < n; ++i) diag(i) = rng.uniform() + 0.1;
  diag(n - 1) = 0.1;
  Matrix c = rng.normal_matrix(n, 1);

  if (mass == MassKind::identity)
    return LyapunovProblem(SpdSparseMatrix(std::move(a)),
                           SpdSparseMatrix::identity(n), std::move(c));

  SparseMatrix m(n, n);
  m.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Index i = 0; i < n; ++i) m.insert(i, i) = diag(i);
  return LyapunovProblem(SpdSparseMatrix(std::move(a)),
                         SpdSparseMatrix(std::move(m)), std::move(c));
}

LyapunovProblem gen_random_dense(Index n, Index s, std::uint64_t seed) {
  if (n < 1 || s < 1) throw ConfigError("random problem needs n, s >= 1");
  Rng rng(seed);
  auto spd = [&] {
    const Matrix g = rng.normal_matrix(n, n);
    Matrix dense = g * g.transpose() / static_cast<double>(n) +
                   0.5 * Matrix::Identity(n, n);
    dense = (0.5 * (dense + dense.transpose())).eval();
    return SpdSparseMatrix(dense.sparseView());
  };
  SpdSparseMatrix a = spd();
  SpdSparseMatrix m = spd();
  Matrix b = rng.normal_matrix(n, s);
  return LyapunovProblem(std::move(a), std::move(m), std::move(b));
}

LyapunovProblem load_matrix_market(const std::string& path_a,
                                   const std::string& path_m,
                                   const std::string& path_b) {
  auto load_spd = [](const std::string& path) {
    SparseMatrix raw = mm::read_sparse(path);
    if (raw.rows() != raw.cols())
      throw ParseError(path, 0, "matrix is not square");
    if (!exactly_symmetric(raw))
      throw ParseError(path, 0, "matrix is not symmetric");
    try {
      return SpdSparseMatrix(std::move(raw));
    } catch (const NumericalError& e) {
      throw ParseError(path, 0, e.what());
    }
  };
  SpdSparseMatrix a = load_spd(path_a);
  SpdSparseMatrix m = load_spd(path_m);
  Matrix b = mm::read_dense(path_b);
  if (m.n() != a.n())
    throw DimensionError(path_m + ": M has dimension " + std::to_string(m.n()) +
                         " but A has dimension " + std::to_string(a.n()));
  if (b.rows() != a.n())
    throw DimensionError(path_b + ": B has " + std::to_string(b.rows()) +
                         " rows but A has dimension " + std::to_string(a.n()));
  return LyapunovProblem(std::move(a), std::move(m), std::move(b));
}

LyapunovProblem load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open manifest");
  std::map<std::string, std::string> keys;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path, lineno, "expected key=value");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r");
      const auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    keys[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const char* key) {
    auto it = keys.find(key);
    if (it == keys.end())
      throw ParseError(path, lineno, std::string("missing key '") + key + "'");
    std::filesystem::path p(it->second);
    return (p.is_absolute() ? p : base / p).string();
  };
  return load_matrix_market(resolve("a"), resolve("m"), resolve("b"));
}

std::string write_problem(const LyapunovProblem& problem,
                          const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const fs::path dir(directory);
  mm::write_symmetric((dir / "A.mtx").string(), problem.a().matrix());
  mm::write_symmetric((dir / "M.mtx").string(), problem.m().matrix());
  mm::write_dense((dir / "B.mtx").string(), problem.b());
  const fs::path manifest = dir / "problem.manifest";
  std::ofstream out(manifest);
  out << "a=A.mtx\nm=M.mtx\nb=B.mtx\n";
  if (!out) throw Error("cannot write " + manifest.string());
  return manifest.string();
}

}  // namespace irrlyap
