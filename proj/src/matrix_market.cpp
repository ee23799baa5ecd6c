#include "irrlyap/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "irrlyap/errors.hpp"

namespace irrlyap::mm {

namespace {

struct Header {
  bool coordinate = true;
  bool symmetric = false;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

Header read_banner(std::istream& in, const std::string& path, long& lineno) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
  lineno = 1;
  std::istringstream ss(line);
  std::string tag, object, format, field, symmetry;
  ss >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket")
    throw ParseError(path, lineno, "missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix")
    throw ParseError(path, lineno, "unsupported object '" + object + "'");
  if (format != "coordinate" && format != "array")
    throw ParseError(path, lineno, "unsupported format '" + format + "'");
  if (field != "real" && field != "integer" && field != "double")
    throw ParseError(path, lineno, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(path, lineno, "unsupported symmetry '" + symmetry + "'");
  return Header{format == "coordinate", symmetry == "symmetric"};
}

// Next non-comment, non-blank line.
bool next_data_line(std::istream& in, std::string& line, long& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace

SparseMatrix read_sparse(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  long lineno = 0;
  const Header header = read_banner(in, path, lineno);
  if (!header.coordinate)
    throw ParseError(path, lineno, "expected coordinate format for a sparse matrix");

  std::string line;
  if (!next_data_line(in, line, lineno))
    throw ParseError(path, lineno, "missing size line");
  long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
      throw ParseError(path, lineno, "malformed size line");
  }
  if (header.symmetric && rows != cols)
    throw ParseError(path, lineno, "symmetric matrix must be square");

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(header.symmetric ? 2 * nnz : nnz));
  for (long k = 0; k < nnz; ++k) {
    if (!next_data_line(in, line, lineno))
      throw ParseError(path, lineno, "expected " + std::to_string(nnz) +
                                         " entries, found " + std::to_string(k));
    std::istringstream ss(line);
    long i = 0, j = 0;
    double v = 0.0;
    if (!(ss >> i >> j >> v))
      throw ParseError(path, lineno, "malformed entry");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(path, lineno, "index out of range");
    if (header.symmetric && j > i)
      throw ParseError(path, lineno,
                       "symmetric storage expects the lower triangle only");
    entries.emplace_back(i - 1, j - 1, v);
    if (header.symmetric && i != j) entries.emplace_back(j - 1, i - 1, v);
  }
  SparseMatrix out(rows, cols);
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

Matrix read_dense(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  long lineno = 0;
  const Header header = read_banner(in, path, lineno);
  if (header.coordinate) {
    in.close();
    return Matrix(read_sparse(path));
  }

  std::string line;
  if (!next_data_line(in, line, lineno))
    throw ParseError(path, lineno, "missing size line");
  long rows = 0, cols = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols) || rows <= 0 || cols <= 0)
      throw ParseError(path, lineno, "malformed size line");
  }
  if (header.symmetric && rows != cols)
    throw ParseError(path, lineno, "symmetric matrix must be square");

  Matrix out = Matrix::Zero(rows, cols);
  // Column-major; symmetric arrays store the lower triangle only.
  for (long j = 0; j < cols; ++j) {
    for (long i = header.symmetric ? j : 0; i < rows; ++i) {
      if (!next_data_line(in, line, lineno))
        throw ParseError(path, lineno, "unexpected end of array data");
      std::istringstream ss(line);
      double v = 0.0;
      if (!(ss >> v)) throw ParseError(path, lineno, "malformed value");
      out(i, j) = v;
      if (header.symmetric) out(j, i) = v;
    }
  }
  return out;
}

void write_symmetric(const std::string& path, const SparseMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  long nnz = 0;
  for (Index k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
      if (it.row() >= it.col()) ++nnz;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << nnz << '\n';
  out << std::setprecision(17);
  for (Index k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
      if (it.row() >= it.col())
        out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

void write_dense(const std::string& path, const Matrix& matrix) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "%%MatrixMarket matrix array real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << '\n';
  out << std::setprecision(17);
  for (Index j = 0; j < matrix.cols(); ++j)
    for (Index i = 0; i < matrix.rows(); ++i) out << matrix(i, j) << '\n';
}

}  // namespace irrlyap::mm
