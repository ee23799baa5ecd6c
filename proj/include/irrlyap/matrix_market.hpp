#pragma once

#include <string>

#include "irrlyap/problems.hpp"

namespace irrlyap::mm {

/// Reads a coordinate real matrix. `symmetric` banners are expanded to both
/// triangles; `general` files are returned as written.
SparseMatrix read_sparse(const std::string& path);

/// Reads an array (dense) or coordinate real matrix into dense storage.
Matrix read_dense(const std::string& path);

/// Writes the lower triangle with a `coordinate real symmetric` banner.
void write_symmetric(const std::string& path, const SparseMatrix& matrix);

/// Writes column-major values with an `array real general` banner.
void write_dense(const std::string& path, const Matrix& matrix);

}  // namespace irrlyap::mm
