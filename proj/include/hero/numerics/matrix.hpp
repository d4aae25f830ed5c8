#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hero/errors.hpp"

namespace hero {

// Dense row-major matrix. Row-major so that a features x T window flattens to
// the same order as the JSON/CSV exports.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = std::vector<double>;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline Matrix from_rows(std::size_t rows, std::size_t cols, std::span<const double> data) {
  if (data.size() != rows * cols) throw ArgumentError("matrix data length does not match rows*cols");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

inline Vector flatten(const Matrix& m) { return Vector(m.data(), m.data() + m.size()); }

inline Matrix as_row(std::span<const double> v) {
  return from_rows(1, v.size(), v);
}

inline Matrix reshape(std::span<const double> v, std::size_t rows, std::size_t cols) {
  return from_rows(rows, cols, v);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace hero
