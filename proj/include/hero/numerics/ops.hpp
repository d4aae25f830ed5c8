#pragma once

// Plain-value versions of the primitive operations recorded by Tape. Model
// forward passes are written once as templates over the value type, so the
// tape-free prediction path and the differentiable path share code.

#include <cmath>
#include <cstddef>

#include "hero/errors.hpp"
#include "hero/numerics/matrix.hpp"

namespace hero::ops {

inline constexpr double kLayerNormEps = 1e-10;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ArgumentError("matmul shape mismatch");
  return a * b;
}

inline Matrix add(const Matrix& a, const Matrix& b) { return a + b; }
inline Matrix sub(const Matrix& a, const Matrix& b) { return a - b; }
inline Matrix mul(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b); }
inline Matrix scale(const Matrix& a, double s) { return a * s; }

inline Matrix add_row(const Matrix& a, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ArgumentError("add_row shape mismatch");
  Matrix out = a;
  out.rowwise() += row.row(0);
  return out;
}

inline Matrix tanh(const Matrix& a) { return a.array().tanh().matrix(); }
inline Matrix sigmoid(const Matrix& a) { return (1.0 / (1.0 + (-a.array()).exp())).matrix(); }
inline Matrix relu(const Matrix& a) { return a.cwiseMax(0.0); }
inline Matrix exp(const Matrix& a) { return a.array().exp().matrix(); }

inline Matrix softmax_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double mx = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

inline Matrix layer_norm_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  const double n = static_cast<double>(a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double mean = a.row(r).sum() / n;
    const auto centered = a.row(r).array() - mean;
    const double var = centered.square().sum() / n;
    out.row(r) = (centered / std::sqrt(var + kLayerNormEps)).matrix();
  }
  return out;
}

inline Matrix transpose(const Matrix& a) { return a.transpose(); }

inline Matrix slice_rows(const Matrix& a, std::size_t first, std::size_t count) {
  return a.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
}

inline Matrix slice_cols(const Matrix& a, std::size_t first, std::size_t count) {
  return a.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
}

/// Number of rows produced by pooling `rows` rows with the given window; the
/// last window may be truncated.
inline std::size_t pooled_length(std::size_t rows, std::size_t window) {
  return (rows + window - 1) / window;
}

/// Non-overlapping average pooling along the row (token) axis.
inline Matrix avg_pool_rows(const Matrix& a, std::size_t window) {
  if (window == 0) throw ArgumentError("pooling window must be positive");
  const std::size_t rows = static_cast<std::size_t>(a.rows());
  const std::size_t out_rows = pooled_length(rows, window);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(out_rows), a.cols());
  for (std::size_t o = 0; o < out_rows; ++o) {
    const std::size_t begin = o * window;
    const std::size_t end = std::min(rows, begin + window);
    for (std::size_t r = begin; r < end; ++r) out.row(o) += a.row(r);
    out.row(o) /= static_cast<double>(end - begin);
  }
  return out;
}

inline Matrix flatten_row(const Matrix& a) {
  return Eigen::Map<const Matrix>(a.data(), 1, a.size());
}

inline Matrix sum(const Matrix& a) { return Matrix::Constant(1, 1, a.sum()); }

inline Matrix mse(const Matrix& a, const Matrix& b) {
  return Matrix::Constant(1, 1, (a - b).squaredNorm() / static_cast<double>(a.size()));
}

inline Matrix sse(const Matrix& a, const Matrix& b) {
  return Matrix::Constant(1, 1, (a - b).squaredNorm());
}

}  // namespace hero::ops
