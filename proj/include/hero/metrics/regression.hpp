#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "hero/errors.hpp"

namespace hero::metrics {

inline double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw ArgumentError("rmse: length mismatch");
  if (y_true.empty()) throw ArgumentError("rmse: empty sequences");
  double acc = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) acc += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  return std::sqrt(acc / static_cast<double>(y_true.size()));
}

// Thrown when y_true has no variance, where R^2 is not defined.
class UndefinedR2Error : public ArgumentError {
 public:
  UndefinedR2Error() : ArgumentError("r2: y_true has zero variance") {}
};

/// Coefficient of determination 1 - SS_res / SS_tot.
inline double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw ArgumentError("r2: length mismatch");
  if (y_true.size() < 2) throw ArgumentError("r2: needs at least two points");
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(y_true.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw UndefinedR2Error();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace hero::metrics
