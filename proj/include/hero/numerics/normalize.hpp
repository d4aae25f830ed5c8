#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hero/errors.hpp"

namespace hero {

/// Affine map v -> (v - lo) / (hi - lo); degenerate spans map to 0.5 so a
/// constant column stays neutral when multiplied into a ranking score.
struct MinMaxScale {
  double lo = 0.0;
  double hi = 0.0;

  static MinMaxScale fit(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("min-max normalization of an empty sequence");
    MinMaxScale s{values.front(), values.front()};
    for (double v : values) {
      if (!std::isfinite(v)) throw DataError("min-max normalization of a non-finite value");
      s.lo = std::min(s.lo, v);
      s.hi = std::max(s.hi, v);
    }
    return s;
  }

  bool degenerate() const noexcept { return !(hi > lo); }

  double operator()(double v) const noexcept { return degenerate() ? 0.5 : (v - lo) / (hi - lo); }
};

inline std::vector<double> minmax_normalize(std::span<const double> values) {
  const MinMaxScale scale = MinMaxScale::fit(values);
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), scale);
  return out;
}

}  // namespace hero
