#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hero/errors.hpp"

namespace hero {

inline constexpr double kDefaultFdStep = 1e-3;

struct FdGradient {
  std::vector<double> gradient;
  std::size_t evaluations = 0;
};

/// Central-difference gradient, g_i = (f(x + h e_i) - f(x - h e_i)) / 2h.
/// Costs exactly 2 * dim evaluations. Probe 2i is +h on coordinate i and
/// probe 2i+1 is -h.
inline FdGradient finite_diff_gradient(const std::function<double(std::span<const double>)>& fn,
                                       std::span<const double> x, double h = kDefaultFdStep) {
  if (!(h > 0.0)) throw ArgumentError("finite-difference step must be positive");
  FdGradient out;
  out.gradient.resize(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = fn(probe);
    if (!std::isfinite(up)) throw EvaluationError(2 * i, "non-finite function value");
    probe[i] = orig - h;
    const double down = fn(probe);
    if (!std::isfinite(down)) throw EvaluationError(2 * i + 1, "non-finite function value");
    probe[i] = orig;
    out.gradient[i] = (up - down) / (2.0 * h);
    out.evaluations += 2;
  }
  return out;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps near-zero
/// entries from dominating the ratio.
inline double max_relative_error(std::span<const double> a, std::span<const double> b,
                                 double floor = 1e-6) {
  if (a.size() != b.size()) throw ArgumentError("relative error of sequences with different lengths");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace hero
