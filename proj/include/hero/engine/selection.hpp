#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "hero/dataset/windows.hpp"
#include "hero/errors.hpp"
#include "hero/forecaster/forecaster.hpp"
#include "hero/numerics/normalize.hpp"

namespace hero::engine {

struct LriResult {
  double value = 0.0;
  model::GradientMethod method = model::GradientMethod::kExact;
  std::size_t evaluations = 0;  // predict calls consumed
};

/// Local robustness indicator: infinity norm of the squared-loss input
/// gradient at the sample.
inline LriResult compute_lri(const model::Forecaster& m, const data::WindowSample& s,
                             model::GradientMethod method = model::GradientMethod::kExact) {
  if (method == model::GradientMethod::kExact && !m.capabilities().exact_input_gradient)
    throw ArgumentError(std::string(m.identity()) + " does not expose exact input gradients");
  const auto g = model::input_gradient(m, s.x, s.y, method == model::GradientMethod::kFiniteDifference);
  return {g.gradient.cwiseAbs().maxCoeff(), g.method, g.evaluations};
}

struct Candidate {
  double lri = 0.0;
  double density = 0.0;
};

struct Ranked {
  std::size_t index = 0;  // position in the candidate pool
  double lri = 0.0;
  double density = 0.0;
  double score = 0.0;     // Nor(lri) * Nor(density)
  std::size_t rank = 0;   // 0 = best
};

/// Scores candidates by the product of min-max-normalized LRI and density and
/// returns the top k. Ties go to the higher raw LRI, then the lower index.
inline std::vector<Ranked> rank_and_select(std::span<const Candidate> pool, std::size_t k) {
  if (k > pool.size()) throw ArgumentError("k exceeds the candidate count");
  std::vector<double> lri, density;
  for (const auto& c : pool) {
    if (!(c.lri >= 0.0) || !(c.density >= 0.0) || !std::isfinite(c.lri) || !std::isfinite(c.density))
      throw ArgumentError("LRI and density must be finite and non-negative");
    lri.push_back(c.lri);
    density.push_back(c.density);
  }
  if (pool.empty()) return {};
  const auto nl = minmax_normalize(lri);
  const auto nd = minmax_normalize(density);
  std::vector<Ranked> all(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) all[i] = {i, lri[i], density[i], nl[i] * nd[i], 0};
  std::stable_sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.lri != b.lri) return a.lri > b.lri;
    return a.index < b.index;
  });
  all.resize(k);
  for (std::size_t r = 0; r < all.size(); ++r) all[r].rank = r;
  return all;
}

struct TestSeed {
  data::WindowSample sample;
  Ranked ranking;
};

}  // namespace hero::engine
