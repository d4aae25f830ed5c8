#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hero/dataset/dataset.hpp"
#include "hero/errors.hpp"

namespace hero::data {

/// Per-feature physical limits (l_i, u_i) in normalized units, in model
/// feature order.
struct FeatureBounds {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;

  FeatureBounds() = default;
  FeatureBounds(std::vector<std::string> n, std::vector<double> lo, std::vector<double> hi)
      : names(std::move(n)), lower(std::move(lo)), upper(std::move(hi)) {
    if (names.size() != lower.size() || names.size() != upper.size())
      throw ArgumentError("bounds: names/lower/upper length mismatch");
    for (std::size_t i = 0; i < names.size(); ++i)
      if (!(lower[i] <= upper[i])) throw ArgumentError("bounds: lower exceeds upper for '" + names[i] + "'");
  }

  std::size_t size() const noexcept { return names.size(); }
};

using BoundsOverrides = std::map<std::string, std::pair<double, double>>;

/// Constraint ranges published for the PHM 2014 stack, in standardized units.
inline BoundsOverrides reference_constraint_ranges() {
  return {
      {"Utot", {-2.7427, 2.5039}},    {"TinH2", {-0.1266, 1.8589}},  {"TinAIR", {0.5131, 7.7111}},
      {"ToutH2", {-4.0251, 3.5622}},  {"TinWAT", {-13.6818, 9.8199}}, {"I", {-3.1135, 3.4389}},
      {"PoutAIR", {-2.3068, 2.6617}}, {"HrAIRFC", {-3.0550, 1.4828}}, {"ToutAIR", {-2.8681, -0.0476}},
  };
}

/// Observed per-feature (min, max), with optional per-feature overrides.
inline FeatureBounds derive_bounds(const TimeSeriesDataset& ds, const std::vector<std::string>& features,
                                   const BoundsOverrides& overrides = {}) {
  if (ds.stage() != Stage::kNormalized) throw ArgumentError("derive_bounds expects a normalized dataset");
  std::vector<double> lo, hi;
  for (const auto& f : features) {
    if (auto it = overrides.find(f); it != overrides.end()) {
      lo.push_back(it->second.first);
      hi.push_back(it->second.second);
      continue;
    }
    const auto col = ds.rows().col(static_cast<Eigen::Index>(ds.column(f)));
    lo.push_back(col.minCoeff());
    hi.push_back(col.maxCoeff());
  }
  return FeatureBounds(features, std::move(lo), std::move(hi));
}

}  // namespace hero::data
