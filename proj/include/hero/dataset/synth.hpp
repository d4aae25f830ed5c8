#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "hero/dataset/dataset.hpp"
#include "hero/errors.hpp"
#include "hero/metrics/rul.hpp"
#include "hero/numerics/random.hpp"

namespace hero::data {

struct FeatureMoments {
  double mean = 0.0;
  double std = 0.0;
};

/// Auxiliary-feature moments. The temperature, current, pressure and
/// hygrometry entries follow the raw PHM 2014 summary statistics; the rest are
/// plausible values for a 1 kW five-cell stack.
inline std::map<std::string, FeatureMoments> default_feature_moments() {
  return {
      {"I", {1267.2, 1.901}},     {"J", {0.70, 0.002}},      {"TinH2", {45.00, 1.429}},
      {"ToutH2", {53.701, 0.076}}, {"TinAIR", {38.672, 0.642}}, {"ToutAIR", {3.217, 0.042}},
      {"TinWAT", {70.069, 0.052}}, {"ToutWAT", {71.5, 0.05}},  {"PinH2", {1291.0, 2.0}},
      {"PoutH2", {1280.0, 2.0}},   {"PinAIR", {1300.0, 2.0}},  {"PoutAIR", {52.308, 0.210}},
      {"DinH2", {11.0, 0.1}},      {"DoutH2", {5.0, 0.1}},     {"DinAIR", {50.0, 0.5}},
      {"DoutAIR", {45.0, 0.5}},    {"DWAT", {2.0, 0.02}},      {"HrAIRFC", {51.265, 0.107}},
  };
}

/// Desk-scale stand-in for a PEMFC durability test.
struct SynthConfig {
  double duration_hours = 1020.0;
  double sample_period_hours = 0.1;
  double initial_voltage = 28.3;       // U0, stack volts
  double degradation_rate = 5.6e-5;    // fractional voltage loss per hour
  double ripple_amplitude = 0.05;      // volts
  double ripple_period_hours = 48.0;
  double noise_std = 0.08;             // volts, white
  double ar_coefficient = 0.9;         // AR(1) coefficient of auxiliary features
  std::map<std::string, FeatureMoments> features = default_feature_moments();
  std::uint64_t seed = 2014;

  void validate() const {
    if (!(duration_hours > 0.0) || !std::isfinite(duration_hours)) throw ArgumentError("synth: duration must be > 0");
    if (!(sample_period_hours > 0.0) || !std::isfinite(sample_period_hours))
      throw ArgumentError("synth: sample period must be > 0");
    for (double v : {initial_voltage, degradation_rate, ripple_amplitude, noise_std, ar_coefficient})
      if (!std::isfinite(v)) throw ArgumentError("synth: rates and amplitudes must be finite");
    if (!(ripple_period_hours > 0.0)) throw ArgumentError("synth: ripple period must be > 0");
    if (noise_std < 0.0) throw ArgumentError("synth: noise std must be >= 0");
    if (!(std::abs(ar_coefficient) < 1.0)) throw ArgumentError("synth: AR coefficient must lie in (-1, 1)");
    for (const auto& [name, m] : features)
      if (!std::isfinite(m.mean) || !(m.std >= 0.0)) throw ArgumentError("synth: bad moments for " + name);
  }
};

struct SynthResult {
  TimeSeriesDataset dataset;                   // raw stage
  std::vector<double> clean_utot;              // noise-free stack voltage per row
  std::array<metrics::RulEstimate, 5> rul_true;  // per fault threshold, from t = 0
};

/// Noise-free stack voltage U0 (1 - rate t) + ripple.
inline double synth_clean_voltage(const SynthConfig& cfg, double t) {
  return cfg.initial_voltage * (1.0 - cfg.degradation_rate * t) +
         cfg.ripple_amplitude * std::sin(2.0 * std::numbers::pi * t / cfg.ripple_period_hours);
}

inline SynthResult synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const Schema schema = pemfc_schema();
  const auto n = static_cast<std::size_t>(std::floor(cfg.duration_hours / cfg.sample_period_hours + 1e-9)) + 1;
  RandomStream rng(cfg.seed, streams::kSynth);

  Matrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(schema.size()));
  std::vector<double> clean(n);
  const auto utot = static_cast<Eigen::Index>(column_index(schema, kTargetColumn));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * cfg.sample_period_hours;
    const auto r = static_cast<Eigen::Index>(i);
    rows(r, 0) = t;
    clean[i] = synth_clean_voltage(cfg, t);
    rows(r, utot) = clean[i] + cfg.noise_std * rng.normal();
  }

  const double innovation = std::sqrt(1.0 - cfg.ar_coefficient * cfg.ar_coefficient);
  for (std::size_t c = 1; c < schema.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    const std::string& name = schema[c].name;
    if (name == kTargetColumn) continue;
    if (name.size() == 2 && name[0] == 'U') {
      // Cell voltages: even share of the stack voltage plus cell-level noise.
      for (Eigen::Index r = 0; r < rows.rows(); ++r)
        rows(r, col) = rows(r, utot) / 5.0 + 0.2 * cfg.noise_std * rng.normal();
      continue;
    }
    const auto it = cfg.features.find(name);
    const FeatureMoments m = it == cfg.features.end() ? FeatureMoments{0.0, 0.0} : it->second;
    double e = m.std * rng.normal();  // stationary start
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      if (r > 0) e = cfg.ar_coefficient * e + innovation * m.std * rng.normal();
      rows(r, col) = m.mean + e;
    }
  }

  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = rows(static_cast<Eigen::Index>(i), 0);
  std::array<metrics::RulEstimate, 5> rul{};
  for (std::size_t k = 0; k < metrics::kFaultThresholds.size(); ++k)
    rul[k] = metrics::rul_from_forecast(times, clean, 0.0, clean.front(), metrics::kFaultThresholds[k]);

  return SynthResult{TimeSeriesDataset(schema, std::move(rows), Stage::kRaw), std::move(clean), rul};
}

}  // namespace hero::data
