#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hero/errors.hpp"

namespace hero::metrics {

/// Voltage-loss fault thresholds, as fractions of the initial voltage.
inline constexpr std::array<double, 5> kFaultThresholds{0.035, 0.040, 0.045, 0.050, 0.055};

struct RulEstimate {
  double hours = 0.0;      // time to threshold, or (series end - t0) when censored
  bool censored = false;   // no crossing inside the series
};

/// Time from t0 until the voltage first drops to v_initial * (1 - ft), with
/// linear interpolation between the two bracketing samples.
inline RulEstimate rul_from_forecast(std::span<const double> times, std::span<const double> voltage,
                                     double t0, double v_initial, double ft) {
  if (times.empty() || voltage.empty()) throw ArgumentError("rul: empty series");
  if (times.size() != voltage.size()) throw ArgumentError("rul: times/voltage length mismatch");
  if (!(ft > 0.0)) throw ArgumentError("rul: fault threshold must be positive");
  const double v_th = v_initial * (1.0 - ft);
  for (std::size_t i = 0; i < voltage.size(); ++i) {
    if (voltage[i] > v_th) continue;
    if (i == 0) return {std::max(0.0, times[0] - t0), false};
    const double frac = (voltage[i - 1] - v_th) / (voltage[i - 1] - voltage[i]);
    const double t_cross = times[i - 1] + frac * (times[i] - times[i - 1]);
    return {std::max(0.0, t_cross - t0), false};
  }
  return {times.back() - t0, true};
}

/// Signed %Er_FT; positive means an early forecast. Undefined (nullopt) when
/// either estimate is censored or the true RUL is zero.
inline std::optional<double> percent_error(const RulEstimate& rul_true, const RulEstimate& rul_pred) {
  if (rul_true.censored || rul_pred.censored || !(rul_true.hours > 0.0)) return std::nullopt;
  return (rul_true.hours - rul_pred.hours) / rul_true.hours * 100.0;
}

inline double percent_error(double rul_true, double rul_pred) {
  if (!(rul_true > 0.0)) throw ArgumentError("percent_error: rul_true must be positive");
  return (rul_true - rul_pred) / rul_true * 100.0;
}

/// A_FT: late forecasts (er <= 0) decay with divisor 5, early ones with 20.
inline double accuracy_score(double er) {
  if (!std::isfinite(er)) throw ArgumentError("accuracy_score: non-finite error");
  // 0.5^(x) written as exp2(-x) so the anchors come out exact.
  if (er <= 0.0) return std::exp2(er / 5.0);
  return std::exp2(-er / 20.0);
}

struct ThresholdAssessment {
  double ft = 0.0;
  RulEstimate rul_true;
  RulEstimate rul_pred;
  std::optional<double> percent_error;  // nullopt: undefined, scored as 0
  double a_ft = 0.0;
};

struct RulAssessment {
  std::vector<ThresholdAssessment> thresholds;
  double score_rul = 0.0;
};

/// Mean of A_FT over exactly the five standard thresholds.
inline double score_rul(std::span<const ThresholdAssessment> entries) {
  if (entries.size() != kFaultThresholds.size())
    throw ArgumentError("score_rul: expected exactly five thresholds");
  for (double ft : kFaultThresholds) {
    const bool present = std::any_of(entries.begin(), entries.end(),
                                     [ft](const ThresholdAssessment& e) { return std::abs(e.ft - ft) < 1e-12; });
    if (!present) throw ArgumentError("score_rul: missing fault threshold");
  }
  double acc = 0.0;
  for (const auto& e : entries) acc += e.a_ft;
  return acc / static_cast<double>(entries.size());
}

/// Scores a forecast trajectory against the actual one on the same time grid.
inline RulAssessment assess_rul(std::span<const double> times, std::span<const double> actual,
                                std::span<const double> forecast, double t0, double v_initial) {
  RulAssessment out;
  for (double ft : kFaultThresholds) {
    ThresholdAssessment e;
    e.ft = ft;
    e.rul_true = rul_from_forecast(times, actual, t0, v_initial, ft);
    e.rul_pred = rul_from_forecast(times, forecast, t0, v_initial, ft);
    e.percent_error = percent_error(e.rul_true, e.rul_pred);
    e.a_ft = e.percent_error ? accuracy_score(*e.percent_error) : 0.0;
    out.thresholds.push_back(e);
  }
  out.score_rul = score_rul(out.thresholds);
  return out;
}

}  // namespace hero::metrics
