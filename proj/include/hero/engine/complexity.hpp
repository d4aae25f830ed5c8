#pragma once

#include <cstdint>
#include <span>

#include <json.hpp>

#include "hero/engine/attack.hpp"
#include "hero/errors.hpp"

namespace hero::engine {

/// Closed-form operation counts for G generations, population n and m
/// coordinates per individual.
inline std::uint64_t aro_expected_ops(std::uint64_t G, std::uint64_t n, std::uint64_t m) { return G * n * m + G * n + n; }
inline std::uint64_t ga_expected_ops(std::uint64_t G, std::uint64_t n, std::uint64_t m) {
  return 2 * G * n * m + 2 * G * n + n;
}

struct ComplexityReport {
  Counters aro;  // summed over runs
  Counters ga;
  std::uint64_t aro_runs = 0;
  std::uint64_t ga_runs = 0;

  /// GA / ARO ratio of position-update coordinate touches.
  double update_ratio() const { return static_cast<double>(ga.updates()) / static_cast<double>(aro.updates()); }
};

inline Counters& operator+=(Counters& a, const Counters& b) {
  a.initialization += b.initialization;
  a.fitness += b.fitness;
  a.selection += b.selection;
  a.exploration += b.exploration;
  a.exploitation += b.exploitation;
  a.crossover += b.crossover;
  a.mutation += b.mutation;
  a.model_evaluations += b.model_evaluations;
  return a;
}

inline ComplexityReport complexity_report(std::span<const AttackResult> aro, std::span<const AttackResult> ga) {
  if (aro.empty() || ga.empty()) throw ArgumentError("complexity report needs at least one run per algorithm");
  ComplexityReport r;
  for (const auto& a : aro) r.aro += a.counters;
  for (const auto& g : ga) r.ga += g.counters;
  r.aro_runs = aro.size();
  r.ga_runs = ga.size();
  return r;
}

inline nlohmann::json to_json(const Counters& c) {
  return {{"initialization", c.initialization}, {"fitness", c.fitness},         {"selection", c.selection},
          {"exploration", c.exploration},       {"exploitation", c.exploitation}, {"crossover", c.crossover},
          {"mutation", c.mutation},             {"updates", c.updates()},        {"total", c.total()},
          {"model_evaluations", c.model_evaluations}};
}

inline nlohmann::json to_json(const ComplexityReport& r) {
  return {{"aro", to_json(r.aro)},
          {"ga", to_json(r.ga)},
          {"aro_runs", r.aro_runs},
          {"ga_runs", r.ga_runs},
          {"update_ratio_ga_over_aro", r.update_ratio()}};
}

}  // namespace hero::engine
