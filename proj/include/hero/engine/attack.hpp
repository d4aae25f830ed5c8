#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hero/dataset/bounds.hpp"
#include "hero/errors.hpp"
#include "hero/forecaster/forecaster.hpp"
#include "hero/numerics/matrix.hpp"
#include "hero/numerics/normalize.hpp"
#include "hero/numerics/random.hpp"

namespace hero::engine {

struct AttackConfig {
  double epsilon = 0.03;        // per-entry perturbation limit, normalized units
  double alpha = 0.8;           // weight of the prediction term
  std::size_t generations = 100;
  std::size_t population = 300;
  double balance = 1.0;         // energy threshold between foraging and hiding
  bool round_detour_noise = true;
  bool restart_worst = false;   // re-seed the worst 10% every 25 generations
  // GA only.
  double crossover_rate = 0.9;
  double mutation_rate = -1.0;  // per coordinate; negative means 1/m

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ArgumentError("epsilon must be > 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in [0, 1]");
    if (population < 2) throw ArgumentError("population must be >= 2");
    if (!std::isfinite(balance)) throw ArgumentError("balance must be finite");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ArgumentError("crossover rate must lie in [0, 1]");
    if (!(mutation_rate <= 1.0)) throw ArgumentError("mutation rate must be <= 1");
  }
};

/// Per-entry limits of the feasible set: the epsilon box around the seed
/// intersected (by clamping order) with the physical bounds.
struct Feasible {
  Matrix seed;
  Matrix ball_lo, ball_hi;  // seed -/+ epsilon
  std::vector<double> lower, upper;  // per feature row

  Feasible(const Matrix& x_seed, const data::FeatureBounds& bounds, double epsilon)
      : seed(x_seed), ball_lo(x_seed.array() - epsilon), ball_hi(x_seed.array() + epsilon),
        lower(bounds.lower), upper(bounds.upper) {
    if (bounds.size() != static_cast<std::size_t>(x_seed.rows()))
      throw ArgumentError("bounds cover " + std::to_string(bounds.size()) + " features, window has " +
                          std::to_string(x_seed.rows()));
  }

  /// epsilon-ball first, then the physical clamp.
  void clamp(Matrix& x) const {
    x = x.cwiseMax(ball_lo).cwiseMin(ball_hi);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      x.row(r) = x.row(r).cwiseMax(lower[static_cast<std::size_t>(r)]).cwiseMin(upper[static_cast<std::size_t>(r)]);
  }

  /// True when x is a fixed point of the double clamp, i.e. it satisfies both
  /// constraints exactly.
  bool contains(const Matrix& x) const {
    Matrix y = x;
    clamp(y);
    return y == x;
  }
};

/// The function C: per-entry clamp of each feature row into [l_i, u_i].
inline Matrix clamp_physical(const Matrix& x, const data::FeatureBounds& bounds) {
  if (bounds.size() != static_cast<std::size_t>(x.rows())) throw ArgumentError("bounds do not cover every feature");
  Matrix out = x;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    out.row(r) = out.row(r).cwiseMax(bounds.lower[static_cast<std::size_t>(r)])
                     .cwiseMin(bounds.upper[static_cast<std::size_t>(r)]);
  return out;
}

struct RawLoss {
  double pred = 0.0;  // sum over the horizon of squared prediction error
  double sim = 0.0;   // mean squared perturbation over all entries
};

inline RawLoss raw_loss(const model::Forecaster& m, const Matrix& x, const Matrix& x_seed,
                        std::span<const double> y_seed) {
  const auto y = m.predict(x);
  RawLoss l;
  for (std::size_t t = 0; t < y.size(); ++t) l.pred += (y[t] - y_seed[t]) * (y[t] - y_seed[t]);
  l.sim = (x - x_seed).squaredNorm() / static_cast<double>(x.size());
  if (!std::isfinite(l.pred)) throw NumericError("model produced a non-finite prediction during the attack");
  return l;
}

/// Min-max reference for the two loss terms. Attacks fit it once on the
/// initial population and keep it, so fitness values stay comparable across
/// generations.
struct FitnessFrame {
  MinMaxScale pred, sim;

  static FitnessFrame fit(std::span<const RawLoss> population) {
    std::vector<double> p, s;
    for (const auto& l : population) {
      p.push_back(l.pred);
      s.push_back(l.sim);
    }
    return {MinMaxScale::fit(p), MinMaxScale::fit(s)};
  }

  /// L = alpha * Norm(L_pred) - (1 - alpha) * Norm(L_sim); higher is fitter.
  double operator()(const RawLoss& l, double alpha) const {
    return alpha * pred(l.pred) - (1.0 - alpha) * sim(l.sim);
  }
};

/// Fitness of every member against the population's own min-max frame.
inline std::vector<double> population_fitness(std::span<const RawLoss> population, double alpha) {
  const auto frame = FitnessFrame::fit(population);
  std::vector<double> out;
  for (const auto& l : population) out.push_back(frame(l, alpha));
  return out;
}

/// Operation counters audited against the closed-form complexity.
struct Counters {
  std::uint64_t initialization = 0;  // one per initial individual
  std::uint64_t fitness = 0;         // loop evaluations
  std::uint64_t selection = 0;       // GA only, one per offspring
  std::uint64_t exploration = 0;     // ARO detour coordinate touches
  std::uint64_t exploitation = 0;    // ARO hiding coordinate touches
  std::uint64_t crossover = 0;       // GA coordinate touches
  std::uint64_t mutation = 0;        // GA coordinate touches
  std::uint64_t model_evaluations = 0;

  std::uint64_t updates() const noexcept { return exploration + exploitation + crossover + mutation; }
  std::uint64_t total() const noexcept { return initialization + fitness + selection + updates(); }
};

struct TraceRecord {
  std::size_t gen = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double best_l_pred = 0.0;
  double best_l_sim = 0.0;
  std::uint64_t eval_count = 0;  // cumulative model evaluations
};

inline nlohmann::json to_json(const TraceRecord& r) {
  return {{"gen", r.gen},
          {"best_fitness", r.best_fitness},
          {"mean_fitness", r.mean_fitness},
          {"best_L_pred", r.best_l_pred},
          {"best_L_sim", r.best_l_sim},
          {"eval_count", r.eval_count}};
}

inline void write_trace_jsonl(std::ostream& os, std::span<const TraceRecord> trace) {
  for (const auto& r : trace) os << to_json(r).dump() << '\n';
}

struct AdversarialExample {
  Matrix x;  // features x T
  double l_pred = 0.0;
  double l_sim = 0.0;
  double fitness = 0.0;
  std::vector<double> max_abs_delta;  // per feature row
  std::size_t generation = 0;         // generation in which it was found
  std::uint64_t evaluations = 0;      // model evaluations consumed by the run
};

struct AttackResult {
  AdversarialExample best;
  std::vector<TraceRecord> trace;  // generation 0 is the initial population
  Counters counters;
};

/// Called after every generation (0 = initial population) with the current
/// population, in index order.
using GenerationObserver = std::function<void(std::size_t gen, std::span<const Matrix> population)>;

/// Population bookkeeping shared by the optimizers.
struct Population {
  std::vector<Matrix> x;
  std::vector<RawLoss> raw;
  std::vector<double> fitness;
  std::vector<std::size_t> found;  // generation each member was created

  std::size_t best() const {
    std::size_t b = 0;
    for (std::size_t i = 1; i < fitness.size(); ++i)
      if (fitness[i] > fitness[b]) b = i;
    return b;
  }
};

/// Uniform draw in the epsilon box, then both clamps.
inline Population initial_population(const model::Forecaster& m, const Feasible& feas, std::span<const double> y_seed,
                                     const AttackConfig& cfg, RandomStream& rng, Counters& counters) {
  Population pop;
  for (std::size_t i = 0; i < cfg.population; ++i) {
    Matrix x(feas.seed.rows(), feas.seed.cols());
    for (Eigen::Index k = 0; k < x.size(); ++k)
      x.data()[k] = feas.seed.data()[k] + rng.uniform(-cfg.epsilon, cfg.epsilon);
    feas.clamp(x);
    pop.raw.push_back(raw_loss(m, x, feas.seed, y_seed));
    pop.x.push_back(std::move(x));
    pop.found.push_back(0);
    ++counters.initialization;
    ++counters.model_evaluations;
  }
  return pop;
}

inline TraceRecord trace_record(std::size_t gen, const Population& pop, const Counters& c) {
  const std::size_t b = pop.best();
  double mean = 0.0;
  for (double f : pop.fitness) mean += f;
  return {gen, pop.fitness[b], mean / static_cast<double>(pop.fitness.size()), pop.raw[b].pred, pop.raw[b].sim,
          c.model_evaluations};
}

inline AdversarialExample make_example(const Population& pop, const Feasible& feas, const Counters& c) {
  const std::size_t b = pop.best();
  AdversarialExample ex;
  ex.x = pop.x[b];
  ex.l_pred = pop.raw[b].pred;
  ex.l_sim = pop.raw[b].sim;
  ex.fitness = pop.fitness[b];
  const Matrix delta = (pop.x[b] - feas.seed).cwiseAbs();
  for (Eigen::Index r = 0; r < delta.rows(); ++r) ex.max_abs_delta.push_back(delta.row(r).maxCoeff());
  ex.generation = pop.found[b];
  ex.evaluations = c.model_evaluations;
  return ex;
}

}  // namespace hero::engine
