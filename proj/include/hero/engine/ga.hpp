#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "hero/engine/attack.hpp"

namespace hero::engine {

/// Generational GA baseline: size-2 tournament, uniform crossover, Gaussian
/// mutation (sigma = eps / 10, rate 1/m by default), the same fitness and
/// double clamp as ARO, and elitism of one.
inline AttackResult ga_attack(const model::Forecaster& m, const Matrix& x_seed, std::span<const double> y_seed,
                              const data::FeatureBounds& bounds, const AttackConfig& cfg, RandomStream& rng,
                              const GenerationObserver& observe = {}) {
  cfg.validate();
  if (y_seed.size() != m.horizon()) throw ArgumentError("seed target length does not match model horizon");
  const Feasible feas(x_seed, bounds, cfg.epsilon);
  const std::size_t n = cfg.population;
  const auto m_dim = static_cast<std::size_t>(x_seed.size());
  const double mutation_rate = cfg.mutation_rate < 0.0 ? 1.0 / static_cast<double>(m_dim) : cfg.mutation_rate;
  const double sigma = cfg.epsilon / 10.0;

  AttackResult out;
  Counters& c = out.counters;
  Population pop = initial_population(m, feas, y_seed, cfg, rng, c);
  const FitnessFrame frame = FitnessFrame::fit(pop.raw);
  for (const auto& l : pop.raw) pop.fitness.push_back(frame(l, cfg.alpha));
  out.trace.push_back(trace_record(0, pop, c));
  if (observe) observe(0, pop.x);

  auto tournament = [&] {
    const std::size_t a = rng.index(n), b = rng.index(n);
    return pop.fitness[b] > pop.fitness[a] ? b : a;
  };

  for (std::size_t g = 1; g <= cfg.generations; ++g) {
    Population next;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t p1 = tournament();
      const std::size_t p2 = tournament();
      ++c.selection;
      Matrix child = pop.x[p1];
      const bool cross = rng.bernoulli(cfg.crossover_rate);
      for (std::size_t k = 0; k < m_dim; ++k)
        if (cross && rng.bernoulli(0.5)) child.data()[k] = pop.x[p2].data()[k];
      c.crossover += m_dim;
      for (std::size_t k = 0; k < m_dim; ++k)
        if (rng.bernoulli(mutation_rate)) child.data()[k] += sigma * rng.normal();
      c.mutation += m_dim;
      feas.clamp(child);
      next.raw.push_back(raw_loss(m, child, feas.seed, y_seed));
      next.fitness.push_back(frame(next.raw.back(), cfg.alpha));
      next.x.push_back(std::move(child));
      next.found.push_back(g);
      ++c.fitness;
      ++c.model_evaluations;
    }
    // Elitism: the previous best displaces the worst offspring if it is fitter.
    const std::size_t elite = pop.best();
    const auto worst = static_cast<std::size_t>(
        std::min_element(next.fitness.begin(), next.fitness.end()) - next.fitness.begin());
    if (pop.fitness[elite] > next.fitness[next.best()]) {
      next.x[worst] = pop.x[elite];
      next.raw[worst] = pop.raw[elite];
      next.fitness[worst] = pop.fitness[elite];
      next.found[worst] = pop.found[elite];
    }
    pop = std::move(next);
    out.trace.push_back(trace_record(g, pop, c));
    if (observe) observe(g, pop.x);
  }
  out.best = make_example(pop, feas, c);
  return out;
}

/// Pure random search with the same budget as ARO: the same initial
/// population (and fitness frame) followed by G * N_pop further uniform draws
/// from the feasible box.
inline AttackResult random_search(const model::Forecaster& m, const Matrix& x_seed, std::span<const double> y_seed,
                                  const data::FeatureBounds& bounds, const AttackConfig& cfg, RandomStream& rng) {
  cfg.validate();
  if (y_seed.size() != m.horizon()) throw ArgumentError("seed target length does not match model horizon");
  const Feasible feas(x_seed, bounds, cfg.epsilon);
  AttackResult out;
  Counters& c = out.counters;
  Population pop = initial_population(m, feas, y_seed, cfg, rng, c);
  const FitnessFrame frame = FitnessFrame::fit(pop.raw);
  for (const auto& l : pop.raw) pop.fitness.push_back(frame(l, cfg.alpha));
  out.trace.push_back(trace_record(0, pop, c));

  std::size_t best = pop.best();
  Population keep;
  keep.x.push_back(pop.x[best]);
  keep.raw.push_back(pop.raw[best]);
  keep.fitness.push_back(pop.fitness[best]);
  keep.found.push_back(0);
  Matrix x(x_seed.rows(), x_seed.cols());
  for (std::size_t g = 1; g <= cfg.generations; ++g) {
    for (std::size_t i = 0; i < cfg.population; ++i) {
      for (Eigen::Index e = 0; e < x.size(); ++e)
        x.data()[e] = feas.seed.data()[e] + rng.uniform(-cfg.epsilon, cfg.epsilon);
      feas.clamp(x);
      const RawLoss l = raw_loss(m, x, feas.seed, y_seed);
      ++c.fitness;
      ++c.model_evaluations;
      const double f = frame(l, cfg.alpha);
      if (f > keep.fitness[0]) {
        keep.x[0] = x;
        keep.raw[0] = l;
        keep.fitness[0] = f;
        keep.found[0] = g;
      }
    }
    out.trace.push_back(trace_record(g, keep, c));
  }
  out.best = make_example(keep, feas, c);
  return out;
}

}  // namespace hero::engine
