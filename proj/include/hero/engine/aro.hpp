#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "hero/engine/attack.hpp"

namespace hero::engine {

/// Energy factor A = 4 (1 - g/G) ln(1/r) with r in (0, 1].
inline double energy_factor(std::size_t g, std::size_t generations, double r) {
  return 4.0 * (1.0 - static_cast<double>(g) / static_cast<double>(generations)) * std::log(1.0 / r);
}

namespace detail {

// Uniformly random subset of ceil(r * m) coordinates, as a 0/1 mask.
inline std::vector<double> random_mask(std::size_t m, RandomStream& rng) {
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(rng.uniform() * static_cast<double>(m))));
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> mask(m, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    std::swap(idx[k], idx[k + rng.index(m - k)]);
    mask[idx[k]] = 1.0;
  }
  return mask;
}

// Worst-first replacement of the bottom 10% with fresh draws from the box.
inline void restart_worst(Population& pop, const model::Forecaster& m, const Feasible& feas,
                          std::span<const double> y_seed, const AttackConfig& cfg, const FitnessFrame& frame,
                          std::size_t gen, RandomStream& rng, Counters& counters) {
  const std::size_t n = pop.x.size();
  const std::size_t count = std::max<std::size_t>(1, n / 10);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pop.fitness[a] < pop.fitness[b]; });
  const std::size_t keep = pop.best();
  for (std::size_t k = 0; k < count && k + 1 < n; ++k) {
    const std::size_t i = order[k];
    if (i == keep) continue;
    Matrix x(feas.seed.rows(), feas.seed.cols());
    for (Eigen::Index e = 0; e < x.size(); ++e)
      x.data()[e] = feas.seed.data()[e] + rng.uniform(-cfg.epsilon, cfg.epsilon);
    feas.clamp(x);
    pop.raw[i] = raw_loss(m, x, feas.seed, y_seed);
    pop.fitness[i] = frame(pop.raw[i], cfg.alpha);
    pop.x[i] = std::move(x);
    pop.found[i] = gen;
    ++counters.initialization;
    ++counters.model_evaluations;
  }
}

}  // namespace detail

/// Artificial rabbits optimization over the feasible set around a seed.
///
/// Positions are updated in perturbation coordinates u = (x - x_seed) / eps,
/// where the feasible box is [-1, 1]. Each generation builds one candidate
/// per individual from the start-of-generation population (detour foraging
/// when the energy factor exceeds the balance threshold, random hiding
/// otherwise), evaluates all of them, then keeps each candidate only if it is
/// fitter than its predecessor.
inline AttackResult aro_attack(const model::Forecaster& m, const Matrix& x_seed, std::span<const double> y_seed,
                               const data::FeatureBounds& bounds, const AttackConfig& cfg, RandomStream& rng,
                               const GenerationObserver& observe = {}) {
  cfg.validate();
  if (y_seed.size() != m.horizon()) throw ArgumentError("seed target length does not match model horizon");
  const Feasible feas(x_seed, bounds, cfg.epsilon);
  const std::size_t n = cfg.population;
  const auto m_dim = static_cast<std::size_t>(x_seed.size());
  const std::size_t G = cfg.generations;

  AttackResult out;
  Counters& c = out.counters;
  Population pop = initial_population(m, feas, y_seed, cfg, rng, c);
  const FitnessFrame frame = FitnessFrame::fit(pop.raw);
  for (const auto& l : pop.raw) pop.fitness.push_back(frame(l, cfg.alpha));
  out.trace.push_back(trace_record(0, pop, c));
  if (observe) observe(0, pop.x);

  std::vector<Matrix> cand(n, Matrix(x_seed.rows(), x_seed.cols()));
  std::vector<RawLoss> cand_raw(n);
  for (std::size_t g = 1; g <= G; ++g) {
    const double gd = static_cast<double>(g), Gd = static_cast<double>(G);
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix ui = (pop.x[i] - feas.seed) / cfg.epsilon;
      Matrix u(ui.rows(), ui.cols());
      const double a = energy_factor(g, G, rng.uniform_open_closed());
      if (a > cfg.balance) {
        // Detour foraging toward a random other individual.
        std::size_t j = rng.index(n - 1);
        if (j >= i) ++j;
        const Matrix uj = (pop.x[j] - feas.seed) / cfg.epsilon;
        const double run = (std::numbers::e - std::exp(((gd - 1.0) / Gd) * ((gd - 1.0) / Gd))) *
                           std::sin(2.0 * std::numbers::pi * rng.uniform());
        const auto mask = detail::random_mask(m_dim, rng);
        double step = 0.5 * (0.05 + rng.uniform());
        if (cfg.round_detour_noise) step = std::round(step);
        for (std::size_t k = 0; k < m_dim; ++k) {
          const double noise = step * rng.normal();
          u.data()[k] = uj.data()[k] + run * mask[k] * (ui.data()[k] - uj.data()[k]) + noise;
        }
        c.exploration += m_dim;
      } else {
        // Random hiding around a burrow on one random coordinate.
        const double h = (Gd - gd + 1.0) / Gd * rng.uniform();
        const std::size_t k0 = rng.index(m_dim);
        const double r3 = rng.uniform();
        const double r4 = rng.uniform();
        for (std::size_t k = 0; k < m_dim; ++k) {
          const double b = ui.data()[k] + (k == k0 ? h * r3 * ui.data()[k] : 0.0);
          u.data()[k] = ui.data()[k] + h * (r4 * b - ui.data()[k]);
        }
        c.exploitation += m_dim;
      }
      cand[i] = feas.seed + cfg.epsilon * u;
      feas.clamp(cand[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      cand_raw[i] = raw_loss(m, cand[i], feas.seed, y_seed);
      ++c.fitness;
      ++c.model_evaluations;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double f = frame(cand_raw[i], cfg.alpha);
      if (f > pop.fitness[i]) {
        std::swap(pop.x[i], cand[i]);
        pop.raw[i] = cand_raw[i];
        pop.fitness[i] = f;
        pop.found[i] = g;
      }
    }
    if (cfg.restart_worst && g % 25 == 0 && g < G)
      detail::restart_worst(pop, m, feas, y_seed, cfg, frame, g, rng, c);
    out.trace.push_back(trace_record(g, pop, c));
    if (observe) observe(g, pop.x);
  }
  out.best = make_example(pop, feas, c);
  return out;
}

}  // namespace hero::engine
