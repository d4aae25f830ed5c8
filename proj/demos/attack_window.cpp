// Attacks a single forecast window with ARO and prints what changed.
//
// Builds a small synthetic degradation series, fits a ridge forecaster,
// then perturbs one window within a 0.03 box (normalized units).

#include <cstdio>
#include <vector>

#include "hero/dataset.hpp"
#include "hero/engine.hpp"
#include "hero/forecaster.hpp"
#include "hero/metrics.hpp"

int main() {
  namespace hd = hero::data;
  namespace he = hero::engine;

  hd::SynthConfig synth;
  synth.duration_hours = 400.0;
  synth.sample_period_hours = 0.02;
  synth.noise_std = 0.005;
  const auto raw = hd::synth_generate(synth).dataset;
  const auto ds = hd::fit_normalize(hd::moving_average(hd::condense(raw, hd::PeriodStride{0.1}), 5));

  const hd::WindowSpec spec;
  const auto windows = hd::make_windows(ds, spec);
  const auto bounds = hd::derive_bounds(ds, spec.features);
  const std::size_t split = windows.size() * 4 / 5;
  const std::vector<hd::WindowSample> train(windows.begin(), windows.begin() + static_cast<long>(split));
  const auto model = hero::model::train_ridge(train, 1.0);

  const auto& seed = windows[split + 20];
  he::AttackConfig cfg;
  cfg.generations = 60;
  cfg.population = 120;
  hero::RandomStream rng(42, 0);
  const auto res = he::aro_attack(model, seed.x, seed.y, bounds, cfg, rng);

  const auto clean = model.predict(seed.x);
  const auto attacked = model.predict(res.best.x);
  std::printf("window at t = %.1f h, %zu features x %zu steps\n", seed.origin_time, spec.features.size(),
              spec.input_length);
  std::printf("%-5s %10s %10s %10s\n", "step", "target", "clean", "attacked");
  for (std::size_t i = 0; i < clean.size(); ++i)
    std::printf("%-5zu %10.4f %10.4f %10.4f\n", i + 1, seed.y[i], clean[i], attacked[i]);
  std::printf("rmse clean %.4f, attacked %.4f\n", hero::metrics::rmse(seed.y, clean),
              hero::metrics::rmse(seed.y, attacked));
  std::printf("fitness %.4f found in generation %zu after %llu model evaluations\n", res.best.fitness,
              res.best.generation, static_cast<unsigned long long>(res.best.evaluations));
  std::printf("largest change per feature:\n");
  for (std::size_t f = 0; f < spec.features.size(); ++f)
    std::printf("  %-8s %.4f\n", spec.features[f].c_str(), res.best.max_abs_delta[f]);
}
