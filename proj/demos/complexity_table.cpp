// Prints coordinate-touch counts for ARO and GA next to their closed forms.

#include <cstdio>

#include "hero/engine.hpp"
#include "hero/forecaster.hpp"

int main() {
  namespace he = hero::engine;
  hero::RandomStream rng(3, 0);
  std::printf("%4s %4s %4s | %10s %10s | %10s %10s | %s\n", "G", "n", "m", "aro", "expected", "ga", "expected",
              "ga/aro updates");
  for (const auto [G, n, f, t] : {std::array<std::size_t, 4>{10, 20, 2, 4}, {25, 40, 3, 8}, {50, 60, 9, 24}}) {
    hero::Matrix w(static_cast<Eigen::Index>(f * t), 2), b = hero::Matrix::Zero(1, 2);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    const hero::model::RidgeForecaster model(f, t, w, b);
    hero::Matrix x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const auto y = model.predict(x);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < f; ++i) names.push_back("f" + std::to_string(i));
    const hero::data::FeatureBounds bounds{names, std::vector<double>(f, -10.0), std::vector<double>(f, 10.0)};

    he::AttackConfig cfg;
    cfg.generations = G;
    cfg.population = n;
    hero::RandomStream r1(1, 1), r2(1, 2);
    const auto aro = he::aro_attack(model, x, y, bounds, cfg, r1);
    const auto ga = he::ga_attack(model, x, y, bounds, cfg, r2);
    const std::uint64_t m = f * t;
    std::printf("%4zu %4zu %4llu | %10llu %10llu | %10llu %10llu | %.1f\n", G, n, static_cast<unsigned long long>(m),
                static_cast<unsigned long long>(aro.counters.total()),
                static_cast<unsigned long long>(he::aro_expected_ops(G, n, m)),
                static_cast<unsigned long long>(ga.counters.total()),
                static_cast<unsigned long long>(he::ga_expected_ops(G, n, m)),
                static_cast<double>(ga.counters.updates()) / static_cast<double>(aro.counters.updates()));
  }
}
