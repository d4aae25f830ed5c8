#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "hero/engine.hpp"
#include "hero/forecaster.hpp"
#include "hero/numerics.hpp"

namespace {

using hero::Matrix;
using hero::RandomStream;
using hero::data::FeatureBounds;
using hero::data::WindowSample;
using namespace hero::engine;
using hero::model::GradientMethod;
using hero::model::RidgeForecaster;
using hero::model::TstMiniConfig;
using hero::model::TstMiniForecaster;

Matrix random_matrix(RandomStream& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

FeatureBounds wide_bounds(std::size_t f, double lo = -100.0, double hi = 100.0) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < f; ++i) names.push_back("f" + std::to_string(i));
  return {names, std::vector<double>(f, lo), std::vector<double>(f, hi)};
}

// Small ridge model with random weights plus a matching seed.
struct Fixture {
  std::unique_ptr<RidgeForecaster> model;
  Matrix x;
  std::vector<double> y;
  FeatureBounds bounds;
};

Fixture make_fixture(std::uint64_t seed, std::size_t f = 3, std::size_t t = 6, std::size_t s = 2) {
  RandomStream rng(seed, 7);
  const auto ft = static_cast<Eigen::Index>(f * t);
  auto m = std::make_unique<RidgeForecaster>(f, t, random_matrix(rng, ft, static_cast<Eigen::Index>(s), 0.3),
                                             random_matrix(rng, 1, static_cast<Eigen::Index>(s)));
  Matrix x = random_matrix(rng, static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t), 0.5);
  auto y = m->predict(x);
  for (double& v : y) v += 0.05 * rng.normal();
  // Tight bounds on feature 0 so the physical clamp is active.
  auto b = wide_bounds(f);
  b.lower[0] = x.row(0).minCoeff() + 0.005;
  b.upper[0] = x.row(0).maxCoeff() - 0.005;
  return {std::move(m), std::move(x), std::move(y), std::move(b)};
}

AttackConfig small_config(std::size_t g = 20, std::size_t n = 30) {
  AttackConfig cfg;
  cfg.generations = g;
  cfg.population = n;
  return cfg;
}

// ---- LRI ----

TEST(Lri, ConstantModelIsZero) {
  Matrix b(1, 2);
  b << 4.0, -1.0;
  const RidgeForecaster m(2, 3, Matrix::Zero(6, 2), b);
  RandomStream rng(1, 0);
  WindowSample s{random_matrix(rng, 2, 3), {0.5, 0.5}};
  EXPECT_EQ(compute_lri(m, s).value, 0.0);
}

TEST(Lri, ScalarLinearModelChainRule) {
  const RidgeForecaster m(1, 1, Matrix::Constant(1, 1, 3.0), Matrix::Zero(1, 1));
  WindowSample s{Matrix::Constant(1, 1, 1.0), {0.0}};
  const auto exact = compute_lri(m, s);
  EXPECT_DOUBLE_EQ(exact.value, 18.0);
  EXPECT_EQ(exact.method, GradientMethod::kExact);
  const auto fd = compute_lri(m, s, GradientMethod::kFiniteDifference);
  EXPECT_NEAR(fd.value, 18.0, 1e-6);
  EXPECT_EQ(fd.method, GradientMethod::kFiniteDifference);
  EXPECT_EQ(fd.evaluations, 2u);
}

TEST(Lri, ExactAgreesWithFiniteDifferenceOnTstMini) {
  RandomStream rng(5, 0);
  TstMiniConfig cfg;
  cfg.d_model = 8;
  cfg.ffn_width = 12;
  const auto m = TstMiniForecaster::initialize(4, 8, 3, cfg, rng);
  for (int trial = 0; trial < 5; ++trial) {
    WindowSample s{random_matrix(rng, 4, 8), {0.1, -0.2, 0.3}};
    const double exact = compute_lri(*m, s).value;
    const double fd = compute_lri(*m, s, GradientMethod::kFiniteDifference).value;
    EXPECT_LE(std::abs(exact - fd), 1e-3 * std::max(1.0, std::abs(exact))) << trial;
  }
}

// ---- Seed ranking ----

TEST(RankAndSelect, ProductOfNormalizedColumns) {
  const std::vector<Candidate> pool{{1, 1}, {2, 2}};
  const auto top = rank_and_select(pool, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].index, 1u);
  EXPECT_DOUBLE_EQ(top[0].score, 1.0);
  EXPECT_DOUBLE_EQ(top[1].score, 0.0);
  EXPECT_EQ(top[0].rank, 0u);
  EXPECT_EQ(top[1].rank, 1u);
}

TEST(RankAndSelect, EqualLriOrdersByDensity) {
  const std::vector<Candidate> pool{{3, 0.2}, {3, 0.9}, {3, 0.5}, {3, 0.1}};
  const auto top = rank_and_select(pool, 4);
  std::vector<std::size_t> order;
  for (const auto& r : top) order.push_back(r.index);
  EXPECT_EQ(order, (std::vector<std::size_t>{1, 2, 0, 3}));
  EXPECT_DOUBLE_EQ(top[0].score, 0.5);
}

TEST(RankAndSelect, TiesBreakOnRawLriThenIndex) {
  // Density min-max maps index 0 and 2 to zero, so both score 0.
  const std::vector<Candidate> pool{{1, 0}, {2, 1}, {5, 0}, {1, 0}};
  const auto top = rank_and_select(pool, 4);
  EXPECT_EQ(top[0].index, 1u);
  EXPECT_EQ(top[1].index, 2u);
  EXPECT_EQ(top[2].index, 0u);
  EXPECT_EQ(top[3].index, 3u);
}

TEST(RankAndSelect, InvariantUnderPositiveAffineRescaling) {
  RandomStream rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Candidate> pool(40);
    for (auto& c : pool) c = {rng.uniform(0.0, 5.0), rng.uniform(0.0, 2.0)};
    const auto base = rank_and_select(pool, 10);
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(0.0, 3.0);
    auto scaled = pool;
    for (auto& c : scaled) c.lri = a * c.lri + b;
    const auto again = rank_and_select(scaled, 10);
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(base[i].index, again[i].index);
  }
}

TEST(RankAndSelect, RejectsBadInput) {
  const std::vector<Candidate> pool{{1, 1}, {2, 2}};
  EXPECT_THROW(rank_and_select(pool, 3), hero::ArgumentError);
  const std::vector<Candidate> neg{{-1, 1}};
  EXPECT_THROW(rank_and_select(neg, 1), hero::ArgumentError);
  const std::vector<Candidate> nan{{std::nan(""), 1}};
  EXPECT_THROW(rank_and_select(nan, 1), hero::ArgumentError);
  EXPECT_TRUE(rank_and_select({}, 0).empty());
}

// ---- Clamps ----

TEST(Clamp, PhysicalBoundsPerRow) {
  const FeatureBounds b({"a", "b"}, {-1.0, 0.0}, {1.0, 0.5});
  Matrix x(2, 3);
  x << 1.5, -2.0, 0.3, 0.7, -0.1, 0.25;
  const Matrix c = clamp_physical(x, b);
  Matrix want(2, 3);
  want << 1.0, -1.0, 0.3, 0.5, 0.0, 0.25;
  EXPECT_EQ(c, want);
  Matrix in(2, 1);
  in << 0.2, 0.2;
  EXPECT_EQ(clamp_physical(in, b), in);
  EXPECT_THROW(clamp_physical(Matrix::Zero(3, 1), b), hero::ArgumentError);
}

TEST(Clamp, PhysicalClampIsIdempotent) {
  RandomStream rng(3, 0);
  const FeatureBounds b({"a", "b", "c"}, {-1.0, -0.2, 0.0}, {1.0, 0.3, 2.0});
  for (int i = 0; i < 200; ++i) {
    const Matrix x = random_matrix(rng, 3, 4, 2.0);
    const Matrix once = clamp_physical(x, b);
    EXPECT_EQ(clamp_physical(once, b), once);
  }
}

TEST(Clamp, DoubleClampAppliesBallThenBounds) {
  Matrix seed(1, 3);
  seed << 0.0, 0.95, -0.5;
  const FeatureBounds b({"a"}, {-1.0}, {1.0});
  const Feasible feas(seed, b, 0.1);
  Matrix x(1, 3);
  x << 0.5, 1.2, -0.55;
  feas.clamp(x);
  Matrix want(1, 3);
  want << 0.1, 1.0, -0.55;
  EXPECT_EQ(x, want);
  EXPECT_TRUE(feas.contains(x));
  Matrix out = want;
  out(0, 0) = 0.2;
  EXPECT_FALSE(feas.contains(out));
}

// ---- Fitness ----

TEST(Fitness, HandPopulation) {
  const std::vector<RawLoss> pop{{1, 0}, {2, 1}, {3, 2}};
  const auto f = population_fitness(pop, 0.5);
  for (double v : f) EXPECT_DOUBLE_EQ(v, 0.0);
  const auto pred_only = population_fitness(pop, 1.0);
  EXPECT_DOUBLE_EQ(pred_only[0], 0.0);
  EXPECT_DOUBLE_EQ(pred_only[1], 0.5);
  EXPECT_DOUBLE_EQ(pred_only[2], 1.0);
}

TEST(Fitness, UnperturbedMemberHasZeroSimilarityTerm) {
  const std::vector<RawLoss> pop{{4, 0}, {1, 3}, {2, 1}};
  const auto f = population_fitness(pop, 0.8);
  EXPECT_DOUBLE_EQ(f[0], 0.8 * 1.0);
}

TEST(Fitness, RawLossDefinitions) {
  const RidgeForecaster m(1, 2, Matrix::Constant(2, 1, 1.0), Matrix::Zero(1, 1));
  Matrix seed(1, 2);
  seed << 0.0, 0.0;
  Matrix x(1, 2);
  x << 0.1, 0.3;
  const std::vector<double> y{1.0};
  const auto l = raw_loss(m, x, seed, y);
  EXPECT_NEAR(l.pred, 0.36, 1e-15);
  EXPECT_NEAR(l.sim, 0.05, 1e-15);
}

// ---- Attacks ----

TEST(Aro, ZeroGenerationsReturnsBestInitialCandidate) {
  auto fx = make_fixture(1);
  auto cfg = small_config(0, 25);
  RandomStream rng(1, 1000);
  std::vector<Matrix> initial;
  const auto res = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, rng,
                              [&](std::size_t, std::span<const Matrix> p) { initial.assign(p.begin(), p.end()); });
  ASSERT_EQ(initial.size(), 25u);
  std::vector<RawLoss> raw;
  for (const auto& x : initial) raw.push_back(raw_loss(*fx.model, x, fx.x, fx.y));
  const auto f = population_fitness(raw, cfg.alpha);
  const auto best = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
  EXPECT_EQ(res.best.x, initial[best]);
  EXPECT_EQ(res.best.generation, 0u);
  EXPECT_EQ(res.trace.size(), 1u);
}

TEST(Aro, EveryIndividualFeasibleAndBestMonotone) {
  auto fx = make_fixture(2);
  const auto cfg = small_config(30, 40);
  const Feasible feas(fx.x, fx.bounds, cfg.epsilon);
  RandomStream rng(2, 1000);
  std::size_t violations = 0, calls = 0;
  const auto res = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, rng, [&](std::size_t, std::span<const Matrix> p) {
    ++calls;
    for (const auto& x : p) violations += feas.contains(x) ? 0 : 1;
  });
  EXPECT_EQ(calls, cfg.generations + 1);
  EXPECT_EQ(violations, 0u);
  ASSERT_EQ(res.trace.size(), cfg.generations + 1);
  for (std::size_t g = 1; g < res.trace.size(); ++g)
    EXPECT_GE(res.trace[g].best_fitness, res.trace[g - 1].best_fitness) << g;
  EXPECT_TRUE(feas.contains(res.best.x));
  // x_seed + eps minus x_seed can round one ulp above eps.
  for (double d : res.best.max_abs_delta) EXPECT_LE(d, cfg.epsilon * (1.0 + 1e-12));
}

TEST(Aro, DeterministicForSameStream) {
  auto fx = make_fixture(3);
  const auto cfg = small_config(15, 20);
  RandomStream r1(9, 1001), r2(9, 1001);
  const auto a = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r1);
  const auto b = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r2);
  EXPECT_EQ(a.best.x, b.best.x);
  EXPECT_EQ(a.best.fitness, b.best.fitness);
  RandomStream r3(9, 1002);
  const auto c = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r3);
  EXPECT_NE(a.best.x, c.best.x);
}

TEST(Aro, ImprovesOnInitialPopulation) {
  auto fx = make_fixture(4);
  const auto cfg = small_config(40, 40);
  RandomStream rng(4, 1000);
  const auto res = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, rng);
  EXPECT_GT(res.trace.back().best_fitness, res.trace.front().best_fitness);
}

TEST(Aro, RestartKeepsBestAndFeasibility) {
  auto fx = make_fixture(5);
  auto cfg = small_config(60, 30);
  cfg.restart_worst = true;
  const Feasible feas(fx.x, fx.bounds, cfg.epsilon);
  RandomStream rng(5, 1000);
  std::size_t violations = 0;
  const auto res = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, rng, [&](std::size_t, std::span<const Matrix> p) {
    for (const auto& x : p) violations += feas.contains(x) ? 0 : 1;
  });
  EXPECT_EQ(violations, 0u);
  for (std::size_t g = 1; g < res.trace.size(); ++g) EXPECT_GE(res.trace[g].best_fitness, res.trace[g - 1].best_fitness);
  EXPECT_GT(res.counters.initialization, 30u);
  EXPECT_LE(res.counters.initialization, 30u + 2u * 3u);
}

TEST(Aro, EnergyEnvelopeShrinks) {
  const std::size_t G = 50;
  const double r = std::exp(-1.0);  // ln(1/r) = 1
  for (std::size_t g = 1; g <= G; ++g) {
    EXPECT_NEAR(energy_factor(g, G, r), 4.0 * (1.0 - static_cast<double>(g) / G), 1e-12);
    EXPECT_LT(energy_factor(g, G, r), energy_factor(g - 1, G, r));
  }
  EXPECT_EQ(energy_factor(3, 10, 1.0), 0.0);
}

TEST(Ga, ZeroGenerationsReturnsBestInitialCandidate) {
  auto fx = make_fixture(6);
  const auto cfg = small_config(0, 20);
  RandomStream r1(6, 1000), r2(6, 1000);
  const auto ga = ga_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r1);
  const auto aro = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r2);
  EXPECT_EQ(ga.best.x, aro.best.x);
}

TEST(Ga, ZeroRatesKeepPopulationStatic) {
  auto fx = make_fixture(7);
  auto cfg = small_config(10, 15);
  cfg.crossover_rate = 0.0;
  cfg.mutation_rate = 0.0;
  RandomStream rng(7, 1000);
  std::vector<Matrix> initial;
  std::size_t strays = 0;
  ga_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, rng, [&](std::size_t g, std::span<const Matrix> p) {
    if (g == 0) {
      initial.assign(p.begin(), p.end());
      return;
    }
    for (const auto& x : p)
      if (std::find(initial.begin(), initial.end(), x) == initial.end()) ++strays;
  });
  EXPECT_EQ(strays, 0u);
}

TEST(Ga, FeasibleMonotoneAndDeterministic) {
  auto fx = make_fixture(8);
  const auto cfg = small_config(25, 30);
  const Feasible feas(fx.x, fx.bounds, cfg.epsilon);
  RandomStream r1(8, 1000), r2(8, 1000);
  std::size_t violations = 0;
  const auto a = ga_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r1, [&](std::size_t, std::span<const Matrix> p) {
    for (const auto& x : p) violations += feas.contains(x) ? 0 : 1;
  });
  const auto b = ga_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r2);
  EXPECT_EQ(violations, 0u);
  for (std::size_t g = 1; g < a.trace.size(); ++g) EXPECT_GE(a.trace[g].best_fitness, a.trace[g - 1].best_fitness);
  EXPECT_EQ(a.best.x, b.best.x);
}

TEST(RandomSearch, SharesInitialPopulationAndBudget) {
  auto fx = make_fixture(9);
  const auto cfg = small_config(10, 20);
  RandomStream r1(9, 1000), r2(9, 1000);
  const auto rs = random_search(*fx.model, fx.x, fx.y, fx.bounds, cfg, r1);
  const auto aro = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r2);
  EXPECT_EQ(rs.trace.front().best_fitness, aro.trace.front().best_fitness);
  EXPECT_EQ(rs.counters.model_evaluations, aro.counters.model_evaluations);
  for (std::size_t g = 1; g < rs.trace.size(); ++g) EXPECT_GE(rs.trace[g].best_fitness, rs.trace[g - 1].best_fitness);
}

TEST(Attack, RejectsInvalidConfig) {
  auto fx = make_fixture(10);
  RandomStream rng(1, 0);
  auto cfg = small_config();
  cfg.epsilon = 0.0;
  EXPECT_THROW(aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, rng), hero::ArgumentError);
  cfg = small_config();
  cfg.population = 1;
  EXPECT_THROW(ga_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, rng), hero::ArgumentError);
  cfg = small_config();
  cfg.alpha = 1.5;
  EXPECT_THROW(random_search(*fx.model, fx.x, fx.y, fx.bounds, cfg, rng), hero::ArgumentError);
  const std::vector<double> short_y{0.0};
  EXPECT_THROW(aro_attack(*fx.model, fx.x, short_y, fx.bounds, small_config(), rng), hero::ArgumentError);
}

// ---- Complexity ----

TEST(Complexity, CountersMatchClosedForms) {
  RandomStream pick(12, 0);
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t G = 1 + pick.index(12), n = 2 + pick.index(20);
    const std::size_t f = 1 + pick.index(3), t = 1 + pick.index(5);
    auto fx = make_fixture(100 + trial, f, t, 2);
    const auto cfg = small_config(G, n);
    RandomStream r1(trial, 1000), r2(trial, 2000);
    const auto aro = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r1);
    const auto ga = ga_attack(*fx.model, fx.x, fx.y, fx.bounds, cfg, r2);
    const std::uint64_t m = f * t;
    EXPECT_EQ(aro.counters.total(), aro_expected_ops(G, n, m));
    EXPECT_EQ(ga.counters.total(), ga_expected_ops(G, n, m));
    EXPECT_EQ(aro.counters.updates(), G * n * m);
    EXPECT_EQ(ga.counters.updates(), 2 * G * n * m);
    EXPECT_EQ(aro.counters.fitness + aro.counters.initialization, G * n + n);
    EXPECT_EQ(ga.counters.fitness + ga.counters.initialization, G * n + n);
    const std::vector<AttackResult> a{aro}, g{ga};
    EXPECT_EQ(complexity_report(a, g).update_ratio(), 2.0);
  }
}

TEST(Complexity, ReportJsonAndEmptyInput) {
  auto fx = make_fixture(13);
  RandomStream r1(1, 1), r2(1, 2);
  const std::vector<AttackResult> a{aro_attack(*fx.model, fx.x, fx.y, fx.bounds, small_config(3, 5), r1)};
  const std::vector<AttackResult> g{ga_attack(*fx.model, fx.x, fx.y, fx.bounds, small_config(3, 5), r2)};
  const auto j = to_json(complexity_report(a, g));
  EXPECT_EQ(j.at("update_ratio_ga_over_aro").get<double>(), 2.0);
  EXPECT_EQ(j.at("aro").at("total").get<std::uint64_t>(), aro_expected_ops(3, 5, 18));
  EXPECT_THROW(complexity_report({}, g), hero::ArgumentError);
}

TEST(Trace, JsonLinesHaveExpectedKeys) {
  auto fx = make_fixture(14);
  RandomStream rng(1, 1);
  const auto res = aro_attack(*fx.model, fx.x, fx.y, fx.bounds, small_config(4, 6), rng);
  std::ostringstream os;
  write_trace_jsonl(os, res.trace);
  std::istringstream in(os.str());
  std::string line;
  std::size_t gen = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("gen").get<std::size_t>(), gen++);
    for (const char* k : {"best_fitness", "mean_fitness", "best_L_pred", "best_L_sim", "eval_count"})
      EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(gen, 5u);
  EXPECT_EQ(res.trace.back().eval_count, 6u * 5u);
}

}  // namespace
