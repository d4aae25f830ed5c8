#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hero/dataset.hpp"
#include "hero/latent.hpp"
#include "hero/numerics.hpp"

namespace {

using hero::Matrix;
using hero::RandomStream;
using namespace hero::latent;

Matrix random_matrix(RandomStream& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

LatentSummary summary(std::vector<double> mu, std::vector<double> sigma) {
  LatentSummary s{std::move(mu), {}};
  for (double v : sigma) s.log_var.push_back(2.0 * std::log(v));
  return s;
}

double integrate_1d(const KdeModel& kde, double lo, double hi, std::size_t n) {
  // Composite Simpson.
  const double h = (hi - lo) / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double z = lo + h * static_cast<double>(i);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * kde_eval(kde, std::span<const double>(&z, 1));
  }
  return acc * h / 3.0;
}

TEST(Encoder, ZeroWeightsGiveHeadBias) {
  RandomStream rng(1, 0);
  auto enc = Encoder::initialize(3, 5, 4, 2, rng);
  enc.params().visit([](const std::string&, Matrix& m) { m.setZero(); });
  enc.params().b_mu << 0.25, -1.5;
  const auto s = enc.encode(random_matrix(rng, 3, 5));
  EXPECT_EQ(s.mu, (std::vector<double>{0.25, -1.5}));
  EXPECT_EQ(s.log_var, (std::vector<double>{0.0, 0.0}));
}

TEST(Encoder, DeterministicAndOrderSensitive) {
  RandomStream rng(2, 0);
  const auto enc = Encoder::initialize(3, 6, 8, 4, rng);
  const Matrix x = random_matrix(rng, 3, 6);
  const auto a = enc.encode(x);
  EXPECT_EQ(a.mu, enc.encode(x).mu);
  const Matrix reversed = x.rowwise().reverse();
  const auto b = enc.encode(reversed);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.mu.size(); ++i) diff += std::abs(a.mu[i] - b.mu[i]);
  EXPECT_GT(diff, 1e-6);
  EXPECT_THROW(enc.encode(random_matrix(rng, 6, 3)), hero::ArgumentError);
}

TEST(Encoder, BatchedForwardMatchesSingle) {
  RandomStream rng(3, 0);
  const auto enc = Encoder::initialize(2, 4, 5, 3, rng);
  std::vector<Matrix> xs{random_matrix(rng, 2, 4), random_matrix(rng, 2, 4), random_matrix(rng, 2, 4)};
  const auto [mu, lv] = encoder_forward(enc.params(), time_major(xs), enc.hidden());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto s = enc.encode(xs[i]);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(mu(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), s.mu[k], 1e-14);
      EXPECT_NEAR(lv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), s.log_var[k], 1e-14);
    }
  }
}

TEST(Encoder, ObjectiveGradientMatchesFiniteDifference) {
  RandomStream rng(4, 0);
  auto enc = Encoder::initialize(2, 4, 3, 2, rng);
  DecoderParams<Matrix> dec{random_matrix(rng, 2, 5), random_matrix(rng, 1, 5), random_matrix(rng, 5, 8),
                            random_matrix(rng, 1, 8)};
  std::vector<Matrix> xs{random_matrix(rng, 2, 4), random_matrix(rng, 2, 4)};
  const auto steps = time_major(xs);
  Matrix targets(2, 8);
  for (int i = 0; i < 2; ++i) targets.row(i) = Eigen::Map<const hero::RowVector>(xs[static_cast<std::size_t>(i)].data(), 8);
  const Matrix noise = random_matrix(rng, 2, 2);

  auto evaluate = [&](bool record, std::vector<Matrix>* grads) {
    hero::Tape tape;
    EncoderParams<hero::Var> ev;
    DecoderParams<hero::Var> dv;
    std::vector<hero::Var*> slots;
    std::vector<Matrix*> values;
    ev.visit([&](const std::string&, hero::Var& v) { slots.push_back(&v); });
    enc.params().visit([&](const std::string&, Matrix& m) { values.push_back(&m); });
    dv.visit([&](const std::string&, hero::Var& v) { slots.push_back(&v); });
    dec.visit([&](const std::string&, Matrix& m) { values.push_back(&m); });
    for (std::size_t k = 0; k < slots.size(); ++k) *slots[k] = tape.leaf(*values[k]);
    const auto loss = vae_objective(tape, ev, dv, steps, targets, noise, enc.hidden(), 0.5);
    if (record) {
      hero::backward(loss);
      for (auto* s : slots) grads->push_back(tape.grad(*s));
    }
    return tape.scalar(loss);
  };
  std::vector<Matrix> grads;
  evaluate(true, &grads);

  std::vector<Matrix*> values;
  enc.params().visit([&](const std::string&, Matrix& m) { values.push_back(&m); });
  double worst = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    Matrix& m = *values[k];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      const double h = 1e-5;
      m.data()[i] = orig + h;
      const double up = evaluate(false, nullptr);
      m.data()[i] = orig - h;
      const double down = evaluate(false, nullptr);
      m.data()[i] = orig;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - grads[k].data()[i]) / std::max({std::abs(fd), std::abs(grads[k].data()[i]), 1e-6}));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Reparameterize, Identities) {
  const auto s = summary({1.0, -2.0}, {1.0, 1.0});
  const std::vector<double> zero{0, 0}, one{1, 1};
  EXPECT_EQ(reparameterize(s, zero), s.mu);
  EXPECT_EQ(reparameterize(s, one), (std::vector<double>{2.0, -1.0}));
  const std::vector<double> bad{std::nan(""), 0};
  EXPECT_THROW(reparameterize(s, bad), hero::ArgumentError);
}

TEST(Reparameterize, MonteCarloMoments) {
  const auto s = summary({0.7, -1.2, 3.0}, {0.5, 2.0, 0.1});
  RandomStream rng(5, 0);
  const std::size_t n = 100000;
  std::vector<double> sum(3, 0.0), sq(3, 0.0);
  std::vector<double> noise(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : noise) v = rng.normal();
    const auto z = reparameterize(s, noise);
    for (std::size_t k = 0; k < 3; ++k) {
      sum[k] += z[k];
      sq[k] += z[k] * z[k];
    }
  }
  const auto sigma = s.sigma();
  for (std::size_t k = 0; k < 3; ++k) {
    const double mean = sum[k] / n;
    const double sd = std::sqrt(sq[k] / n - mean * mean);
    EXPECT_LT(std::abs(mean - s.mu[k]), 3.0 * sigma[k] / std::sqrt(double(n)));
    // Standard error of a sample std is sigma / sqrt(2n).
    EXPECT_LT(std::abs(sd - sigma[k]), 3.0 * sigma[k] / std::sqrt(2.0 * n));
  }
}

TEST(VaeLoss, ClosedForms) {
  const std::vector<double> x{1, 2, 3}, xh{1, 2, 5};
  EXPECT_EQ(vae_loss(x, x, summary({0.0}, {1.0}), 0.7), 0.0);
  EXPECT_NEAR(vae_loss(x, xh, summary({0.3}, {2.0}), 0.0), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(vae_loss(x, x, summary({1.0}, {1.0}), 1.0), 0.5, 1e-15);
  EXPECT_THROW(vae_loss(x, x, summary({0.0}, {1.0}), -1.0), hero::ArgumentError);
}

TEST(VaeLoss, KlIsNonNegative) {
  RandomStream rng(6, 0);
  for (int i = 0; i < 100000; ++i) {
    LatentSummary s{{rng.uniform(-10, 10), rng.uniform(-10, 10)}, {rng.uniform(-15, 5), rng.uniform(-15, 5)}};
    ASSERT_GE(kl_divergence(s), 0.0);
  }
}

TEST(TrainVae, OverfitsSingleSample) {
  RandomStream rng(7, 0);
  hero::data::WindowSample s;
  s.x = random_matrix(rng, 2, 6);
  VaeConfig cfg;
  cfg.beta = 0.0;
  cfg.epochs = 400;
  const std::vector<hero::data::WindowSample> samples{s};
  const auto r = train_vae(samples, cfg, rng);
  EXPECT_LT(r.loss_history.back(), 1e-2);
}

TEST(TrainVae, LossDecreasesOnSyntheticWindows) {
  using namespace hero::data;
  SynthConfig sc;
  sc.duration_hours = 300.0;
  auto ds = fit_normalize(moving_average(condense(synth_generate(sc).dataset, PeriodStride{1.0}), 5));
  const auto samples = make_windows(ds, WindowSpec{});
  VaeConfig cfg;
  cfg.epochs = 100;
  RandomStream rng(8, 0);
  const auto r = train_vae(samples, cfg, rng);
  ASSERT_EQ(r.loss_history.size(), 100u);
  for (double v : r.loss_history) ASSERT_TRUE(std::isfinite(v));
  EXPECT_LE(r.loss_history.back(), r.loss_history.front());
  EXPECT_THROW(train_vae(std::span<const WindowSample>{}, cfg, rng), hero::ArgumentError);
}

TEST(Kde, AnchorValues) {
  const std::vector<LatentSummary> one{summary({0.5}, {1.0})};
  const auto g = kde_fit(one, Kernel::kGaussian);
  const double z = 0.5;
  EXPECT_NEAR(kde_eval(g, std::span<const double>(&z, 1)), 0.398942280401, 1e-12);
  const auto e = kde_fit(one, Kernel::kEpanechnikov);
  const double far = 1.6;
  EXPECT_EQ(kde_eval(e, std::span<const double>(&far, 1)), 0.0);
  EXPECT_EQ(g.centers(0, 0), 0.5);
}

TEST(Kde, BandwidthFloorAndDuplicates) {
  const std::vector<LatentSummary> s{summary({1.0, 2.0}, {1e-9, 0.5}), summary({1.0, 2.0}, {1e-9, 0.5})};
  const auto k = kde_fit(s, Kernel::kGaussian);
  EXPECT_EQ(k.size(), 2u);
  EXPECT_EQ(k.bandwidths(0, 0), kBandwidthFloor);
  EXPECT_EQ(k.bandwidths(0, 1), 0.5);
}

TEST(Kde, IntegratesToOneForEveryKernel) {
  RandomStream rng(9, 0);
  for (Kernel kernel : {Kernel::kGaussian, Kernel::kEpanechnikov, Kernel::kExponential})
    for (int fit = 0; fit < 5; ++fit) {
      std::vector<LatentSummary> s;
      for (int i = 0; i < 6; ++i) s.push_back(summary({rng.uniform(-3, 3)}, {rng.uniform(0.2, 1.5)}));
      const auto kde = kde_fit(s, kernel);
      EXPECT_NEAR(integrate_1d(kde, -60.0, 60.0, 240000), 1.0, 1e-3) << to_string(kernel);
    }
}

TEST(Kde, MirroredCentersGiveSymmetricDensity) {
  RandomStream rng(10, 0);
  std::vector<LatentSummary> s;
  for (int i = 0; i < 5; ++i) {
    const std::vector<double> mu{rng.normal(), rng.normal()};
    const std::vector<double> sd{rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
    s.push_back(summary(mu, sd));
    s.push_back(summary({-mu[0], -mu[1]}, sd));
  }
  for (Kernel kernel : {Kernel::kGaussian, Kernel::kEpanechnikov, Kernel::kExponential}) {
    const auto kde = kde_fit(s, kernel);
    for (int i = 0; i < 100; ++i) {
      const std::vector<double> z{rng.uniform(-3, 3), rng.uniform(-3, 3)}, mz{-z[0], -z[1]};
      const double a = kde_eval(kde, z), b = kde_eval(kde, mz);
      EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, a));
      EXPECT_GE(a, 0.0);
    }
  }
}

TEST(Kde, CenterDenserThanFarField) {
  RandomStream rng(11, 0);
  for (int fit = 0; fit < 20; ++fit) {
    std::vector<LatentSummary> s;
    for (int i = 0; i < 8; ++i) s.push_back(summary({rng.normal(), rng.normal()}, {rng.uniform(0.2, 1), rng.uniform(0.2, 1)}));
    const auto kde = kde_fit(s, Kernel::kGaussian);
    const double pooled = kde.bandwidths.mean();
    const std::vector<double> c{kde.centers(0, 0), kde.centers(0, 1)};
    const std::vector<double> far{c[0] + 10 * pooled + 3 * kde.centers.cwiseAbs().maxCoeff(), c[1]};
    EXPECT_GE(kde_eval(kde, c), kde_eval(kde, far));
  }
}

TEST(Kde, LeaveOneOutAndSerialization) {
  const std::vector<LatentSummary> s{summary({0.0}, {1.0}), summary({5.0}, {1.0})};
  const auto kde = kde_fit(s, Kernel::kGaussian);
  const double z = 0.0;
  const double with_self = kde_eval(kde, std::span<const double>(&z, 1));
  const double loo = kde_eval(kde, std::span<const double>(&z, 1), 0);
  EXPECT_NEAR(loo, std::exp(-12.5) / std::sqrt(2 * std::numbers::pi), 1e-15);
  EXPECT_GT(with_self, loo);
  const auto back = kde_from_json(to_json(kde));
  EXPECT_EQ(kde_eval(back, std::span<const double>(&z, 1)), with_self);
  const std::vector<double> wrong{1.0, 2.0};
  EXPECT_THROW(kde_eval(kde, wrong), hero::ArgumentError);
}

TEST(Encoder, JsonRoundTrip) {
  RandomStream rng(12, 0);
  const auto enc = Encoder::initialize(3, 4, 5, 2, rng);
  const auto back = Encoder::from_json(enc.to_json());
  const Matrix x = random_matrix(rng, 3, 4);
  EXPECT_EQ(back.encode(x).mu, enc.encode(x).mu);
  auto j = enc.to_json();
  j["weights"].erase("u");
  EXPECT_THROW(Encoder::from_json(j), hero::SchemaError);
}

}  // namespace
