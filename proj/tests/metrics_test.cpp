#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hero/dataset/synth.hpp"
#include "hero/metrics.hpp"

namespace {

using namespace hero::metrics;

TEST(Regression, RmseAndR2) {
  const std::vector<double> t{1, 2, 3}, p{1, 2, 4};
  EXPECT_NEAR(rmse(t, p), std::sqrt(1.0 / 3.0), 1e-15);
  EXPECT_DOUBLE_EQ(r2(t, t), 1.0);
  const std::vector<double> mean{2, 2, 2};
  EXPECT_NEAR(r2(t, mean), 0.0, 1e-15);
  EXPECT_NEAR(r2(t, p), 1.0 - 1.0 / 2.0, 1e-15);
}

TEST(Regression, R2UndefinedOnConstantTruth) {
  const std::vector<double> c{5, 5, 5}, p{1, 2, 3};
  EXPECT_THROW(r2(c, p), UndefinedR2Error);
  const std::vector<double> one{1};
  EXPECT_THROW(r2(one, one), hero::ArgumentError);
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), hero::ArgumentError);
}

TEST(Accuracy, AnchorValues) {
  EXPECT_DOUBLE_EQ(accuracy_score(0.0), 1.0);
  EXPECT_EQ(accuracy_score(20.0), 0.5);
  EXPECT_EQ(accuracy_score(-5.0), 0.5);
  EXPECT_NEAR(accuracy_score(40.0), 0.25, 1e-15);
  EXPECT_NEAR(accuracy_score(-10.0), 0.25, 1e-15);
  // Late forecasts are penalized harder than early ones of the same size.
  for (double e : {1.0, 3.0, 10.0, 30.0}) EXPECT_LT(accuracy_score(-e), accuracy_score(e));
}

TEST(Accuracy, PercentErrorSign) {
  EXPECT_NEAR(percent_error(200.0, 150.0), 25.0, 1e-12);
  EXPECT_NEAR(percent_error(261.0, 336.0), -28.735632183908, 1e-9);
  EXPECT_THROW(percent_error(0.0, 10.0), hero::ArgumentError);
  EXPECT_FALSE(percent_error(RulEstimate{10, true}, RulEstimate{10, false}).has_value());
  EXPECT_FALSE(percent_error(RulEstimate{0, false}, RulEstimate{10, false}).has_value());
}

TEST(Rul, InterpolatesBetweenSamples) {
  // Threshold for ft = 0.05 on v0 = 10 is 9.5, crossed halfway between t = 0.5 and t = 1.5.
  const std::vector<double> t{0.0, 0.5, 1.5, 2.5}, v{10.0, 9.75, 9.25, 9.0};
  const auto r = rul_from_forecast(t, v, 0.0, 10.0, 0.05);
  EXPECT_FALSE(r.censored);
  EXPECT_NEAR(r.hours, 1.0, 1e-12);
  EXPECT_NEAR(rul_from_forecast(t, v, 0.25, 10.0, 0.05).hours, 0.75, 1e-12);
}

TEST(Rul, CensoredAndAlreadyBelow) {
  const std::vector<double> t{0, 1, 2}, v{10, 9.9, 9.8};
  const auto c = rul_from_forecast(t, v, 0.0, 10.0, 0.05);
  EXPECT_TRUE(c.censored);
  EXPECT_DOUBLE_EQ(c.hours, 2.0);
  const std::vector<double> low{9, 8, 7};
  const auto b = rul_from_forecast(t, low, 0.0, 10.0, 0.05);
  EXPECT_FALSE(b.censored);
  EXPECT_DOUBLE_EQ(b.hours, 0.0);
}

TEST(Rul, MonotoneInThreshold) {
  std::vector<double> t, v;
  for (int i = 0; i <= 1000; ++i) {
    t.push_back(i);
    v.push_back(10.0 - 0.001 * i + 0.01 * std::sin(0.3 * i));
  }
  double prev = -1.0;
  for (double ft : kFaultThresholds) {
    const auto r = rul_from_forecast(t, v, 0.0, 10.0, ft);
    ASSERT_FALSE(r.censored);
    EXPECT_GT(r.hours, prev);
    prev = r.hours;
  }
}

TEST(Score, MeanOfFiveThresholds) {
  std::vector<ThresholdAssessment> e;
  const double a[] = {1, 1, 1, 1, 0.5};
  for (std::size_t i = 0; i < 5; ++i) e.push_back({kFaultThresholds[i], {}, {}, 0.0, a[i]});
  EXPECT_NEAR(score_rul(e), 0.9, 1e-15);
  e.pop_back();
  EXPECT_THROW(score_rul(e), hero::ArgumentError);
  e.push_back({0.06, {}, {}, 0.0, 1.0});
  EXPECT_THROW(score_rul(e), hero::ArgumentError);
}

TEST(Score, PerfectForecastOnNoiseFreeSynthScoresOne) {
  hero::data::SynthConfig cfg;
  cfg.noise_std = 0.0;
  cfg.ripple_amplitude = 0.0;
  std::vector<double> t, v;
  for (double h = 0.0; h <= cfg.duration_hours; h += 1.0) {
    t.push_back(h);
    v.push_back(hero::data::synth_clean_voltage(cfg, h));
  }
  const auto r = assess_rul(t, v, v, 0.0, cfg.initial_voltage);
  EXPECT_DOUBLE_EQ(r.score_rul, 1.0);
  for (const auto& e : r.thresholds) {
    ASSERT_TRUE(e.percent_error.has_value());
    EXPECT_NEAR(e.rul_true.hours, e.ft / cfg.degradation_rate, 1e-6);
  }
}

TEST(Score, UndefinedErrorScoresZero) {
  const std::vector<double> t{0, 1, 2, 3}, actual{10, 9.7, 9.3, 9.0}, flat{10, 10, 10, 10};
  const auto r = assess_rul(t, actual, flat, 0.0, 10.0);
  for (const auto& e : r.thresholds) {
    EXPECT_TRUE(e.rul_pred.censored);
    EXPECT_FALSE(e.percent_error.has_value());
    EXPECT_EQ(e.a_ft, 0.0);
  }
  EXPECT_EQ(r.score_rul, 0.0);
}

}  // namespace
