#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hero/errors.hpp"
#include "hero/numerics/finite_diff.hpp"
#include "hero/numerics/matrix.hpp"

namespace hero::model {

struct Capabilities {
  bool exact_input_gradient = false;
};

/// Black-box forecaster boundary. Attacks only ever call predict(); gradient
/// access is an optional capability used for the local robustness indicator.
///
/// predict() is reentrant and bumps an atomic evaluation counter once per
/// call, which is what the complexity accounting audits.
class Forecaster {
 public:
  Forecaster(std::size_t features, std::size_t input_length, std::size_t horizon)
      : features_(features), input_length_(input_length), horizon_(horizon) {}
  virtual ~Forecaster() = default;

  Forecaster(const Forecaster&) = delete;
  Forecaster& operator=(const Forecaster&) = delete;

  virtual std::string_view identity() const = 0;
  virtual Capabilities capabilities() const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::size_t features() const noexcept { return features_; }
  std::size_t input_length() const noexcept { return input_length_; }
  std::size_t horizon() const noexcept { return horizon_; }

  std::vector<double> predict(const Matrix& x) const {
    check_input(x);
    evaluations_.fetch_add(1, std::memory_order_relaxed);
    return forward(x);
  }

  /// Gradient of sum_t (f(x)_t - target_t)^2 with respect to x. Only valid when
  /// capabilities().exact_input_gradient is set.
  Matrix loss_gradient(const Matrix& x, std::span<const double> target) const {
    check_input(x);
    if (target.size() != horizon_) throw ArgumentError("target length does not match model horizon");
    if (!capabilities().exact_input_gradient)
      throw ArgumentError(std::string(identity()) + " has no exact input gradient");
    return exact_loss_gradient(x, target);
  }

  std::uint64_t evaluations() const noexcept { return evaluations_.load(std::memory_order_relaxed); }
  void reset_evaluations() noexcept { evaluations_.store(0, std::memory_order_relaxed); }

 protected:
  virtual std::vector<double> forward(const Matrix& x) const = 0;
  virtual Matrix exact_loss_gradient(const Matrix&, std::span<const double>) const {
    throw ArgumentError("exact input gradient not implemented");
  }

  void check_input(const Matrix& x) const {
    if (static_cast<std::size_t>(x.rows()) != features_ || static_cast<std::size_t>(x.cols()) != input_length_)
      throw ArgumentError("input shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                          " does not match model shape " + std::to_string(features_) + "x" +
                          std::to_string(input_length_));
    if (!x.allFinite()) throw ArgumentError("input contains non-finite values");
  }

 private:
  std::size_t features_;
  std::size_t input_length_;
  std::size_t horizon_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
};

inline double squared_loss(std::span<const double> pred, std::span<const double> target) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - target[i]) * (pred[i] - target[i]);
  return acc;
}

enum class GradientMethod { kExact, kFiniteDifference };

inline std::string_view to_string(GradientMethod m) {
  return m == GradientMethod::kExact ? "exact" : "finite-diff";
}

struct InputGradient {
  Matrix gradient;  // features x T
  GradientMethod method = GradientMethod::kExact;
  std::size_t evaluations = 0;  // predict calls consumed
};

/// Input gradient of the squared loss. Uses the exact path when the model
/// supports it unless `force_finite_diff` is set; otherwise falls back to
/// central differences through predict().
inline InputGradient input_gradient(const Forecaster& model, const Matrix& x, std::span<const double> target,
                                    bool force_finite_diff = false, double h = kDefaultFdStep) {
  if (model.capabilities().exact_input_gradient && !force_finite_diff)
    return {model.loss_gradient(x, target), GradientMethod::kExact, 0};
  const auto rows = x.rows(), cols = x.cols();
  const auto fd = finite_diff_gradient(
      [&](std::span<const double> p) { return squared_loss(model.predict(reshape(p, rows, cols)), target); },
      flatten(x), h);
  return {reshape(fd.gradient, rows, cols), GradientMethod::kFiniteDifference, fd.evaluations};
}

// Serialization helpers shared by the weight files.
inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flatten(m)}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto data = j.at("data").get<std::vector<double>>();
  return from_rows(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), data);
}

/// FNV-1a over the raw bytes of a sequence of matrices.
inline std::uint64_t weight_checksum(std::span<const Matrix* const> weights) {
  std::uint64_t h = 1469598103934665603ull;
  for (const Matrix* m : weights) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m->data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(m->size()) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace hero::model
