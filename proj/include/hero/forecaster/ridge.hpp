#pragma once

#include <memory>
#include <span>
#include <string_view>

#include "hero/dataset/windows.hpp"
#include "hero/errors.hpp"
#include "hero/forecaster/forecaster.hpp"

namespace hero::model {

/// Linear map from the flattened (row-major) window to the horizon:
/// y = vec(x) W + b.
class RidgeForecaster final : public Forecaster {
 public:
  RidgeForecaster(std::size_t features, std::size_t input_length, Matrix weights, Matrix bias)
      : Forecaster(features, input_length, static_cast<std::size_t>(weights.cols())),
        weights_(std::move(weights)),
        bias_(std::move(bias)) {
    if (static_cast<std::size_t>(weights_.rows()) != features * input_length)
      throw ArgumentError("ridge weight rows must equal features * input_length");
    if (bias_.rows() != 1 || bias_.cols() != weights_.cols()) throw ArgumentError("ridge bias shape mismatch");
  }

  static RidgeForecaster zeros(std::size_t features, std::size_t input_length, std::size_t horizon) {
    return RidgeForecaster(features, input_length,
                           Matrix::Zero(static_cast<Eigen::Index>(features * input_length), static_cast<Eigen::Index>(horizon)),
                           Matrix::Zero(1, static_cast<Eigen::Index>(horizon)));
  }

  std::string_view identity() const override { return "ridge"; }
  Capabilities capabilities() const override { return {true}; }

  const Matrix& weights() const noexcept { return weights_; }
  const Matrix& bias() const noexcept { return bias_; }

  nlohmann::json to_json() const override {
    return {{"architecture",
             {{"kind", "ridge"}, {"features", features()}, {"input_length", input_length()}, {"horizon", horizon()}}},
            {"weights", {{"w", matrix_to_json(weights_)}, {"b", matrix_to_json(bias_)}}}};
  }

  static std::unique_ptr<RidgeForecaster> from_json(const nlohmann::json& j) {
    const auto& a = j.at("architecture");
    return std::make_unique<RidgeForecaster>(a.at("features").get<std::size_t>(),
                                             a.at("input_length").get<std::size_t>(),
                                             matrix_from_json(j.at("weights").at("w")),
                                             matrix_from_json(j.at("weights").at("b")));
  }

 protected:
  std::vector<double> forward(const Matrix& x) const override {
    const RowVector y = Eigen::Map<const RowVector>(x.data(), x.size()) * weights_ + bias_;
    return std::vector<double>(y.data(), y.data() + y.size());
  }

  Matrix exact_loss_gradient(const Matrix& x, std::span<const double> target) const override {
    const RowVector y = Eigen::Map<const RowVector>(x.data(), x.size()) * weights_ + bias_;
    const RowVector resid = y - Eigen::Map<const RowVector>(target.data(), static_cast<Eigen::Index>(target.size()));
    const RowVector g = 2.0 * resid * weights_.transpose();
    return reshape(std::span<const double>(g.data(), static_cast<std::size_t>(g.size())), features(), input_length());
  }

 private:
  Matrix weights_;
  Matrix bias_;
};

/// Design matrix (one flattened window per row) and stacked targets.
inline std::pair<Matrix, Matrix> stack_samples(std::span<const data::WindowSample> samples) {
  if (samples.empty()) throw ArgumentError("need at least one sample");
  const auto m = samples.front().x.size();
  const auto s = static_cast<Eigen::Index>(samples.front().y.size());
  Matrix a(static_cast<Eigen::Index>(samples.size()), m), y(static_cast<Eigen::Index>(samples.size()), s);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != m || static_cast<Eigen::Index>(samples[i].y.size()) != s)
      throw ArgumentError("samples have inconsistent shapes");
    a.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVector>(samples[i].x.data(), m);
    y.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVector>(samples[i].y.data(), s);
  }
  return {std::move(a), std::move(y)};
}

/// Closed-form ridge regression with an unpenalized intercept, solved on
/// centered data: (Ac^T Ac + l2 I) W = Ac^T Yc, b = mean(Y) - mean(A) W.
inline RidgeForecaster train_ridge(std::span<const data::WindowSample> samples, double l2) {
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ArgumentError("ridge l2 must be finite and >= 0");
  auto [a, y] = stack_samples(samples);
  const RowVector a_mean = a.colwise().mean();
  const RowVector y_mean = y.colwise().mean();
  a.rowwise() -= a_mean;
  y.rowwise() -= y_mean;
  Matrix gram = a.transpose() * a;
  gram.diagonal().array() += l2;
  const Matrix rhs = a.transpose() * y;
  Matrix w;
  if (l2 > 0.0) {
    w = gram.ldlt().solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(gram);
    if (qr.rank() < gram.rows())
      throw NumericError("ridge normal equations are singular with l2 = 0; use l2 > 0");
    w = qr.solve(rhs);
  }
  if (!w.allFinite()) throw NumericError("ridge solution is not finite; increase l2");
  Matrix b = y_mean - a_mean * w;
  const auto& x0 = samples.front().x;
  return RidgeForecaster(static_cast<std::size_t>(x0.rows()), static_cast<std::size_t>(x0.cols()), std::move(w),
                         std::move(b));
}

}  // namespace hero::model
