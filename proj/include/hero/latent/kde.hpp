#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hero/errors.hpp"
#include "hero/forecaster/forecaster.hpp"
#include "hero/latent/vae.hpp"
#include "hero/numerics/matrix.hpp"

namespace hero::latent {

enum class Kernel { kGaussian, kEpanechnikov, kExponential };

inline std::string_view to_string(Kernel k) {
  switch (k) {
    case Kernel::kGaussian: return "gaussian";
    case Kernel::kEpanechnikov: return "epanechnikov";
    case Kernel::kExponential: return "exponential";
  }
  return "gaussian";
}

inline Kernel kernel_from_string(std::string_view s) {
  if (s == "gaussian") return Kernel::kGaussian;
  if (s == "epanechnikov") return Kernel::kEpanechnikov;
  if (s == "exponential") return Kernel::kExponential;
  throw ArgumentError("unknown kernel '" + std::string(s) + "'");
}

inline double kernel_value(Kernel k, double u) {
  switch (k) {
    case Kernel::kGaussian: return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    case Kernel::kEpanechnikov: return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case Kernel::kExponential: return 0.5 * std::exp(-std::abs(u));
  }
  return 0.0;
}

inline constexpr double kBandwidthFloor = 1e-3;

/// Product-kernel density over encoder means with per-point, per-dimension
/// bandwidths taken from the posterior standard deviations.
struct KdeModel {
  Matrix centers;     // N x d_z
  Matrix bandwidths;  // N x d_z, all > 0
  Kernel kernel = Kernel::kGaussian;

  std::size_t size() const noexcept { return static_cast<std::size_t>(centers.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(centers.cols()); }
};

inline KdeModel kde_fit(std::span<const LatentSummary> summaries, Kernel kernel) {
  if (summaries.empty()) throw ArgumentError("kde_fit needs at least one summary");
  const std::size_t d = summaries.front().mu.size();
  KdeModel m;
  m.kernel = kernel;
  m.centers.resize(static_cast<Eigen::Index>(summaries.size()), static_cast<Eigen::Index>(d));
  m.bandwidths.resizeLike(m.centers);
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    if (s.mu.size() != d || s.log_var.size() != d) throw ArgumentError("summaries have inconsistent dimensions");
    const auto sigma = s.sigma();
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(s.mu[k]) || !std::isfinite(sigma[k])) throw ArgumentError("summary is not finite");
      m.centers(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s.mu[k];
      m.bandwidths(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = std::max(sigma[k], kBandwidthFloor);
    }
  }
  return m;
}

/// g(z) = (1/N) sum_i prod_d K((z_d - mu_id) / h_id) / h_id. With `exclude`
/// set, that center is left out (leave-one-out scoring).
inline double kde_eval(const KdeModel& kde, std::span<const double> z, std::optional<std::size_t> exclude = {}) {
  if (z.size() != kde.dim()) throw ArgumentError("kde_eval: point dimension does not match the model");
  for (double v : z)
    if (!std::isfinite(v)) throw ArgumentError("kde_eval: point is not finite");
  const std::size_t n = kde.size();
  if (exclude && (*exclude >= n || n < 2)) throw ArgumentError("kde_eval: cannot leave out that center");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude && *exclude == i) continue;
    double term = 1.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double h = kde.bandwidths(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      term *= kernel_value(kde.kernel, (z[k] - kde.centers(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) / h) / h;
      if (term == 0.0) break;
    }
    acc += term;
  }
  return acc / static_cast<double>(exclude ? n - 1 : n);
}

inline nlohmann::json to_json(const KdeModel& kde) {
  return {{"kind", "kde"},
          {"kernel", std::string(to_string(kde.kernel))},
          {"centers", model::matrix_to_json(kde.centers)},
          {"bandwidths", model::matrix_to_json(kde.bandwidths)}};
}

inline KdeModel kde_from_json(const nlohmann::json& j) {
  try {
    KdeModel m;
    m.kernel = kernel_from_string(j.at("kernel").get<std::string>());
    m.centers = model::matrix_from_json(j.at("centers"));
    m.bandwidths = model::matrix_from_json(j.at("bandwidths"));
    if (m.centers.rows() < 1 || m.centers.rows() != m.bandwidths.rows() || m.centers.cols() != m.bandwidths.cols())
      throw SchemaError("KDE centers and bandwidths disagree in shape");
    if (!(m.bandwidths.minCoeff() > 0.0)) throw SchemaError("KDE bandwidths must be positive");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed KDE file: ") + e.what());
  }
}

}  // namespace hero::latent
