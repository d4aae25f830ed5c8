#pragma once

#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include "hero/dataset/dataset.hpp"
#include "hero/errors.hpp"

namespace hero::data {

/// Keep every `rows`-th row.
struct CountStride {
  std::size_t rows = 1;
};

/// Keep the first row of every `hours`-long bucket, measured from the first
/// timestamp.
struct PeriodStride {
  double hours = 0.1;
};

using Stride = std::variant<CountStride, PeriodStride>;

/// Closed-form row count of a count-mode condense.
inline std::size_t condensed_count(std::size_t rows, std::size_t stride) {
  return (rows + stride - 1) / stride;
}

inline TimeSeriesDataset condense(const TimeSeriesDataset& ds, const Stride& stride) {
  if (ds.stage() != Stage::kRaw) throw ArgumentError("condense expects a raw dataset");
  std::vector<Eigen::Index> keep;
  const auto& rows = ds.rows();
  if (const auto* count = std::get_if<CountStride>(&stride)) {
    if (count->rows == 0) throw ArgumentError("condense stride must be at least 1");
    for (Eigen::Index r = 0; r < rows.rows(); r += static_cast<Eigen::Index>(count->rows)) keep.push_back(r);
  } else {
    const double period = std::get<PeriodStride>(stride).hours;
    if (!(period > 0.0) || !std::isfinite(period)) throw ArgumentError("condense period must be positive");
    double last_bucket = -1.0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      const double bucket = std::floor((rows(r, 0) - rows(0, 0)) / period);
      if (bucket > last_bucket) {
        keep.push_back(r);
        last_bucket = bucket;
      }
    }
  }
  Matrix out(static_cast<Eigen::Index>(keep.size()), rows.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows.row(keep[i]);
  return TimeSeriesDataset(ds.schema(), std::move(out), Stage::kCondensed);
}

/// Centered moving average over every non-time column. Near the edges the
/// window shrinks symmetrically so the output keeps the input length and
/// stays centered.
inline TimeSeriesDataset moving_average(const TimeSeriesDataset& ds, std::size_t window) {
  if (ds.stage() != Stage::kCondensed) throw ArgumentError("moving_average expects a condensed dataset");
  if (window == 0 || window % 2 == 0) throw ArgumentError("moving-average window must be odd and >= 1");
  if (window > ds.row_count()) throw ArgumentError("moving-average window exceeds row count");
  const auto& in = ds.rows();
  const Eigen::Index n = in.rows();
  const Eigen::Index half = static_cast<Eigen::Index>(window / 2);
  Matrix out = in;
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index h = std::min({half, r, n - 1 - r});
    const Eigen::Index len = 2 * h + 1;
    out.block(r, 1, 1, in.cols() - 1) =
        in.block(r - h, 1, len, in.cols() - 1).colwise().sum() / static_cast<double>(len);
  }
  return TimeSeriesDataset(ds.schema(), std::move(out), Stage::kFiltered);
}

/// Z-score every non-time column with population statistics.
inline TimeSeriesDataset fit_normalize(const TimeSeriesDataset& ds) {
  if (ds.stage() != Stage::kFiltered) throw ArgumentError("fit_normalize expects a filtered dataset");
  const auto& in = ds.rows();
  const std::size_t w = ds.width();
  NormalizationStats stats{std::vector<double>(w, 0.0), std::vector<double>(w, 1.0), std::vector<bool>(w, false)};
  Matrix out = in;
  const double n = static_cast<double>(in.rows());
  for (std::size_t c = 1; c < w; ++c) {
    const auto col = in.col(static_cast<Eigen::Index>(c));
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    stats.mean[c] = mean;
    stats.std[c] = std::sqrt(var);
    // Relative floor: a column whose spread is pure rounding noise is constant.
    stats.constant[c] = !(stats.std[c] > 1e-12 * std::max(1.0, std::abs(mean)));
    for (Eigen::Index r = 0; r < in.rows(); ++r)
      out(r, static_cast<Eigen::Index>(c)) = stats.normalize(c, in(r, static_cast<Eigen::Index>(c)));
  }
  return TimeSeriesDataset(ds.schema(), std::move(out), Stage::kNormalized, std::move(stats));
}

/// Undo fit_normalize, returning a filtered-stage dataset.
inline TimeSeriesDataset inverse_normalize(const TimeSeriesDataset& ds) {
  if (ds.stage() != Stage::kNormalized) throw ArgumentError("inverse_normalize expects a normalized dataset");
  const auto& stats = *ds.stats();
  Matrix out = ds.rows();
  for (std::size_t c = 1; c < ds.width(); ++c)
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      out(r, static_cast<Eigen::Index>(c)) = stats.denormalize(c, out(r, static_cast<Eigen::Index>(c)));
  return TimeSeriesDataset(ds.schema(), std::move(out), Stage::kFiltered);
}

/// Drops raw rows where any non-time feature has |z| > k. Off by default in
/// campaigns.
inline TimeSeriesDataset remove_outliers(const TimeSeriesDataset& ds, double k) {
  if (ds.stage() != Stage::kRaw) throw ArgumentError("remove_outliers expects a raw dataset");
  if (!(k > 0.0)) throw ArgumentError("outlier threshold must be positive");
  const auto& in = ds.rows();
  const double n = static_cast<double>(in.rows());
  std::vector<bool> drop(static_cast<std::size_t>(in.rows()), false);
  for (Eigen::Index c = 1; c < in.cols(); ++c) {
    const double mean = in.col(c).sum() / n;
    const double sd = std::sqrt((in.col(c).array() - mean).square().sum() / n);
    if (!(sd > 0.0)) continue;
    for (Eigen::Index r = 0; r < in.rows(); ++r)
      if (std::abs(in(r, c) - mean) / sd > k) drop[static_cast<std::size_t>(r)] = true;
  }
  std::vector<double> kept;
  std::size_t rows = 0;
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    if (drop[static_cast<std::size_t>(r)]) continue;
    kept.insert(kept.end(), in.row(r).data(), in.row(r).data() + in.cols());
    ++rows;
  }
  return TimeSeriesDataset(ds.schema(), from_rows(rows, ds.width(), kept), Stage::kRaw);
}

}  // namespace hero::data
