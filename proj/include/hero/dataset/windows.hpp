#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hero/dataset/dataset.hpp"
#include "hero/errors.hpp"
#include "hero/numerics/matrix.hpp"

namespace hero::data {

/// One (input window, target horizon) pair in normalized units.
struct WindowSample {
  Matrix x;                  // features x T
  std::vector<double> y;     // S future target values
  double origin_time = 0.0;  // time of the last input step, hours
  std::size_t start_row = 0;
};

struct WindowSpec {
  std::vector<std::string> features = default_model_features();
  std::string target = std::string(kTargetColumn);
  std::size_t input_length = 24;  // T
  std::size_t horizon = 8;        // S
  std::size_t stride = 4;
};

inline std::size_t window_count(std::size_t rows, std::size_t input_length, std::size_t horizon,
                                std::size_t stride) {
  if (input_length + horizon > rows) return 0;
  return (rows - input_length - horizon) / stride + 1;
}

inline std::vector<WindowSample> make_windows(const TimeSeriesDataset& ds, const WindowSpec& spec) {
  if (ds.stage() != Stage::kNormalized) throw ArgumentError("make_windows expects a normalized dataset");
  if (spec.input_length == 0 || spec.horizon == 0) throw ArgumentError("window lengths must be positive");
  if (spec.stride == 0) throw ArgumentError("window stride must be positive");
  if (spec.features.empty()) throw ArgumentError("window needs at least one feature");
  if (spec.input_length + spec.horizon > ds.row_count())
    throw ArgumentError("input length + horizon exceeds the dataset row count");

  std::vector<Eigen::Index> cols;
  for (const auto& f : spec.features) cols.push_back(static_cast<Eigen::Index>(ds.column(f)));
  const auto target = static_cast<Eigen::Index>(ds.column(spec.target));
  const auto& rows = ds.rows();
  const std::size_t n = window_count(ds.row_count(), spec.input_length, spec.horizon, spec.stride);

  std::vector<WindowSample> out;
  out.reserve(n);
  for (std::size_t w = 0; w < n; ++w) {
    const std::size_t start = w * spec.stride;
    WindowSample s;
    s.start_row = start;
    s.x.resize(static_cast<Eigen::Index>(cols.size()), static_cast<Eigen::Index>(spec.input_length));
    for (std::size_t f = 0; f < cols.size(); ++f)
      for (std::size_t t = 0; t < spec.input_length; ++t)
        s.x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t)) =
            rows(static_cast<Eigen::Index>(start + t), cols[f]);
    s.y.resize(spec.horizon);
    for (std::size_t k = 0; k < spec.horizon; ++k)
      s.y[k] = rows(static_cast<Eigen::Index>(start + spec.input_length + k), target);
    s.origin_time = rows(static_cast<Eigen::Index>(start + spec.input_length - 1), 0);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hero::data
