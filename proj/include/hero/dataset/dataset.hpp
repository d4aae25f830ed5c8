#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hero/errors.hpp"
#include "hero/numerics/matrix.hpp"

namespace hero::data {

struct FeatureSpec {
  std::string name;
  std::string unit;
};

using Schema = std::vector<FeatureSpec>;

inline constexpr std::string_view kTimeColumn = "Time";
inline constexpr std::string_view kTargetColumn = "Utot";

/// The PEMFC health-monitoring feature set: aging time, five cell voltages,
/// stack voltage, current and current density, then inlet/outlet temperatures,
/// pressures and flow rates, cooling water flow, and inlet-air hygrometry.
inline Schema pemfc_schema() {
  return {
      {"Time", "h"},       {"U1", "V"},         {"U2", "V"},         {"U3", "V"},
      {"U4", "V"},         {"U5", "V"},         {"Utot", "V"},       {"I", "A"},
      {"J", "A/cm2"},      {"TinH2", "degC"},   {"ToutH2", "degC"},  {"TinAIR", "degC"},
      {"ToutAIR", "degC"}, {"TinWAT", "degC"},  {"ToutWAT", "degC"}, {"PinH2", "mbara"},
      {"PoutH2", "mbara"}, {"PinAIR", "mbara"}, {"PoutAIR", "mbara"}, {"DinH2", "l/min"},
      {"DoutH2", "l/min"}, {"DinAIR", "l/min"}, {"DoutAIR", "l/min"}, {"DWAT", "l/min"},
      {"HrAIRFC", "%"},
  };
}

/// Default model inputs: the variables that carry physical constraint ranges.
inline std::vector<std::string> default_model_features() {
  return {"Utot", "TinH2", "TinAIR", "ToutH2", "TinWAT", "I", "PoutAIR", "HrAIRFC", "ToutAIR"};
}

inline std::size_t column_index(const Schema& schema, std::string_view name) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return i;
  throw SchemaError("schema has no column '" + std::string(name) + "'");
}

enum class Stage { kRaw, kCondensed, kFiltered, kNormalized };

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kRaw: return "raw";
    case Stage::kCondensed: return "condensed";
    case Stage::kFiltered: return "filtered";
    case Stage::kNormalized: return "normalized";
  }
  return "raw";
}

inline Stage stage_from_string(std::string_view s) {
  if (s == "raw") return Stage::kRaw;
  if (s == "condensed") return Stage::kCondensed;
  if (s == "filtered") return Stage::kFiltered;
  if (s == "normalized") return Stage::kNormalized;
  throw DataError("unknown dataset stage '" + std::string(s) + "'");
}

/// Per-column z-score statistics. The time column keeps mean 0 / std 1 and is
/// never transformed. Columns with zero spread are flagged and map to 0.
struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;

  double normalize(std::size_t col, double v) const {
    return constant[col] ? 0.0 : (v - mean[col]) / std[col];
  }
  double denormalize(std::size_t col, double z) const {
    return constant[col] ? mean[col] : z * std[col] + mean[col];
  }
};

/// Time-ordered multivariate table. Column 0 is always the time column in hours.
class TimeSeriesDataset {
 public:
  TimeSeriesDataset(Schema schema, Matrix rows, Stage stage,
                    std::optional<NormalizationStats> stats = std::nullopt)
      : schema_(std::move(schema)), rows_(std::move(rows)), stage_(stage), stats_(std::move(stats)) {
    validate();
  }

  const Schema& schema() const noexcept { return schema_; }
  const Matrix& rows() const noexcept { return rows_; }
  Stage stage() const noexcept { return stage_; }
  const std::optional<NormalizationStats>& stats() const noexcept { return stats_; }

  std::size_t row_count() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t width() const noexcept { return schema_.size(); }

  double time(std::size_t row) const { return rows_(static_cast<Eigen::Index>(row), 0); }

  std::size_t column(std::string_view name) const { return column_index(schema_, name); }

  std::vector<double> column_values(std::size_t col) const {
    std::vector<double> out(row_count());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = rows_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
    return out;
  }

  std::vector<double> column_values(std::string_view name) const { return column_values(column(name)); }

 private:
  void validate() const {
    if (schema_.empty() || schema_.front().name != kTimeColumn)
      throw SchemaError("first schema column must be 'Time'");
    if (static_cast<std::size_t>(rows_.cols()) != schema_.size())
      throw DataError("row width does not match schema width");
    if (!rows_.allFinite()) throw DataError("dataset contains non-finite values");
    for (Eigen::Index r = 1; r < rows_.rows(); ++r)
      if (!(rows_(r, 0) > rows_(r - 1, 0)))
        throw DataError("time column not strictly increasing at row " + std::to_string(r));
    if ((stage_ == Stage::kNormalized) != stats_.has_value())
      throw DataError("normalization stats must be present exactly when stage is normalized");
    if (stats_ && (stats_->mean.size() != schema_.size() || stats_->std.size() != schema_.size() ||
                   stats_->constant.size() != schema_.size()))
      throw DataError("normalization stats width does not match schema");
  }

  Schema schema_;
  Matrix rows_;
  Stage stage_;
  std::optional<NormalizationStats> stats_;
};

}  // namespace hero::data
