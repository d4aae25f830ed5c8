#pragma once

#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "hero/dataset/bounds.hpp"
#include "hero/dataset/csv.hpp"
#include "hero/dataset/dataset.hpp"

namespace hero::data {

using json = nlohmann::json;

inline json to_json(const FeatureBounds& b) {
  json j = json::array();
  for (std::size_t i = 0; i < b.size(); ++i)
    j.push_back({{"feature", b.names[i]}, {"lower", b.lower[i]}, {"upper", b.upper[i]}});
  return j;
}

inline FeatureBounds bounds_from_json(const json& j) {
  std::vector<std::string> names;
  std::vector<double> lo, hi;
  for (const auto& e : j) {
    names.push_back(e.at("feature").get<std::string>());
    lo.push_back(e.at("lower").get<double>());
    hi.push_back(e.at("upper").get<double>());
  }
  return FeatureBounds(std::move(names), std::move(lo), std::move(hi));
}

/// Sidecar describing a CSV export: schema with units, stage, z-score stats
/// and (optionally) constraint bounds.
inline json sidecar_json(const TimeSeriesDataset& ds, const std::optional<FeatureBounds>& bounds) {
  json j;
  j["stage"] = std::string(to_string(ds.stage()));
  j["rows"] = ds.row_count();
  json schema = json::array();
  for (const auto& f : ds.schema()) schema.push_back({{"name", f.name}, {"unit", f.unit}});
  j["schema"] = schema;
  if (ds.stats()) {
    json stats = json::array();
    for (std::size_t c = 0; c < ds.width(); ++c)
      stats.push_back({{"feature", ds.schema()[c].name},
                       {"mean", ds.stats()->mean[c]},
                       {"std", ds.stats()->std[c]},
                       {"constant", static_cast<bool>(ds.stats()->constant[c])}});
    j["stats"] = stats;
  }
  if (bounds) j["bounds"] = to_json(*bounds);
  return j;
}

struct LoadedDataset {
  TimeSeriesDataset dataset;
  std::optional<FeatureBounds> bounds;
};

inline void save_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path,
                         const TimeSeriesDataset& ds, const std::optional<FeatureBounds>& bounds) {
  save_csv(csv_path, ds);
  std::ofstream os(sidecar_path);
  if (!os) throw DataError("cannot write sidecar '" + sidecar_path.string() + "'");
  os << sidecar_json(ds, bounds).dump(2) << '\n';
}

inline LoadedDataset load_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path) {
  std::ifstream in(sidecar_path);
  if (!in) throw DataError("cannot open sidecar '" + sidecar_path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("sidecar is not valid JSON: " + std::string(e.what()));
  }
  Schema schema;
  for (const auto& f : j.at("schema")) schema.push_back({f.at("name"), f.at("unit")});
  const Stage stage = stage_from_string(j.at("stage").get<std::string>());
  TimeSeriesDataset raw = load_csv(csv_path, schema);
  std::optional<NormalizationStats> stats;
  if (j.contains("stats")) {
    NormalizationStats s;
    for (const auto& e : j.at("stats")) {
      s.mean.push_back(e.at("mean"));
      s.std.push_back(e.at("std"));
      s.constant.push_back(e.at("constant").get<bool>());
    }
    stats = std::move(s);
  }
  std::optional<FeatureBounds> bounds;
  if (j.contains("bounds")) bounds = bounds_from_json(j.at("bounds"));
  return {TimeSeriesDataset(schema, raw.rows(), stage, std::move(stats)), std::move(bounds)};
}

}  // namespace hero::data
