#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "hero/errors.hpp"
#include "hero/forecaster/forecaster.hpp"
#include "hero/forecaster/ridge.hpp"
#include "hero/forecaster/tst_mini.hpp"

namespace hero::model {

inline std::unique_ptr<Forecaster> forecaster_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("architecture").at("kind").get<std::string>();
    if (kind == "ridge") return RidgeForecaster::from_json(j);
    if (kind == "tst-mini") return TstMiniForecaster::from_json(j);
    throw SchemaError("unknown forecaster kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed weight file: ") + e.what());
  }
}

inline void save_forecaster(const std::filesystem::path& path, const Forecaster& model) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  os << model.to_json().dump() << '\n';
}

inline std::unique_ptr<Forecaster> load_forecaster(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("weight file is not valid JSON: " + std::string(e.what()));
  }
  return forecaster_from_json(j);
}

}  // namespace hero::model
