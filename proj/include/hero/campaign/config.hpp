#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hero/dataset/dataset.hpp"
#include "hero/dataset/synth.hpp"
#include "hero/dataset/windows.hpp"
#include "hero/engine/attack.hpp"
#include "hero/errors.hpp"
#include "hero/forecaster/forecaster.hpp"
#include "hero/forecaster/tst_mini.hpp"
#include "hero/latent/kde.hpp"
#include "hero/latent/vae.hpp"

namespace hero::campaign {

using nlohmann::json;

struct DataConfig {
  std::optional<std::filesystem::path> csv;  // unset: synthetic
  data::SynthConfig synthetic;
  double condense_hours = 0.1;
  std::size_t filter_window = 5;
  std::string bounds = "observed";  // "observed" or "reference"
  data::WindowSpec windows;
  double train_fraction = 0.6;
  double validation_fraction = 0.2;
};

struct ModelConfig {
  std::string kind = "tst-mini";  // "tst-mini" or "ridge"
  model::TstMiniConfig tst_mini;
  double ridge_l2 = 1.0;
};

struct LatentConfig {
  latent::VaeConfig vae;
  latent::Kernel kernel = latent::Kernel::kGaussian;
};

struct SelectionConfig {
  std::size_t k = 20;
  model::GradientMethod lri_method = model::GradientMethod::kExact;
};

struct CompareConfig {
  std::vector<std::string> attackers = {"aro", "ga", "random"};
  std::size_t seeds = 5;  // leading selected seeds used for the comparison
};

struct CampaignConfig {
  std::uint64_t seed = 2024;
  DataConfig data;
  ModelConfig model;
  LatentConfig latent;
  SelectionConfig selection;
  engine::AttackConfig attack;
  CompareConfig compare;
  std::filesystem::path output = "runs/campaign";

  void validate() const;
};

namespace detail {

// Rejects keys outside `allowed` so typos in config files surface early.
inline void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ArgumentError(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ArgumentError("unknown key '" + key + "' in " + std::string(where));
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ArgumentError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline void CampaignConfig::validate() const {
  if (data.csv && !std::filesystem::exists(*data.csv))
    throw ArgumentError("data file '" + data.csv->string() + "' does not exist");
  if (!data.csv) data.synthetic.validate();
  if (!(data.condense_hours > 0.0)) throw ArgumentError("condense_hours must be > 0");
  if (data.filter_window == 0 || data.filter_window % 2 == 0) throw ArgumentError("filter_window must be odd");
  if (data.bounds != "observed" && data.bounds != "reference")
    throw ArgumentError("bounds must be 'observed' or 'reference'");
  if (data.windows.input_length == 0 || data.windows.horizon == 0 || data.windows.stride == 0)
    throw ArgumentError("window lengths and stride must be positive");
  if (data.windows.features.empty()) throw ArgumentError("at least one model feature is required");
  if (!(data.train_fraction > 0.0) || !(data.validation_fraction >= 0.0) ||
      !(data.train_fraction + data.validation_fraction < 1.0))
    throw ArgumentError("split fractions must leave a non-empty test split");
  if (model.kind != "tst-mini" && model.kind != "ridge") throw ArgumentError("model.kind must be 'tst-mini' or 'ridge'");
  model.tst_mini.validate();
  if (!(model.ridge_l2 >= 0.0)) throw ArgumentError("ridge_l2 must be >= 0");
  latent.vae.validate();
  if (selection.k < 1) throw ArgumentError("selection.k must be >= 1");
  attack.validate();
  for (const auto& a : compare.attackers)
    if (a != "aro" && a != "ga" && a != "random") throw ArgumentError("unknown attacker '" + a + "'");
}

inline json to_json(const data::SynthConfig& s) {
  json features = json::object();
  for (const auto& [name, m] : s.features) features[name] = {{"mean", m.mean}, {"std", m.std}};
  return {{"duration_hours", s.duration_hours},
          {"sample_period_hours", s.sample_period_hours},
          {"initial_voltage", s.initial_voltage},
          {"degradation_rate", s.degradation_rate},
          {"ripple_amplitude", s.ripple_amplitude},
          {"ripple_period_hours", s.ripple_period_hours},
          {"noise_std", s.noise_std},
          {"ar_coefficient", s.ar_coefficient},
          {"features", features}};
}

inline json to_json(const CampaignConfig& c) {
  const auto& d = c.data;
  const auto& t = c.model.tst_mini;
  const auto& v = c.latent.vae;
  const auto& a = c.attack;
  return {
      {"seed", c.seed},
      {"data",
       {{"csv", d.csv ? json(d.csv->string()) : json(nullptr)},
        {"synthetic", to_json(d.synthetic)},
        {"condense_hours", d.condense_hours},
        {"filter_window", d.filter_window},
        {"bounds", d.bounds},
        {"features", d.windows.features},
        {"target", d.windows.target},
        {"input_length", d.windows.input_length},
        {"horizon", d.windows.horizon},
        {"stride", d.windows.stride},
        {"train_fraction", d.train_fraction},
        {"validation_fraction", d.validation_fraction}}},
      {"model",
       {{"kind", c.model.kind},
        {"ridge_l2", c.model.ridge_l2},
        {"tst_mini",
         {{"d_model", t.d_model},
          {"ratios", t.ratios},
          {"instance_norm", t.instance_norm},
          {"ffn_width", t.ffn_width},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate}}}}},
      {"latent",
       {{"hidden", v.hidden},
        {"latent", v.latent},
        {"decoder_hidden", v.decoder_hidden},
        {"beta", v.beta},
        {"epochs", v.epochs},
        {"learning_rate", v.learning_rate},
        {"kernel", std::string(latent::to_string(c.latent.kernel))}}},
      {"selection", {{"k", c.selection.k}, {"lri_method", std::string(model::to_string(c.selection.lri_method))}}},
      {"attack",
       {{"epsilon", a.epsilon},
        {"alpha", a.alpha},
        {"generations", a.generations},
        {"population", a.population},
        {"balance", a.balance},
        {"round_detour_noise", a.round_detour_noise},
        {"restart_worst", a.restart_worst},
        {"crossover_rate", a.crossover_rate},
        {"mutation_rate", a.mutation_rate < 0.0 ? json(nullptr) : json(a.mutation_rate)}}},
      {"compare", {{"attackers", c.compare.attackers}, {"seeds", c.compare.seeds}}},
      {"output", c.output.string()},
  };
}

/// Parses a campaign config. Missing keys keep their defaults; unknown keys
/// and wrong types are argument errors. Relative data paths resolve against
/// `base_dir`.
inline CampaignConfig config_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  using detail::check_keys;
  using detail::read;
  CampaignConfig c;
  check_keys(j, "config", {"seed", "data", "model", "latent", "selection", "attack", "compare", "output"});
  read(j, "seed", c.seed);
  if (j.contains("output")) c.output = j.at("output").get<std::string>();

  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, "data",
               {"csv", "synthetic", "condense_hours", "filter_window", "bounds", "features", "target", "input_length",
                "horizon", "stride", "train_fraction", "validation_fraction"});
    if (d.contains("csv") && !d.at("csv").is_null()) {
      std::filesystem::path p = d.at("csv").get<std::string>();
      c.data.csv = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      check_keys(s, "data.synthetic",
                 {"duration_hours", "sample_period_hours", "initial_voltage", "degradation_rate", "ripple_amplitude",
                  "ripple_period_hours", "noise_std", "ar_coefficient", "features"});
      auto& sc = c.data.synthetic;
      read(s, "duration_hours", sc.duration_hours);
      read(s, "sample_period_hours", sc.sample_period_hours);
      read(s, "initial_voltage", sc.initial_voltage);
      read(s, "degradation_rate", sc.degradation_rate);
      read(s, "ripple_amplitude", sc.ripple_amplitude);
      read(s, "ripple_period_hours", sc.ripple_period_hours);
      read(s, "noise_std", sc.noise_std);
      read(s, "ar_coefficient", sc.ar_coefficient);
      if (s.contains("features")) {
        sc.features.clear();
        for (const auto& [name, m] : s.at("features").items()) {
          check_keys(m, "data.synthetic.features", {"mean", "std"});
          sc.features[name] = {m.value("mean", 0.0), m.value("std", 0.0)};
        }
      }
    }
    read(d, "condense_hours", c.data.condense_hours);
    read(d, "filter_window", c.data.filter_window);
    read(d, "bounds", c.data.bounds);
    read(d, "features", c.data.windows.features);
    read(d, "target", c.data.windows.target);
    read(d, "input_length", c.data.windows.input_length);
    read(d, "horizon", c.data.windows.horizon);
    read(d, "stride", c.data.windows.stride);
    read(d, "train_fraction", c.data.train_fraction);
    read(d, "validation_fraction", c.data.validation_fraction);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, "model", {"kind", "tst_mini", "ridge_l2"});
    read(m, "kind", c.model.kind);
    read(m, "ridge_l2", c.model.ridge_l2);
    if (m.contains("tst_mini")) {
      const auto& t = m.at("tst_mini");
      check_keys(t, "model.tst_mini",
                 {"d_model", "ratios", "instance_norm", "ffn_width", "epochs", "batch_size", "learning_rate"});
      auto& tc = c.model.tst_mini;
      read(t, "d_model", tc.d_model);
      read(t, "ratios", tc.ratios);
      read(t, "instance_norm", tc.instance_norm);
      read(t, "ffn_width", tc.ffn_width);
      read(t, "epochs", tc.epochs);
      read(t, "batch_size", tc.batch_size);
      read(t, "learning_rate", tc.learning_rate);
    }
  }

  if (j.contains("latent")) {
    const auto& l = j.at("latent");
    check_keys(l, "latent", {"hidden", "latent", "decoder_hidden", "beta", "epochs", "learning_rate", "kernel"});
    auto& v = c.latent.vae;
    read(l, "hidden", v.hidden);
    read(l, "latent", v.latent);
    read(l, "decoder_hidden", v.decoder_hidden);
    read(l, "beta", v.beta);
    read(l, "epochs", v.epochs);
    read(l, "learning_rate", v.learning_rate);
    if (l.contains("kernel")) c.latent.kernel = latent::kernel_from_string(l.at("kernel").get<std::string>());
  }

  if (j.contains("selection")) {
    const auto& s = j.at("selection");
    check_keys(s, "selection", {"k", "lri_method"});
    read(s, "k", c.selection.k);
    if (s.contains("lri_method")) {
      const auto m = s.at("lri_method").get<std::string>();
      if (m == "exact") c.selection.lri_method = model::GradientMethod::kExact;
      else if (m == "finite-diff") c.selection.lri_method = model::GradientMethod::kFiniteDifference;
      else throw ArgumentError("lri_method must be 'exact' or 'finite-diff'");
    }
  }

  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    check_keys(a, "attack",
               {"epsilon", "alpha", "generations", "population", "balance", "round_detour_noise", "restart_worst",
                "crossover_rate", "mutation_rate"});
    auto& ac = c.attack;
    read(a, "epsilon", ac.epsilon);
    read(a, "alpha", ac.alpha);
    read(a, "generations", ac.generations);
    read(a, "population", ac.population);
    read(a, "balance", ac.balance);
    read(a, "round_detour_noise", ac.round_detour_noise);
    read(a, "restart_worst", ac.restart_worst);
    read(a, "crossover_rate", ac.crossover_rate);
    if (a.contains("mutation_rate")) ac.mutation_rate = a.at("mutation_rate").is_null() ? -1.0 : a.at("mutation_rate").get<double>();
  }

  if (j.contains("compare")) {
    const auto& cp = j.at("compare");
    check_keys(cp, "compare", {"attackers", "seeds"});
    read(cp, "attackers", c.compare.attackers);
    read(cp, "seeds", c.compare.seeds);
  }
  c.data.synthetic.seed = c.seed;
  return c;
}

inline CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ArgumentError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace hero::campaign
