// Command line driver for robustness-testing campaigns.
//
//   hero <stage> --config campaign.json [--out DIR] [--seed N] [--jobs N]
//
// Exit codes: 0 success, 2 argument/config error, 3 data error,
// 4 numeric or training failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hero/campaign.hpp"

namespace {

namespace hc = hero::campaign;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::vector<std::string> attackers;
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("hero");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("HERO_LOG");
  const std::string level = env ? env : "warn";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "warn") spdlog::set_level(spdlog::level::warn);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else throw hero::ArgumentError("HERO_LOG must be one of error, warn, info, debug (got '" + level + "')");
}

hc::Context make_context(const Options& o) {
  hc::CampaignConfig cfg = hc::load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.data.synthetic.seed = *o.seed;
  }
  if (!o.attackers.empty()) cfg.compare.attackers = o.attackers;
  if (!o.out.empty()) cfg.output = o.out;
  cfg.validate();
  if (o.jobs == 0) throw hero::ArgumentError("--jobs must be >= 1");
  return {cfg, cfg.output, o.jobs};
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const hero::ArgumentError*>(&e)) return 2;
  if (dynamic_cast<const hero::DataError*>(&e)) return 3;
  if (dynamic_cast<const hero::NumericError*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical robustness testing for PEMFC voltage forecasters"};
  app.require_subcommand(1);
  Options opt;

  using Stage = hc::json (*)(const hc::Context&);
  const std::vector<std::tuple<std::string, std::string, Stage>> stages = {
      {"preprocess", "condense, filter and normalize the data; derive constraint bounds", hc::stage_preprocess},
      {"train", "train the forecaster", hc::stage_train},
      {"encode", "train the latent encoder and fit the density estimate", hc::stage_encode},
      {"select", "rank test windows by LRI x density and keep the top k", hc::stage_select},
      {"attack", "run the rabbit-optimization attack on every selected seed", hc::stage_attack},
      {"compare", "run ARO, GA and random search on equal budgets", hc::stage_compare},
      {"report", "assemble report.json and the CSV plot series", hc::stage_report},
      {"run", "run every stage in order", hc::run_campaign},
  };
  std::vector<std::pair<CLI::App*, Stage>> commands;
  for (const auto& [name, help, fn] : stages) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "campaign config (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { opt.seed = s; },
                                            "global RNG seed (overrides the config)");
    sub->add_option("--jobs", opt.jobs, "worker threads for attacks")->capture_default_str();
    if (name == "compare" || name == "run")
      sub->add_option("--attackers", opt.attackers, "attackers to compare (aro, ga, random)")->delimiter(',');
    commands.emplace_back(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    configure_logging();
    const auto ctx = make_context(opt);
    for (const auto& [sub, fn] : commands) {
      if (!sub->parsed()) continue;
      fn(ctx);
      std::cout << sub->get_name() << ": ok (" << ctx.out.string() << ")\n";
    }
    return 0;
  } catch (const hero::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
