#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hero/campaign/config.hpp"
#include "hero/campaign/manifest.hpp"
#include "hero/dataset.hpp"
#include "hero/engine.hpp"
#include "hero/forecaster.hpp"
#include "hero/latent.hpp"
#include "hero/metrics.hpp"

namespace hero::campaign {

namespace artifact {
inline const std::filesystem::path kConfig = "config.json";
inline const std::filesystem::path kDatasetCsv = "dataset.csv";
inline const std::filesystem::path kDatasetMeta = "dataset.json";
inline const std::filesystem::path kModel = "model.json";
inline const std::filesystem::path kTrainReport = "train_report.json";
inline const std::filesystem::path kEncoder = "encoder.json";
inline const std::filesystem::path kSeeds = "seeds.json";
inline const std::filesystem::path kAttacks = "attacks.json";
inline const std::filesystem::path kCompare = "compare.json";
inline const std::filesystem::path kReport = "report.json";
inline const std::filesystem::path kTiming = "timing.jsonl";

inline std::filesystem::path trace(std::size_t rank) {
  char name[32];
  std::snprintf(name, sizeof(name), "seed_%02zu.jsonl", rank);
  return std::filesystem::path("traces") / name;
}
}  // namespace artifact

/// Everything a stage needs: the resolved config, where artifacts live and
/// how many worker threads attacks may use.
struct Context {
  CampaignConfig cfg;
  std::filesystem::path out;
  std::size_t jobs = 1;

  Manifest manifest() const { return Manifest(out); }
  std::filesystem::path path(const std::filesystem::path& rel) const { return out / rel; }
};

namespace detail {

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  os << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_double(std::ostream& os, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, res.ptr - buf);
}

inline json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> try_r2(std::span<const double> truth, std::span<const double> pred) {
  try {
    return metrics::r2(truth, pred);
  } catch (const ArgumentError&) {
    return std::nullopt;
  }
}

// Wall-clock seconds for a stage, kept out of the hashed artifacts.
class StageTimer {
 public:
  StageTimer(const Context& ctx, std::string stage)
      : ctx_(ctx), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {
    spdlog::info("stage {}: start", stage_);
  }
  ~StageTimer() {
    if (std::uncaught_exceptions() > 0) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    append_timing(ctx_, {{"stage", stage_}, {"seconds", s}});
    spdlog::info("stage {}: done in {:.2f} s", stage_, s);
  }
  static void append_timing(const Context& ctx, const json& entry) {
    std::ofstream os(ctx.path(artifact::kTiming), std::ios::app);
    os << entry.dump() << '\n';
  }

 private:
  const Context& ctx_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first failure by
// index is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Chronological train / validation / test split of the windows. A gap of
/// ceil((T + S - 1) / stride) windows between splits keeps any input or
/// target row from appearing on both sides of a boundary.
struct Splits {
  std::vector<data::WindowSample> train, validation, test;
};

inline Splits split_windows(std::vector<data::WindowSample> all, const DataConfig& d) {
  const auto& w = d.windows;
  const std::size_t gap = (w.input_length + w.horizon - 1 + w.stride - 1) / w.stride;
  const std::size_t n = all.size();
  const auto n_train = static_cast<std::size_t>(std::floor(d.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(d.validation_fraction * static_cast<double>(n)));
  Splits s;
  std::size_t i = 0;
  for (; i < n_train && i < n; ++i) s.train.push_back(std::move(all[i]));
  if (n_val > 0) {
    i += gap;
    for (std::size_t k = 0; k < n_val && i < n; ++k, ++i) s.validation.push_back(std::move(all[i]));
  }
  i += gap;
  for (; i < n; ++i) s.test.push_back(std::move(all[i]));
  if (s.train.empty() || s.test.empty())
    throw DataError("dataset yields " + std::to_string(n) + " windows, too few for a train/test split");
  return s;
}

// ---- preprocess ----

inline json stage_preprocess(const Context& ctx) {
  detail::StageTimer timer(ctx, "preprocess");
  const auto& cfg = ctx.cfg;
  const auto m = ctx.manifest();
  std::filesystem::create_directories(ctx.out);
  detail::write_json(ctx.path(artifact::kConfig), to_json(cfg));
  m.record("preprocess", artifact::kConfig);

  const data::TimeSeriesDataset raw = cfg.data.csv ? data::load_csv(*cfg.data.csv, data::pemfc_schema())
                                                   : data::synth_generate(cfg.data.synthetic).dataset;
  const auto condensed = data::condense(raw, data::PeriodStride{cfg.data.condense_hours});
  const auto filtered = data::moving_average(condensed, cfg.data.filter_window);
  const auto normalized = data::fit_normalize(filtered);
  const auto bounds = data::derive_bounds(
      normalized, cfg.data.windows.features,
      cfg.data.bounds == "reference" ? data::reference_constraint_ranges() : data::BoundsOverrides{});
  data::save_dataset(ctx.path(artifact::kDatasetCsv), ctx.path(artifact::kDatasetMeta), normalized, bounds);
  m.record("preprocess", artifact::kDatasetCsv);
  m.record("preprocess", artifact::kDatasetMeta);
  spdlog::info("preprocess: {} raw rows -> {} condensed rows", raw.row_count(), normalized.row_count());
  return {{"raw_rows", raw.row_count()}, {"rows", normalized.row_count()}};
}

struct Prepared {
  data::TimeSeriesDataset dataset;
  data::FeatureBounds bounds;
  Splits splits;
};

inline Prepared load_prepared(const Context& ctx) {
  const auto m = ctx.manifest();
  const auto csv = m.require(artifact::kDatasetCsv);
  const auto meta = m.require(artifact::kDatasetMeta);
  auto loaded = data::load_dataset(csv, meta);
  if (!loaded.bounds) throw DataError("dataset sidecar carries no constraint bounds");
  if (loaded.bounds->names != ctx.cfg.data.windows.features)
    throw DataError("dataset bounds do not match the configured model features; rerun preprocess");
  auto windows = data::make_windows(loaded.dataset, ctx.cfg.data.windows);
  return {std::move(loaded.dataset), std::move(*loaded.bounds), split_windows(std::move(windows), ctx.cfg.data)};
}

inline std::unique_ptr<model::Forecaster> load_model(const Context& ctx) {
  return model::load_forecaster(ctx.manifest().require(artifact::kModel));
}

// ---- train ----

inline json stage_train(const Context& ctx) {
  detail::StageTimer timer(ctx, "train");
  const auto& cfg = ctx.cfg;
  const auto prep = load_prepared(ctx);
  const auto& val = prep.splits.validation.empty() ? prep.splits.test : prep.splits.validation;
  json report = {{"kind", cfg.model.kind},
                 {"windows",
                  {{"train", prep.splits.train.size()},
                   {"validation", prep.splits.validation.size()},
                   {"test", prep.splits.test.size()}}}};
  std::unique_ptr<model::Forecaster> fitted;
  if (cfg.model.kind == "tst-mini") {
    auto tc = cfg.model.tst_mini;
    const auto& feats = cfg.data.windows.features;
    const auto it = std::find(feats.begin(), feats.end(), cfg.data.windows.target);
    if (it == feats.end() && tc.instance_norm)
      throw ArgumentError("tst-mini with instance_norm needs the target '" + cfg.data.windows.target +
                          "' among the model features");
    tc.target_row = it == feats.end() ? 0 : static_cast<std::size_t>(it - feats.begin());
    RandomStream rng(cfg.seed, streams::kForecaster);
    auto [m, rep] = model::train_tst_mini(prep.splits.train, val, tc, rng);
    report["epoch_losses"] = rep.epoch_losses;
    report["validation_rmse"] = rep.validation_rmse;
    report["validation_r2"] = detail::nullable(rep.validation_r2);
    report["weight_checksum"] = rep.weight_checksum;
    fitted = std::move(m);
  } else {
    const auto r = model::train_ridge(prep.splits.train, cfg.model.ridge_l2);
    fitted = std::make_unique<model::RidgeForecaster>(r.features(), r.input_length(), r.weights(), r.bias());
    const auto [rmse, r2] = model::evaluate(*fitted, val);
    report["validation_rmse"] = rmse;
    report["validation_r2"] = detail::nullable(r2);
  }
  spdlog::info("train: {} validation rmse {:.4f}", cfg.model.kind, report["validation_rmse"].get<double>());
  model::save_forecaster(ctx.path(artifact::kModel), *fitted);
  detail::write_json(ctx.path(artifact::kTrainReport), report);
  const auto m = ctx.manifest();
  m.record("train", artifact::kModel);
  m.record("train", artifact::kTrainReport);
  return report;
}

// ---- encode ----

inline json stage_encode(const Context& ctx) {
  detail::StageTimer timer(ctx, "encode");
  const auto& cfg = ctx.cfg;
  const auto prep = load_prepared(ctx);
  RandomStream rng(cfg.seed, streams::kEncoder);
  const auto vae = latent::train_vae(prep.splits.train, cfg.latent.vae, rng);
  std::vector<latent::LatentSummary> summaries;
  for (const auto& s : prep.splits.train) summaries.push_back(vae.encoder.encode(s.x));
  const auto kde = latent::kde_fit(summaries, cfg.latent.kernel);
  const json out = {{"encoder", vae.encoder.to_json()}, {"kde", latent::to_json(kde)}, {"loss_history", vae.loss_history}};
  detail::write_json(ctx.path(artifact::kEncoder), out);
  ctx.manifest().record("encode", artifact::kEncoder);
  spdlog::info("encode: final VAE loss {:.5f}", vae.loss_history.back());
  return {{"final_loss", vae.loss_history.back()}};
}

// ---- select ----

inline json stage_select(const Context& ctx) {
  detail::StageTimer timer(ctx, "select");
  const auto& cfg = ctx.cfg;
  const auto model = load_model(ctx);
  const auto prep = load_prepared(ctx);
  const auto enc_json = detail::read_json(ctx.manifest().require(artifact::kEncoder));
  const auto encoder = latent::Encoder::from_json(enc_json.at("encoder"));
  const auto kde = latent::kde_from_json(enc_json.at("kde"));

  auto method = cfg.selection.lri_method;
  if (method == model::GradientMethod::kExact && !model->capabilities().exact_input_gradient) {
    spdlog::warn("select: {} has no exact input gradient; using finite differences", model->identity());
    method = model::GradientMethod::kFiniteDifference;
  }
  const auto& pool = prep.splits.test;
  std::vector<engine::Candidate> candidates;
  for (const auto& s : pool)
    candidates.push_back({engine::compute_lri(*model, s, method).value, latent::kde_eval(kde, encoder.encode(s.x).mu)});
  const auto ranked = engine::rank_and_select(candidates, cfg.selection.k);
  json seeds = json::array();
  for (const auto& r : ranked) {
    const auto& s = pool[r.index];
    seeds.push_back({{"rank", r.rank},
                     {"window", r.index},
                     {"start_row", s.start_row},
                     {"origin_time", s.origin_time},
                     {"lri", r.lri},
                     {"density", r.density},
                     {"score", r.score}});
  }
  const json out = {{"pool", "test"}, {"pool_size", pool.size()}, {"lri_method", model::to_string(method)}, {"seeds", seeds}};
  detail::write_json(ctx.path(artifact::kSeeds), out);
  ctx.manifest().record("select", artifact::kSeeds);
  return out;
}

struct SelectedSeed {
  std::size_t rank = 0;
  std::size_t window = 0;
  json meta;
};

inline std::vector<SelectedSeed> load_seeds(const Context& ctx, std::size_t pool_size) {
  const auto j = detail::read_json(ctx.manifest().require(artifact::kSeeds));
  std::vector<SelectedSeed> out;
  for (const auto& s : j.at("seeds")) {
    SelectedSeed seed{s.at("rank").get<std::size_t>(), s.at("window").get<std::size_t>(), s};
    if (seed.window >= pool_size) throw DataError("seed window index outside the test pool");
    out.push_back(std::move(seed));
  }
  return out;
}

inline RandomStream attack_stream(const CampaignConfig& cfg, std::size_t rank) {
  return RandomStream(cfg.seed, streams::kAttackBase + rank);
}

// ---- attack ----

inline json stage_attack(const Context& ctx) {
  detail::StageTimer timer(ctx, "attack");
  const auto& cfg = ctx.cfg;
  const auto model = load_model(ctx);
  const auto prep = load_prepared(ctx);
  const auto seeds = load_seeds(ctx, prep.splits.test.size());

  std::vector<json> results(seeds.size());
  std::vector<std::vector<engine::TraceRecord>> traces(seeds.size());
  detail::parallel_for(seeds.size(), ctx.jobs, [&](std::size_t i) {
    const auto& seed = seeds[i];
    const auto& s = prep.splits.test[seed.window];
    auto rng = attack_stream(cfg, seed.rank);
    auto res = engine::aro_attack(*model, s.x, s.y, prep.bounds, cfg.attack, rng);
    json delta = json::object();
    for (std::size_t f = 0; f < res.best.max_abs_delta.size(); ++f)
      delta[prep.bounds.names[f]] = res.best.max_abs_delta[f];
    json r = seed.meta;
    r["l_pred"] = res.best.l_pred;
    r["l_sim"] = res.best.l_sim;
    r["fitness"] = res.best.fitness;
    r["generation"] = res.best.generation;
    r["evaluations"] = res.best.evaluations;
    r["max_abs_delta"] = delta;
    r["target"] = s.y;
    r["clean_prediction"] = model->predict(s.x);
    r["attacked_prediction"] = model->predict(res.best.x);
    r["seed_x"] = model::matrix_to_json(s.x);
    r["adversarial_x"] = model::matrix_to_json(res.best.x);
    r["counters"] = engine::to_json(res.counters);
    r["trace"] = artifact::trace(seed.rank).generic_string();
    results[i] = std::move(r);
    traces[i] = std::move(res.trace);
    spdlog::debug("attack: seed {} fitness {:.4f}", seed.rank, res.best.fitness);
  });

  const auto m = ctx.manifest();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto rel = artifact::trace(seeds[i].rank);
    std::filesystem::create_directories(ctx.path(rel).parent_path());
    std::ofstream os(ctx.path(rel));
    engine::write_trace_jsonl(os, traces[i]);
    os.close();
    m.record("attack", rel);
  }
  const json out = {{"algorithm", "aro"}, {"features", prep.bounds.names}, {"seeds", results}};
  detail::write_json(ctx.path(artifact::kAttacks), out);
  m.record("attack", artifact::kAttacks);
  spdlog::info("attack: {} seeds attacked", seeds.size());
  return out;
}

// ---- compare ----

inline engine::AttackResult run_attacker(const std::string& name, const model::Forecaster& m,
                                         const data::WindowSample& s, const data::FeatureBounds& bounds,
                                         const engine::AttackConfig& cfg, RandomStream& rng) {
  if (name == "aro") return engine::aro_attack(m, s.x, s.y, bounds, cfg, rng);
  if (name == "ga") return engine::ga_attack(m, s.x, s.y, bounds, cfg, rng);
  if (name == "random") return engine::random_search(m, s.x, s.y, bounds, cfg, rng);
  throw ArgumentError("unknown attacker '" + name + "'");
}

/// Runs every configured attacker on the leading selected seeds with the same
/// per-seed random stream, so all attackers share the initial population and
/// the evaluation budget.
inline json stage_compare(const Context& ctx) {
  detail::StageTimer timer(ctx, "compare");
  const auto& cfg = ctx.cfg;
  const auto model = load_model(ctx);
  const auto prep = load_prepared(ctx);
  auto seeds = load_seeds(ctx, prep.splits.test.size());
  seeds.resize(std::min(seeds.size(), cfg.compare.seeds));
  if (seeds.empty()) throw ArgumentError("compare needs at least one selected seed");

  const std::size_t m_dim = static_cast<std::size_t>(prep.splits.test.front().x.size());
  std::map<std::string, std::vector<engine::AttackResult>> runs;
  json attackers = json::array();
  for (const auto& name : cfg.compare.attackers) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<engine::AttackResult> results(seeds.size());
    detail::parallel_for(seeds.size(), ctx.jobs, [&](std::size_t i) {
      auto rng = attack_stream(cfg, seeds[i].rank);
      results[i] = run_attacker(name, *model, prep.splits.test[seeds[i].window], prep.bounds, cfg.attack, rng);
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail::StageTimer::append_timing(ctx, {{"stage", "compare"}, {"attacker", name}, {"seconds", seconds}});

    engine::Counters total;
    std::vector<double> best;
    for (const auto& r : results) {
      total += r.counters;
      best.push_back(r.best.fitness);
    }
    double mean = 0.0;
    for (double b : best) mean += b;
    mean /= static_cast<double>(best.size());
    attackers.push_back({{"attacker", name},
                         {"best_fitness", best},
                         {"mean_best_fitness", mean},
                         {"evaluations", total.model_evaluations},
                         {"coordinate_touches", total.updates()},
                         {"counters", engine::to_json(total)}});
    runs[name] = std::move(results);
  }

  // Identical budgets: every attacker spends the same evaluations per seed.
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::optional<std::uint64_t> evals;
    for (const auto& [name, rs] : runs) {
      if (evals && *evals != rs[i].counters.model_evaluations)
        throw Error("attackers used different evaluation budgets on seed " + std::to_string(seeds[i].rank));
      evals = rs[i].counters.model_evaluations;
    }
  }

  const auto G = cfg.attack.generations, n = cfg.attack.population;
  json out = {{"seeds", seeds.size()},
              {"generations", G},
              {"population", n},
              {"coordinates", m_dim},
              {"expected_ops",
               {{"aro", engine::aro_expected_ops(G, n, m_dim) * seeds.size()},
                {"ga", engine::ga_expected_ops(G, n, m_dim) * seeds.size()}}},
              {"attackers", attackers}};
  if (runs.contains("aro") && runs.contains("ga") && !cfg.attack.restart_worst)
    out["complexity"] = engine::to_json(engine::complexity_report(runs["aro"], runs["ga"]));
  detail::write_json(ctx.path(artifact::kCompare), out);
  ctx.manifest().record("compare", artifact::kCompare);
  return out;
}

// ---- report ----

/// Forecast trajectory for RUL scoring: non-overlapping horizon-long
/// forecasts over the whole series, in volts, next to the actual series.
struct Trajectory {
  std::vector<double> times, actual, forecast;
  double v_initial = 0.0;
};

inline Trajectory forecast_trajectory(const model::Forecaster& m, const data::TimeSeriesDataset& ds,
                                      const data::WindowSpec& spec) {
  if (!ds.stats()) throw DataError("trajectory needs a normalized dataset");
  auto s = spec;
  s.stride = spec.horizon;
  const std::size_t col = ds.column(spec.target);
  const auto& stats = *ds.stats();
  Trajectory t;
  t.v_initial = stats.denormalize(col, ds.rows()(0, static_cast<Eigen::Index>(col)));
  for (const auto& w : data::make_windows(ds, s)) {
    const auto pred = m.predict(w.x);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const std::size_t row = w.start_row + spec.input_length + k;
      t.times.push_back(ds.time(row));
      t.actual.push_back(stats.denormalize(col, ds.rows()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col))));
      t.forecast.push_back(stats.denormalize(col, pred[k]));
    }
  }
  return t;
}

inline json to_json(const metrics::RulAssessment& a) {
  json thresholds = json::array();
  for (const auto& e : a.thresholds)
    thresholds.push_back({{"ft", e.ft},
                          {"rul_true_hours", e.rul_true.hours},
                          {"rul_true_censored", e.rul_true.censored},
                          {"rul_pred_hours", e.rul_pred.hours},
                          {"rul_pred_censored", e.rul_pred.censored},
                          {"percent_error", detail::nullable(e.percent_error)},
                          {"a_ft", e.a_ft}});
  return {{"thresholds", thresholds}, {"score_rul", a.score_rul}};
}

/// Config as embedded in the report: the output directory is where a run
/// lives, not what it computes, so it is left out.
inline json report_config(const CampaignConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  return j;
}

/// CSV series for plotting: fitness per generation, seed vs adversarial
/// feature traces, attacker cost comparison and the RUL forecast trajectory.
inline void write_plot_series(const Context& ctx, const json& attacks, const json& compare, const json& timing,
                              const Trajectory& traj) {
  using detail::write_double;
  const auto m = ctx.manifest();
  auto open = [&](const std::filesystem::path& rel) {
    std::ofstream os(ctx.path(rel));
    if (!os) throw DataError("cannot write '" + ctx.path(rel).string() + "'");
    return os;
  };

  const std::filesystem::path fitness = "fitness_vs_generation.csv";
  {
    auto os = open(fitness);
    os << "rank,gen,best_fitness,mean_fitness,best_L_pred,best_L_sim,eval_count\n";
    for (const auto& a : attacks.at("seeds")) {
      std::ifstream in(m.require(a.at("trace").get<std::string>()));
      std::string line;
      while (std::getline(in, line)) {
        const auto r = json::parse(line);
        os << a.at("rank").get<std::size_t>() << ',' << r.at("gen").get<std::size_t>() << ',';
        for (const char* k : {"best_fitness", "mean_fitness", "best_L_pred", "best_L_sim"}) {
          write_double(os, r.at(k).get<double>());
          os << ',';
        }
        os << r.at("eval_count").get<std::uint64_t>() << '\n';
      }
    }
  }

  const std::filesystem::path features = "adversarial_features.csv";
  {
    auto os = open(features);
    os << "rank,feature,step,seed,adversarial\n";
    const auto names = attacks.at("features").get<std::vector<std::string>>();
    for (const auto& a : attacks.at("seeds")) {
      const Matrix x = model::matrix_from_json(a.at("seed_x"));
      const Matrix xa = model::matrix_from_json(a.at("adversarial_x"));
      for (Eigen::Index f = 0; f < x.rows(); ++f)
        for (Eigen::Index t = 0; t < x.cols(); ++t) {
          os << a.at("rank").get<std::size_t>() << ',' << names[static_cast<std::size_t>(f)] << ',' << t << ',';
          write_double(os, x(f, t));
          os << ',';
          write_double(os, xa(f, t));
          os << '\n';
        }
    }
  }

  const std::filesystem::path cost = "complexity.csv";
  {
    auto os = open(cost);
    os << "attacker,seeds,evaluations,coordinate_touches,total_ops,expected_total_ops,wall_clock_seconds\n";
    for (const auto& a : compare.at("attackers")) {
      const auto name = a.at("attacker").get<std::string>();
      os << name << ',' << compare.at("seeds").get<std::size_t>() << ',' << a.at("evaluations").get<std::uint64_t>()
         << ',' << a.at("coordinate_touches").get<std::uint64_t>() << ','
         << a.at("counters").at("total").get<std::uint64_t>() << ',';
      if (compare.at("expected_ops").contains(name)) os << compare.at("expected_ops").at(name).get<std::uint64_t>();
      os << ',';
      if (timing.at("compare").contains(name)) write_double(os, timing.at("compare").at(name).get<double>());
      os << '\n';
    }
  }

  const std::filesystem::path rul = "rul_forecast.csv";
  {
    auto os = open(rul);
    os << "time,actual,forecast\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      write_double(os, traj.times[i]);
      os << ',';
      write_double(os, traj.actual[i]);
      os << ',';
      write_double(os, traj.forecast[i]);
      os << '\n';
    }
  }
  for (const auto& rel : {fitness, features, cost, rul}) m.record("report", rel);
}

inline json stage_report(const Context& ctx) {
  detail::StageTimer timer(ctx, "report");
  const auto& cfg = ctx.cfg;
  const auto m = ctx.manifest();
  const auto prep = load_prepared(ctx);
  const auto model = load_model(ctx);
  const auto attacks = detail::read_json(m.require(artifact::kAttacks));
  const auto compare = detail::read_json(m.require(artifact::kCompare));
  const auto seeds_json = detail::read_json(m.require(artifact::kSeeds));
  const auto train_json = detail::read_json(m.require(artifact::kTrainReport));
  m.require(artifact::kEncoder);

  const json config = report_config(cfg);
  json report;
  report["schema_version"] = "1.0.0";
  report["config"] = config;
  report["config_hash"] = sha256_hex(config.dump());
  report["dataset"] = {{"fingerprint", sha256_file(ctx.path(artifact::kDatasetCsv))},
                       {"rows", prep.dataset.row_count()},
                       {"windows",
                        {{"train", prep.splits.train.size()},
                         {"validation", prep.splits.validation.size()},
                         {"test", prep.splits.test.size()}}}};
  report["model"] = {{"kind", model->identity()},
                     {"sha256", sha256_file(ctx.path(artifact::kModel))},
                     {"validation_rmse", train_json.at("validation_rmse")},
                     {"validation_r2", train_json.at("validation_r2")}};

  // Clean accuracy on the test split and RUL from the forecast trajectory.
  const auto [rmse, r2] = model::evaluate(*model, prep.splits.test);
  const auto traj = forecast_trajectory(*model, prep.dataset, cfg.data.windows);
  const auto rul = metrics::assess_rul(traj.times, traj.actual, traj.forecast, traj.times.front(), traj.v_initial);
  report["clean"] = {{"rmse", rmse},
                     {"r2", detail::nullable(r2)},
                     {"rul", to_json(rul)},
                     {"rul_origin_hours", traj.times.front()},
                     {"v_initial", traj.v_initial}};

  // Per-seed degradation.
  json per_seed = json::array();
  std::vector<double> all_truth, all_clean, all_attacked, ratios;
  for (const auto& a : attacks.at("seeds")) {
    const auto y = a.at("target").get<std::vector<double>>();
    const auto yc = a.at("clean_prediction").get<std::vector<double>>();
    const auto ya = a.at("attacked_prediction").get<std::vector<double>>();
    const double rc = metrics::rmse(y, yc), ra = metrics::rmse(y, ya);
    const double ratio = rc > 0.0 ? ra / rc : std::numeric_limits<double>::infinity();
    all_truth.insert(all_truth.end(), y.begin(), y.end());
    all_clean.insert(all_clean.end(), yc.begin(), yc.end());
    all_attacked.insert(all_attacked.end(), ya.begin(), ya.end());
    ratios.push_back(ratio);
    per_seed.push_back({{"rank", a.at("rank")},
                        {"window", a.at("window")},
                        {"start_row", a.at("start_row")},
                        {"origin_time", a.at("origin_time")},
                        {"lri", a.at("lri")},
                        {"density", a.at("density")},
                        {"score", a.at("score")},
                        {"adversarial",
                         {{"l_pred", a.at("l_pred")},
                          {"l_sim", a.at("l_sim")},
                          {"fitness", a.at("fitness")},
                          {"generation", a.at("generation")},
                          {"evaluations", a.at("evaluations")},
                          {"max_abs_delta", a.at("max_abs_delta")}}},
                        {"clean_rmse", rc},
                        {"attacked_rmse", ra},
                        {"rmse_ratio", std::isfinite(ratio) ? json(ratio) : json(nullptr)},
                        {"clean_r2", detail::nullable(detail::try_r2(y, yc))},
                        {"attacked_r2", detail::nullable(detail::try_r2(y, ya))}});
  }
  report["attacks"] = per_seed;

  json aggregate = {{"seeds", ratios.size()}};
  if (!ratios.empty()) {
    auto sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (double r : ratios) mean += r;
    const auto hits = std::count_if(ratios.begin(), ratios.end(), [](double r) { return r >= 3.0; });
    const auto cr2 = detail::try_r2(all_truth, all_clean), ar2 = detail::try_r2(all_truth, all_attacked);
    aggregate["mean_rmse_ratio"] = mean / static_cast<double>(ratios.size());
    aggregate["median_rmse_ratio"] = sorted[sorted.size() / 2];
    aggregate["seeds_ratio_at_least_3"] = hits;
    aggregate["fraction_ratio_at_least_3"] = static_cast<double>(hits) / static_cast<double>(ratios.size());
    aggregate["clean_rmse"] = metrics::rmse(all_truth, all_clean);
    aggregate["attacked_rmse"] = metrics::rmse(all_truth, all_attacked);
    aggregate["clean_r2"] = detail::nullable(cr2);
    aggregate["attacked_r2"] = detail::nullable(ar2);
    aggregate["r2_drop"] = cr2 && ar2 ? json(*cr2 - *ar2) : json(nullptr);
  }
  report["aggregate"] = aggregate;
  report["comparison"] = compare;
  report["selection"] = {{"pool", seeds_json.at("pool")},
                         {"pool_size", seeds_json.at("pool_size")},
                         {"lri_method", seeds_json.at("lri_method")},
                         {"k", seeds_json.at("seeds").size()}};

  // Timing last; it is the only block allowed to differ between runs.
  json timing = {{"stages", json::object()}, {"compare", json::object()}};
  {
    std::ifstream in(ctx.path(artifact::kTiming));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto e = json::parse(line, nullptr, false);
      if (e.is_discarded()) continue;
      if (e.contains("attacker")) timing["compare"][e.at("attacker").get<std::string>()] = e.at("seconds");
      else timing["stages"][e.at("stage").get<std::string>()] = e.at("seconds");
    }
  }
  report["timing"] = timing;
  detail::write_json(ctx.path(artifact::kReport), report);
  m.record("report", artifact::kReport);

  write_plot_series(ctx, attacks, compare, timing, traj);
  return report;
}

}  // namespace hero::campaign
