#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "hero/dataset/windows.hpp"
#include "hero/errors.hpp"
#include "hero/forecaster/forecaster.hpp"
#include "hero/metrics/regression.hpp"
#include "hero/numerics/adam.hpp"
#include "hero/numerics/ops.hpp"
#include "hero/numerics/random.hpp"
#include "hero/numerics/tape.hpp"

namespace hero::model {

struct TstMiniConfig {
  std::size_t d_model = 32;
  std::vector<double> ratios = {1.0, 0.25};  // one downsampling ratio per stage
  std::size_t target_row = 0;                // input row holding the forecast series
  bool instance_norm = true;                 // center each variate over its window
  std::size_t ffn_width = 64;
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  double learning_rate = 3e-3;

  void validate() const {
    if (d_model == 0 || ffn_width == 0) throw ArgumentError("tst-mini widths must be positive");
    if (ratios.empty()) throw ArgumentError("tst-mini needs at least one stage");
    for (double r : ratios)
      if (!(r > 0.0 && r <= 1.0)) throw ArgumentError("downsampling ratios must lie in (0, 1]");
    if (epochs == 0 || batch_size == 0) throw ArgumentError("epochs and batch size must be positive");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  }
};

/// Pooling window for a downsampling ratio, e.g. 1/4 -> 4.
inline std::size_t pool_window(double ratio) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(1.0 / ratio)));
}

template <class M>
struct StageParams {
  M wq, wk, wv;  // d x d
  M w1, b1;      // d x ffn, 1 x ffn
  M w2, b2;      // ffn x d, 1 x d
};

template <class M>
struct TstParams {
  M embed_w, embed_b;  // T x d, 1 x d
  std::vector<StageParams<M>> stages;
  M proj_w, proj_b;  // F*d x S, 1 x S
  M highway_w;       // T x S, linear map from the target's history

  template <class Fn>
  void visit(Fn&& fn) {
    fn("embed_w", embed_w);
    fn("embed_b", embed_b);
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const std::string p = "stage" + std::to_string(s) + ".";
      auto& st = stages[s];
      fn(p + "wq", st.wq);
      fn(p + "wk", st.wk);
      fn(p + "wv", st.wv);
      fn(p + "w1", st.w1);
      fn(p + "b1", st.b1);
      fn(p + "w2", st.w2);
      fn(p + "b2", st.b2);
    }
    fn("proj_w", proj_w);
    fn("proj_b", proj_b);
    fn("highway_w", highway_w);
  }
};

/// Intermediate values captured by the plain forward pass.
struct TstTrace {
  std::vector<Matrix> attention;  // per stage, tokens x pooled tokens
  std::vector<Matrix> queries;    // per stage, tokens x d
  std::vector<Matrix> keys;       // per stage, pooled tokens x d
};

/// Constant matrices for reversible instance normalization: x C removes each
/// row's mean, x m gives row means, and mean * ones broadcasts over the horizon.
struct InstanceNorm {
  Matrix center, mean, ones;

  InstanceNorm(std::size_t input_length, std::size_t horizon) {
    const auto t = static_cast<Eigen::Index>(input_length);
    center = Matrix::Identity(t, t) - Matrix::Constant(t, t, 1.0 / static_cast<double>(t));
    mean = Matrix::Constant(t, 1, 1.0 / static_cast<double>(t));
    ones = Matrix::Ones(1, static_cast<Eigen::Index>(horizon));
  }
};

/// Forward pass shared by the plain (Matrix) and differentiable (Var) paths.
/// Each variate's T-step history becomes one d-dim token. Every stage attends
/// from full-resolution queries to keys/values average-pooled over tokens.
/// With instance normalization the window is centered per variate and the
/// target's window mean is added back to the forecast. A linear highway from
/// the target's (centered) history keeps the window's scale, which the
/// per-token layer norms discard.
template <class V>
V tst_forward(const TstParams<V>& p, const V& x_in, const TstMiniConfig& cfg, const InstanceNorm& norm,
              TstTrace* trace = nullptr) {
  using namespace hero::ops;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  const V x = cfg.instance_norm ? matmul(x_in, lift(norm.center, x_in)) : x_in;
  V z = add_row(matmul(x, p.embed_w), p.embed_b);
  for (std::size_t s = 0; s < p.stages.size(); ++s) {
    const auto& st = p.stages[s];
    const std::size_t window = pool_window(cfg.ratios[s]);
    const V pooled = window > 1 ? avg_pool_rows(z, window) : z;
    const V q = matmul(z, st.wq);
    const V k = matmul(pooled, st.wk);
    const V v = matmul(pooled, st.wv);
    const V attn = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_d));
    if constexpr (std::is_same_v<V, Matrix>) {
      if (trace) {
        trace->attention.push_back(attn);
        trace->queries.push_back(q);
        trace->keys.push_back(k);
      }
    }
    z = layer_norm_rows(add(z, matmul(attn, v)));
    const V f = add_row(matmul(relu(add_row(matmul(z, st.w1), st.b1)), st.w2), st.b2);
    z = layer_norm_rows(add(z, f));
  }
  V y = add_row(matmul(flatten_row(z), p.proj_w), p.proj_b);
  y = add(y, matmul(slice_rows(x, cfg.target_row, 1), p.highway_w));
  if (cfg.instance_norm) {
    const V level = matmul(slice_rows(x_in, cfg.target_row, 1), lift(norm.mean, x_in));
    y = add(y, matmul(level, lift(norm.ones, x_in)));
  }
  return y;
}

class TstMiniForecaster final : public Forecaster {
 public:
  TstMiniForecaster(std::size_t features, std::size_t input_length, std::size_t horizon, TstMiniConfig cfg,
                    TstParams<Matrix> params)
      : Forecaster(features, input_length, horizon),
        cfg_(std::move(cfg)),
        params_(std::move(params)),
        norm_(input_length, horizon) {
    cfg_.validate();
    if (cfg_.target_row >= features) throw ArgumentError("tst-mini target row out of range");
    check_shapes();
  }

  /// Xavier-uniform initialization.
  static std::unique_ptr<TstMiniForecaster> initialize(std::size_t features, std::size_t input_length,
                                                       std::size_t horizon, const TstMiniConfig& cfg,
                                                       RandomStream& rng) {
    cfg.validate();
    auto init = [&](std::size_t r, std::size_t c) {
      const double a = std::sqrt(6.0 / static_cast<double>(r + c));
      Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
      return m;
    };
    auto zeros = [](std::size_t c) { return Matrix::Zero(1, static_cast<Eigen::Index>(c)).eval(); };
    const std::size_t d = cfg.d_model;
    TstParams<Matrix> p;
    p.embed_w = init(input_length, d);
    p.embed_b = zeros(d);
    for (std::size_t s = 0; s < cfg.ratios.size(); ++s)
      p.stages.push_back({init(d, d), init(d, d), init(d, d), init(d, cfg.ffn_width), zeros(cfg.ffn_width),
                          init(cfg.ffn_width, d), zeros(d)});
    p.proj_w = init(features * d, horizon);
    p.proj_b = zeros(horizon);
    p.highway_w = Matrix::Zero(static_cast<Eigen::Index>(input_length), static_cast<Eigen::Index>(horizon));
    return std::make_unique<TstMiniForecaster>(features, input_length, horizon, cfg, std::move(p));
  }

  std::string_view identity() const override { return "tst-mini"; }
  Capabilities capabilities() const override { return {true}; }

  const TstMiniConfig& config() const noexcept { return cfg_; }
  TstParams<Matrix>& params() noexcept { return params_; }
  const TstParams<Matrix>& params() const noexcept { return params_; }

  /// Plain forward that also returns per-stage attention maps. Does not count
  /// as a model evaluation.
  TstTrace trace(const Matrix& x) const {
    check_input(x);
    TstTrace t;
    tst_forward(params_, x, cfg_, norm_, &t);
    return t;
  }

  std::uint64_t checksum() const {
    std::vector<const Matrix*> ws;
    const_cast<TstParams<Matrix>&>(params_).visit([&](const std::string&, Matrix& m) { ws.push_back(&m); });
    return weight_checksum(ws);
  }

  nlohmann::json to_json() const override {
    nlohmann::json weights;
    const_cast<TstParams<Matrix>&>(params_).visit(
        [&](const std::string& name, Matrix& m) { weights[name] = matrix_to_json(m); });
    return {{"architecture",
             {{"kind", "tst-mini"},
              {"features", features()},
              {"input_length", input_length()},
              {"horizon", horizon()},
              {"d_model", cfg_.d_model},
              {"ratios", cfg_.ratios},
              {"ffn_width", cfg_.ffn_width},
              {"target_row", cfg_.target_row},
              {"instance_norm", cfg_.instance_norm}}},
            {"training",
             {{"epochs", cfg_.epochs}, {"batch_size", cfg_.batch_size}, {"learning_rate", cfg_.learning_rate}}},
            {"weights", weights}};
  }

  static std::unique_ptr<TstMiniForecaster> from_json(const nlohmann::json& j) {
    const auto& a = j.at("architecture");
    TstMiniConfig cfg;
    cfg.d_model = a.at("d_model").get<std::size_t>();
    cfg.ratios = a.at("ratios").get<std::vector<double>>();
    cfg.ffn_width = a.at("ffn_width").get<std::size_t>();
    cfg.target_row = a.value("target_row", std::size_t{0});
    cfg.instance_norm = a.value("instance_norm", false);
    if (j.contains("training")) {
      const auto& t = j.at("training");
      cfg.epochs = t.at("epochs").get<std::size_t>();
      cfg.batch_size = t.at("batch_size").get<std::size_t>();
      cfg.learning_rate = t.at("learning_rate").get<double>();
    }
    TstParams<Matrix> p;
    p.stages.resize(cfg.ratios.size());
    const auto& w = j.at("weights");
    p.visit([&](const std::string& name, Matrix& m) {
      if (!w.contains(name)) throw SchemaError("weight file is missing '" + name + "'");
      m = matrix_from_json(w.at(name));
    });
    return std::make_unique<TstMiniForecaster>(a.at("features").get<std::size_t>(),
                                               a.at("input_length").get<std::size_t>(),
                                               a.at("horizon").get<std::size_t>(), cfg, std::move(p));
  }

 protected:
  std::vector<double> forward(const Matrix& x) const override {
    const Matrix y = tst_forward(params_, x, cfg_, norm_);
    return std::vector<double>(y.data(), y.data() + y.size());
  }

  Matrix exact_loss_gradient(const Matrix& x, std::span<const double> target) const override {
    Tape tape;
    const TstParams<Var> p = constants(tape);
    const Var xv = tape.leaf(x);
    const Var y = tst_forward(p, xv, cfg_, norm_);
    const Var loss = ops::sse(y, tape.constant(as_row(target)));
    backward(loss);
    return tape.grad(xv);
  }

 private:
  TstParams<Var> constants(Tape& tape) const {
    TstParams<Var> out;
    out.stages.resize(params_.stages.size());
    std::vector<Var*> slots;
    out.visit([&](const std::string&, Var& v) { slots.push_back(&v); });
    std::size_t i = 0;
    const_cast<TstParams<Matrix>&>(params_).visit(
        [&](const std::string&, Matrix& m) { *slots[i++] = tape.constant(m); });
    return out;
  }

  void check_shapes() const {
    const auto d = static_cast<Eigen::Index>(cfg_.d_model);
    const auto h = static_cast<Eigen::Index>(cfg_.ffn_width);
    auto expect = [](const Matrix& m, Eigen::Index r, Eigen::Index c, const char* name) {
      if (m.rows() != r || m.cols() != c)
        throw SchemaError(std::string("tst-mini weight '") + name + "' has shape " + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()) + ", expected " + std::to_string(r) + "x" +
                          std::to_string(c));
    };
    if (params_.stages.size() != cfg_.ratios.size()) throw SchemaError("tst-mini stage count mismatch");
    expect(params_.embed_w, static_cast<Eigen::Index>(input_length()), d, "embed_w");
    expect(params_.embed_b, 1, d, "embed_b");
    for (const auto& st : params_.stages) {
      expect(st.wq, d, d, "wq");
      expect(st.wk, d, d, "wk");
      expect(st.wv, d, d, "wv");
      expect(st.w1, d, h, "w1");
      expect(st.b1, 1, h, "b1");
      expect(st.w2, h, d, "w2");
      expect(st.b2, 1, d, "b2");
    }
    expect(params_.proj_w, static_cast<Eigen::Index>(features()) * d, static_cast<Eigen::Index>(horizon()), "proj_w");
    expect(params_.proj_b, 1, static_cast<Eigen::Index>(horizon()), "proj_b");
    expect(params_.highway_w, static_cast<Eigen::Index>(input_length()), static_cast<Eigen::Index>(horizon()),
           "highway_w");
  }

  TstMiniConfig cfg_;
  TstParams<Matrix> params_;
  InstanceNorm norm_;
};

struct TrainReport {
  std::vector<double> epoch_losses;  // mean per-sample MSE, normalized units
  double validation_rmse = 0.0;
  std::optional<double> validation_r2;
  std::uint64_t weight_checksum = 0;
};

/// Pooled RMSE and R^2 over every (target, prediction) pair.
inline std::pair<double, std::optional<double>> evaluate(const Forecaster& model,
                                                         std::span<const data::WindowSample> samples) {
  std::vector<double> truth, pred;
  for (const auto& s : samples) {
    const auto y = model.predict(s.x);
    truth.insert(truth.end(), s.y.begin(), s.y.end());
    pred.insert(pred.end(), y.begin(), y.end());
  }
  std::optional<double> r2;
  try {
    r2 = metrics::r2(truth, pred);
  } catch (const ArgumentError&) {
  }
  return {metrics::rmse(truth, pred), r2};
}

/// Mini-batch Adam on mean squared error. Throws TrainingError on the first
/// epoch whose loss is not finite.
inline std::pair<std::unique_ptr<TstMiniForecaster>, TrainReport> train_tst_mini(
    std::span<const data::WindowSample> train, std::span<const data::WindowSample> validation,
    const TstMiniConfig& cfg, RandomStream& rng) {
  cfg.validate();
  if (train.empty()) throw ArgumentError("need at least one training sample");
  const auto features = static_cast<std::size_t>(train.front().x.rows());
  const auto input_length = static_cast<std::size_t>(train.front().x.cols());
  const std::size_t horizon = train.front().y.size();
  for (const auto& s : train)
    if (static_cast<std::size_t>(s.x.rows()) != features || static_cast<std::size_t>(s.x.cols()) != input_length ||
        s.y.size() != horizon)
      throw ArgumentError("training samples have inconsistent shapes");

  auto model = TstMiniForecaster::initialize(features, input_length, horizon, cfg, rng);
  std::vector<Matrix*> params;
  model->params().visit([&](const std::string&, Matrix& m) { params.push_back(&m); });
  Adam adam(params, {.rate = cfg.learning_rate});

  const InstanceNorm norm(input_length, horizon);
  std::vector<Matrix> targets;
  for (const auto& s : train) targets.push_back(as_row(s.y));

  TrainReport report;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Tape tape;
      TstParams<Var> p;
      p.stages.resize(cfg.ratios.size());
      std::vector<Var*> slots;
      p.visit([&](const std::string&, Var& v) { slots.push_back(&v); });
      for (std::size_t k = 0; k < params.size(); ++k) *slots[k] = tape.leaf(*params[k]);

      std::optional<Var> total;
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = train[order[b]];
        const Var y = tst_forward(p, tape.constant(s.x), cfg, norm);
        const Var l = ops::mse(y, tape.constant(targets[order[b]]));
        total = total ? ops::add(*total, l) : l;
      }
      const Var loss = ops::scale(*total, 1.0 / static_cast<double>(end - start));
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) throw TrainingError(epoch, "training loss is not finite");
      epoch_loss += value * static_cast<double>(end - start);
      backward(loss);
      std::vector<Matrix> grads;
      for (Var* v : slots) grads.push_back(tape.grad(*v));
      adam.step(grads);
    }
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(train.size()));
  }
  for (const Matrix* m : params)
    if (!m->allFinite()) throw TrainingError(cfg.epochs - 1, "weights diverged");

  const auto eval_set = validation.empty() ? train : validation;
  std::tie(report.validation_rmse, report.validation_r2) = evaluate(*model, eval_set);
  model->reset_evaluations();
  report.weight_checksum = model->checksum();
  return {std::move(model), std::move(report)};
}

}  // namespace hero::model
