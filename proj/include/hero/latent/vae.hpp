#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hero/dataset/windows.hpp"
#include "hero/errors.hpp"
#include "hero/forecaster/forecaster.hpp"
#include "hero/numerics/adam.hpp"
#include "hero/numerics/ops.hpp"
#include "hero/numerics/random.hpp"
#include "hero/numerics/tape.hpp"

namespace hero::latent {

/// Posterior summary of one window.
struct LatentSummary {
  std::vector<double> mu;
  std::vector<double> log_var;

  std::vector<double> sigma() const {
    std::vector<double> s(log_var.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(0.5 * log_var[i]);
    return s;
  }
};

template <class M>
struct EncoderParams {
  M w, u, b;      // LSTM gates i,f,g,o: F x 4H, H x 4H, 1 x 4H
  M w_mu, b_mu;   // H x d_z, 1 x d_z
  M w_lv, b_lv;   // H x d_z, 1 x d_z

  template <class Fn>
  void visit(Fn&& fn) {
    fn("w", w);
    fn("u", u);
    fn("b", b);
    fn("w_mu", w_mu);
    fn("b_mu", b_mu);
    fn("w_lv", w_lv);
    fn("b_lv", b_lv);
  }
};

template <class M>
struct DecoderParams {
  M w1, b1;  // d_z x hidden, 1 x hidden
  M w2, b2;  // hidden x F*T, 1 x F*T

  template <class Fn>
  void visit(Fn&& fn) {
    fn("w1", w1);
    fn("b1", b1);
    fn("w2", w2);
    fn("b2", b2);
  }
};

/// Unrolls the LSTM over the time steps. steps[t] holds the inputs at step t,
/// one row per sample. Returns (mu, log_var), one row per sample.
template <class V>
std::pair<V, V> encoder_forward(const EncoderParams<V>& p, const std::vector<V>& steps, std::size_t hidden) {
  using namespace hero::ops;
  const Eigen::Index n = rows_of(steps.front());
  V h = lift(Matrix::Zero(n, static_cast<Eigen::Index>(hidden)), steps.front());
  V c = h;
  for (const V& x : steps) {
    const V gates = add_row(add(matmul(x, p.w), matmul(h, p.u)), p.b);
    const V i = sigmoid(slice_cols(gates, 0, hidden));
    const V f = sigmoid(slice_cols(gates, hidden, hidden));
    const V g = tanh(slice_cols(gates, 2 * hidden, hidden));
    const V o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
    c = add(mul(f, c), mul(i, g));
    h = mul(o, tanh(c));
  }
  return {add_row(matmul(h, p.w_mu), p.b_mu), add_row(matmul(h, p.w_lv), p.b_lv)};
}

template <class V>
V decoder_forward(const DecoderParams<V>& p, const V& z) {
  using namespace hero::ops;
  return add_row(matmul(tanh(add_row(matmul(z, p.w1), p.b1)), p.w2), p.b2);
}

/// Per-step input matrices (samples x features) for a batch of windows.
inline std::vector<Matrix> time_major(std::span<const Matrix> windows) {
  const auto f = windows.front().rows();
  const auto t = windows.front().cols();
  std::vector<Matrix> steps(static_cast<std::size_t>(t), Matrix(static_cast<Eigen::Index>(windows.size()), f));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].rows() != f || windows[i].cols() != t) throw ArgumentError("windows have inconsistent shapes");
    for (Eigen::Index s = 0; s < t; ++s) steps[static_cast<std::size_t>(s)].row(static_cast<Eigen::Index>(i)) = windows[i].col(s).transpose();
  }
  return steps;
}

class Encoder {
 public:
  Encoder(std::size_t features, std::size_t input_length, std::size_t hidden, std::size_t latent,
          EncoderParams<Matrix> params)
      : features_(features), input_length_(input_length), hidden_(hidden), latent_(latent), params_(std::move(params)) {
    check_shapes();
  }

  /// Xavier-uniform weights, zero biases except a forget-gate bias of 1.
  static Encoder initialize(std::size_t features, std::size_t input_length, std::size_t hidden, std::size_t latent,
                            RandomStream& rng) {
    if (features == 0 || input_length == 0 || hidden == 0 || latent == 0)
      throw ArgumentError("encoder dimensions must be positive");
    EncoderParams<Matrix> p;
    p.w = xavier(features, 4 * hidden, rng);
    p.u = xavier(hidden, 4 * hidden, rng);
    p.b = Matrix::Zero(1, static_cast<Eigen::Index>(4 * hidden));
    p.b.middleCols(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(hidden)).setOnes();
    p.w_mu = xavier(hidden, latent, rng);
    p.b_mu = Matrix::Zero(1, static_cast<Eigen::Index>(latent));
    p.w_lv = xavier(hidden, latent, rng);
    p.b_lv = Matrix::Zero(1, static_cast<Eigen::Index>(latent));
    return Encoder(features, input_length, hidden, latent, std::move(p));
  }

  static Matrix xavier(std::size_t r, std::size_t c, RandomStream& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(r + c));
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
    return m;
  }

  std::size_t features() const noexcept { return features_; }
  std::size_t input_length() const noexcept { return input_length_; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t latent() const noexcept { return latent_; }
  EncoderParams<Matrix>& params() noexcept { return params_; }
  const EncoderParams<Matrix>& params() const noexcept { return params_; }

  LatentSummary encode(const Matrix& x) const {
    if (static_cast<std::size_t>(x.rows()) != features_ || static_cast<std::size_t>(x.cols()) != input_length_)
      throw ArgumentError("encoder input shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                          " does not match " + std::to_string(features_) + "x" + std::to_string(input_length_));
    if (!x.allFinite()) throw ArgumentError("encoder input contains non-finite values");
    const auto [mu, lv] = encoder_forward(params_, time_major(std::span<const Matrix>(&x, 1)), hidden_);
    return {std::vector<double>(mu.data(), mu.data() + mu.size()),
            std::vector<double>(lv.data(), lv.data() + lv.size())};
  }

  nlohmann::json to_json() const {
    nlohmann::json w;
    const_cast<EncoderParams<Matrix>&>(params_).visit(
        [&](const std::string& name, Matrix& m) { w[name] = model::matrix_to_json(m); });
    return {{"architecture",
             {{"kind", "lstm-encoder"},
              {"features", features_},
              {"input_length", input_length_},
              {"hidden", hidden_},
              {"latent", latent_}}},
            {"weights", w}};
  }

  static Encoder from_json(const nlohmann::json& j) {
    try {
      const auto& a = j.at("architecture");
      if (a.at("kind").get<std::string>() != "lstm-encoder") throw SchemaError("not an encoder weight file");
      EncoderParams<Matrix> p;
      const auto& w = j.at("weights");
      p.visit([&](const std::string& name, Matrix& m) {
        if (!w.contains(name)) throw SchemaError("encoder weight file is missing '" + name + "'");
        m = model::matrix_from_json(w.at(name));
      });
      return Encoder(a.at("features"), a.at("input_length"), a.at("hidden"), a.at("latent"), std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("malformed encoder weight file: ") + e.what());
    }
  }

 private:
  void check_shapes() const {
    auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
      if (static_cast<std::size_t>(m.rows()) != r || static_cast<std::size_t>(m.cols()) != c)
        throw SchemaError(std::string("encoder weight '") + name + "' has the wrong shape");
    };
    expect(params_.w, features_, 4 * hidden_, "w");
    expect(params_.u, hidden_, 4 * hidden_, "u");
    expect(params_.b, 1, 4 * hidden_, "b");
    expect(params_.w_mu, hidden_, latent_, "w_mu");
    expect(params_.b_mu, 1, latent_, "b_mu");
    expect(params_.w_lv, hidden_, latent_, "w_lv");
    expect(params_.b_lv, 1, latent_, "b_lv");
  }

  std::size_t features_, input_length_, hidden_, latent_;
  EncoderParams<Matrix> params_;
};

/// z = mu + exp(log_var / 2) * noise.
inline std::vector<double> reparameterize(const LatentSummary& s, std::span<const double> noise) {
  if (noise.size() != s.mu.size()) throw ArgumentError("noise length does not match latent dimension");
  std::vector<double> z(noise.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(noise[i])) throw ArgumentError("noise must be finite");
    z[i] = s.mu[i] + std::exp(0.5 * s.log_var[i]) * noise[i];
  }
  return z;
}

/// Closed-form KL(N(mu, sigma^2) || N(0, I)).
inline double kl_divergence(const LatentSummary& s) {
  double kl = 0.0;
  for (std::size_t i = 0; i < s.mu.size(); ++i)
    kl += 0.5 * (s.mu[i] * s.mu[i] + std::exp(s.log_var[i]) - s.log_var[i] - 1.0);
  return kl;
}

/// Mean squared reconstruction error plus beta times the KL term.
inline double vae_loss(std::span<const double> x, std::span<const double> x_hat, const LatentSummary& s, double beta) {
  if (!(beta >= 0.0)) throw ArgumentError("beta must be >= 0");
  if (x.size() != x_hat.size() || x.empty()) throw ArgumentError("reconstruction length mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mse += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
  return mse / static_cast<double>(x.size()) + beta * kl_divergence(s);
}

struct VaeConfig {
  std::size_t hidden = 16;
  std::size_t latent = 4;
  std::size_t decoder_hidden = 32;
  double beta = 0.5;
  std::size_t epochs = 300;
  double learning_rate = 1e-2;

  void validate() const {
    if (hidden == 0 || latent == 0 || decoder_hidden == 0) throw ArgumentError("VAE dimensions must be positive");
    if (!(beta >= 0.0)) throw ArgumentError("beta must be >= 0");
    if (epochs == 0) throw ArgumentError("epochs must be positive");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  }
};

/// Batch VAE objective on a tape: mean reconstruction MSE plus beta times the
/// mean per-sample KL. `noise` is samples x d_z.
inline Var vae_objective(Tape& tape, const EncoderParams<Var>& enc, const DecoderParams<Var>& dec,
                         const std::vector<Matrix>& steps, const Matrix& targets, const Matrix& noise,
                         std::size_t hidden, double beta) {
  using namespace hero::ops;
  std::vector<Var> xs;
  for (const auto& s : steps) xs.push_back(tape.constant(s));
  const auto [mu, lv] = encoder_forward(enc, xs, hidden);
  const Var z = add(mu, mul(exp(scale(lv, 0.5)), tape.constant(noise)));
  const Var recon = mse(decoder_forward(dec, z), tape.constant(targets));
  const Var kl_terms = sub(add(mul(mu, mu), exp(lv)), add(lv, tape.constant(Matrix::Ones(noise.rows(), noise.cols()))));
  const Var kl = scale(sum(kl_terms), 0.5 / static_cast<double>(noise.rows()));
  return beta > 0.0 ? add(recon, scale(kl, beta)) : recon;
}

struct VaeTrainResult {
  Encoder encoder;
  DecoderParams<Matrix> decoder;
  std::vector<double> loss_history;
};

/// Full-batch Adam on the VAE objective with fresh reparameterization noise
/// every epoch. Throws TrainingError on the first non-finite loss.
inline VaeTrainResult train_vae(std::span<const data::WindowSample> samples, const VaeConfig& cfg, RandomStream& rng) {
  cfg.validate();
  if (samples.empty()) throw ArgumentError("need at least one sample");
  std::vector<Matrix> windows;
  for (const auto& s : samples) windows.push_back(s.x);
  const auto features = static_cast<std::size_t>(windows.front().rows());
  const auto length = static_cast<std::size_t>(windows.front().cols());
  const auto steps = time_major(windows);
  Matrix targets(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(features * length));
  for (std::size_t i = 0; i < windows.size(); ++i)
    targets.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVector>(windows[i].data(), windows[i].size());

  Encoder enc = Encoder::initialize(features, length, cfg.hidden, cfg.latent, rng);
  DecoderParams<Matrix> dec{Encoder::xavier(cfg.latent, cfg.decoder_hidden, rng),
                            Matrix::Zero(1, static_cast<Eigen::Index>(cfg.decoder_hidden)),
                            Encoder::xavier(cfg.decoder_hidden, features * length, rng),
                            Matrix::Zero(1, static_cast<Eigen::Index>(features * length))};
  std::vector<Matrix*> params;
  enc.params().visit([&](const std::string&, Matrix& m) { params.push_back(&m); });
  dec.visit([&](const std::string&, Matrix& m) { params.push_back(&m); });
  Adam adam(params, {.rate = cfg.learning_rate});

  std::vector<double> history;
  Matrix noise(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(cfg.latent));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();
    Tape tape;
    EncoderParams<Var> ev;
    DecoderParams<Var> dv;
    std::vector<Var*> slots;
    ev.visit([&](const std::string&, Var& v) { slots.push_back(&v); });
    dv.visit([&](const std::string&, Var& v) { slots.push_back(&v); });
    for (std::size_t k = 0; k < params.size(); ++k) *slots[k] = tape.leaf(*params[k]);
    const Var loss = vae_objective(tape, ev, dv, steps, targets, noise, cfg.hidden, cfg.beta);
    const double value = tape.scalar(loss);
    if (!std::isfinite(value)) throw TrainingError(epoch, "VAE loss is not finite");
    history.push_back(value);
    backward(loss);
    std::vector<Matrix> grads;
    for (Var* v : slots) grads.push_back(tape.grad(*v));
    adam.step(grads);
  }
  return {std::move(enc), std::move(dec), std::move(history)};
}

}  // namespace hero::latent
