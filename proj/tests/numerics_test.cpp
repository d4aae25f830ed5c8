#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "hero/numerics.hpp"

namespace hero {
namespace {

Matrix random_matrix(RandomStream& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

TEST(MinMaxNormalize, EndpointsForced) {
  const std::vector<double> v{2.0, 4.0, 6.0};
  EXPECT_EQ(minmax_normalize(v), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(MinMaxNormalize, DegenerateMapsToHalf) {
  const std::vector<double> v{7.0, 7.0, 7.0};
  EXPECT_EQ(minmax_normalize(v), (std::vector<double>{0.5, 0.5, 0.5}));
}

TEST(MinMaxNormalize, Errors) {
  EXPECT_THROW(minmax_normalize(std::vector<double>{}), ArgumentError);
  EXPECT_THROW(minmax_normalize(std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}),
               DataError);
  EXPECT_THROW(minmax_normalize(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}),
               DataError);
}

TEST(MinMaxNormalize, PositiveAffineInvariance) {
  RandomStream rng(11, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(30);
    std::vector<double> v(n), w(n);
    const double a = rng.uniform(0.01, 100.0);
    const double b = rng.uniform(-50.0, 50.0);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = rng.uniform(-10.0, 10.0);
      w[i] = a * v[i] + b;
    }
    // Direct evaluation of the definition.
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    const auto nv = minmax_normalize(v);
    const auto nw = minmax_normalize(w);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(nv[i], (v[i] - lo) / (hi - lo), 1e-12);
      EXPECT_NEAR(nv[i], nw[i], 1e-12);
    }
  }
}

TEST(FiniteDiff, Square) {
  const auto r = finite_diff_gradient([](std::span<const double> x) { return x[0] * x[0]; },
                                      std::vector<double>{3.0}, 1e-4);
  EXPECT_NEAR(r.gradient[0], 6.0, 1e-6);
  EXPECT_EQ(r.evaluations, 2u);
}

TEST(FiniteDiff, ConstantIsZero) {
  const std::vector<double> x{1.0, -2.0, 0.5};
  const auto r = finite_diff_gradient([](std::span<const double>) { return 4.2; }, x);
  for (double g : r.gradient) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(r.evaluations, 6u);
}

TEST(FiniteDiff, NonFiniteReportsProbe) {
  const std::vector<double> x{1.0, 1.0};
  try {
    finite_diff_gradient(
        [](std::span<const double> p) {
          return p[1] < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
        },
        x, 0.1);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_EQ(e.probe(), 3u);
  }
  EXPECT_THROW(finite_diff_gradient([](std::span<const double>) { return 0.0; }, x, 0.0),
               ArgumentError);
}

TEST(Tape, ScalarProduct) {
  Tape t;
  Var w = t.leaf(Matrix::Constant(1, 1, 2.0));
  Var x = t.leaf(Matrix::Constant(1, 1, 3.0));
  Var y = ops::matmul(w, x);
  t.backward(y);
  EXPECT_DOUBLE_EQ(t.grad(x)(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(t.grad(w)(0, 0), 3.0);
}

TEST(Tape, NonScalarLossRejected) {
  Tape t;
  Var x = t.leaf(Matrix::Ones(2, 2));
  EXPECT_THROW(t.backward(ops::tanh(x)), ArgumentError);
}

TEST(Tape, BackwardIsIdempotent) {
  RandomStream rng(3, 0);
  Tape t;
  Var x = t.leaf(random_matrix(rng, 3, 4));
  Var w = t.leaf(random_matrix(rng, 4, 2));
  Var loss = ops::sum(ops::tanh(ops::matmul(x, w)));
  t.backward(loss);
  const Matrix g1 = t.grad(x);
  t.backward(loss);
  EXPECT_EQ(t.grad(x), g1);
}

TEST(Tape, SoftmaxConstantCotangentVanishes) {
  RandomStream rng(5, 0);
  Tape t;
  Var x = t.leaf(random_matrix(rng, 3, 5));
  Var s = ops::softmax_rows(x);
  // loss = sum(s) has cotangent 1 everywhere on s; each row sums to one.
  t.backward(ops::sum(s));
  EXPECT_LT(max_abs(t.grad(x)), 1e-15);
}

// Builds a random chained graph touching every primitive and checks the tape
// gradient against central differences.
double random_graph_loss(const Matrix& x, const Matrix& w1, const Matrix& w2, const Matrix& b,
                         const Matrix& target) {
  using namespace ops;
  Matrix h = tanh(add_row(matmul(x, w1), b));
  Matrix a = softmax_rows(matmul(h, transpose(avg_pool_rows(h, 2))));
  Matrix z = layer_norm_rows(add(matmul(a, avg_pool_rows(h, 2)), sigmoid(h)));
  Matrix q = relu(mul(z, exp(scale(h, 0.3))));
  Matrix out = matmul(flatten_row(slice_rows(q, 0, 2)), w2);
  return mse(slice_cols(out, 0, 2), target)(0, 0) + 0.1 * sse(z, h)(0, 0);
}

TEST(Tape, RandomGraphsMatchFiniteDifferences) {
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    RandomStream rng(100 + trial, 7);
    const Matrix x = random_matrix(rng, 4, 3);
    const Matrix w1 = random_matrix(rng, 3, 5);
    const Matrix w2 = random_matrix(rng, 10, 3);
    const Matrix b = random_matrix(rng, 1, 5);
    const Matrix target = random_matrix(rng, 1, 2);

    Tape t;
    Var vx = t.leaf(x), vw1 = t.leaf(w1), vw2 = t.leaf(w2), vb = t.leaf(b);
    Var vt = t.constant(target);
    using namespace ops;
    Var h = tanh(add_row(matmul(vx, vw1), vb));
    Var a = softmax_rows(matmul(h, transpose(avg_pool_rows(h, 2))));
    Var z = layer_norm_rows(add(matmul(a, avg_pool_rows(h, 2)), sigmoid(h)));
    Var q = relu(mul(z, exp(scale(h, 0.3))));
    Var out = matmul(flatten_row(slice_rows(q, 0, 2)), vw2);
    Var loss = add(mse(slice_cols(out, 0, 2), vt), scale(sse(z, h), 0.1));
    ASSERT_NEAR(t.scalar(loss), random_graph_loss(x, w1, w2, b, target), 1e-12);
    t.backward(loss);

    auto check = [&](const Matrix& param, Var v, auto rebuild) {
      const auto fd = finite_diff_gradient(
          [&](std::span<const double> p) { return rebuild(reshape(p, param.rows(), param.cols())); },
          flatten(param), 1e-5);
      EXPECT_LT(max_relative_error(flatten(t.grad(v)), fd.gradient, 1e-4), 1e-4) << "trial " << trial;
    };
    check(x, vx, [&](const Matrix& p) { return random_graph_loss(p, w1, w2, b, target); });
    check(w1, vw1, [&](const Matrix& p) { return random_graph_loss(x, p, w2, b, target); });
    check(w2, vw2, [&](const Matrix& p) { return random_graph_loss(x, w1, p, b, target); });
    check(b, vb, [&](const Matrix& p) { return random_graph_loss(x, w1, w2, p, target); });
  }
}

TEST(Tape, TwoLayerNetworkMatchesFiniteDifferences) {
  RandomStream rng(9, 1);
  const Matrix x = random_matrix(rng, 1, 6);
  const Matrix w1 = random_matrix(rng, 6, 8);
  const Matrix w2 = random_matrix(rng, 8, 1);
  auto f = [&](const Matrix& input) {
    return ops::matmul(ops::tanh(ops::matmul(input, w1)), w2)(0, 0);
  };
  Tape t;
  Var vx = t.leaf(x);
  Var y = ops::matmul(ops::tanh(ops::matmul(vx, t.constant(w1))), t.constant(w2));
  t.backward(y);
  const auto fd = finite_diff_gradient([&](std::span<const double> p) { return f(reshape(p, 1, 6)); },
                                       flatten(x), 1e-4);
  EXPECT_LT(max_relative_error(flatten(t.grad(vx)), fd.gradient), 1e-4);
}

TEST(Tape, ConstantsReceiveNoGradientWork) {
  Tape t;
  Var c = t.constant(Matrix::Ones(2, 2));
  Var x = t.leaf(Matrix::Ones(2, 2));
  Var y = ops::sum(ops::mul(c, x));
  EXPECT_FALSE(t.node(c.id).requires_grad);
  EXPECT_TRUE(t.node(t.size() - 2).requires_grad);
  t.backward(y);
  EXPECT_EQ(t.grad(x), Matrix::Ones(2, 2));
}

TEST(Ops, LayerNormStatistics) {
  RandomStream rng(1, 2);
  const Matrix z = ops::layer_norm_rows(random_matrix(rng, 6, 32, -3.0, 5.0));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mean = z.row(r).mean();
    const double var = (z.row(r).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-6);
  }
}

TEST(Ops, PooledLength) {
  EXPECT_EQ(ops::pooled_length(24, 4), 6u);
  EXPECT_EQ(ops::pooled_length(9, 4), 3u);
  EXPECT_EQ(ops::pooled_length(9, 1), 9u);
  const Matrix p = ops::avg_pool_rows(Matrix::Constant(5, 2, 3.0), 2);
  EXPECT_EQ(p.rows(), 3);
  EXPECT_EQ(p, Matrix::Constant(3, 2, 3.0));
}

TEST(RandomStream, Reproducible) {
  RandomStream a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double ua = a.uniform(), ub = b.uniform();
    EXPECT_EQ(ua, ub);
    EXPECT_EQ(a.normal(), b.normal());
    differs |= ua != c.uniform();
    c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(RandomStream, OpenClosedNeverZero) {
  RandomStream rng(1, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform_open_closed();
    EXPECT_GT(u, 0.0);
    EXPECT_LE(u, 1.0);
  }
}

}  // namespace
}  // namespace hero
