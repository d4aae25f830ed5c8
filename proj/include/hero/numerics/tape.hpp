#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hero/errors.hpp"
#include "hero/numerics/matrix.hpp"
#include "hero/numerics/ops.hpp"

namespace hero {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

/// Reverse-mode differentiation over matrix-valued primitive operations.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and every node's inputs precede it. backward() recomputes
/// all adjoints from scratch, which makes repeated calls on a frozen tape
/// idempotent.
class Tape {
 public:
  enum class Op {
    kLeaf,
    kMatMul,
    kAdd,
    kSub,
    kMul,
    kAddRow,
    kScale,
    kTanh,
    kSigmoid,
    kRelu,
    kExp,
    kSoftmaxRows,
    kLayerNormRows,
    kTranspose,
    kSliceRows,
    kSliceCols,
    kAvgPoolRows,
    kFlattenRow,
    kSum,
    kMse,
    kSse,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::size_t a = 0;
    std::size_t b = 0;
    bool requires_grad = false;
    double scalar = 0.0;   // scale factor
    std::size_t first = 0; // slice offset / pooling window
    std::size_t count = 0; // slice length
    Matrix value;
    Matrix grad;
    Matrix aux;  // layer norm: per-row 1/sigma
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad = true) {
    Node n;
    n.requires_grad = requires_grad;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var constant(Matrix value) { return leaf(std::move(value), false); }

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  double scalar(Var v) const { return nodes_.at(v.id).value(0, 0); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

  Var record(Op op, std::size_t a, std::size_t b, Matrix value, double scalar = 0.0,
             std::size_t first = 0, std::size_t count = 0, Matrix aux = {}) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.scalar = scalar;
    n.first = first;
    n.count = count;
    n.value = std::move(value);
    n.aux = std::move(aux);
    n.requires_grad = nodes_.at(a).requires_grad || (is_binary(op) && nodes_.at(b).requires_grad);
    return push(std::move(n));
  }

  void backward(Var loss) {
    if (loss.tape != this) throw ArgumentError("loss node belongs to a different tape");
    const Node& l = nodes_.at(loss.id);
    if (l.value.rows() != 1 || l.value.cols() != 1)
      throw ArgumentError("backward requires a scalar (1x1) loss node");
    for (Node& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    nodes_[loss.id].grad(0, 0) = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) propagate(i);
  }

 private:
  static bool is_binary(Op op) {
    switch (op) {
      case Op::kMatMul:
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kAddRow:
      case Op::kMse:
      case Op::kSse:
        return true;
      default:
        return false;
    }
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

  void propagate(std::size_t i) {
    Node& n = nodes_[i];
    if (n.op == Op::kLeaf || !n.requires_grad) return;
    const Matrix& g = n.grad;
    Node& a = nodes_[n.a];
    // b aliases a for unary ops; only touched when is_binary(op).
    Node& b = nodes_[n.b];
    switch (n.op) {
      case Op::kMatMul:
        if (a.requires_grad) a.grad.noalias() += g * b.value.transpose();
        if (b.requires_grad) b.grad.noalias() += a.value.transpose() * g;
        break;
      case Op::kAdd:
        if (a.requires_grad) a.grad += g;
        if (b.requires_grad) b.grad += g;
        break;
      case Op::kSub:
        if (a.requires_grad) a.grad += g;
        if (b.requires_grad) b.grad -= g;
        break;
      case Op::kMul:
        if (a.requires_grad) a.grad += g.cwiseProduct(b.value);
        if (b.requires_grad) b.grad += g.cwiseProduct(a.value);
        break;
      case Op::kAddRow:
        if (a.requires_grad) a.grad += g;
        if (b.requires_grad) b.grad += g.colwise().sum();
        break;
      case Op::kScale:
        a.grad += g * n.scalar;
        break;
      case Op::kTanh:
        a.grad += (g.array() * (1.0 - n.value.array().square())).matrix();
        break;
      case Op::kSigmoid:
        a.grad += (g.array() * n.value.array() * (1.0 - n.value.array())).matrix();
        break;
      case Op::kRelu:
        a.grad += (g.array() * (a.value.array() > 0.0).cast<double>()).matrix();
        break;
      case Op::kExp:
        a.grad += g.cwiseProduct(n.value);
        break;
      case Op::kSoftmaxRows:
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const double dot = g.row(r).dot(n.value.row(r));
          a.grad.row(r) += (n.value.row(r).array() * (g.row(r).array() - dot)).matrix();
        }
        break;
      case Op::kLayerNormRows: {
        const double cols = static_cast<double>(g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const double mean_g = g.row(r).sum() / cols;
          const double mean_gy = g.row(r).dot(n.value.row(r)) / cols;
          a.grad.row(r) +=
              (n.aux(r, 0) * (g.row(r).array() - mean_g - n.value.row(r).array() * mean_gy))
                  .matrix();
        }
        break;
      }
      case Op::kTranspose:
        a.grad += g.transpose();
        break;
      case Op::kSliceRows:
        a.grad.middleRows(static_cast<Eigen::Index>(n.first), static_cast<Eigen::Index>(n.count)) += g;
        break;
      case Op::kSliceCols:
        a.grad.middleCols(static_cast<Eigen::Index>(n.first), static_cast<Eigen::Index>(n.count)) += g;
        break;
      case Op::kAvgPoolRows: {
        const std::size_t rows = static_cast<std::size_t>(a.value.rows());
        for (Eigen::Index o = 0; o < g.rows(); ++o) {
          const std::size_t begin = static_cast<std::size_t>(o) * n.first;
          const std::size_t end = std::min(rows, begin + n.first);
          const double w = 1.0 / static_cast<double>(end - begin);
          for (std::size_t r = begin; r < end; ++r)
            a.grad.row(static_cast<Eigen::Index>(r)) += w * g.row(o);
        }
        break;
      }
      case Op::kFlattenRow:
        a.grad += Eigen::Map<const Matrix>(g.data(), a.value.rows(), a.value.cols());
        break;
      case Op::kSum:
        a.grad.array() += g(0, 0);
        break;
      case Op::kMse: {
        const double k = 2.0 * g(0, 0) / static_cast<double>(a.value.size());
        if (a.requires_grad) a.grad += k * (a.value - b.value);
        if (b.requires_grad) b.grad -= k * (a.value - b.value);
        break;
      }
      case Op::kSse: {
        const double k = 2.0 * g(0, 0);
        if (a.requires_grad) a.grad += k * (a.value - b.value);
        if (b.requires_grad) b.grad -= k * (a.value - b.value);
        break;
      }
      case Op::kLeaf:
        break;
    }
  }

  std::vector<Node> nodes_;
};

namespace ops {

namespace detail {
inline Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw ArgumentError("operands live on different tapes");
  return *a.tape;
}
}  // namespace detail

inline const Matrix& value_of(Var v) { return v.tape->value(v); }

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  return t.record(Tape::Op::kMatMul, a.id, b.id, matmul(t.value(a), t.value(b)));
}
inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  if (t.value(a).rows() != t.value(b).rows() || t.value(a).cols() != t.value(b).cols())
    throw ArgumentError("add shape mismatch");
  return t.record(Tape::Op::kAdd, a.id, b.id, t.value(a) + t.value(b));
}
inline Var sub(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  if (t.value(a).rows() != t.value(b).rows() || t.value(a).cols() != t.value(b).cols())
    throw ArgumentError("sub shape mismatch");
  return t.record(Tape::Op::kSub, a.id, b.id, t.value(a) - t.value(b));
}
inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  if (t.value(a).rows() != t.value(b).rows() || t.value(a).cols() != t.value(b).cols())
    throw ArgumentError("mul shape mismatch");
  return t.record(Tape::Op::kMul, a.id, b.id, mul(t.value(a), t.value(b)));
}
inline Var add_row(Var a, Var row) {
  Tape& t = detail::same_tape(a, row);
  return t.record(Tape::Op::kAddRow, a.id, row.id, add_row(t.value(a), t.value(row)));
}
inline Var scale(Var a, double s) {
  return a.tape->record(Tape::Op::kScale, a.id, a.id, scale(value_of(a), s), s);
}
inline Var tanh(Var a) { return a.tape->record(Tape::Op::kTanh, a.id, a.id, tanh(value_of(a))); }
inline Var sigmoid(Var a) {
  return a.tape->record(Tape::Op::kSigmoid, a.id, a.id, sigmoid(value_of(a)));
}
inline Var relu(Var a) { return a.tape->record(Tape::Op::kRelu, a.id, a.id, relu(value_of(a))); }
inline Var exp(Var a) { return a.tape->record(Tape::Op::kExp, a.id, a.id, exp(value_of(a))); }
inline Var softmax_rows(Var a) {
  return a.tape->record(Tape::Op::kSoftmaxRows, a.id, a.id, softmax_rows(value_of(a)));
}
inline Var layer_norm_rows(Var a) {
  const Matrix& x = value_of(a);
  const double n = static_cast<double>(x.cols());
  Matrix inv_sigma(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / n;
    const double var = (x.row(r).array() - mean).square().sum() / n;
    inv_sigma(r, 0) = 1.0 / std::sqrt(var + kLayerNormEps);
  }
  return a.tape->record(Tape::Op::kLayerNormRows, a.id, a.id, layer_norm_rows(x), 0.0, 0, 0,
                        std::move(inv_sigma));
}
inline Var transpose(Var a) {
  return a.tape->record(Tape::Op::kTranspose, a.id, a.id, transpose(value_of(a)));
}
inline Var slice_rows(Var a, std::size_t first, std::size_t count) {
  return a.tape->record(Tape::Op::kSliceRows, a.id, a.id, slice_rows(value_of(a), first, count), 0.0,
                        first, count);
}
inline Var slice_cols(Var a, std::size_t first, std::size_t count) {
  return a.tape->record(Tape::Op::kSliceCols, a.id, a.id, slice_cols(value_of(a), first, count), 0.0,
                        first, count);
}
inline Var avg_pool_rows(Var a, std::size_t window) {
  return a.tape->record(Tape::Op::kAvgPoolRows, a.id, a.id, avg_pool_rows(value_of(a), window), 0.0,
                        window);
}
inline Var flatten_row(Var a) {
  return a.tape->record(Tape::Op::kFlattenRow, a.id, a.id, flatten_row(value_of(a)));
}
inline Var sum(Var a) { return a.tape->record(Tape::Op::kSum, a.id, a.id, sum(value_of(a))); }
inline Var mse(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  return t.record(Tape::Op::kMse, a.id, b.id, mse(t.value(a), t.value(b)));
}
inline Var sse(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  return t.record(Tape::Op::kSse, a.id, b.id, sse(t.value(a), t.value(b)));
}

// Constant operand in generic code: a Matrix stays a Matrix, and on the Var
// path it becomes a constant on the same tape as `like`.
inline const Matrix& lift(const Matrix& m, const Matrix&) { return m; }
inline Var lift(const Matrix& m, const Var& like) { return like.tape->constant(m); }
inline Eigen::Index rows_of(const Matrix& m) { return m.rows(); }
inline Eigen::Index rows_of(const Var& v) { return v.tape->value(v).rows(); }

}  // namespace ops

/// Free-function form of Tape::backward.
inline void backward(Var loss) {
  if (loss.tape == nullptr) throw ArgumentError("backward on a detached variable");
  loss.tape->backward(loss);
}

}  // namespace hero
