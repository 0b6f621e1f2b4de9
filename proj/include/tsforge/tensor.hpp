// Copyright 2026 The tsforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TSFORGE_TENSOR_HPP
#define TSFORGE_TENSOR_HPP

// Reverse-mode automatic differentiation over small dense arrays.
//
// A Tensor is an immutable row-major array of doubles. Tensors produced from
// at least one tracked input are recorded on that input's Graph (a tape);
// everything else is a plain constant. Backward rules are written with the
// same public ops, so running backward with `create_graph` records the
// gradient computation itself and it can be differentiated again. That is
// what the gradient penalty of the critic loss needs.
//
// Lifetime: a tracked tensor refers to its Graph by pointer. Use detach()
// to keep a value after the graph is gone.

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsforge {

using Shape = std::vector<std::size_t>;

/// Inconsistent extents for an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input outside an operation's domain (log of a negative, division by zero).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class Graph;

inline constexpr std::size_t kMaxRank = 3;

class Tensor {
 public:
  /// Scalar zero.
  Tensor();

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_->size(); }
  std::size_t extent(std::size_t axis) const;
  bool is_scalar() const noexcept { return shape_.empty(); }

  std::span<const double> values() const noexcept { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  /// Value of a single-element tensor.
  double item() const;

  bool tracked() const noexcept { return graph_ != nullptr; }
  Graph* graph() const noexcept { return graph_; }
  std::size_t node() const noexcept { return node_; }

  /// Same values, no graph.
  Tensor detach() const;

 private:
  friend class Graph;
  friend struct OpRecorder;

  Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data);

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Graph* graph_ = nullptr;
  std::size_t node_ = 0;
};

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kSquare,
  kSqrt,
  kExp,
  kLog,
  kTanh,
  kSigmoid,
  kRelu,
  kClamp,
  kMatMul,
  kTranspose,
  kReshape,
  kConcat,
  kSlice,
  kPad,
  kExpand,
  kBroadcastScalar,
  kSum,
  kSumAxis,
  kL2Norm,
  kRowL2Norm,
  kCustom,
};

const char* op_name(OpKind kind) noexcept;

/// Gradients of one backward pass, keyed by graph node.
class GradientMap {
 public:
  GradientMap() = default;

  /// d(output)/d(t); zeros of t's shape when t is not on a path to the output.
  Tensor of(const Tensor& t) const;
  bool contains(const Tensor& t) const;

 private:
  friend class Graph;
  const Graph* graph_ = nullptr;
  std::vector<std::optional<Tensor>> grads_;
};

/// Append-only tape. Node ids are assigned in creation order, so inputs
/// always precede their consumers and reverse id order is a valid
/// topological order for backward.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Registers `value` as a differentiable leaf.
  Tensor variable(const Tensor& value);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  OpKind kind(std::size_t node) const { return nodes_.at(node).kind; }

  /// First-order gradients of a scalar output with respect to every node
  /// that depends on a leaf.
  GradientMap backward(const Tensor& output);

  /// Gradients of a scalar output with respect to `wrt`. With
  /// `create_graph` the result is itself recorded on this graph and can be
  /// differentiated again.
  std::vector<Tensor> gradient(const Tensor& output, std::span<const Tensor> wrt,
                               bool create_graph);

  using ElementFn = std::function<double(double)>;
  /// Elementwise op with a user-supplied derivative. Its backward rule is
  /// first order only; differentiating through it with create_graph throws.
  Tensor custom_unary(const Tensor& x, ElementFn fn, ElementFn derivative,
                      std::string name);

 private:
  friend struct OpRecorder;

  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<Tensor> inputs;
    Tensor output;
    std::size_t axis = 0;
    std::size_t start = 0;
    std::size_t length = 0;
    double lo = 0.0;
    double hi = 0.0;
    ElementFn derivative;
    std::string name;
  };

  std::vector<std::optional<Tensor>> run_backward(const Tensor& output,
                                                  std::span<const Tensor> wrt,
                                                  bool create_graph);
  std::vector<Tensor> backward_rule(const Node& node, const Tensor& grad,
                                    const std::vector<bool>& needs, bool create_graph);

  // deque keeps references stable while backward appends nodes.
  std::deque<Node> nodes_;
  bool recording_ = true;
};

// ---------------------------------------------------------------------------
// Elementwise. Binary ops take equal shapes or one rank-0 operand.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& x);
Tensor operator+(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(const Tensor& a, double b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(const Tensor& a, double b);

// Activations
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Backward passes gradient where x > 0 only (zero at the kink).
Tensor relu(const Tensor& x);

// Linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

// Reductions
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis);
/// Euclidean norm over all elements. Gradient at the origin is zero.
Tensor l2_norm(const Tensor& x);
/// Per-row Euclidean norm of a rank-2 tensor, shape [rows].
Tensor row_l2_norm(const Tensor& x);

// Structural
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
/// Embeds x at offset `before` along `axis` in zeros of extent `total`.
Tensor pad(const Tensor& x, std::size_t axis, std::size_t before, std::size_t total);
/// Inserts a new axis of extent n at position `axis`, repeating x.
Tensor expand(const Tensor& x, std::size_t axis, std::size_t n);
Tensor stack(std::span<const Tensor> parts, std::size_t axis);
Tensor broadcast_scalar(const Tensor& s, Shape shape);

std::size_t element_count(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

}  // namespace tsforge

#endif  // TSFORGE_TENSOR_HPP
