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

#include "tsforge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace tsforge {

std::size_t element_count(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kNeg: return "neg";
    case OpKind::kSquare: return "square";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kClamp: return "clamp";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kReshape: return "reshape";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kPad: return "pad";
    case OpKind::kExpand: return "expand";
    case OpKind::kBroadcastScalar: return "broadcast_scalar";
    case OpKind::kSum: return "sum";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kL2Norm: return "l2_norm";
    case OpKind::kRowL2Norm: return "row_l2_norm";
    case OpKind::kCustom: return "custom";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Tensor

namespace {

void check_rank(const Shape& shape) {
  if (shape.size() > kMaxRank) {
    throw ShapeError("tensor rank " + std::to_string(shape.size()) + " exceeds " +
                     std::to_string(kMaxRank));
  }
}

}  // namespace

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data)
    : shape_(std::move(shape)), data_(std::move(data)) {}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  check_rank(shape);
  if (element_count(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " needs " +
                     std::to_string(element_count(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  return Tensor(std::move(shape), std::make_shared<const std::vector<double>>(std::move(values)));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = element_count(shape);
  return constant(std::move(shape), std::vector<double>(n, value));
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  return (*data_)[0];
}

Tensor Tensor::detach() const { return Tensor(shape_, data_); }

// ---------------------------------------------------------------------------
// Recording

struct OpRecorder {
  // Returns the graph the result belongs to, or nullptr for a constant.
  static Graph* owner(std::span<const Tensor> inputs) {
    Graph* g = nullptr;
    for (const Tensor& t : inputs) {
      if (t.graph_ == nullptr) continue;
      if (g != nullptr && g != t.graph_) {
        throw std::logic_error("operands belong to different graphs");
      }
      g = t.graph_;
    }
    if (g != nullptr && !g->recording_) return nullptr;
    return g;
  }

  template <typename Attrs>
  static Tensor record(OpKind kind, std::vector<Tensor> inputs, Shape shape,
                       std::vector<double> values, Attrs&& set_attrs) {
    check_rank(shape);
    Tensor out(std::move(shape), std::make_shared<const std::vector<double>>(std::move(values)));
    Graph* g = owner(inputs);
    if (g == nullptr) return out;
    Graph::Node node;
    node.kind = kind;
    node.inputs = std::move(inputs);
    set_attrs(node);
    out.graph_ = g;
    out.node_ = g->nodes_.size();
    node.output = out;
    g->nodes_.push_back(std::move(node));
    return out;
  }

  static Tensor record(OpKind kind, std::vector<Tensor> inputs, Shape shape,
                       std::vector<double> values) {
    return record(kind, std::move(inputs), std::move(shape), std::move(values),
                  [](Graph::Node&) {});
  }

  static Tensor leaf(Graph& g, const Tensor& value) {
    Tensor out(value.shape_, value.data_);
    out.graph_ = &g;
    out.node_ = g.nodes_.size();
    Graph::Node node;
    node.kind = OpKind::kLeaf;
    node.output = out;
    g.nodes_.push_back(std::move(node));
    return out;
  }
};

namespace {

template <typename F>
Tensor unary(OpKind kind, const Tensor& x, F f) {
  std::vector<double> out(x.size());
  auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return OpRecorder::record(kind, {x}, x.shape(), std::move(out));
}

template <typename F>
Tensor binary(OpKind kind, const Tensor& a, const Tensor& b, F f) {
  auto av = a.values();
  auto bv = b.values();
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
    return OpRecorder::record(kind, {a, b}, a.shape(), std::move(out));
  }
  if (a.is_scalar()) {
    std::vector<double> out(b.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[0], bv[i]);
    return OpRecorder::record(kind, {a, b}, b.shape(), std::move(out));
  }
  if (b.is_scalar()) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[0]);
    return OpRecorder::record(kind, {a, b}, a.shape(), std::move(out));
  }
  throw ShapeError(std::string(op_name(kind)) + ": shapes " + shape_string(a.shape()) + " and " +
                   shape_string(b.shape()) + " are incompatible");
}

// Sums a broadcast gradient back to a scalar operand.
Tensor reduce_like(const Tensor& grad, const Tensor& like) {
  if (like.is_scalar() && !grad.is_scalar()) return sum(grad);
  return grad;
}

// Product of extents before / after an axis.
std::pair<std::size_t, std::size_t> outer_inner(const Shape& shape, std::size_t axis) {
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  return {outer, inner};
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(OpKind::kAdd, a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(OpKind::kSub, a, b, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(OpKind::kMul, a, b, [](double x, double y) { return x * y; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double v : b.values()) {
    if (v == 0.0) throw DomainError("div: division by zero");
  }
  return binary(OpKind::kDiv, a, b, [](double x, double y) { return x / y; });
}

Tensor neg(const Tensor& x) { return unary(OpKind::kNeg, x, [](double v) { return -v; }); }

Tensor square(const Tensor& x) { return unary(OpKind::kSquare, x, [](double v) { return v * v; }); }

Tensor sqrt(const Tensor& x) {
  for (double v : x.values()) {
    if (v < 0.0) throw DomainError("sqrt: negative input");
  }
  return unary(OpKind::kSqrt, x, [](double v) { return std::sqrt(v); });
}

Tensor exp(const Tensor& x) { return unary(OpKind::kExp, x, [](double v) { return std::exp(v); }); }

Tensor log(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive input");
  }
  return unary(OpKind::kLog, x, [](double v) { return std::log(v); });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  std::vector<double> out(x.size());
  auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(in[i], lo, hi);
  return OpRecorder::record(OpKind::kClamp, {x}, x.shape(), std::move(out), [&](auto& n) {
    n.lo = lo;
    n.hi = hi;
  });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator-(const Tensor& x) { return neg(x); }
Tensor operator+(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
Tensor operator+(double a, const Tensor& b) { return add(Tensor::scalar(a), b); }
Tensor operator-(const Tensor& a, double b) { return sub(a, Tensor::scalar(b)); }
Tensor operator-(double a, const Tensor& b) { return sub(Tensor::scalar(a), b); }
Tensor operator*(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }
Tensor operator*(double a, const Tensor& b) { return mul(Tensor::scalar(a), b); }
Tensor operator/(const Tensor& a, double b) { return div(a, Tensor::scalar(b)); }

Tensor tanh(const Tensor& x) { return unary(OpKind::kTanh, x, [](double v) { return std::tanh(v); }); }

Tensor sigmoid(const Tensor& x) {
  return unary(OpKind::kSigmoid, x, [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Tensor relu(const Tensor& x) {
  return unary(OpKind::kRelu, x, [](double v) { return v > 0.0 ? v : 0.0; });
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return OpRecorder::record(OpKind::kMatMul, {a, b}, {m, n}, std::move(out));
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("transpose: rank-2 input required");
  const std::size_t r = x.shape()[0];
  const std::size_t c = x.shape()[1];
  std::vector<double> out(x.size());
  auto in = x.values();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  }
  return OpRecorder::record(OpKind::kTranspose, {x}, {c, r}, std::move(out));
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return OpRecorder::record(OpKind::kSum, {x}, {}, {s});
}

Tensor sum(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("sum: axis " + std::to_string(axis) + " invalid for " + shape_string(x.shape()));
  }
  const auto [outer, inner] = outer_inner(x.shape(), axis);
  const std::size_t n = x.shape()[axis];
  std::vector<double> out(outer * inner, 0.0);
  auto in = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t r = 0; r < n; ++r) {
      const double* src = in.data() + (o * n + r) * inner;
      double* dst = out.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  return OpRecorder::record(OpKind::kSumAxis, {x}, std::move(shape), std::move(out),
                            [&](auto& node) { node.axis = axis; });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of empty tensor");
  return sum(x) * (1.0 / static_cast<double>(x.size()));
}

Tensor mean(const Tensor& x, std::size_t axis) {
  const std::size_t n = x.extent(axis);
  if (n == 0) throw ShapeError("mean over empty axis");
  return sum(x, axis) * (1.0 / static_cast<double>(n));
}

Tensor l2_norm(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("l2_norm of empty tensor");
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return OpRecorder::record(OpKind::kL2Norm, {x}, {}, {std::sqrt(s)});
}

Tensor row_l2_norm(const Tensor& x) {
  if (x.rank() != 2 || x.size() == 0) throw ShapeError("row_l2_norm: non-empty rank-2 input required");
  const std::size_t rows = x.shape()[0];
  const std::size_t cols = x.shape()[1];
  std::vector<double> out(rows, 0.0);
  auto in = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += in[r * cols + c] * in[r * cols + c];
    out[r] = std::sqrt(s);
  }
  return OpRecorder::record(OpKind::kRowL2Norm, {x}, {rows}, std::move(out));
}

// ---------------------------------------------------------------------------
// Structural

Tensor reshape(const Tensor& x, Shape shape) {
  if (element_count(shape) != x.size()) {
    throw ShapeError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return OpRecorder::record(OpKind::kReshape, {x}, std::move(shape), std::move(out));
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat: invalid axis");
  Shape shape = first;
  shape[axis] = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && p.shape()[d] != first[d]) {
        throw ShapeError("concat: " + shape_string(p.shape()) + " vs " + shape_string(first));
      }
    }
    shape[axis] += p.shape()[axis];
  }
  const auto [outer, inner] = outer_inner(shape, axis);
  std::vector<double> out;
  out.reserve(element_count(shape));
  for (std::size_t o = 0; o < outer; ++o) {
    for (const Tensor& p : parts) {
      const std::size_t block = p.shape()[axis] * inner;
      auto src = p.values().subspan(o * block, block);
      out.insert(out.end(), src.begin(), src.end());
    }
  }
  return OpRecorder::record(OpKind::kConcat, std::vector<Tensor>(parts.begin(), parts.end()),
                            std::move(shape), std::move(out), [&](auto& n) { n.axis = axis; });
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank() || start + length > x.shape()[axis]) {
    throw ShapeError("slice: [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") on axis " + std::to_string(axis) + " of " + shape_string(x.shape()));
  }
  const auto [outer, inner] = outer_inner(x.shape(), axis);
  const std::size_t n = x.shape()[axis];
  std::vector<double> out;
  out.reserve(outer * length * inner);
  auto in = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    auto src = in.subspan((o * n + start) * inner, length * inner);
    out.insert(out.end(), src.begin(), src.end());
  }
  Shape shape = x.shape();
  shape[axis] = length;
  return OpRecorder::record(OpKind::kSlice, {x}, std::move(shape), std::move(out), [&](auto& node) {
    node.axis = axis;
    node.start = start;
    node.length = length;
  });
}

Tensor pad(const Tensor& x, std::size_t axis, std::size_t before, std::size_t total) {
  if (axis >= x.rank() || before + x.shape()[axis] > total) {
    throw ShapeError("pad: inconsistent extents for " + shape_string(x.shape()));
  }
  const auto [outer, inner] = outer_inner(x.shape(), axis);
  const std::size_t n = x.shape()[axis];
  std::vector<double> out(outer * total * inner, 0.0);
  auto in = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(in.data() + o * n * inner, n * inner, out.data() + (o * total + before) * inner);
  }
  Shape shape = x.shape();
  shape[axis] = total;
  return OpRecorder::record(OpKind::kPad, {x}, std::move(shape), std::move(out), [&](auto& node) {
    node.axis = axis;
    node.start = before;
    node.length = total;
  });
}

Tensor expand(const Tensor& x, std::size_t axis, std::size_t n) {
  if (axis > x.rank()) throw ShapeError("expand: invalid axis");
  Shape shape = x.shape();
  shape.insert(shape.begin() + static_cast<std::ptrdiff_t>(axis), n);
  check_rank(shape);
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  const std::size_t inner = outer == 0 ? 0 : x.size() / outer;
  std::vector<double> out;
  out.reserve(outer * n * inner);
  auto in = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    auto src = in.subspan(o * inner, inner);
    for (std::size_t r = 0; r < n; ++r) out.insert(out.end(), src.begin(), src.end());
  }
  return OpRecorder::record(OpKind::kExpand, {x}, std::move(shape), std::move(out), [&](auto& node) {
    node.axis = axis;
    node.length = n;
  });
}

Tensor stack(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  std::vector<Tensor> lifted;
  lifted.reserve(parts.size());
  for (const Tensor& p : parts) {
    if (p.shape() != parts[0].shape()) throw ShapeError("stack: shape mismatch");
    if (axis > p.rank()) throw ShapeError("stack: invalid axis");
    Shape s = p.shape();
    s.insert(s.begin() + static_cast<std::ptrdiff_t>(axis), 1);
    lifted.push_back(reshape(p, std::move(s)));
  }
  return concat(lifted, axis);
}

Tensor broadcast_scalar(const Tensor& s, Shape shape) {
  if (s.size() != 1) throw ShapeError("broadcast_scalar: input must have one element");
  std::vector<double> out(element_count(shape), s.values()[0]);
  return OpRecorder::record(OpKind::kBroadcastScalar, {s}, std::move(shape), std::move(out));
}

// ---------------------------------------------------------------------------
// Graph

Tensor Graph::variable(const Tensor& value) { return OpRecorder::leaf(*this, value); }

Tensor Graph::custom_unary(const Tensor& x, ElementFn fn, ElementFn derivative, std::string name) {
  if (x.graph() != nullptr && x.graph() != this) throw std::logic_error("custom_unary: foreign tensor");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(x[i]);
  // A constant input still has to land on this graph so backward sees it.
  Tensor in = x.tracked() ? x : variable(x);
  return OpRecorder::record(OpKind::kCustom, {in}, x.shape(), std::move(out), [&](auto& node) {
    node.derivative = std::move(derivative);
    node.name = std::move(name);
  });
}

std::vector<Tensor> Graph::backward_rule(const Node& node, const Tensor& g,
                                         const std::vector<bool>& needs, bool create_graph) {
  const auto& in = node.inputs;
  std::vector<Tensor> out(in.size());
  auto need = [&](std::size_t i) {
    return in[i].graph_ == this && in[i].node_ < needs.size() && needs[in[i].node_];
  };
  const Tensor& y = node.output;

  switch (node.kind) {
    case OpKind::kLeaf:
      break;
    case OpKind::kAdd:
      if (need(0)) out[0] = reduce_like(g, in[0]);
      if (need(1)) out[1] = reduce_like(g, in[1]);
      break;
    case OpKind::kSub:
      if (need(0)) out[0] = reduce_like(g, in[0]);
      if (need(1)) out[1] = reduce_like(neg(g), in[1]);
      break;
    case OpKind::kMul:
      if (need(0)) out[0] = reduce_like(mul(g, in[1]), in[0]);
      if (need(1)) out[1] = reduce_like(mul(g, in[0]), in[1]);
      break;
    case OpKind::kDiv:
      if (need(0)) out[0] = reduce_like(div(g, in[1]), in[0]);
      if (need(1)) out[1] = reduce_like(neg(div(mul(g, y), in[1])), in[1]);
      break;
    case OpKind::kNeg:
      out[0] = neg(g);
      break;
    case OpKind::kSquare:
      out[0] = mul(g, in[0] * 2.0);
      break;
    case OpKind::kSqrt:
      out[0] = div(g, y * 2.0);
      break;
    case OpKind::kExp:
      out[0] = mul(g, y);
      break;
    case OpKind::kLog:
      out[0] = div(g, in[0]);
      break;
    case OpKind::kTanh:
      out[0] = mul(g, 1.0 - square(y));
      break;
    case OpKind::kSigmoid:
      out[0] = mul(g, mul(y, 1.0 - y));
      break;
    case OpKind::kRelu:
    case OpKind::kClamp: {
      std::vector<double> mask(in[0].size());
      auto x = in[0].values();
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (node.kind == OpKind::kRelu) {
          mask[i] = x[i] > 0.0 ? 1.0 : 0.0;
        } else {
          mask[i] = (x[i] >= node.lo && x[i] <= node.hi) ? 1.0 : 0.0;
        }
      }
      out[0] = mul(g, Tensor::constant(in[0].shape(), std::move(mask)));
      break;
    }
    case OpKind::kMatMul:
      if (need(0)) out[0] = matmul(g, transpose(in[1]));
      if (need(1)) out[1] = matmul(transpose(in[0]), g);
      break;
    case OpKind::kTranspose:
      out[0] = transpose(g);
      break;
    case OpKind::kReshape:
      out[0] = reshape(g, in[0].shape());
      break;
    case OpKind::kConcat: {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < in.size(); ++i) {
        const std::size_t len = in[i].shape()[node.axis];
        if (need(i)) out[i] = slice(g, node.axis, offset, len);
        offset += len;
      }
      break;
    }
    case OpKind::kSlice:
      out[0] = pad(g, node.axis, node.start, in[0].shape()[node.axis]);
      break;
    case OpKind::kPad:
      out[0] = slice(g, node.axis, node.start, in[0].shape()[node.axis]);
      break;
    case OpKind::kExpand:
      out[0] = sum(g, node.axis);
      break;
    case OpKind::kBroadcastScalar:
      out[0] = reshape(sum(g), in[0].shape());
      break;
    case OpKind::kSum:
      out[0] = broadcast_scalar(g, in[0].shape());
      break;
    case OpKind::kSumAxis:
      out[0] = expand(g, node.axis, in[0].shape()[node.axis]);
      break;
    case OpKind::kL2Norm: {
      // x * g / |x|; at the origin x is zero so the shifted denominator
      // yields a zero gradient.
      const Tensor shift = Tensor::scalar(y.item() == 0.0 ? 1.0 : 0.0);
      out[0] = mul(in[0], div(g, add(y, shift)));
      break;
    }
    case OpKind::kRowL2Norm: {
      std::vector<double> shift(y.size());
      for (std::size_t r = 0; r < shift.size(); ++r) shift[r] = y[r] == 0.0 ? 1.0 : 0.0;
      const Tensor scale = div(g, add(y, Tensor::constant(y.shape(), std::move(shift))));
      out[0] = mul(in[0], expand(scale, 1, in[0].shape()[1]));
      break;
    }
    case OpKind::kCustom: {
      if (create_graph) {
        throw std::logic_error("op '" + node.name + "' has no second-order backward rule");
      }
      std::vector<double> d(in[0].size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = node.derivative(in[0][i]);
      out[0] = mul(g, Tensor::constant(in[0].shape(), std::move(d)));
      break;
    }
  }
  return out;
}

std::vector<std::optional<Tensor>> Graph::run_backward(const Tensor& output,
                                                       std::span<const Tensor> wrt,
                                                       bool create_graph) {
  if (!output.is_scalar()) {
    throw ShapeError("backward: output must be a scalar, got " + shape_string(output.shape()));
  }
  if (output.graph_ != nullptr && output.graph_ != this) {
    throw std::logic_error("backward: output belongs to another graph");
  }
  if (output.graph_ == nullptr) return {};

  const std::size_t count = output.node_ + 1;
  std::vector<bool> needs(count, false);
  if (wrt.empty()) {
    for (std::size_t id = 0; id < count; ++id) {
      const Node& n = nodes_[id];
      bool need = n.kind == OpKind::kLeaf;
      for (const Tensor& t : n.inputs) {
        if (need) break;
        need = t.graph_ == this && needs[t.node_];
      }
      needs[id] = need;
    }
  } else {
    for (const Tensor& t : wrt) {
      if (t.graph_ == this && t.node_ < count) needs[t.node_] = true;
    }
    for (std::size_t id = 0; id < count; ++id) {
      if (needs[id]) continue;
      for (const Tensor& t : nodes_[id].inputs) {
        if (t.graph_ == this && needs[t.node_]) {
          needs[id] = true;
          break;
        }
      }
    }
  }

  struct RecordingGuard {
    bool& flag;
    bool saved;
    ~RecordingGuard() { flag = saved; }
  } guard{recording_, recording_};
  recording_ = create_graph;

  std::vector<bool> keep;
  if (!wrt.empty()) {
    keep.assign(count, false);
    for (const Tensor& t : wrt) {
      if (t.graph_ == this && t.node_ < count) keep[t.node_] = true;
    }
  }

  std::vector<std::optional<Tensor>> grads(count);
  grads[output.node_] = Tensor::scalar(1.0);
  for (std::size_t id = count; id-- > 0;) {
    if (!grads[id] || !needs[id]) continue;
    const Node& node = nodes_[id];
    if (node.kind == OpKind::kLeaf) continue;
    std::vector<Tensor> contrib = backward_rule(node, *grads[id], needs, create_graph);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const Tensor& t = node.inputs[i];
      if (t.graph_ != this || !needs[t.node_]) continue;
      auto& slot = grads[t.node_];
      slot = slot ? add(*slot, contrib[i]) : contrib[i];
    }
    // Interior gradients are not part of a targeted result; free them early.
    if (!keep.empty() && !keep[id]) grads[id].reset();
  }
  return grads;
}

GradientMap Graph::backward(const Tensor& output) {
  GradientMap map;
  map.graph_ = this;
  map.grads_ = run_backward(output, {}, false);
  return map;
}

std::vector<Tensor> Graph::gradient(const Tensor& output, std::span<const Tensor> wrt,
                                    bool create_graph) {
  if (wrt.empty()) throw std::invalid_argument("gradient: nothing to differentiate against");
  auto grads = run_backward(output, wrt, create_graph);
  std::vector<Tensor> result;
  result.reserve(wrt.size());
  for (const Tensor& t : wrt) {
    if (t.graph_ == this && t.node_ < grads.size() && grads[t.node_]) {
      result.push_back(*grads[t.node_]);
    } else {
      result.push_back(Tensor::zeros(t.shape()));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// GradientMap

Tensor GradientMap::of(const Tensor& t) const {
  if (t.graph() == graph_ && graph_ != nullptr && t.node() < grads_.size() && grads_[t.node()]) {
    return *grads_[t.node()];
  }
  return Tensor::zeros(t.shape());
}

bool GradientMap::contains(const Tensor& t) const {
  return t.graph() == graph_ && graph_ != nullptr && t.node() < grads_.size() &&
         grads_[t.node()].has_value();
}

}  // namespace tsforge
