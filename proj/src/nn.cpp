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

#include "tsforge/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsforge/rng.hpp"

namespace tsforge {

const char* to_string(NetworkKind kind) noexcept {
  return kind == NetworkKind::kGenerator ? "generator" : "critic";
}

void ArchitectureSpec::validate() const {
  if (noise_len == 0 || seq_len == 0 || features == 0 || lstm_units == 0) {
    throw std::invalid_argument("architecture extents must all be positive");
  }
}

// ---------------------------------------------------------------------------
// ParamSet

void ParamSet::add(std::string name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(value));
}

void ParamSet::set(std::string_view name, Tensor value) {
  for (auto& [n, t] : entries_) {
    if (n == name) {
      if (t.shape() != value.shape()) {
        throw ShapeError("parameter '" + n + "' shape " + shape_string(t.shape()) +
                         " cannot become " + shape_string(value.shape()));
      }
      t = std::move(value);
      return;
    }
  }
  throw std::out_of_range("no parameter '" + std::string(name) + "'");
}

const Tensor& ParamSet::at(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter '" + std::string(name) + "'");
}

bool ParamSet::contains(std::string_view name) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.first == name; });
}

std::size_t ParamSet::element_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

ParamSet ParamSet::track(Graph& graph) const {
  ParamSet out(kind_);
  for (const auto& [n, t] : entries_) out.entries_.emplace_back(n, graph.variable(t.detach()));
  return out;
}

ParamSet ParamSet::detach() const {
  ParamSet out(kind_);
  for (const auto& [n, t] : entries_) out.entries_.emplace_back(n, t.detach());
  return out;
}

// ---------------------------------------------------------------------------
// Construction

DenseParams dense_params(const ParamSet& params, std::string_view prefix) {
  const std::string p(prefix);
  return {params.at(p + ".W"), params.at(p + ".b")};
}

LstmParams lstm_params(const ParamSet& params, std::string_view prefix) {
  const std::string p(prefix);
  return {params.at(p + ".W_i"), params.at(p + ".W_f"), params.at(p + ".W_c"),
          params.at(p + ".W_o"), params.at(p + ".b_i"), params.at(p + ".b_f"),
          params.at(p + ".b_c"), params.at(p + ".b_o")};
}

std::size_t lstm_input_width(const ArchitectureSpec& spec, NetworkKind kind) noexcept {
  return kind == NetworkKind::kGenerator ? spec.noise_len : spec.features;
}

std::size_t parameter_count(const ArchitectureSpec& spec, NetworkKind kind) noexcept {
  const std::size_t u = spec.lstm_units;
  const std::size_t in = lstm_input_width(spec, kind);
  const std::size_t out = kind == NetworkKind::kGenerator ? spec.features : 1;
  return 4 * ((u + in) * u + u) + u * out + out;
}

namespace {

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(fan_in * fan_out);
  for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * limit;
  return Tensor::constant({fan_in, fan_out}, std::move(v));
}

}  // namespace

ParamSet init_params(const ArchitectureSpec& spec, NetworkKind kind, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const std::size_t u = spec.lstm_units;
  const std::size_t in = lstm_input_width(spec, kind);
  ParamSet p(kind);
  for (const char* gate : {"W_i", "W_f", "W_c", "W_o"}) {
    p.add(std::string("lstm.") + gate, glorot(rng, u + in, u));
  }
  p.add("lstm.b_i", Tensor::zeros({u}));
  p.add("lstm.b_f", Tensor::full({u}, 1.0));
  p.add("lstm.b_c", Tensor::zeros({u}));
  p.add("lstm.b_o", Tensor::zeros({u}));
  const std::string head = kind == NetworkKind::kGenerator ? "proj" : "head";
  const std::size_t out = kind == NetworkKind::kGenerator ? spec.features : 1;
  p.add(head + ".W", glorot(rng, u, out));
  p.add(head + ".b", Tensor::zeros({out}));
  return p;
}

// ---------------------------------------------------------------------------
// Forward passes

namespace {

// Bias b [m] repeated over n rows, as ones[n,1] · b[1,m].
Tensor bias_rows(const Tensor& b, std::size_t n) {
  return matmul(Tensor::full({n, 1}, 1.0), reshape(b, {1, b.size()}));
}

struct GateBiases {
  Tensor i, f, c, o;
};

GateBiases gate_biases(const LstmParams& p, std::size_t batch) {
  return {bias_rows(p.b_i, batch), bias_rows(p.b_f, batch), bias_rows(p.b_c, batch),
          bias_rows(p.b_o, batch)};
}

LstmState cell(const LstmParams& p, const GateBiases& b, const Tensor& x_t, const Tensor& h_prev,
               const Tensor& c_prev) {
  const Tensor hx = concat({h_prev, x_t}, 1);
  const Tensor i = sigmoid(matmul(hx, p.W_i) + b.i);
  const Tensor c_tilde = tanh(matmul(hx, p.W_c) + b.c);
  const Tensor f = sigmoid(matmul(hx, p.W_f) + b.f);
  const Tensor o = sigmoid(matmul(hx, p.W_o) + b.o);
  const Tensor c = f * c_prev + i * c_tilde;
  return {o * tanh(c), c};
}

void check_lstm_input(const LstmParams& p, const Tensor& x_t, const Tensor& h, const Tensor& c) {
  const std::size_t u = p.units();
  if (x_t.rank() != 2 || x_t.extent(1) != p.input_features()) {
    throw ShapeError("lstm: input " + shape_string(x_t.shape()) + " does not match " +
                     std::to_string(p.input_features()) + " features");
  }
  const Shape state{x_t.extent(0), u};
  if (h.shape() != state || c.shape() != state) {
    throw ShapeError("lstm: state must be " + shape_string(state));
  }
}

Tensor time_step(const Tensor& x_seq, std::size_t t) {
  return reshape(slice(x_seq, 1, t, 1), {x_seq.extent(0), x_seq.extent(2)});
}

}  // namespace

Tensor dense_forward(const DenseParams& p, const Tensor& x) {
  if (p.W.rank() != 2 || p.b.rank() != 1 || p.b.extent(0) != p.W.extent(1)) {
    throw ShapeError("dense: inconsistent parameters");
  }
  if (x.rank() == 1) {
    return reshape(dense_forward(p, reshape(x, {1, x.size()})), {p.W.extent(1)});
  }
  if (x.rank() != 2 || x.extent(1) != p.W.extent(0)) {
    throw ShapeError("dense: input " + shape_string(x.shape()) + " vs weights " +
                     shape_string(p.W.shape()));
  }
  return matmul(x, p.W) + bias_rows(p.b, x.extent(0));
}

LstmState lstm_cell_step(const LstmParams& p, const Tensor& x_t, const Tensor& h_prev,
                         const Tensor& c_prev) {
  check_lstm_input(p, x_t, h_prev, c_prev);
  return cell(p, gate_biases(p, x_t.extent(0)), x_t, h_prev, c_prev);
}

Tensor lstm_forward(const LstmParams& p, const Tensor& x_seq) {
  if (x_seq.rank() != 3 || x_seq.extent(1) == 0) {
    throw ShapeError("lstm_forward: expected [batch, timesteps>0, features], got " +
                     shape_string(x_seq.shape()));
  }
  const std::size_t batch = x_seq.extent(0);
  const std::size_t steps = x_seq.extent(1);
  LstmState s{Tensor::zeros({batch, p.units()}), Tensor::zeros({batch, p.units()})};
  check_lstm_input(p, time_step(x_seq, 0), s.h, s.c);
  const GateBiases b = gate_biases(p, batch);
  std::vector<Tensor> hs;
  hs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    s = cell(p, b, time_step(x_seq, t), s.h, s.c);
    hs.push_back(s.h);
  }
  return stack(hs, 1);
}

Tensor generator_forward(const ParamSet& g, const ArchitectureSpec& spec, const Tensor& z) {
  if (z.rank() != 2 || z.extent(1) != spec.noise_len) {
    throw ShapeError("generator: noise " + shape_string(z.shape()) + " does not have length " +
                     std::to_string(spec.noise_len));
  }
  const LstmParams p = lstm_params(g);
  const std::size_t batch = z.extent(0);
  const std::size_t units = p.units();
  check_lstm_input(p, z, Tensor::zeros({batch, units}), Tensor::zeros({batch, units}));

  // The same noise vector is the input at every step.
  LstmState s{Tensor::zeros({batch, units}), Tensor::zeros({batch, units})};
  const GateBiases b = gate_biases(p, batch);
  std::vector<Tensor> hs;
  hs.reserve(spec.seq_len);
  for (std::size_t t = 0; t < spec.seq_len; ++t) {
    s = cell(p, b, z, s.h, s.c);
    hs.push_back(s.h);
  }
  const Tensor flat = reshape(stack(hs, 1), {batch * spec.seq_len, units});
  const Tensor y = tanh(dense_forward(dense_params(g, "proj"), flat));
  return reshape(y, {batch, spec.seq_len, spec.features});
}

Tensor critic_forward(const ParamSet& d, const Tensor& x) {
  const LstmParams p = lstm_params(d);
  const Tensor h = lstm_forward(p, x);
  const std::size_t batch = x.extent(0);
  const std::size_t steps = x.extent(1);
  const Tensor per_step =
      dense_forward(dense_params(d, "head"), reshape(h, {batch * steps, p.units()}));
  return mean(reshape(per_step, {batch, steps}), 1);
}

}  // namespace tsforge
