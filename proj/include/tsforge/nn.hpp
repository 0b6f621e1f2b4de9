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

#ifndef TSFORGE_NN_HPP
#define TSFORGE_NN_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsforge/tensor.hpp"

namespace tsforge {

enum class NetworkKind { kGenerator, kCritic };

const char* to_string(NetworkKind kind) noexcept;

struct ArchitectureSpec {
  std::size_t noise_len = 25;
  std::size_t seq_len = 50;
  std::size_t features = 1;
  std::size_t lstm_units = 50;

  /// Throws std::invalid_argument if any extent is zero.
  void validate() const;
  bool operator==(const ArchitectureSpec&) const = default;
};

/// Ordered, uniquely named trainable tensors of one network.
class ParamSet {
 public:
  using Entry = std::pair<std::string, Tensor>;

  explicit ParamSet(NetworkKind kind = NetworkKind::kGenerator) : kind_(kind) {}

  NetworkKind kind() const noexcept { return kind_; }

  void add(std::string name, Tensor value);
  /// Replaces an existing entry; the shape must not change.
  void set(std::string_view name, Tensor value);
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const noexcept;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t element_count() const noexcept;
  std::vector<std::string> names() const;

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  /// Copy whose tensors are leaves of `graph`.
  ParamSet track(Graph& graph) const;
  /// Copy with every tensor detached from its graph.
  ParamSet detach() const;

 private:
  NetworkKind kind_;
  std::vector<Entry> entries_;
};

struct DenseParams {
  Tensor W;  // [in, out]
  Tensor b;  // [out]
};

/// Gate weights act on the concatenation [h_{t-1}, x_t].
struct LstmParams {
  Tensor W_i, W_f, W_c, W_o;  // [units + input_features, units]
  Tensor b_i, b_f, b_c, b_o;  // [units]

  std::size_t units() const { return b_i.extent(0); }
  std::size_t input_features() const { return W_i.extent(0) - units(); }
};

DenseParams dense_params(const ParamSet& params, std::string_view prefix);
LstmParams lstm_params(const ParamSet& params, std::string_view prefix = "lstm");

/// Width of the LSTM input for a network: the generator consumes the noise
/// vector at every step, the critic consumes the series features.
std::size_t lstm_input_width(const ArchitectureSpec& spec, NetworkKind kind) noexcept;
std::size_t parameter_count(const ArchitectureSpec& spec, NetworkKind kind) noexcept;

/// Glorot-uniform weights, zero biases except the forget-gate bias, which is
/// one. Deterministic in `seed`.
ParamSet init_params(const ArchitectureSpec& spec, NetworkKind kind, std::uint64_t seed);

/// x · W + b for x of shape [n, in] (or [in]).
Tensor dense_forward(const DenseParams& p, const Tensor& x);

struct LstmState {
  Tensor h;
  Tensor c;
};

/// One step for a batch: x_t [batch, features], h/c [batch, units].
LstmState lstm_cell_step(const LstmParams& p, const Tensor& x_t, const Tensor& h_prev,
                         const Tensor& c_prev);

/// Runs the cell over x_seq [batch, timesteps, features] from zero state and
/// returns the hidden sequence [batch, timesteps, units].
Tensor lstm_forward(const LstmParams& p, const Tensor& x_seq);

/// z [batch, noise_len] -> series [batch, seq_len, 1] in (-1, 1).
Tensor generator_forward(const ParamSet& g, const ArchitectureSpec& spec, const Tensor& z);

/// x [batch, seq_len, features] -> unbounded scores [batch].
Tensor critic_forward(const ParamSet& d, const Tensor& x);

}  // namespace tsforge

#endif  // TSFORGE_NN_HPP
