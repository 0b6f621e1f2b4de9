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

#ifndef TSFORGE_OPTIM_HPP
#define TSFORGE_OPTIM_HPP

#include <cstdint>

#include "tsforge/nn.hpp"

namespace tsforge {

struct OptimConfig {
  double learning_rate = 0.00005;
  double rho = 0.9;
  double epsilon = 1e-8;
  /// Bound for weight clipping (clipping variant only).
  double clip_c = 0.01;

  void validate() const;
};

/// Exponentially decaying average of squared gradients, one cache tensor
/// per parameter (same names and shapes).
struct RmspropState {
  ParamSet cache;
  std::uint64_t steps = 0;
};

/// Pulls the gradient of every tracked parameter out of a backward pass,
/// keyed by parameter name.
ParamSet collect_gradients(const GradientMap& grads, const ParamSet& tracked);

///   cache <- rho * cache + (1 - rho) * g^2
///   param <- param - lr * g / (sqrt(cache) + epsilon)
/// Throws std::invalid_argument when a parameter has no gradient.
void rmsprop_step(ParamSet& params, const ParamSet& grads, RmspropState& state,
                  const OptimConfig& cfg);

/// Clamps every element to [-c, c]. Throws for c <= 0.
void clip_weights(ParamSet& params, double c);

}  // namespace tsforge

#endif  // TSFORGE_OPTIM_HPP
