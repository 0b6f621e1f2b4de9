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

#include "tsforge/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsforge {

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(clip_c > 0.0)) throw std::invalid_argument("clip must be > 0");
}

ParamSet collect_gradients(const GradientMap& grads, const ParamSet& tracked) {
  ParamSet out(tracked.kind());
  for (const auto& [name, t] : tracked) out.add(name, grads.of(t).detach());
  return out;
}

void rmsprop_step(ParamSet& params, const ParamSet& grads, RmspropState& state,
                  const OptimConfig& cfg) {
  // epsilon == 0 is accepted here; a zero denominator leaves the element as is.
  for (const auto& [name, p] : params) {
    if (!grads.contains(name)) throw std::invalid_argument("missing gradient for '" + name + "'");
    if (grads.at(name).shape() != p.shape()) {
      throw ShapeError("gradient shape mismatch for '" + name + "'");
    }
  }
  if (state.cache.size() == 0) {
    state.cache = ParamSet(params.kind());
    for (const auto& [name, p] : params) state.cache.add(name, Tensor::zeros(p.shape()));
  }

  const double lr = cfg.learning_rate;
  const double rho = cfg.rho;
  for (const std::string& name : params.names()) {
    const Tensor& p = params.at(name);
    auto g = grads.at(name).values();
    auto c = state.cache.at(name).values();
    auto v = p.values();
    std::vector<double> cache(c.begin(), c.end());
    std::vector<double> value(v.begin(), v.end());
    for (std::size_t i = 0; i < value.size(); ++i) {
      cache[i] = rho * cache[i] + (1.0 - rho) * g[i] * g[i];
      const double denom = std::sqrt(cache[i]) + cfg.epsilon;
      if (denom > 0.0) value[i] -= lr * g[i] / denom;
    }
    state.cache.set(name, Tensor::constant(p.shape(), std::move(cache)));
    params.set(name, Tensor::constant(p.shape(), std::move(value)));
  }
  ++state.steps;
}

void clip_weights(ParamSet& params, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("clip constant must be > 0");
  for (const std::string& name : params.names()) {
    const Tensor& p = params.at(name);
    std::vector<double> v(p.values().begin(), p.values().end());
    for (double& x : v) x = std::clamp(x, -c, c);
    params.set(name, Tensor::constant(p.shape(), std::move(v)));
  }
}

}  // namespace tsforge
