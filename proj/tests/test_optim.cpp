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

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "tsforge/optim.hpp"

using namespace tsforge;
using namespace tsforge::testing;

namespace {

ParamSet single(double value, double grad_like = 0.0) {
  ParamSet p;
  p.add("w", Tensor::constant({1}, {value + grad_like}));
  return p;
}

}  // namespace

TEST_CASE("rmsprop with zero gradient leaves parameters and decays the cache") {
  ParamSet p = single(0.3);
  RmspropState state;
  state.cache = single(4.0);
  rmsprop_step(p, single(0.0), state, OptimConfig{});
  CHECK(p.at("w")[0] == 0.3);
  CHECK(state.cache.at("w")[0] == doctest::Approx(3.6).epsilon(1e-15));
  CHECK(state.steps == 1);
}

TEST_CASE("rmsprop first step arithmetic") {
  OptimConfig cfg;
  cfg.learning_rate = 0.001;
  cfg.epsilon = 0.0;
  ParamSet p = single(0.0);
  RmspropState state;
  rmsprop_step(p, single(1.0), state, cfg);
  CHECK(state.cache.at("w")[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(-p.at("w")[0] == doctest::Approx(0.001 / std::sqrt(0.1)).epsilon(1e-12));
  CHECK(-p.at("w")[0] == doctest::Approx(0.0031623).epsilon(1e-5));
}

TEST_CASE("rmsprop approaches lr-sized steps under a constant gradient") {
  OptimConfig cfg;
  cfg.learning_rate = 0.01;
  const double g = 0.37;
  ParamSet p = single(0.0);
  RmspropState state;
  double last_step = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double before = p.at("w")[0];
    rmsprop_step(p, single(g), state, cfg);
    last_step = before - p.at("w")[0];
  }
  // Closed form: cache_k = g^2 (1 - rho^k).
  const double cache = g * g * (1.0 - std::pow(cfg.rho, 200));
  CHECK(state.cache.at("w")[0] == doctest::Approx(cache).epsilon(1e-12));
  CHECK(std::abs(last_step - cfg.learning_rate) / cfg.learning_rate < 0.01);
}

TEST_CASE("rmsprop is independent of insertion order and deterministic") {
  Rng rng(4);
  const Tensor a = random_tensor(rng, {3, 2});
  const Tensor b = random_tensor(rng, {4});
  const Tensor ga = random_tensor(rng, {3, 2});
  const Tensor gb = random_tensor(rng, {4});

  ParamSet p1, g1, p2, g2;
  p1.add("a", a); p1.add("b", b);
  g1.add("a", ga); g1.add("b", gb);
  p2.add("b", b); p2.add("a", a);
  g2.add("b", gb); g2.add("a", ga);
  RmspropState s1, s2;
  for (int i = 0; i < 3; ++i) {
    rmsprop_step(p1, g1, s1, OptimConfig{});
    rmsprop_step(p2, g2, s2, OptimConfig{});
  }
  for (const char* name : {"a", "b"}) {
    const Tensor& x = p1.at(name);
    const Tensor& y = p2.at(name);
    CHECK(std::memcmp(x.values().data(), y.values().data(), x.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("rmsprop steps oppose the gradient and stay finite") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor start = random_tensor(rng, {5}, -10.0, 10.0);
    std::vector<double> gv(5);
    for (double& v : gv) v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform() * 40.0 - 20.0);
    ParamSet p;
    p.add("w", start);
    ParamSet g;
    g.add("w", Tensor::constant({5}, gv));
    RmspropState state;
    rmsprop_step(p, g, state, OptimConfig{});
    for (std::size_t i = 0; i < 5; ++i) {
      const double moved = p.at("w")[i] - start[i];
      CHECK(std::isfinite(p.at("w")[i]));
      CHECK(state.cache.at("w")[i] >= 0.0);
      if (gv[i] > 0) CHECK(moved <= 0.0);
      if (gv[i] < 0) CHECK(moved >= 0.0);
    }
  }
}

TEST_CASE("rmsprop rejects missing or mis-shaped gradients") {
  ParamSet p;
  p.add("w", Tensor::zeros({2}));
  p.add("v", Tensor::zeros({2}));
  ParamSet g;
  g.add("w", Tensor::zeros({2}));
  RmspropState state;
  CHECK_THROWS_AS(rmsprop_step(p, g, state, OptimConfig{}), std::invalid_argument);
  g.add("v", Tensor::zeros({3}));
  CHECK_THROWS_AS(rmsprop_step(p, g, state, OptimConfig{}), ShapeError);
}

TEST_CASE("optimizer config validation") {
  CHECK_NOTHROW(OptimConfig{}.validate());
  CHECK_THROWS(OptimConfig{0.0}.validate());
  CHECK_THROWS(OptimConfig{1e-3, 1.0}.validate());
  CHECK_THROWS(OptimConfig{1e-3, 0.9, 0.0}.validate());
}

TEST_CASE("clip_weights examples") {
  ParamSet p;
  p.add("w", Tensor::constant({4}, {2.0, -5.0, 0.005, -0.01}));
  clip_weights(p, 0.01);
  CHECK(p.at("w")[0] == 0.01);
  CHECK(p.at("w")[1] == -0.01);
  CHECK(p.at("w")[2] == 0.005);
  CHECK(p.at("w")[3] == -0.01);
  CHECK_THROWS_AS(clip_weights(p, 0.0), std::invalid_argument);

  Rng rng(2);
  ParamSet big;
  big.add("w", random_tensor(rng, {50}, -3.0, 3.0));
  clip_weights(big, 0.7);
  for (double v : big.at("w").values()) CHECK(std::abs(v) <= 0.7);
}

TEST_CASE("collect_gradients keys gradients by parameter name") {
  Graph g;
  ParamSet p;
  p.add("a", Tensor::constant({2}, {1.0, 2.0}));
  p.add("unused", Tensor::zeros({3}));
  const ParamSet tracked = p.track(g);
  const ParamSet grads = collect_gradients(g.backward(sum(square(tracked.at("a")))), tracked);
  CHECK(grads.at("a")[1] == 4.0);
  CHECK(grads.at("unused").shape() == Shape{3});
  CHECK(grads.at("unused")[0] == 0.0);
}
