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
#include <numbers>

#include "gradient_suite.hpp"
#include "synthetic.hpp"
#include "tsforge/gan.hpp"

using namespace tsforge;
using namespace tsforge::testing;

namespace {

/// D(x) = scale * sum of each sample's elements.
CriticFn linear_critic(double scale) {
  return [scale](const Tensor& x) {
    const std::size_t b = x.extent(0);
    return scale * sum(reshape(x, {b, x.size() / b}), 1);
  };
}

CriticFn constant_critic(double c) {
  return [c](const Tensor& x) { return Tensor::full({x.extent(0)}, c); };
}

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

bool same_bits(const ParamSet& a, const ParamSet& b) {
  for (const auto& [name, t] : a) {
    if (!same_bits(t, b.at(name))) return false;
  }
  return a.size() == b.size();
}

WindowedDataset gaussian_dataset(std::size_t seq_len, std::uint64_t seed, std::size_t n = 600) {
  Rng rng(seed);
  std::vector<double> r(n);
  for (double& v : r) v = 0.02 * rng.normal();
  return fit_scale(make_windows(r, seq_len), ScalerKind::kMinMaxSymmetric, "gaussian");
}

TrainConfig small_config() {
  TrainConfig c;
  c.arch = reduced_spec();
  c.batch_size = 4;
  c.epochs = 6;
  c.n_critic = 2;
  c.seed = 21;
  c.checkpoint_every = 2;
  c.optim.learning_rate = 1e-3;
  return c;
}

}  // namespace

TEST_CASE("sample_noise") {
  Rng a(1);
  Rng b(1);
  const Tensor z = sample_noise(32, 25, a);
  CHECK(z.shape() == Shape{32, 25});
  CHECK(same_bits(z, sample_noise(32, 25, b)));

  Rng rng(2);
  const Tensor big = sample_noise(1000, 100, rng);
  double m = 0.0;
  for (double v : big.values()) m += v;
  m /= 1e5;
  double var = 0.0;
  for (double v : big.values()) var += (v - m) * (v - m);
  var /= 1e5;
  CHECK(std::abs(m) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("interpolate") {
  const Tensor real = Tensor::constant({1, 1}, {2.0});
  const Tensor fake = Tensor::constant({1, 1}, {0.0});
  CHECK(interpolate(real, fake, std::vector<double>{1.0})[0] == 2.0);
  CHECK(interpolate(real, fake, std::vector<double>{0.0})[0] == 0.0);
  CHECK(interpolate(real, fake, std::vector<double>{0.5})[0] == 1.0);
  CHECK_THROWS_AS(interpolate(real, Tensor::zeros({1, 2}), std::vector<double>{0.5}), ShapeError);

  // One weight per sample: every element of a sample shares the same eps.
  Rng rng(3);
  const Tensor r = random_tensor(rng, {5, 4, 1}, 1.0, 2.0);
  const Tensor f = random_tensor(rng, {5, 4, 1}, -2.0, -1.0);
  const Tensor x = interpolate(r, f, rng);
  for (std::size_t s = 0; s < 5; ++s) {
    const double eps = (x[s * 4] - f[s * 4]) / (r[s * 4] - f[s * 4]);
    CHECK((eps >= 0.0 && eps <= 1.0));
    for (std::size_t k = 1; k < 4; ++k) {
      const std::size_t i = s * 4 + k;
      CHECK(x[i] == doctest::Approx(eps * r[i] + (1 - eps) * f[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient penalty analytic cases") {
  const std::size_t n = 6;
  const double lambda = 10.0;
  Rng rng(4);
  Graph g;
  const Tensor x = g.variable(random_tensor(rng, {3, n, 1}));

  const Tensor unit = gradient_penalty(linear_critic(1.0 / std::sqrt(double(n))), x, lambda);
  CHECK(std::abs(unit.item()) <= 1e-10);
  CHECK(gradient_penalty(constant_critic(0.3), x, lambda).item() == lambda);
  const double expected = lambda * std::pow(2.0 * std::sqrt(double(n)) - 1.0, 2);
  CHECK(std::abs(gradient_penalty(linear_critic(2.0), x, lambda).item() - expected) <= 1e-9);

  CHECK_THROWS_AS(gradient_penalty(linear_critic(1.0), Tensor::zeros({2, 3}), lambda),
                  std::invalid_argument);
}

TEST_CASE("gradient penalty is non-negative and zero only at unit norms") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamSet critic = random_network(rng, 1, 3, 1, "head");
    Graph g;
    const Tensor x = g.variable(random_tensor(rng, {4, 5, 1}));
    const CriticFn score = [&](const Tensor& v) { return critic_forward(critic, v); };
    CHECK(gradient_penalty(score, x, 10.0).item() > 0.0);
  }
}

TEST_CASE("penalty gradients match finite differences") {
  Rng rng(6);
  for (int i = 0; i < 5; ++i) CHECK(check_penalty_second_order(rng) < 1e-3);
}

TEST_CASE("critic_loss_wgan_gp") {
  Rng rng(7);
  const Tensor real = random_tensor(rng, {4, 6, 1});
  const Tensor fake = random_tensor(rng, {4, 6, 1});
  Graph g;
  const CriticTerms constant = critic_loss_wgan_gp(g, constant_critic(1.5), real, fake, 10.0, rng);
  CHECK(constant.loss.item() == 10.0);
  CHECK(constant.penalty == 10.0);

  const ParamSet critic = random_network(rng, 1, 4, 1, "head");
  const CriticFn score = [&](const Tensor& v) { return critic_forward(critic, v); };
  Graph h;
  const CriticTerms plain = critic_loss_wgan_gp(h, score, real, fake, 0.0, rng);
  CHECK(plain.penalty == 0.0);
  CHECK(plain.loss.item() == doctest::Approx(-plain.wasserstein).epsilon(1e-15));
  CHECK(plain.wasserstein == doctest::Approx(wasserstein_estimate(score, real, fake)).epsilon(1e-15));

  // Total loss gradient with respect to critic parameters.
  const Tensor x_hat = interpolate(real, fake, rng);
  auto loss = [&](const ParamSet& q, Graph& graph) {
    const CriticFn s = [&](const Tensor& v) { return critic_forward(q, v); };
    return critic_loss_wgan_gp(graph, s, real, fake, x_hat, 10.0).loss;
  };
  Graph fg;
  const ParamSet tracked = critic.track(fg);
  const GradientMap grads = fg.backward(loss(tracked, fg));
  std::vector<double> analytic;
  for (const auto& e : tracked) {
    const Tensor d = grads.of(e.second);
    analytic.insert(analytic.end(), d.values().begin(), d.values().end());
  }
  const auto numeric = param_fd(critic, [&](const ParamSet& q) {
    Graph local;
    return loss(q, local).item();
  });
  CHECK(max_relative_error(analytic, numeric) < 1e-3);
}

TEST_CASE("generator_loss_wgan") {
  Rng rng(8);
  const Tensor fake = random_tensor(rng, {3, 6, 1});
  CHECK(generator_loss_wgan(constant_critic(0.7), fake).item() == doctest::Approx(-0.7).epsilon(1e-15));
  const Tensor better = fake + 0.5;
  CHECK(generator_loss_wgan(linear_critic(1.0), better).item() <
        generator_loss_wgan(linear_critic(1.0), fake).item());

  // Frozen critic: only generator parameters receive gradient.
  const ArchitectureSpec spec = reduced_spec();
  const ParamSet gen = random_network(rng, spec.noise_len, spec.lstm_units, 1, "proj");
  const ParamSet critic = random_network(rng, 1, spec.lstm_units, 1, "head");
  Graph g;
  const ParamSet tg = gen.track(g);
  const Tensor x = generator_forward(tg, spec, random_tensor(rng, {2, spec.noise_len}));
  const CriticFn frozen = [&](const Tensor& v) { return critic_forward(critic, v); };
  const GradientMap grads = g.backward(generator_loss_wgan(frozen, x));
  for (const auto& [name, t] : critic) CHECK_FALSE(grads.contains(t));
  bool any = false;
  for (const auto& [name, t] : tg) {
    for (double v : grads.of(t).values()) any = any || v != 0.0;
  }
  CHECK(any);
}

TEST_CASE("standard GAN losses") {
  const Tensor x = Tensor::zeros({4, 3, 1});
  const auto half = gan_losses_standard(constant_critic(0.5), x, x);
  CHECK(half.discriminator.item() == doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-14));
  CHECK(half.discriminator.item() == doctest::Approx(1.3863).epsilon(1e-4));

  const CriticFn perfect = [](const Tensor& v) {
    return v[0] > 0.0 ? Tensor::full({v.extent(0)}, 1.0) : Tensor::full({v.extent(0)}, 0.0);
  };
  const auto sharp = gan_losses_standard(perfect, Tensor::full({2, 3, 1}, 1.0), Tensor::full({2, 3, 1}, -1.0));
  CHECK(sharp.discriminator.item() < 1e-6);
  CHECK(std::isfinite(sharp.generator.item()));

  double last = INFINITY;
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double g = gan_losses_standard(constant_critic(p), x, x).generator.item();
    CHECK(g < last);
    last = g;
    const double ns = gan_losses_standard(constant_critic(p), x, x, true).generator.item();
    CHECK(ns == doctest::Approx(-std::log(p)).epsilon(1e-14));
  }
}

TEST_CASE("wasserstein_estimate") {
  Rng rng(9);
  const Tensor a = random_tensor(rng, {4, 6, 1});
  const Tensor b = random_tensor(rng, {4, 6, 1});
  const ParamSet critic = random_network(rng, 1, 4, 1, "head");
  const CriticFn score = [&](const Tensor& v) { return critic_forward(critic, v); };
  CHECK(wasserstein_estimate(score, a, a) == 0.0);
  CHECK(wasserstein_estimate(constant_critic(3.0), a, b) == 0.0);
  const CriticFn shifted = [&](const Tensor& v) { return critic_forward(critic, v) + 5.0; };
  CHECK(wasserstein_estimate(shifted, a, b) ==
        doctest::Approx(wasserstein_estimate(score, a, b)).epsilon(1e-12));
}

TEST_CASE("lipschitz_ratio_check") {
  Rng rng(10);
  const std::size_t n = 6;
  for (int i = 0; i < 200; ++i) {
    const Tensor x1 = random_tensor(rng, {1, n, 1}, -3.0, 3.0);
    const Tensor x2 = random_tensor(rng, {1, n, 1}, -3.0, 3.0);
    CHECK(lipschitz_ratio_check(constant_critic(1.0), x1, x2) == 0.0);
    CHECK(lipschitz_ratio_check(linear_critic(1.0 / std::sqrt(double(n))), x1, x2) <= 1.0 + 1e-12);
  }
  const Tensor x = Tensor::zeros({1, n, 1});
  CHECK_THROWS_AS(lipschitz_ratio_check(constant_critic(1.0), x, x), std::invalid_argument);
}

TEST_CASE("training runs n_critic critic updates per generator update") {
  TrainConfig c = small_config();
  c.epochs = 1;
  c.n_critic = 5;
  const TrainState s = train(c, gaussian_dataset(c.arch.seq_len, 1));
  CHECK(s.critic_opt.steps == 5);
  CHECK(s.generator_opt.steps == 1);
  CHECK(s.history.size() == 1);
  CHECK(s.epoch == 1);
}

TEST_CASE("one epoch replays from the public pieces") {
  // Independent re-enactment of an epoch: the generator used by every
  // critic step is the initial one, and the generator step sees the final
  // critic.
  const TrainConfig c = small_config();
  const WindowedDataset data = gaussian_dataset(c.arch.seq_len, 2);
  TrainState expected = init_train_state(c);
  Rng rng = Rng::from_state(expected.rng);
  const ParamSet gen0 = expected.generator;
  for (std::size_t k = 0; k < c.n_critic; ++k) {
    const Tensor real = sample_real_batch(data, c.batch_size, rng);
    const Tensor fake = generator_forward(gen0, c.arch, sample_noise(c.batch_size, c.arch.noise_len, rng));
    const Tensor x_hat = interpolate(real, fake, rng);
    Graph g;
    const ParamSet tracked = expected.critic.track(g);
    const CriticFn score = [&](const Tensor& v) { return critic_forward(tracked, v); };
    const CriticTerms t = critic_loss_wgan_gp(g, score, real, fake, x_hat, c.lambda_gp);
    rmsprop_step(expected.critic, collect_gradients(g.backward(t.loss), tracked), expected.critic_opt, c.optim);
  }
  const Tensor z = sample_noise(c.batch_size, c.arch.noise_len, rng);
  Graph g;
  const ParamSet tracked = expected.generator.track(g);
  const CriticFn frozen = [&](const Tensor& v) { return critic_forward(expected.critic, v); };
  const Tensor loss = generator_loss_wgan(frozen, generator_forward(tracked, c.arch, z));
  rmsprop_step(expected.generator, collect_gradients(g.backward(loss), tracked), expected.generator_opt, c.optim);

  TrainConfig one = c;
  one.epochs = 1;
  const TrainState actual = train(one, data);
  CHECK(same_bits(actual.critic, expected.critic));
  CHECK(same_bits(actual.generator, expected.generator));
  CHECK(actual.rng == rng.state());
  CHECK(actual.history.generator_loss[0] == loss.item());
}

TEST_CASE("training is deterministic and checkpoints on schedule") {
  const TrainConfig c = small_config();
  const WindowedDataset data = gaussian_dataset(c.arch.seq_len, 3);
  std::vector<std::size_t> seen;
  const TrainState a = train(c, data, [&](const TrainState& s) { seen.push_back(s.epoch); });
  const TrainState b = train(c, data);
  CHECK(a.history == b.history);
  CHECK(same_bits(a.generator, b.generator));
  CHECK(seen == std::vector<std::size_t>{2, 4, 6});
  CHECK(a.history.epoch == std::vector<std::size_t>{1, 2, 3, 4, 5, 6});

  TrainConfig other = c;
  other.seed = 22;
  CHECK_FALSE(train(other, data).history == a.history);
}

TEST_CASE("resuming matches an uninterrupted run") {
  TrainConfig c = small_config();
  const WindowedDataset data = gaussian_dataset(c.arch.seq_len, 4);
  const TrainState straight = train(c, data);
  for (std::size_t split = 1; split < c.epochs; ++split) {
    TrainConfig first = c;
    first.epochs = split;
    TrainState s = train(first, data);
    train_epochs(s, c, data);
    CHECK(s.history == straight.history);
    CHECK(same_bits(s.critic, straight.critic));
  }
}

TEST_CASE("gradient penalty without weight and clipping without bound agree") {
  TrainConfig gp = small_config();
  gp.lambda_gp = 0.0;
  TrainConfig clip = small_config();
  clip.loss_variant = LossVariant::kWganClip;
  clip.optim.clip_c = 1e9;
  const WindowedDataset data = gaussian_dataset(gp.arch.seq_len, 5);
  const TrainState a = train(gp, data);
  const TrainState b = train(clip, data);
  CHECK(a.history == b.history);
}

TEST_CASE("clipping variant keeps critic weights bounded") {
  TrainConfig c = small_config();
  c.loss_variant = LossVariant::kWganClip;
  c.optim.clip_c = 0.01;
  const TrainState s = train(c, gaussian_dataset(c.arch.seq_len, 6));
  for (const auto& [name, t] : s.critic) {
    for (double v : t.values()) CHECK(std::abs(v) <= 0.01);
  }
}

TEST_CASE("standard variant trains with finite losses") {
  TrainConfig c = small_config();
  c.loss_variant = LossVariant::kGan;
  for (bool ns : {false, true}) {
    c.non_saturating = ns;
    const TrainState s = train(c, gaussian_dataset(c.arch.seq_len, 7));
    for (double v : s.history.critic_loss) CHECK(std::isfinite(v));
    for (double v : s.history.gradient_penalty) CHECK(v == 0.0);
  }
}

TEST_CASE("smoke run stays finite and bounded") {
  TrainConfig c = small_config();
  c.epochs = 30;
  const TrainState s = train(c, gaussian_dataset(c.arch.seq_len, 8));
  for (std::size_t i = 0; i < s.history.size(); ++i) {
    CHECK(std::isfinite(s.history.critic_loss[i]));
    CHECK(std::isfinite(s.history.generator_loss[i]));
    CHECK(std::abs(s.history.critic_loss[i]) < 10.0 * c.lambda_gp);
    CHECK(s.history.gradient_penalty[i] >= 0.0);
  }
}

TEST_CASE("non-finite losses abort with the last good state") {
  TrainConfig c = small_config();
  c.optim.learning_rate = 1e308;
  c.epochs = 50;
  try {
    train(c, gaussian_dataset(c.arch.seq_len, 9));
    FAIL("expected NumericAbort");
  } catch (const NumericAbort& e) {
    CHECK(e.last_good().history.size() == e.last_good().epoch);
    for (double v : e.last_good().history.critic_loss) CHECK(std::isfinite(v));
  }
}

TEST_CASE("training rejects bad input") {
  TrainConfig c = small_config();
  CHECK_THROWS_AS(train(c, gaussian_dataset(c.arch.seq_len + 1, 1)), ShapeError);
  c.n_critic = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.lambda_gp = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_loss_variant("wgan_clip") == LossVariant::kWganClip);
  CHECK_THROWS(parse_loss_variant("lsgan"));
}

TEST_CASE("generate") {
  const ArchitectureSpec spec;
  const ParamSet g = init_params(spec, NetworkKind::kGenerator, 1);
  const Tensor x = generate(g, spec, 32, 5);
  CHECK(x.shape() == Shape{32, 50, 1});
  CHECK(same_bits(x, generate(g, spec, 32, 5)));
  for (double v : x.values()) CHECK((v > -1.0 && v < 1.0));
}

TEST_CASE("mode_collapse_score") {
  CHECK(mode_collapse_score(Tensor::full({4, 5, 1}, 0.3)) == 0.0);
  Rng rng(11);
  const Tensor a = random_tensor(rng, {1, 50, 1});
  const Tensor pair = concat({a, a + 0.25}, 0);
  CHECK(mode_collapse_score(pair) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(mode_collapse_score(a), std::invalid_argument);
}
