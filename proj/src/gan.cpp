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

#include "tsforge/gan.hpp"

#include <cmath>
#include <string>

namespace tsforge {
namespace {

constexpr double kProbFloor = 1e-7;

Tensor clamp_prob(const Tensor& p) { return clamp(p, kProbFloor, 1.0 - kProbFloor); }

Tensor standard_generator_loss(const Tensor& p_fake, bool non_saturating) {
  const Tensor pf = clamp_prob(p_fake);
  return non_saturating ? -mean(log(pf)) : mean(log(1.0 - pf));
}

StandardLosses standard_losses(const Tensor& p_real, const Tensor& p_fake, bool non_saturating) {
  const Tensor d_loss = -mean(log(clamp_prob(p_real))) - mean(log(1.0 - clamp_prob(p_fake)));
  return {d_loss, standard_generator_loss(p_fake, non_saturating)};
}

void require_finite(double value, const char* what, const TrainState& last_good) {
  if (!std::isfinite(value)) {
    throw NumericAbort(std::string(what) + " became non-finite at epoch " +
                           std::to_string(last_good.epoch + 1),
                       last_good);
  }
}

}  // namespace

const char* to_string(LossVariant variant) noexcept {
  switch (variant) {
    case LossVariant::kWganGp:
      return "wgan_gp";
    case LossVariant::kWganClip:
      return "wgan_clip";
    case LossVariant::kGan:
      return "gan";
  }
  return "?";
}

LossVariant parse_loss_variant(std::string_view name) {
  if (name == "wgan_gp") return LossVariant::kWganGp;
  if (name == "wgan_clip") return LossVariant::kWganClip;
  if (name == "gan") return LossVariant::kGan;
  throw std::invalid_argument("unknown loss variant '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (n_critic == 0) throw std::invalid_argument("n_critic must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(lambda_gp >= 0.0) || !std::isfinite(lambda_gp)) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
  arch.validate();
  optim.validate();
}

void LossHistory::append(std::size_t epoch_index, double critic, double generator, double w,
                         double gp) {
  epoch.push_back(epoch_index);
  critic_loss.push_back(critic);
  generator_loss.push_back(generator);
  wasserstein.push_back(w);
  gradient_penalty.push_back(gp);
}

Tensor sample_noise(std::size_t batch, std::size_t noise_len, Rng& rng) {
  std::vector<double> z(batch * noise_len);
  for (double& v : z) v = rng.normal();
  return Tensor::constant({batch, noise_len}, std::move(z));
}

Tensor interpolate(const Tensor& real, const Tensor& fake, std::span<const double> eps) {
  if (real.shape() != fake.shape()) {
    throw ShapeError("interpolate: " + shape_string(real.shape()) + " vs " +
                     shape_string(fake.shape()));
  }
  if (real.rank() == 0 || eps.size() != real.extent(0)) {
    throw ShapeError("interpolate: need one weight per sample");
  }
  const std::size_t per = real.size() / real.extent(0);
  std::vector<double> out(real.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double e = eps[i / per];
    out[i] = e * real[i] + (1.0 - e) * fake[i];
  }
  return Tensor::constant(real.shape(), std::move(out));
}

Tensor interpolate(const Tensor& real, const Tensor& fake, Rng& rng) {
  if (real.rank() == 0) throw ShapeError("interpolate: need a batch axis");
  std::vector<double> eps(real.extent(0));
  for (double& e : eps) e = rng.uniform();
  return interpolate(real, fake, eps);
}

Tensor gradient_penalty(const CriticFn& critic, const Tensor& x_hat, double lambda) {
  if (!x_hat.tracked()) throw std::invalid_argument("gradient_penalty: x_hat must be tracked");
  if (x_hat.rank() < 2) throw ShapeError("gradient_penalty: x_hat needs [batch, ...]");
  const std::size_t batch = x_hat.extent(0);
  const Tensor scores = critic(x_hat);
  const Tensor grad = x_hat.graph()->gradient(sum(scores), std::span(&x_hat, 1), true)[0];
  const Tensor norms = row_l2_norm(reshape(grad, {batch, x_hat.size() / batch}));
  return lambda * mean(square(norms - 1.0));
}

CriticTerms critic_loss_wgan_gp(Graph& graph, const CriticFn& critic, const Tensor& real,
                                const Tensor& fake, const Tensor& x_hat, double lambda) {
  if (real.shape() != fake.shape() || real.shape() != x_hat.shape()) {
    throw ShapeError("critic loss: real, fake and x_hat must share a shape");
  }
  const Tensor real_mean = mean(critic(real));
  const Tensor fake_mean = mean(critic(fake));
  const Tensor penalty = gradient_penalty(critic, graph.variable(x_hat.detach()), lambda);
  CriticTerms terms;
  terms.loss = fake_mean - real_mean + penalty;
  terms.wasserstein = real_mean.item() - fake_mean.item();
  terms.penalty = penalty.item();
  return terms;
}

CriticTerms critic_loss_wgan_gp(Graph& graph, const CriticFn& critic, const Tensor& real,
                                const Tensor& fake, double lambda, Rng& rng) {
  return critic_loss_wgan_gp(graph, critic, real, fake, interpolate(real, fake, rng), lambda);
}

Tensor generator_loss_wgan(const CriticFn& critic, const Tensor& fake) {
  return -mean(critic(fake));
}

StandardLosses gan_losses_standard(const CriticFn& disc, const Tensor& real, const Tensor& fake,
                                   bool non_saturating) {
  if (real.shape() != fake.shape()) throw ShapeError("standard losses: batch shape mismatch");
  return standard_losses(disc(real), disc(fake), non_saturating);
}

double wasserstein_estimate(const CriticFn& critic, const Tensor& real, const Tensor& fake) {
  return mean(critic(real)).item() - mean(critic(fake)).item();
}

double lipschitz_ratio_check(const CriticFn& critic, const Tensor& x1, const Tensor& x2) {
  if (x1.shape() != x2.shape()) throw ShapeError("lipschitz check: shape mismatch");
  double dist = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) dist += (x1[i] - x2[i]) * (x1[i] - x2[i]);
  if (dist == 0.0) throw std::invalid_argument("lipschitz check: inputs are identical");
  return std::abs(sum(critic(x1)).item() - sum(critic(x2)).item()) / std::sqrt(dist);
}

TrainState init_train_state(const TrainConfig& config) {
  config.validate();
  std::uint64_t s = config.seed;
  const std::uint64_t gen_seed = splitmix64(s);
  const std::uint64_t critic_seed = splitmix64(s);
  const std::uint64_t stream_seed = splitmix64(s);
  TrainState state;
  state.generator = init_params(config.arch, NetworkKind::kGenerator, gen_seed);
  state.critic = init_params(config.arch, NetworkKind::kCritic, critic_seed);
  state.rng = Rng(stream_seed).state();
  return state;
}

void train_epochs(TrainState& state, const TrainConfig& config, const WindowedDataset& data,
                  const CheckpointFn& on_checkpoint) {
  config.validate();
  if (data.windows.size() == 0) throw DataError("training data is empty");
  if (data.seq_len() != config.arch.seq_len || config.arch.features != 1) {
    throw ShapeError("training windows do not match the architecture");
  }
  const ArchitectureSpec& arch = config.arch;
  const std::size_t batch = config.batch_size;
  const LossVariant variant = config.loss_variant;

  while (state.epoch < config.epochs) {
    Rng rng = Rng::from_state(state.rng);
    ParamSet generator = state.generator;
    ParamSet critic = state.critic;
    RmspropState generator_opt = state.generator_opt;
    RmspropState critic_opt = state.critic_opt;
    double critic_total = 0.0;
    double w_total = 0.0;
    double gp_total = 0.0;

    for (std::size_t step = 0; step < config.n_critic; ++step) {
      const Tensor real = sample_real_batch(data, batch, rng);
      const Tensor fake = generator_forward(generator, arch, sample_noise(batch, arch.noise_len, rng));
      // Drawn in every variant so that all variants consume the stream alike.
      const Tensor x_hat = interpolate(real, fake, rng);

      Graph graph;
      const ParamSet tracked = critic.track(graph);
      const CriticFn score = [&](const Tensor& x) { return critic_forward(tracked, x); };
      CriticTerms terms;
      if (variant == LossVariant::kWganGp) {
        terms = critic_loss_wgan_gp(graph, score, real, fake, x_hat, config.lambda_gp);
      } else {
        const Tensor real_scores = score(real);
        const Tensor fake_scores = score(fake);
        terms.wasserstein = mean(real_scores).item() - mean(fake_scores).item();
        terms.loss = variant == LossVariant::kWganClip
                         ? mean(fake_scores) - mean(real_scores)
                         : standard_losses(sigmoid(real_scores), sigmoid(fake_scores),
                                           config.non_saturating)
                               .discriminator;
      }
      require_finite(terms.loss.item(), "critic loss", state);
      rmsprop_step(critic, collect_gradients(graph.backward(terms.loss), tracked), critic_opt,
                   config.optim);
      if (variant == LossVariant::kWganClip) clip_weights(critic, config.optim.clip_c);
      critic_total += terms.loss.item();
      w_total += terms.wasserstein;
      gp_total += terms.penalty;
    }

    const Tensor z = sample_noise(batch, arch.noise_len, rng);
    Graph graph;
    const ParamSet tracked = generator.track(graph);
    const Tensor fake = generator_forward(tracked, arch, z);
    const CriticFn frozen = [&](const Tensor& x) { return critic_forward(critic, x); };
    const Tensor g_loss =
        variant == LossVariant::kGan
            ? standard_generator_loss(sigmoid(frozen(fake)), config.non_saturating)
            : generator_loss_wgan(frozen, fake);
    require_finite(g_loss.item(), "generator loss", state);
    rmsprop_step(generator, collect_gradients(graph.backward(g_loss), tracked), generator_opt,
                 config.optim);

    const double n = static_cast<double>(config.n_critic);
    state.generator = std::move(generator);
    state.critic = std::move(critic);
    state.generator_opt = std::move(generator_opt);
    state.critic_opt = std::move(critic_opt);
    state.rng = rng.state();
    ++state.epoch;
    state.history.append(state.epoch, critic_total / n, g_loss.item(), w_total / n, gp_total / n);

    if (on_checkpoint && config.checkpoint_every > 0 && state.epoch % config.checkpoint_every == 0) {
      on_checkpoint(state);
    }
  }
}

TrainState train(const TrainConfig& config, const WindowedDataset& data,
                 const CheckpointFn& on_checkpoint) {
  TrainState state = init_train_state(config);
  train_epochs(state, config, data, on_checkpoint);
  return state;
}

Tensor generate(const ParamSet& generator, const ArchitectureSpec& arch, std::size_t n,
                std::uint64_t seed) {
  Rng rng(seed);
  return generator_forward(generator.detach(), arch, sample_noise(n, arch.noise_len, rng));
}

double mode_collapse_score(const Tensor& batch) {
  if (batch.rank() < 2 || batch.extent(0) < 2) {
    throw std::invalid_argument("mode_collapse_score: need at least 2 samples");
  }
  const std::size_t n = batch.extent(0);
  const std::size_t per = batch.size() / n;
  const auto v = batch.values();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < per; ++k) {
        const double d = v[i * per + k] - v[j * per + k];
        d2 += d * d;
      }
      total += std::sqrt(d2);
    }
  }
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  return total / pairs / std::sqrt(static_cast<double>(per));
}

}  // namespace tsforge
