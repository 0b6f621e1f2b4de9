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

#ifndef TSFORGE_GAN_HPP
#define TSFORGE_GAN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "tsforge/data.hpp"
#include "tsforge/nn.hpp"
#include "tsforge/optim.hpp"
#include "tsforge/rng.hpp"

namespace tsforge {

enum class LossVariant { kWganGp, kWganClip, kGan };

const char* to_string(LossVariant variant) noexcept;
LossVariant parse_loss_variant(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 3000;
  std::size_t n_critic = 5;
  double lambda_gp = 10.0;
  std::size_t batch_size = 32;
  ArchitectureSpec arch;
  LossVariant loss_variant = LossVariant::kWganGp;
  std::uint64_t seed = 0;
  /// 0 disables periodic checkpoints.
  std::size_t checkpoint_every = 500;
  OptimConfig optim;
  /// Standard variant only: train the generator on -log D(G(z)).
  bool non_saturating = false;

  void validate() const;
};

/// Labels used when reporting; losses are computed from scores directly.
struct LabelConvention {
  static constexpr double kReal = 1.0;
  static constexpr double kFake = -1.0;
};

/// One row per epoch. Critic-side columns are means over that epoch's
/// critic steps.
struct LossHistory {
  std::vector<std::size_t> epoch;
  std::vector<double> critic_loss;
  std::vector<double> generator_loss;
  std::vector<double> wasserstein;
  std::vector<double> gradient_penalty;

  std::size_t size() const noexcept { return epoch.size(); }
  void append(std::size_t epoch_index, double critic, double generator, double w, double gp);
  bool operator==(const LossHistory&) const = default;
};

/// Maps a batch [batch, ...] to scores [batch].
using CriticFn = std::function<Tensor(const Tensor&)>;

/// [batch, noise_len] of i.i.d. standard normals.
Tensor sample_noise(std::size_t batch, std::size_t noise_len, Rng& rng);

/// Per-sample eps ~ U[0, 1): x_hat = eps * real + (1 - eps) * fake.
Tensor interpolate(const Tensor& real, const Tensor& fake, Rng& rng);
/// Same with the per-sample weights given.
Tensor interpolate(const Tensor& real, const Tensor& fake, std::span<const double> eps);

/// lambda * mean over the batch of (||d critic / d x_hat||_2 - 1)^2, each
/// norm taken over all of a sample's elements. `x_hat` must be tracked; the
/// result is differentiable again with respect to anything the critic
/// depends on.
Tensor gradient_penalty(const CriticFn& critic, const Tensor& x_hat, double lambda);

struct CriticTerms {
  /// Scalar to minimize.
  Tensor loss;
  /// mean D(real) - mean D(fake).
  double wasserstein = 0.0;
  /// Penalty contribution already included in `loss`.
  double penalty = 0.0;
};

/// mean D(fake) - mean D(real) + gradient penalty at x_hat, which is
/// registered on `graph` here.
CriticTerms critic_loss_wgan_gp(Graph& graph, const CriticFn& critic, const Tensor& real,
                                const Tensor& fake, const Tensor& x_hat, double lambda);
/// Draws the interpolation weights from `rng`.
CriticTerms critic_loss_wgan_gp(Graph& graph, const CriticFn& critic, const Tensor& real,
                                const Tensor& fake, double lambda, Rng& rng);

/// -mean D(fake).
Tensor generator_loss_wgan(const CriticFn& critic, const Tensor& fake);

struct StandardLosses {
  Tensor discriminator;
  Tensor generator;
};

/// `disc` returns probabilities. Probabilities are clamped to
/// [1e-7, 1 - 1e-7] before taking logs.
StandardLosses gan_losses_standard(const CriticFn& disc, const Tensor& real, const Tensor& fake,
                                   bool non_saturating = false);

/// mean D(real) - mean D(fake).
double wasserstein_estimate(const CriticFn& critic, const Tensor& real, const Tensor& fake);

/// |D(x1) - D(x2)| / ||x1 - x2||_2 for two single-sample batches.
double lipschitz_ratio_check(const CriticFn& critic, const Tensor& x1, const Tensor& x2);

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  ParamSet generator{NetworkKind::kGenerator};
  ParamSet critic{NetworkKind::kCritic};
  RmspropState generator_opt;
  RmspropState critic_opt;
  Rng::State rng{};
  std::size_t epoch = 0;
  LossHistory history;
};

/// A loss turned NaN or infinite. `last_good` is the state after the last
/// completed epoch.
class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(const std::string& what, TrainState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const TrainState& last_good() const noexcept { return last_good_; }

 private:
  TrainState last_good_;
};

/// Fresh parameters and sampling stream, all derived from config.seed.
TrainState init_train_state(const TrainConfig& config);

using CheckpointFn = std::function<void(const TrainState&)>;

/// Runs epochs until state.epoch == config.epochs. One epoch is n_critic
/// critic updates followed by one generator update. `on_checkpoint` fires
/// after every epoch divisible by checkpoint_every.
void train_epochs(TrainState& state, const TrainConfig& config, const WindowedDataset& data,
                  const CheckpointFn& on_checkpoint = {});

TrainState train(const TrainConfig& config, const WindowedDataset& data,
                 const CheckpointFn& on_checkpoint = {});

/// [n, seq_len, features] from fresh noise seeded by `seed`.
Tensor generate(const ParamSet& generator, const ArchitectureSpec& arch, std::size_t n,
                std::uint64_t seed);

/// Mean pairwise L2 distance between samples of [batch, ...], divided by the
/// square root of the per-sample element count so a constant offset d
/// scores d.
double mode_collapse_score(const Tensor& batch);

}  // namespace tsforge

#endif  // TSFORGE_GAN_HPP
