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

#ifndef TSFORGE_RNG_HPP
#define TSFORGE_RNG_HPP

#include <array>
#include <cstdint>

namespace tsforge {

/// xoshiro256** seeded through splitmix64. Every derived draw (uniform,
/// normal, index) is computed here rather than through <random>
/// distributions, whose output differs between standard libraries.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed);

  static Rng from_state(const State& state);
  const State& state() const noexcept { return s_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of precision.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; one value per call.
  double normal() noexcept;
  /// Uniform on {0, ..., n-1}, unbiased. n must be positive.
  std::uint64_t index(std::uint64_t n) noexcept;

 private:
  Rng() = default;
  State s_{};
};

/// splitmix64 step, exposed for deriving independent sub-seeds.
std::uint64_t splitmix64(std::uint64_t& x) noexcept;

}  // namespace tsforge

#endif  // TSFORGE_RNG_HPP
