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

#ifndef TSFORGE_COMMANDS_HPP
#define TSFORGE_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "tsforge/config.hpp"
#include "tsforge/gan.hpp"
#include "tsforge/stats.hpp"

namespace tsforge {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// $TSFORGE_OUT when set, else "runs".
std::filesystem::path output_root();

/// Unscaled returns of a windows tensor [n, seq_len, 1], one row per window.
Windows unscale_windows(const Tensor& scaled, const Scaler& scaler);

struct TrainRequest {
  RunConfig config;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  std::size_t sample_rows = 6;
  std::size_t report_samples = 256;
  std::size_t lipschitz_pairs = 1000;
};

struct TrainResult {
  TrainState state;
  double mode_collapse = 0.0;
  double lipschitz_median = 0.0;
  double lipschitz_max = 0.0;
};

/// Writes config.txt, loss.csv, checkpoints/epoch_N.ckpt with a sample grid
/// and distribution report under samples/epoch_N/, final.ckpt and
/// summary.txt. On NumericAbort writes crash.ckpt and the loss history so far,
/// then rethrows.
TrainResult cmd_train(const TrainRequest& request, std::ostream& log);

struct GenerateRequest {
  std::filesystem::path checkpoint;
  std::size_t n = 6;
  std::uint64_t seed = 0;
  double p0 = 100.0;
  std::optional<std::filesystem::path> real;
  std::filesystem::path out_dir;
};

/// generated_scaled.csv, generated_returns.csv, generated_prices.csv and
/// generated.svg.
void cmd_generate(const GenerateRequest& request);

struct EvaluateRequest {
  std::filesystem::path data;
  std::filesystem::path out_dir;
  std::size_t max_lag = 50;
  std::size_t bins = 50;
};

struct EvaluateResult {
  std::size_t returns = 0;
  MomentsReport moments;
  AcfReport acf;
  AcfReport acf_abs;
  QqReport qq;
};

EvaluateResult cmd_evaluate(const EvaluateRequest& request);

struct CompareRequest {
  std::filesystem::path real;
  /// Unscaled returns, one window per row (the generate output format).
  std::optional<std::filesystem::path> synthetic;
  std::optional<std::filesystem::path> checkpoint;
  std::size_t n = 256;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  CompareOptions options;
};

/// Real windows are non-overlapping at the synthetic window length.
EvalReport cmd_compare(const CompareRequest& request);

/// `tsforge train|generate|evaluate|compare [flags]`; returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tsforge

#endif  // TSFORGE_COMMANDS_HPP
