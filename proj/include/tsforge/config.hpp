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

#ifndef TSFORGE_CONFIG_HPP
#define TSFORGE_CONFIG_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tsforge/data.hpp"
#include "tsforge/gan.hpp"

namespace tsforge {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training settings plus the data-pipeline knobs of a run.
struct RunConfig {
  TrainConfig train;
  std::string data;
  std::size_t stride = 1;
  ScalerKind scaler = ScalerKind::kMinMaxSymmetric;

  bool operator==(const RunConfig& other) const;
};

/// Keys accepted in config files and as overrides, in snapshot order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form. Throws ConfigError for unknown keys and
/// unparsable or out-of-range values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies `key = value` lines on top of `base`. Blank lines and text after
/// '#' are ignored.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every key, one `key = value` line each; parse_config of the result
/// reproduces `cfg`.
std::string render_config(const RunConfig& cfg);

}  // namespace tsforge

#endif  // TSFORGE_CONFIG_HPP
