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

#include "tsforge/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tsforge {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* want) {
  throw ConfigError(fmt::format("{}: expected {}, got '{}'", key, want, value));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, const char* want) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, want);
  return v;
}

std::size_t count(std::string_view key, std::string_view value, bool allow_zero = false) {
  const auto v = parse_number<std::size_t>(key, value, "a non-negative integer");
  if (v == 0 && !allow_zero) bad_value(key, value, "a positive integer");
  return v;
}

double real(std::string_view key, std::string_view value) {
  const double v = parse_number<double>(key, value, "a number");
  if (!std::isfinite(v)) bad_value(key, value, "a finite number");
  return v;
}

double positive(std::string_view key, std::string_view value) {
  const double v = real(key, value);
  if (!(v > 0.0)) bad_value(key, value, "a positive number");
  return v;
}

bool boolean(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

std::string show(double v) { return fmt::format("{}", v); }

}  // namespace

bool RunConfig::operator==(const RunConfig& other) const {
  return render_config(*this) == render_config(other);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "data",          "epochs",   "n_critic",       "lambda",  "batch_size",     "noise_len",
      "seq_len",       "lstm_units", "loss_variant", "seed",    "checkpoint_every", "learning_rate",
      "rho",           "epsilon",  "clip",           "non_saturating", "stride",   "scaler"};
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  TrainConfig& t = cfg.train;
  value = trim(value);
  try {
    if (key == "data") {
      cfg.data = std::string(value);
    } else if (key == "epochs") {
      t.epochs = count(key, value);
    } else if (key == "n_critic") {
      t.n_critic = count(key, value);
    } else if (key == "lambda") {
      t.lambda_gp = real(key, value);
      if (t.lambda_gp < 0.0) bad_value(key, value, "a number >= 0");
    } else if (key == "batch_size") {
      t.batch_size = count(key, value);
    } else if (key == "noise_len") {
      t.arch.noise_len = count(key, value);
    } else if (key == "seq_len") {
      t.arch.seq_len = count(key, value);
    } else if (key == "lstm_units") {
      t.arch.lstm_units = count(key, value);
    } else if (key == "loss_variant") {
      t.loss_variant = parse_loss_variant(value);
    } else if (key == "seed") {
      t.seed = parse_number<std::uint64_t>(key, value, "an unsigned 64-bit integer");
    } else if (key == "checkpoint_every") {
      t.checkpoint_every = count(key, value, true);
    } else if (key == "learning_rate") {
      t.optim.learning_rate = positive(key, value);
    } else if (key == "rho") {
      t.optim.rho = real(key, value);
      if (!(t.optim.rho > 0.0 && t.optim.rho < 1.0)) bad_value(key, value, "a number in (0, 1)");
    } else if (key == "epsilon") {
      t.optim.epsilon = positive(key, value);
    } else if (key == "clip") {
      t.optim.clip_c = positive(key, value);
    } else if (key == "non_saturating") {
      t.non_saturating = boolean(key, value);
    } else if (key == "stride") {
      cfg.stride = count(key, value);
    } else if (key == "scaler") {
      cfg.scaler = parse_scaler_kind(value);
    } else {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    try {
      apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::move(base));
}

std::string render_config(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  line("data", cfg.data);
  line("epochs", std::to_string(t.epochs));
  line("n_critic", std::to_string(t.n_critic));
  line("lambda", show(t.lambda_gp));
  line("batch_size", std::to_string(t.batch_size));
  line("noise_len", std::to_string(t.arch.noise_len));
  line("seq_len", std::to_string(t.arch.seq_len));
  line("lstm_units", std::to_string(t.arch.lstm_units));
  line("loss_variant", to_string(t.loss_variant));
  line("seed", std::to_string(t.seed));
  line("checkpoint_every", std::to_string(t.checkpoint_every));
  line("learning_rate", show(t.optim.learning_rate));
  line("rho", show(t.optim.rho));
  line("epsilon", show(t.optim.epsilon));
  line("clip", show(t.optim.clip_c));
  line("non_saturating", t.non_saturating ? "true" : "false");
  line("stride", std::to_string(cfg.stride));
  line("scaler", to_string(cfg.scaler));
  return out;
}

}  // namespace tsforge
