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

#include "tsforge/checkpoint.hpp"

#include <fmt/format.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <string_view>

namespace tsforge {
namespace {

constexpr std::string_view kMagic = "WGTS1";

class Writer {
 public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void string(std::string_view s) {
    u64(s.size());
    bytes(s);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::size_t offset() const { return pos_; }

  std::string_view bytes(std::uint64_t n, const char* what) {
    need(n, what);
    std::string_view s(reinterpret_cast<const char*>(in_.data()) + pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string string(const char* what) {
    const std::uint64_t n = u64(what);
    return std::string(bytes(n, what));
  }

 private:
  void need(std::uint64_t n, const char* what) const {
    if (n > in_.size() - pos_) {
      throw CheckpointError(fmt::format("checkpoint truncated at offset {} while reading {} "
                                        "({} bytes needed, {} left)",
                                        pos_, what, n, in_.size() - pos_));
    }
  }

  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

using Meta = std::map<std::string, std::string>;

std::string meta_text(const Meta& meta) {
  std::string out;
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw CheckpointError("metadata entry '" + k + "' contains a reserved character");
    }
    out += k + "=" + v + "\n";
  }
  return out;
}

Meta parse_meta(std::string_view text) {
  Meta meta;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw CheckpointError("malformed metadata line");
    meta[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return meta;
}

const std::string& get(const Meta& meta, const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointError("checkpoint metadata lacks '" + key + "'");
  return it->second;
}

template <typename T>
T get_number(const Meta& meta, const std::string& key) {
  const std::string& s = get(meta, key);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw CheckpointError("checkpoint metadata '" + key + "' is not a number: " + s);
  }
  return v;
}

void put_tensor(Writer& w, const std::string& name, const Tensor& t) {
  w.string(name);
  w.u64(t.rank());
  for (std::size_t d : t.shape()) w.u64(d);
  for (double v : t.values()) w.f64(v);
}

Tensor vector_tensor(const std::vector<double>& v) { return Tensor::constant({v.size()}, v); }

std::vector<double> as_doubles(const std::vector<std::size_t>& v) {
  return {v.begin(), v.end()};
}

constexpr const char* kHistoryColumns[] = {"epoch", "critic_loss", "generator_loss", "wasserstein",
                                           "gradient_penalty"};

void check_schema(const ParamSet& params, const ArchitectureSpec& arch, NetworkKind kind) {
  const ParamSet expected = init_params(arch, kind, 0);
  if (params.size() != expected.size()) {
    throw CheckpointError(std::string(to_string(kind)) + " parameters do not match the architecture");
  }
  for (const auto& [name, t] : expected) {
    if (!params.contains(name) || params.at(name).shape() != t.shape()) {
      throw CheckpointError(std::string(to_string(kind)) + " parameter '" + name +
                            "' is missing or mis-shaped");
    }
  }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp) {
  Meta meta = cp.extra;
  const TrainState& s = cp.state;
  meta["epoch"] = std::to_string(s.epoch);
  meta["arch.noise_len"] = std::to_string(cp.arch.noise_len);
  meta["arch.seq_len"] = std::to_string(cp.arch.seq_len);
  meta["arch.features"] = std::to_string(cp.arch.features);
  meta["arch.lstm_units"] = std::to_string(cp.arch.lstm_units);
  meta["scaler.kind"] = to_string(cp.scaler.kind);
  meta["scaler.a"] = fmt::format("{}", cp.scaler.a);
  meta["scaler.b"] = fmt::format("{}", cp.scaler.b);
  for (std::size_t i = 0; i < s.rng.size(); ++i) meta[fmt::format("rng.{}", i)] = std::to_string(s.rng[i]);
  meta["generator_opt.steps"] = std::to_string(s.generator_opt.steps);
  meta["critic_opt.steps"] = std::to_string(s.critic_opt.steps);

  std::vector<std::pair<std::string, Tensor>> records;
  for (const auto& [name, t] : s.generator) records.emplace_back("generator/" + name, t);
  for (const auto& [name, t] : s.critic) records.emplace_back("critic/" + name, t);
  for (const auto& [name, t] : s.generator_opt.cache) records.emplace_back("generator_opt/" + name, t);
  for (const auto& [name, t] : s.critic_opt.cache) records.emplace_back("critic_opt/" + name, t);
  const LossHistory& h = s.history;
  const std::vector<double> columns[] = {as_doubles(h.epoch), h.critic_loss, h.generator_loss,
                                         h.wasserstein, h.gradient_penalty};
  for (std::size_t i = 0; i < 5; ++i) {
    records.emplace_back(std::string("history/") + kHistoryColumns[i], vector_tensor(columns[i]));
  }

  Writer w;
  w.bytes(kMagic);
  w.u32(cp.version);
  w.string(meta_text(meta));
  w.u64(records.size());
  for (const auto& [name, t] : records) put_tensor(w, name, t);
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.bytes(kMagic.size(), "magic") != kMagic) throw CheckpointError("not a checkpoint (bad magic)");
  Checkpoint cp;
  cp.version = r.u32("version");
  if (cp.version != kCheckpointVersion) {
    throw CheckpointError(fmt::format("unsupported checkpoint version {} (expected {})", cp.version,
                                      kCheckpointVersion));
  }
  Meta meta = parse_meta(r.string("metadata"));

  TrainState& s = cp.state;
  s.generator = ParamSet(NetworkKind::kGenerator);
  s.critic = ParamSet(NetworkKind::kCritic);
  s.generator_opt.cache = ParamSet(NetworkKind::kGenerator);
  s.critic_opt.cache = ParamSet(NetworkKind::kCritic);
  std::map<std::string, std::vector<double>> history;

  const std::uint64_t count = r.u64("record count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.string("record name");
    const std::uint64_t rank = r.u64("record rank");
    if (rank > kMaxRank) {
      throw CheckpointError(fmt::format("record '{}' has rank {} at offset {}", name, rank, r.offset()));
    }
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& d : shape) {
      d = r.u64("record dims");
      n *= d;
    }
    if (n > (bytes.size() - r.offset()) / 8) {
      throw CheckpointError(fmt::format("checkpoint truncated at offset {} while reading values of '{}'",
                                        r.offset(), name));
    }
    std::vector<double> values(n);
    for (double& v : values) v = r.f64("record values");

    const auto slash = name.find('/');
    const std::string group = name.substr(0, slash);
    const std::string key = slash == std::string::npos ? "" : name.substr(slash + 1);
    if (group == "history") {
      history[key] = std::move(values);
      continue;
    }
    Tensor t = Tensor::constant(std::move(shape), std::move(values));
    if (group == "generator") {
      s.generator.add(key, std::move(t));
    } else if (group == "critic") {
      s.critic.add(key, std::move(t));
    } else if (group == "generator_opt") {
      s.generator_opt.cache.add(key, std::move(t));
    } else if (group == "critic_opt") {
      s.critic_opt.cache.add(key, std::move(t));
    } else {
      throw CheckpointError("unknown checkpoint record '" + name + "'");
    }
  }
  if (r.offset() != bytes.size()) {
    throw CheckpointError(fmt::format("{} trailing bytes after offset {}", bytes.size() - r.offset(), r.offset()));
  }

  const std::size_t rows = history["epoch"].size();
  for (const char* column : kHistoryColumns) {
    if (history[column].size() != rows) throw CheckpointError("loss history columns differ in length");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    s.history.append(static_cast<std::size_t>(history["epoch"][i]), history["critic_loss"][i],
                     history["generator_loss"][i], history["wasserstein"][i],
                     history["gradient_penalty"][i]);
  }

  s.epoch = get_number<std::size_t>(meta, "epoch");
  cp.arch.noise_len = get_number<std::size_t>(meta, "arch.noise_len");
  cp.arch.seq_len = get_number<std::size_t>(meta, "arch.seq_len");
  cp.arch.features = get_number<std::size_t>(meta, "arch.features");
  cp.arch.lstm_units = get_number<std::size_t>(meta, "arch.lstm_units");
  try {
    cp.scaler.kind = parse_scaler_kind(get(meta, "scaler.kind"));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }
  cp.scaler.a = get_number<double>(meta, "scaler.a");
  cp.scaler.b = get_number<double>(meta, "scaler.b");
  for (std::size_t i = 0; i < s.rng.size(); ++i) s.rng[i] = get_number<std::uint64_t>(meta, fmt::format("rng.{}", i));
  s.generator_opt.steps = get_number<std::uint64_t>(meta, "generator_opt.steps");
  s.critic_opt.steps = get_number<std::uint64_t>(meta, "critic_opt.steps");
  for (const char* key : {"epoch", "arch.noise_len", "arch.seq_len", "arch.features", "arch.lstm_units",
                          "scaler.kind", "scaler.a", "scaler.b", "rng.0", "rng.1", "rng.2", "rng.3",
                          "generator_opt.steps", "critic_opt.steps"}) {
    meta.erase(key);
  }
  cp.extra = std::move(meta);
  try {
    cp.arch.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }
  check_schema(s.generator, cp.arch, NetworkKind::kGenerator);
  check_schema(s.critic, cp.arch, NetworkKind::kCritic);
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(cp);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("cannot write " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace tsforge
