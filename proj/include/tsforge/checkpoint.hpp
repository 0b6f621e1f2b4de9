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

#ifndef TSFORGE_CHECKPOINT_HPP
#define TSFORGE_CHECKPOINT_HPP

// Binary layout, all integers and reals little-endian:
//
//   "WGTS1"                  5 bytes
//   version                  u32
//   metadata length          u64, then that many bytes of UTF-8
//                            "key=value\n" lines
//   record count             u64
//   per record:
//     name length            u64, then the name bytes
//     rank                   u64
//     dims                   rank x u64
//     values                 product(dims) x f64, row-major

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsforge/data.hpp"
#include "tsforge/gan.hpp"

namespace tsforge {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ArchitectureSpec arch;
  Scaler scaler;
  TrainState state;
  /// Free-form entries (run configuration and the like).
  std::map<std::string, std::string> extra;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tsforge

#endif  // TSFORGE_CHECKPOINT_HPP
