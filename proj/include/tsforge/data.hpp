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

#ifndef TSFORGE_DATA_HPP
#define TSFORGE_DATA_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tsforge/rng.hpp"
#include "tsforge/tensor.hpp"

namespace tsforge {

/// Malformed or insufficient input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Daily closes keyed by ISO dates (YYYY-MM-DD), strictly increasing.
struct PriceSeries {
  std::vector<std::string> dates;
  std::vector<double> closes;
  /// Rows skipped while loading because Close was missing, zero or not a
  /// number.
  std::size_t dropped_rows = 0;
};

using ReturnSeries = std::vector<double>;
using Windows = std::vector<std::vector<double>>;

/// Reads the Date and Close columns (located by header name) of a
/// comma-separated price file and sorts rows by date.
PriceSeries load_csv(const std::filesystem::path& path);
PriceSeries parse_csv(std::string_view text);

/// r_t = ln(close_t / close_{t-1}).
ReturnSeries log_returns(std::span<const double> closes);

/// floor((length - seq_len) / stride) + 1, or 0 when length < seq_len.
std::size_t window_count(std::size_t length, std::size_t seq_len, std::size_t stride) noexcept;

/// Overlapping contiguous windows; window k starts at k * stride.
Windows make_windows(std::span<const double> series, std::size_t seq_len, std::size_t stride = 1);

enum class ScalerKind { kMinMaxSymmetric, kZScore };

const char* to_string(ScalerKind kind) noexcept;
ScalerKind parse_scaler_kind(std::string_view name);

/// Global affine map from raw returns to model space. For min-max, `a` and
/// `b` are the fitted min and max; for z-score, the mean and standard
/// deviation.
struct Scaler {
  ScalerKind kind = ScalerKind::kMinMaxSymmetric;
  double a = -1.0;
  double b = 1.0;

  double apply(double raw) const noexcept;
  double invert(double scaled) const noexcept;
};

/// Scaled windows ready for batching. Immutable once built.
struct WindowedDataset {
  Tensor windows;  // [count, seq_len, 1]
  Scaler scaler;
  std::string source;

  std::size_t count() const { return windows.extent(0); }
  std::size_t seq_len() const { return windows.extent(1); }
};

Scaler fit_scaler(const Windows& windows, ScalerKind kind);
WindowedDataset fit_scale(const Windows& windows, ScalerKind kind, std::string source = {});

std::vector<double> apply_scale(std::span<const double> raw, const Scaler& scaler);
std::vector<double> inverse_scale(std::span<const double> scaled, const Scaler& scaler);

/// Uniform draw of window indices with replacement.
std::vector<std::size_t> sample_indices(std::size_t count, std::size_t batch, Rng& rng);
/// [batch, seq_len, 1], windows drawn uniformly with replacement.
Tensor sample_real_batch(const WindowedDataset& ds, std::size_t batch, Rng& rng);

/// p_0 followed by p_0 * exp(cumulative sum of r).
std::vector<double> returns_to_prices(std::span<const double> returns, double p0);

}  // namespace tsforge

#endif  // TSFORGE_DATA_HPP
