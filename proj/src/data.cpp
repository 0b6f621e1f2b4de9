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

#include "tsforge/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tsforge {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool valid_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  const char* p = s.data();
  if (std::from_chars(p, p + 4, y).ptr != p + 4) return false;
  if (std::from_chars(p + 5, p + 7, m).ptr != p + 7) return false;
  if (std::from_chars(p + 8, p + 10, d).ptr != p + 10) return false;
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                     std::chrono::day{d}}
      .ok();
}

bool parse_positive(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out) && out > 0.0;
}

}  // namespace

PriceSeries parse_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw DataError("price file is empty");

  std::string_view header = lines.front();
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  const auto columns = split(header);
  const auto date_it = std::find(columns.begin(), columns.end(), "Date");
  const auto close_it = std::find(columns.begin(), columns.end(), "Close");
  if (date_it == columns.end() || close_it == columns.end()) {
    throw DataError("header must contain Date and Close columns");
  }
  const auto date_col = static_cast<std::size_t>(date_it - columns.begin());
  const auto close_col = static_cast<std::size_t>(close_it - columns.begin());

  std::vector<std::pair<std::string, double>> rows;
  PriceSeries out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i]);
    if (fields.size() <= std::max(date_col, close_col)) {
      throw DataError("line " + std::to_string(i + 1) + ": too few fields");
    }
    if (!valid_date(fields[date_col])) {
      throw DataError("line " + std::to_string(i + 1) + ": bad date '" +
                      std::string(fields[date_col]) + "'");
    }
    double close = 0.0;
    if (!parse_positive(fields[close_col], close)) {
      ++out.dropped_rows;
      continue;
    }
    rows.emplace_back(std::string(fields[date_col]), close);
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].first == rows[i - 1].first) throw DataError("duplicate date " + rows[i].first);
  }
  if (rows.size() < 2) throw DataError("need at least 2 valid price rows");
  for (auto& [date, close] : rows) {
    out.dates.push_back(std::move(date));
    out.closes.push_back(close);
  }
  return out;
}

PriceSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

ReturnSeries log_returns(std::span<const double> closes) {
  if (closes.size() < 2) throw DataError("need at least 2 prices");
  ReturnSeries r(closes.size() - 1);
  for (std::size_t i = 0; i < closes.size(); ++i) {
    if (!(closes[i] > 0.0) || !std::isfinite(closes[i])) {
      throw DataError("non-positive price at index " + std::to_string(i));
    }
    if (i > 0) r[i - 1] = std::log(closes[i] / closes[i - 1]);
  }
  return r;
}

std::size_t window_count(std::size_t length, std::size_t seq_len, std::size_t stride) noexcept {
  if (seq_len == 0 || stride == 0 || length < seq_len) return 0;
  return (length - seq_len) / stride + 1;
}

Windows make_windows(std::span<const double> series, std::size_t seq_len, std::size_t stride) {
  if (seq_len == 0 || stride == 0) throw std::invalid_argument("seq_len and stride must be positive");
  if (series.size() < seq_len) {
    throw DataError("series of length " + std::to_string(series.size()) +
                    " is shorter than seq_len " + std::to_string(seq_len));
  }
  Windows out(window_count(series.size(), seq_len, stride));
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto first = series.begin() + static_cast<std::ptrdiff_t>(k * stride);
    out[k].assign(first, first + static_cast<std::ptrdiff_t>(seq_len));
  }
  return out;
}

const char* to_string(ScalerKind kind) noexcept {
  return kind == ScalerKind::kZScore ? "zscore" : "minmax_symmetric";
}

ScalerKind parse_scaler_kind(std::string_view name) {
  if (name == "minmax_symmetric") return ScalerKind::kMinMaxSymmetric;
  if (name == "zscore") return ScalerKind::kZScore;
  throw std::invalid_argument("unknown scaler '" + std::string(name) + "'");
}

double Scaler::apply(double raw) const noexcept {
  if (kind == ScalerKind::kZScore) return (raw - a) / b;
  return 2.0 * (raw - a) / (b - a) - 1.0;
}

double Scaler::invert(double scaled) const noexcept {
  if (kind == ScalerKind::kZScore) return scaled * b + a;
  return 0.5 * (1.0 - scaled) * a + 0.5 * (1.0 + scaled) * b;
}

Scaler fit_scaler(const Windows& windows, ScalerKind kind) {
  std::size_t n = 0;
  double lo = INFINITY;
  double hi = -INFINITY;
  double total = 0.0;
  for (const auto& w : windows) {
    for (double v : w) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      total += v;
      ++n;
    }
  }
  if (n == 0) throw DataError("no window values to fit a scaler on");
  if (!(hi > lo)) throw DataError("constant data cannot be scaled");
  if (kind == ScalerKind::kMinMaxSymmetric) return {kind, lo, hi};

  const double mean = total / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& w : windows) {
    for (double v : w) ss += (v - mean) * (v - mean);
  }
  return {kind, mean, std::sqrt(ss / static_cast<double>(n))};
}

WindowedDataset fit_scale(const Windows& windows, ScalerKind kind, std::string source) {
  const Scaler scaler = fit_scaler(windows, kind);
  const std::size_t seq_len = windows.front().size();
  std::vector<double> flat;
  flat.reserve(windows.size() * seq_len);
  for (const auto& w : windows) {
    if (w.size() != seq_len) throw ShapeError("windows must share one length");
    for (double v : w) flat.push_back(scaler.apply(v));
  }
  return {Tensor::constant({windows.size(), seq_len, 1}, std::move(flat)), scaler, std::move(source)};
}

std::vector<double> apply_scale(std::span<const double> raw, const Scaler& scaler) {
  std::vector<double> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), [&](double v) { return scaler.apply(v); });
  return out;
}

std::vector<double> inverse_scale(std::span<const double> scaled, const Scaler& scaler) {
  std::vector<double> out(scaled.size());
  std::transform(scaled.begin(), scaled.end(), out.begin(),
                 [&](double v) { return scaler.invert(v); });
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t count, std::size_t batch, Rng& rng) {
  if (count == 0) throw DataError("cannot sample from an empty dataset");
  std::vector<std::size_t> out(batch);
  for (auto& i : out) i = static_cast<std::size_t>(rng.index(count));
  return out;
}

Tensor sample_real_batch(const WindowedDataset& ds, std::size_t batch, Rng& rng) {
  const std::size_t len = ds.seq_len();
  const auto source = ds.windows.values();
  std::vector<double> out;
  out.reserve(batch * len);
  for (std::size_t k : sample_indices(ds.count(), batch, rng)) {
    const auto first = source.begin() + static_cast<std::ptrdiff_t>(k * len);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(len));
  }
  return Tensor::constant({batch, len, 1}, std::move(out));
}

std::vector<double> returns_to_prices(std::span<const double> returns, double p0) {
  if (!(p0 > 0.0)) throw std::invalid_argument("p0 must be positive");
  std::vector<double> out{p0};
  double cumulative = 0.0;
  for (double r : returns) {
    cumulative += r;
    out.push_back(p0 * std::exp(cumulative));
  }
  return out;
}

}  // namespace tsforge
