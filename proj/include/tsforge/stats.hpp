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

#ifndef TSFORGE_STATS_HPP
#define TSFORGE_STATS_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsforge {

/// Statistic undefined for the given sample (too short, zero variance).
class StatsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct MomentsReport {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // n - 1 denominator
  double min = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double skewness = 0.0;  // m3 / m2^1.5
  double kurtosis = 0.0;  // m4 / m2^2, normal = 3
};

/// Requires n >= 4 and a non-constant sample. Quantiles interpolate
/// linearly between order statistics at (n - 1) p.
MomentsReport moments(std::span<const double> x);

/// Linear-interpolation quantile of sorted data at (n - 1) p.
double quantile_sorted(std::span<const double> sorted, double p);

struct AcfReport {
  std::vector<double> values;  // lags 0..max_lag
  double band = 0.0;           // 1.96 / sqrt(n)
  std::size_t n = 0;
};

/// Biased sample autocorrelation around the whole-series mean.
AcfReport acf(std::span<const double> x, std::size_t max_lag);
AcfReport acf_absolute(std::span<const double> x, std::size_t max_lag);
/// Per-window ACFs averaged lag by lag. The band uses the window length.
AcfReport mean_acf(const std::vector<std::vector<double>>& windows, std::size_t max_lag,
                   bool absolute);

struct QqReport {
  std::vector<double> theoretical;  // x axis
  std::vector<double> sample;       // y axis, non-decreasing
  /// Line through the first- and third-quartile points.
  double slope = 1.0;
  double intercept = 0.0;
};

/// Standardized order statistics against standard normal quantiles at
/// plotting positions (i - 0.5) / n. Requires n >= 10.
QqReport qq_normal(std::span<const double> sample);
/// Quantiles of `sample` (y) against quantiles of `reference` (x), both read
/// at (i - 0.5) / m for m the smaller size, so that swapping the arguments
/// swaps the axes.
QqReport qq_empirical(std::span<const double> sample, std::span<const double> reference);

/// Quantile at p with order statistic i sitting at (i - 0.5) / n.
double plotting_quantile(std::span<const double> sorted, double p);
double normal_quantile(double p);

struct HistogramReport {
  std::vector<double> edges;                  // bins + 1
  std::vector<std::vector<double>> densities;  // per dataset
  std::vector<std::string> labels;
};

/// Density-normalized counts of every dataset over shared edges spanning
/// the pooled range.
HistogramReport histogram(const std::vector<std::vector<double>>& datasets, std::size_t bins,
                          std::vector<std::string> labels = {});

struct EvalReport {
  MomentsReport real_moments;
  MomentsReport synthetic_moments;
  HistogramReport histogram;
  QqReport qq_real_normal;
  QqReport qq_synthetic_normal;
  QqReport qq_synthetic_real;
  AcfReport real_acf;
  AcfReport real_acf_abs;
  AcfReport synthetic_acf;
  AcfReport synthetic_acf_abs;
};

struct CompareOptions {
  std::size_t bins = 50;
  std::size_t max_lag = 20;
};

/// Each side is given as windows; moments, histograms and QQ points pool the
/// windows, ACFs are averaged across them. max_lag is capped by the shortest
/// window.
EvalReport compare_distributions(const std::vector<std::vector<double>>& real,
                                 const std::vector<std::vector<double>>& synthetic,
                                 const CompareOptions& options = {});

}  // namespace tsforge

#endif  // TSFORGE_STATS_HPP
