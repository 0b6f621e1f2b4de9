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

#include "tsforge/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

namespace tsforge {
namespace {

std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return s;
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

std::vector<double> pooled(const std::vector<std::vector<double>>& windows) {
  std::vector<double> out;
  for (const auto& w : windows) out.insert(out.end(), w.begin(), w.end());
  return out;
}

void fit_quartile_line(QqReport& r, double x25, double x75, double y25, double y75) {
  r.slope = (y75 - y25) / (x75 - x25);
  r.intercept = y25 - r.slope * x25;
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double plotting_quantile(std::span<const double> sorted, double p) {
  const double n = static_cast<double>(sorted.size());
  const double h = std::clamp(n * p + 0.5, 1.0, n);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size());
  return sorted[lo - 1] + (h - static_cast<double>(lo)) * (sorted[hi - 1] - sorted[lo - 1]);
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

MomentsReport moments(std::span<const double> x) {
  if (x.size() < 4) throw StatsError("moments need at least 4 values");
  const std::vector<double> s = sorted_copy(x);
  if (s.front() == s.back()) throw StatsError("skewness and kurtosis undefined for a constant series");

  MomentsReport r;
  r.n = x.size();
  r.mean = mean_of(x);
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d = v - r.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(r.n);
  r.std = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  r.skewness = m3 / std::pow(m2, 1.5);
  r.kurtosis = m4 / (m2 * m2);
  r.min = s.front();
  r.max = s.back();
  r.q25 = quantile_sorted(s, 0.25);
  r.q50 = quantile_sorted(s, 0.5);
  r.q75 = quantile_sorted(s, 0.75);
  return r;
}

AcfReport acf(std::span<const double> x, std::size_t max_lag) {
  if (max_lag >= x.size()) throw StatsError("max_lag must be below the series length");
  const double mean = mean_of(x);
  std::vector<double> d(x.size());
  std::transform(x.begin(), x.end(), d.begin(), [&](double v) { return v - mean; });
  const double denom = std::inner_product(d.begin(), d.end(), d.begin(), 0.0);
  if (!(denom > 0.0)) throw StatsError("autocorrelation undefined for a constant series");

  AcfReport r;
  r.n = x.size();
  r.band = 1.96 / std::sqrt(static_cast<double>(r.n));
  r.values.resize(max_lag + 1);
  r.values[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + k < d.size(); ++t) num += d[t] * d[t + k];
    r.values[k] = num / denom;
  }
  return r;
}

AcfReport acf_absolute(std::span<const double> x, std::size_t max_lag) {
  std::vector<double> a(x.size());
  std::transform(x.begin(), x.end(), a.begin(), [](double v) { return std::abs(v); });
  return acf(a, max_lag);
}

AcfReport mean_acf(const std::vector<std::vector<double>>& windows, std::size_t max_lag,
                   bool absolute) {
  if (windows.empty()) throw StatsError("no windows");
  AcfReport out;
  out.values.assign(max_lag + 1, 0.0);
  std::size_t used = 0;
  for (const auto& w : windows) {
    AcfReport r;
    try {
      r = absolute ? acf_absolute(w, max_lag) : acf(w, max_lag);
    } catch (const StatsError&) {
      continue;  // constant window
    }
    for (std::size_t k = 0; k <= max_lag; ++k) out.values[k] += r.values[k];
    out.n = std::max(out.n, r.n);
    ++used;
  }
  if (used == 0) throw StatsError("every window is constant");
  for (double& v : out.values) v /= static_cast<double>(used);
  out.band = 1.96 / std::sqrt(static_cast<double>(out.n));
  return out;
}

QqReport qq_normal(std::span<const double> sample) {
  if (sample.size() < 10) throw StatsError("QQ points need at least 10 values");
  std::vector<double> s = sorted_copy(sample);
  if (s.front() == s.back()) throw StatsError("QQ points undefined for a constant sample");
  const double mean = mean_of(s);
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.size() - 1));
  for (double& v : s) v = (v - mean) / sd;

  QqReport r;
  const double n = static_cast<double>(s.size());
  r.theoretical.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    r.theoretical[i] = normal_quantile((static_cast<double>(i) + 0.5) / n);
  }
  fit_quartile_line(r, normal_quantile(0.25), normal_quantile(0.75), quantile_sorted(s, 0.25),
                    quantile_sorted(s, 0.75));
  r.sample = std::move(s);
  return r;
}

QqReport qq_empirical(std::span<const double> sample, std::span<const double> reference) {
  if (sample.size() < 10 || reference.size() < 10) {
    throw StatsError("QQ points need at least 10 values per sample");
  }
  const std::vector<double> ys = sorted_copy(sample);
  const std::vector<double> xs = sorted_copy(reference);
  if (ys.front() == ys.back() || xs.front() == xs.back()) {
    throw StatsError("QQ points undefined for a constant sample");
  }
  const std::size_t m = std::min(ys.size(), xs.size());
  QqReport r;
  r.theoretical.resize(m);
  r.sample.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    r.theoretical[i] = plotting_quantile(xs, p);
    r.sample[i] = plotting_quantile(ys, p);
  }
  fit_quartile_line(r, quantile_sorted(xs, 0.25), quantile_sorted(xs, 0.75),
                    quantile_sorted(ys, 0.25), quantile_sorted(ys, 0.75));
  return r;
}

HistogramReport histogram(const std::vector<std::vector<double>>& datasets, std::size_t bins,
                          std::vector<std::string> labels) {
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  if (datasets.empty()) throw StatsError("no datasets");
  double lo = INFINITY;
  double hi = -INFINITY;
  for (const auto& d : datasets) {
    if (d.empty()) throw StatsError("empty dataset");
    const auto [mn, mx] = std::minmax_element(d.begin(), d.end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }

  HistogramReport r;
  const double width = (hi - lo) / static_cast<double>(bins);
  r.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) r.edges[i] = lo + width * static_cast<double>(i);
  r.edges.back() = hi;
  for (const auto& d : datasets) {
    std::vector<double> density(bins, 0.0);
    for (double v : d) {
      auto bin = static_cast<std::size_t>((v - lo) / width);
      density[std::min(bin, bins - 1)] += 1.0;
    }
    for (double& c : density) c /= static_cast<double>(d.size()) * width;
    r.densities.push_back(std::move(density));
  }
  labels.resize(datasets.size());
  r.labels = std::move(labels);
  return r;
}

EvalReport compare_distributions(const std::vector<std::vector<double>>& real,
                                 const std::vector<std::vector<double>>& synthetic,
                                 const CompareOptions& options) {
  if (real.empty() || synthetic.empty()) throw StatsError("both sides need data");
  std::size_t shortest = SIZE_MAX;
  for (const auto* side : {&real, &synthetic}) {
    for (const auto& w : *side) shortest = std::min(shortest, w.size());
  }
  if (shortest < 2) throw StatsError("windows must hold at least 2 values");
  const std::size_t max_lag = std::min(options.max_lag, shortest - 1);

  const std::vector<double> r = pooled(real);
  const std::vector<double> s = pooled(synthetic);
  EvalReport e;
  e.real_moments = moments(r);
  e.synthetic_moments = moments(s);
  e.histogram = histogram({r, s}, options.bins, {"real", "synthetic"});
  e.qq_real_normal = qq_normal(r);
  e.qq_synthetic_normal = qq_normal(s);
  e.qq_synthetic_real = qq_empirical(s, r);
  e.real_acf = mean_acf(real, max_lag, false);
  e.real_acf_abs = mean_acf(real, max_lag, true);
  e.synthetic_acf = mean_acf(synthetic, max_lag, false);
  e.synthetic_acf_abs = mean_acf(synthetic, max_lag, true);
  return e;
}

}  // namespace tsforge
