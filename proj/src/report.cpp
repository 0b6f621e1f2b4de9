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

#include "tsforge/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tsforge/data.hpp"

namespace tsforge {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string coord(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

std::string csv_text(const std::vector<std::string>& header, const std::vector<Row>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const Row& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_real(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<Row> parse_csv_matrix(std::string_view text) {
  std::vector<Row> rows;
  bool header = true;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    Row row;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      const std::string_view field = line.substr(start, comma - start);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw DataError(fmt::format("line {}: '{}' is not a number", line_no, field));
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Row> read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv_matrix(buffer.str());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string loss_csv(const LossHistory& h) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < h.size(); ++i) {
    rows.push_back({static_cast<double>(h.epoch[i]), h.critic_loss[i], h.generator_loss[i],
                    h.wasserstein[i], h.gradient_penalty[i]});
  }
  return csv_text({"epoch", "critic_loss", "generator_loss", "wasserstein", "gradient_penalty"},
                  rows);
}

std::string moments_csv(const std::vector<std::string>& labels,
                        const std::vector<MomentsReport>& reports) {
  std::string out = "statistic";
  for (const auto& l : labels) out += "," + l;
  out += '\n';
  auto row = [&](const char* name, auto get) {
    out += name;
    for (const auto& r : reports) out += "," + format_real(get(r));
    out += '\n';
  };
  row("count", [](const MomentsReport& r) { return static_cast<double>(r.n); });
  row("mean", [](const MomentsReport& r) { return r.mean; });
  row("std", [](const MomentsReport& r) { return r.std; });
  row("min", [](const MomentsReport& r) { return r.min; });
  row("25%", [](const MomentsReport& r) { return r.q25; });
  row("50%", [](const MomentsReport& r) { return r.q50; });
  row("75%", [](const MomentsReport& r) { return r.q75; });
  row("max", [](const MomentsReport& r) { return r.max; });
  row("skewness", [](const MomentsReport& r) { return r.skewness; });
  row("kurtosis", [](const MomentsReport& r) { return r.kurtosis; });
  return out;
}

std::string qq_csv(const QqReport& qq) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < qq.sample.size(); ++i) {
    rows.push_back({qq.theoretical[i], qq.sample[i], qq.slope * qq.theoretical[i] + qq.intercept});
  }
  return csv_text({"theoretical", "sample", "reference_line"}, rows);
}

std::string acf_csv(const std::vector<std::string>& labels, const std::vector<AcfReport>& acfs) {
  std::vector<std::string> header{"lag"};
  for (const auto& l : labels) header.push_back(l);
  for (const auto& l : labels) header.push_back(l + "_band");
  std::vector<Row> rows;
  for (std::size_t k = 0; k < acfs.front().values.size(); ++k) {
    Row row{static_cast<double>(k)};
    for (const auto& a : acfs) row.push_back(a.values[k]);
    for (const auto& a : acfs) row.push_back(a.band);
    rows.push_back(std::move(row));
  }
  return csv_text(header, rows);
}

std::string histogram_csv(const HistogramReport& h) {
  std::vector<std::string> header{"left", "right"};
  for (const auto& l : h.labels) header.push_back(l);
  std::vector<Row> rows;
  for (std::size_t i = 0; i + 1 < h.edges.size(); ++i) {
    Row row{h.edges[i], h.edges[i + 1]};
    for (const auto& d : h.densities) row.push_back(d[i]);
    rows.push_back(std::move(row));
  }
  return csv_text(header, rows);
}

std::string render_svg(const Plot& plot) {
  double x_lo = INFINITY;
  double x_hi = -INFINITY;
  double y_lo = INFINITY;
  double y_hi = -INFINITY;
  for (const Series& s : plot.series) {
    for (double v : s.x) {
      if (std::isfinite(v)) x_lo = std::min(x_lo, v), x_hi = std::max(x_hi, v);
    }
    for (double v : s.y) {
      if (std::isfinite(v)) y_lo = std::min(y_lo, v), y_hi = std::max(y_hi, v);
    }
    if (s.style == Series::Style::kBars) y_lo = std::min(y_lo, 0.0), y_hi = std::max(y_hi, 0.0);
  }
  for (double g : plot.guides) y_lo = std::min(y_lo, g), y_hi = std::max(y_hi, g);
  if (!(x_hi >= x_lo)) x_lo = 0.0, x_hi = 1.0;
  if (!(y_hi >= y_lo)) y_lo = 0.0, y_hi = 1.0;
  if (x_hi == x_lo) x_lo -= 0.5, x_hi += 0.5;
  if (y_hi == y_lo) y_lo -= 0.5, y_hi += 0.5;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;

  const double top = kTop + 14.0 * static_cast<double>(plot.notes.size());
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - top - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * ph; };

  std::string out = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      kWidth, kHeight);
  out += fmt::format("<text x=\"{}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
                     coord(kWidth / 2), escape(plot.title));
  for (std::size_t i = 0; i < plot.notes.size(); ++i) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", coord(kWidth / 2),
                       coord(38.0 + 14.0 * static_cast<double>(i)), escape(plot.notes[i]));
  }
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                     coord(kLeft), coord(top), coord(pw), coord(ph));
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", coord(px(xv)),
                       coord(top + ph + 16.0), xv);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n", coord(kLeft - 6.0),
                       coord(py(yv) + 4.0), yv);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", coord(kLeft + pw / 2),
                     coord(kHeight - 12.0), escape(plot.x_label));
  out += fmt::format(
      "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
      coord(top + ph / 2), escape(plot.y_label));
  for (double g : plot.guides) {
    out += fmt::format(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        coord(kLeft), coord(py(g)), coord(kLeft + pw), coord(py(g)));
  }

  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const Series& s = plot.series[si];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.style == Series::Style::kLine) {
      out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"", s.color);
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        out += fmt::format("{}{},{}", i ? " " : "", coord(px(s.x[i])), coord(py(s.y[i])));
      }
      out += "\"/>\n";
    } else if (s.style == Series::Style::kPoints) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"1.8\" fill=\"{}\"/>\n", coord(px(s.x[i])),
                           coord(py(s.y[i])), s.color);
      }
    } else {
      const double half = n > 1 ? 0.3 * pw / static_cast<double>(n) : 4.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double y0 = py(0.0);
        const double y1 = py(s.y[i]);
        out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
                           coord(px(s.x[i]) - half), coord(std::min(y0, y1)), coord(2 * half),
                           coord(std::abs(y1 - y0)), s.color);
      }
    }
    if (!s.label.empty()) {
      const double ly = top + 14.0 + 14.0 * static_cast<double>(si);
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
                         coord(kLeft + pw - 130.0), coord(ly - 9.0), s.color);
      out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", coord(kLeft + pw - 115.0), coord(ly),
                         escape(s.label));
    }
  }
  out += "</svg>\n";
  return out;
}

Plot qq_plot(const QqReport& qq, const std::string& title, const std::string& x_label) {
  Plot p;
  p.title = title;
  p.x_label = x_label;
  p.y_label = "sample quantiles";
  p.series.push_back({"sample", qq.theoretical, qq.sample, kPalette[0], Series::Style::kPoints});
  const double lo = qq.theoretical.front();
  const double hi = qq.theoretical.back();
  p.series.push_back({"quartile line", {lo, hi}, {qq.slope * lo + qq.intercept, qq.slope * hi + qq.intercept},
                      kPalette[1], Series::Style::kLine});
  return p;
}

Plot acf_plot(const AcfReport& acf, const std::string& title) {
  Plot p;
  p.title = title;
  p.x_label = "lag";
  p.y_label = "autocorrelation";
  std::vector<double> lags(acf.values.size());
  for (std::size_t k = 0; k < lags.size(); ++k) lags[k] = static_cast<double>(k);
  p.series.push_back({"", lags, acf.values, kPalette[0], Series::Style::kBars});
  p.guides = {acf.band, -acf.band};
  return p;
}

Plot histogram_plot(const HistogramReport& h, const std::string& title) {
  Plot p;
  p.title = title;
  p.x_label = "log return";
  p.y_label = "density";
  for (std::size_t d = 0; d < h.densities.size(); ++d) {
    Series s{h.labels[d], {}, {}, kPalette[d % 6], Series::Style::kLine};
    for (std::size_t i = 0; i < h.densities[d].size(); ++i) {
      s.x.push_back(h.edges[i]);
      s.y.push_back(h.densities[d][i]);
      s.x.push_back(h.edges[i + 1]);
      s.y.push_back(h.densities[d][i]);
    }
    p.series.push_back(std::move(s));
  }
  return p;
}

}  // namespace tsforge
