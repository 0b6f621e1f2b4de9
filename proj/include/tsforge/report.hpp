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

#ifndef TSFORGE_REPORT_HPP
#define TSFORGE_REPORT_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tsforge/gan.hpp"
#include "tsforge/stats.hpp"

namespace tsforge {

/// 17 significant digits, enough to read the exact double back.
std::string format_real(double v);

using Row = std::vector<double>;

std::string csv_text(const std::vector<std::string>& header, const std::vector<Row>& rows);
/// Numeric CSV with one header line.
std::vector<Row> parse_csv_matrix(std::string_view text);
std::vector<Row> read_csv_matrix(const std::filesystem::path& path);

/// Creates parent directories as needed.
void write_text(const std::filesystem::path& path, std::string_view text);

std::string loss_csv(const LossHistory& history);
std::string moments_csv(const std::vector<std::string>& labels,
                        const std::vector<MomentsReport>& reports);
std::string qq_csv(const QqReport& qq);
std::string acf_csv(const std::vector<std::string>& labels, const std::vector<AcfReport>& acfs);
std::string histogram_csv(const HistogramReport& h);

struct Series {
  enum class Style { kLine, kPoints, kBars };
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  Style style = Style::kLine;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Dashed horizontal guides at these y values.
  std::vector<double> guides;
  /// Extra lines of text printed under the title.
  std::vector<std::string> notes;
};

/// Standalone SVG document. Identical plots give identical bytes.
std::string render_svg(const Plot& plot);

Plot qq_plot(const QqReport& qq, const std::string& title, const std::string& x_label);
Plot acf_plot(const AcfReport& acf, const std::string& title);
Plot histogram_plot(const HistogramReport& h, const std::string& title);

}  // namespace tsforge

#endif  // TSFORGE_REPORT_HPP
