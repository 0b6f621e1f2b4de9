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

#include "tsforge/commands.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "tsforge/checkpoint.hpp"
#include "tsforge/report.hpp"

namespace tsforge {
namespace fs = std::filesystem;
namespace {

const char* const kRealColor = "#d62728";
const char* const kSyntheticColor = "#1f77b4";

std::vector<std::string> numbered_header(const char* prefix, std::size_t first, std::size_t count) {
  std::vector<std::string> h;
  for (std::size_t i = 0; i < count; ++i) h.push_back(fmt::format("{}{}", prefix, first + i));
  return h;
}

std::vector<double> pooled(const Windows& windows) {
  std::vector<double> out;
  for (const auto& w : windows) out.insert(out.end(), w.begin(), w.end());
  return out;
}

Windows scaled_rows(const Tensor& t) {
  const std::size_t n = t.extent(0);
  const std::size_t width = n ? t.size() / n : 0;
  const auto v = t.values();
  Windows rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].assign(v.begin() + static_cast<long>(i * width),
                   v.begin() + static_cast<long>((i + 1) * width));
  }
  return rows;
}

Tensor windows_tensor(const Windows& rows) {
  std::vector<double> flat = pooled(rows);
  const std::size_t len = rows.empty() ? 0 : rows.front().size();
  return Tensor::constant({rows.size(), len, 1}, std::move(flat));
}

Plot paths_plot(const std::string& title, const Windows& synthetic, const Windows& real) {
  Plot p;
  p.title = title;
  p.x_label = "step";
  p.y_label = "log return";
  auto add = [&](const std::vector<double>& y, const std::string& label, const char* color) {
    Series s{label, {}, y, color, Series::Style::kLine};
    for (std::size_t t = 0; t < y.size(); ++t) s.x.push_back(static_cast<double>(t + 1));
    p.series.push_back(std::move(s));
  };
  for (std::size_t i = 0; i < synthetic.size(); ++i) {
    add(synthetic[i], i == 0 ? "synthetic" : "", kSyntheticColor);
  }
  for (const auto& r : real) add(r, "real", kRealColor);
  return p;
}

std::string moments_note(const char* label, const MomentsReport& m) {
  return fmt::format("{}: skewness {:.3f}, kurtosis {:.3f}", label, m.skewness, m.kurtosis);
}

ReturnSeries load_returns(const fs::path& path) { return log_returns(load_csv(path).closes); }

WindowedDataset load_dataset(const RunConfig& cfg) {
  if (cfg.data.empty()) throw DataError("no data file given");
  const ReturnSeries r = load_returns(cfg.data);
  const Windows w = make_windows(r, cfg.train.arch.seq_len, cfg.stride);
  if (w.empty()) throw DataError("series too short for one window");
  return fit_scale(w, cfg.scaler, cfg.data);
}

Checkpoint make_checkpoint(const RunConfig& cfg, const Scaler& scaler, const TrainState& state) {
  Checkpoint cp;
  cp.arch = cfg.train.arch;
  cp.scaler = scaler;
  cp.state = state;
  const std::string rendered = render_config(cfg);
  std::string_view rest = rendered;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    const std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    const auto eq = line.find(" = ");
    if (eq != std::string_view::npos) {
      cp.extra["config." + std::string(line.substr(0, eq))] = std::string(line.substr(eq + 3));
    }
  }
  return cp;
}

void write_distribution(const fs::path& dir, const Windows& real, const Windows& synthetic,
                        const CompareOptions& options) {
  const EvalReport r = compare_distributions(real, synthetic, options);
  write_text(dir / "moments.csv",
             moments_csv({"real", "synthetic"}, {r.real_moments, r.synthetic_moments}));
  write_text(dir / "histogram.csv", histogram_csv(r.histogram));
  Plot h = histogram_plot(r.histogram, "Log return distribution");
  h.series[0].color = kRealColor;
  h.series[1].color = kSyntheticColor;
  h.notes = {moments_note("real", r.real_moments), moments_note("synthetic", r.synthetic_moments)};
  write_text(dir / "histogram.svg", render_svg(h));
}

/// |D(a) - D(b)| / ||a - b|| for random real/synthetic pairs.
std::vector<double> lipschitz_ratios(const ParamSet& critic, const Windows& real,
                                     const Windows& synthetic, std::size_t pairs, Rng& rng) {
  Windows a(pairs);
  Windows b(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    a[i] = real[rng.index(real.size())];
    b[i] = synthetic[rng.index(synthetic.size())];
  }
  const Tensor da = critic_forward(critic, windows_tensor(a));
  const Tensor db = critic_forward(critic, windows_tensor(b));
  std::vector<double> ratios;
  for (std::size_t i = 0; i < pairs; ++i) {
    double dist = 0.0;
    for (std::size_t t = 0; t < a[i].size(); ++t) dist += (a[i][t] - b[i][t]) * (a[i][t] - b[i][t]);
    dist = std::sqrt(dist);
    if (dist > 0.0) ratios.push_back(std::abs(da[i] - db[i]) / dist);
  }
  return ratios;
}

}  // namespace

fs::path output_root() {
  if (const char* env = std::getenv("TSFORGE_OUT"); env != nullptr && *env != '\0') return env;
  return "runs";
}

Windows unscale_windows(const Tensor& scaled, const Scaler& scaler) {
  Windows rows = scaled_rows(scaled);
  for (auto& r : rows) r = inverse_scale(r, scaler);
  return rows;
}

TrainResult cmd_train(const TrainRequest& request, std::ostream& log) {
  const RunConfig& cfg = request.config;
  cfg.train.validate();
  const fs::path& out = request.out_dir;
  const WindowedDataset data = load_dataset(cfg);
  const Windows real_scaled = scaled_rows(data.windows);
  const Windows real = unscale_windows(data.windows, data.scaler);

  TrainState state;
  if (request.resume) {
    Checkpoint cp = load_checkpoint(*request.resume);
    if (!(cp.arch == cfg.train.arch)) {
      throw CheckpointError("checkpoint architecture does not match the configuration");
    }
    if (cp.scaler.kind != data.scaler.kind || cp.scaler.a != data.scaler.a ||
        cp.scaler.b != data.scaler.b) {
      throw DataError("data file does not match the checkpoint's scaler");
    }
    state = std::move(cp.state);
  } else {
    state = init_train_state(cfg.train);
  }

  fs::create_directories(out);
  write_text(out / "config.txt", render_config(cfg));
  log << fmt::format("training {} windows of length {} for {} epochs into {}\n", data.count(),
                     data.seq_len(), cfg.train.epochs, out.string());

  auto on_checkpoint = [&](const TrainState& s) {
    const std::string tag = fmt::format("epoch_{}", s.epoch);
    save_checkpoint(out / "checkpoints" / (tag + ".ckpt"), make_checkpoint(cfg, data.scaler, s));
    write_text(out / "loss.csv", loss_csv(s.history));
    const fs::path dir = out / "samples" / tag;
    const Windows grid =
        unscale_windows(generate(s.generator, cfg.train.arch, request.sample_rows, cfg.train.seed + s.epoch),
                        data.scaler);
    write_text(dir / "samples.csv", csv_text(numbered_header("t", 1, cfg.train.arch.seq_len), grid));
    write_text(dir / "samples.svg", render_svg(paths_plot("Synthetic samples, " + tag, grid, {})));
    const Windows many = unscale_windows(
        generate(s.generator, cfg.train.arch, request.report_samples, cfg.train.seed + s.epoch + 1),
        data.scaler);
    write_distribution(dir, real, many, {});
    const auto& h = s.history;
    log << fmt::format("epoch {}: critic {:.6g} generator {:.6g} wasserstein {:.6g}\n", s.epoch,
                       h.critic_loss.back(), h.generator_loss.back(), h.wasserstein.back());
  };

  try {
    train_epochs(state, cfg.train, data, on_checkpoint);
  } catch (const NumericAbort& e) {
    save_checkpoint(out / "crash.ckpt", make_checkpoint(cfg, data.scaler, e.last_good()));
    write_text(out / "loss.csv", loss_csv(e.last_good().history));
    throw;
  }

  save_checkpoint(out / "final.ckpt", make_checkpoint(cfg, data.scaler, state));
  write_text(out / "loss.csv", loss_csv(state.history));

  TrainResult result;
  const Tensor batch = generate(state.generator, cfg.train.arch, request.report_samples,
                                cfg.train.seed ^ 0x5eedULL);
  result.mode_collapse = mode_collapse_score(batch);
  Rng pair_rng(cfg.train.seed + 17);
  std::vector<double> ratios =
      lipschitz_ratios(state.critic, real_scaled, scaled_rows(batch), request.lipschitz_pairs, pair_rng);
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    result.lipschitz_median = quantile_sorted(ratios, 0.5);
    result.lipschitz_max = ratios.back();
  }

  Plot losses;
  losses.title = "Training losses";
  losses.x_label = "epoch";
  losses.y_label = "loss";
  std::vector<double> epochs(state.history.epoch.begin(), state.history.epoch.end());
  losses.series.push_back({"critic", epochs, state.history.critic_loss, kSyntheticColor});
  losses.series.push_back({"generator", epochs, state.history.generator_loss, kRealColor});
  losses.series.push_back({"wasserstein", epochs, state.history.wasserstein, "#2ca02c"});
  write_text(out / "loss.svg", render_svg(losses));

  const auto& h = state.history;
  std::string summary;
  summary += fmt::format("epochs = {}\n", state.epoch);
  if (h.size() > 0) {
    summary += fmt::format("final_critic_loss = {}\n", format_real(h.critic_loss.back()));
    summary += fmt::format("final_generator_loss = {}\n", format_real(h.generator_loss.back()));
    summary += fmt::format("final_wasserstein = {}\n", format_real(h.wasserstein.back()));
  }
  summary += fmt::format("mode_collapse_score = {}\n", format_real(result.mode_collapse));
  summary += fmt::format("lipschitz_pairs = {}\n", ratios.size());
  summary += fmt::format("lipschitz_median = {}\n", format_real(result.lipschitz_median));
  summary += fmt::format("lipschitz_max = {}\n", format_real(result.lipschitz_max));
  write_text(out / "summary.txt", summary);
  log << summary;

  result.state = std::move(state);
  return result;
}

void cmd_generate(const GenerateRequest& request) {
  if (request.n == 0) throw std::invalid_argument("--n must be positive");
  const Checkpoint cp = load_checkpoint(request.checkpoint);
  const Tensor scaled = generate(cp.state.generator, cp.arch, request.n, request.seed);
  const Windows scaled_out = scaled_rows(scaled);
  const Windows returns = unscale_windows(scaled, cp.scaler);
  Windows prices;
  for (const auto& r : returns) prices.push_back(returns_to_prices(r, request.p0));

  const fs::path& out = request.out_dir;
  const std::size_t len = cp.arch.seq_len;
  write_text(out / "generated_scaled.csv", csv_text(numbered_header("t", 1, len), scaled_out));
  write_text(out / "generated_returns.csv", csv_text(numbered_header("t", 1, len), returns));
  write_text(out / "generated_prices.csv", csv_text(numbered_header("p", 0, len + 1), prices));

  Windows overlay;
  if (request.real) {
    const Windows windows = make_windows(load_returns(*request.real), len);
    if (windows.empty()) throw DataError("real series too short for one window");
    Rng rng(request.seed);
    overlay.push_back(windows[rng.index(windows.size())]);
  }
  write_text(out / "generated.svg",
             render_svg(paths_plot("Synthetic log returns", returns, overlay)));
}

EvaluateResult cmd_evaluate(const EvaluateRequest& request) {
  const PriceSeries prices = load_csv(request.data);
  const ReturnSeries r = log_returns(prices.closes);
  EvaluateResult result;
  result.returns = r.size();
  result.moments = moments(r);
  const std::size_t lag = std::min(request.max_lag, r.size() - 1);
  result.acf = acf(r, lag);
  result.acf_abs = acf_absolute(r, lag);
  result.qq = qq_normal(r);

  const fs::path& out = request.out_dir;
  write_text(out / "moments.csv", moments_csv({"log_return"}, {result.moments}));
  write_text(out / "qq.csv", qq_csv(result.qq));
  write_text(out / "qq.svg",
             render_svg(qq_plot(result.qq, "QQ plot against the normal", "normal quantiles")));
  write_text(out / "acf.csv", acf_csv({"acf", "acf_abs"}, {result.acf, result.acf_abs}));
  write_text(out / "acf.svg", render_svg(acf_plot(result.acf, "Autocorrelation of log returns")));
  write_text(out / "acf_abs.svg",
             render_svg(acf_plot(result.acf_abs, "Autocorrelation of absolute log returns")));
  const HistogramReport hist = histogram({r}, request.bins, {"log_return"});
  write_text(out / "histogram.csv", histogram_csv(hist));
  write_text(out / "histogram.svg", render_svg(histogram_plot(hist, "Log return distribution")));

  std::string rows = "date,log_return\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    rows += prices.dates[i + 1] + "," + format_real(r[i]) + "\n";
  }
  write_text(out / "returns.csv", rows);
  Plot series;
  series.title = "Daily log returns";
  series.x_label = "day";
  series.y_label = "log return";
  series.notes = {fmt::format("{} returns from {} to {}", r.size(), prices.dates.front(),
                              prices.dates.back())};
  Series s{"", {}, r, kSyntheticColor, Series::Style::kLine};
  for (std::size_t i = 0; i < r.size(); ++i) s.x.push_back(static_cast<double>(i + 1));
  series.series.push_back(std::move(s));
  write_text(out / "returns.svg", render_svg(series));

  write_text(out / "summary.txt",
             fmt::format("prices = {}\ndropped_rows = {}\nreturns = {}\n", prices.closes.size(),
                         prices.dropped_rows, r.size()));
  return result;
}

EvalReport cmd_compare(const CompareRequest& request) {
  if (request.synthetic.has_value() == request.checkpoint.has_value()) {
    throw std::invalid_argument("give exactly one of --synthetic and --checkpoint");
  }
  Windows synthetic;
  if (request.synthetic) {
    synthetic = read_csv_matrix(*request.synthetic);
  } else {
    const Checkpoint cp = load_checkpoint(*request.checkpoint);
    synthetic = unscale_windows(generate(cp.state.generator, cp.arch, request.n, request.seed), cp.scaler);
  }
  if (synthetic.empty()) throw DataError("no synthetic windows");
  const std::size_t len = synthetic.front().size();
  for (const auto& w : synthetic) {
    if (w.size() != len) throw DataError("synthetic windows differ in length");
  }
  const Windows real = make_windows(load_returns(request.real), len, len);
  if (real.empty()) throw DataError("real series too short for one window");

  const EvalReport r = compare_distributions(real, synthetic, request.options);
  const fs::path& out = request.out_dir;
  write_text(out / "moments.csv",
             moments_csv({"real", "synthetic"}, {r.real_moments, r.synthetic_moments}));
  write_text(out / "histogram.csv", histogram_csv(r.histogram));
  Plot h = histogram_plot(r.histogram, "Real and synthetic log returns");
  h.series[0].color = kRealColor;
  h.series[1].color = kSyntheticColor;
  h.notes = {moments_note("real", r.real_moments), moments_note("synthetic", r.synthetic_moments)};
  write_text(out / "histogram.svg", render_svg(h));

  write_text(out / "qq_synthetic_real.csv", qq_csv(r.qq_synthetic_real));
  write_text(out / "qq_synthetic_real.svg",
             render_svg(qq_plot(r.qq_synthetic_real, "Synthetic against real quantiles", "real quantiles")));
  write_text(out / "qq_real_normal.csv", qq_csv(r.qq_real_normal));
  write_text(out / "qq_real_normal.svg",
             render_svg(qq_plot(r.qq_real_normal, "Real against normal", "normal quantiles")));
  write_text(out / "qq_synthetic_normal.csv", qq_csv(r.qq_synthetic_normal));
  write_text(out / "qq_synthetic_normal.svg",
             render_svg(qq_plot(r.qq_synthetic_normal, "Synthetic against normal", "normal quantiles")));

  write_text(out / "acf.csv",
             acf_csv({"real", "real_abs", "synthetic", "synthetic_abs"},
                     {r.real_acf, r.real_acf_abs, r.synthetic_acf, r.synthetic_acf_abs}));
  write_text(out / "acf_real.svg", render_svg(acf_plot(r.real_acf, "Average ACF, real")));
  write_text(out / "acf_real_abs.svg",
             render_svg(acf_plot(r.real_acf_abs, "Average ACF of absolute values, real")));
  write_text(out / "acf_synthetic.svg",
             render_svg(acf_plot(r.synthetic_acf, "Average ACF, synthetic")));
  write_text(out / "acf_synthetic_abs.svg",
             render_svg(acf_plot(r.synthetic_acf_abs, "Average ACF of absolute values, synthetic")));

  double qq_gap = 0.0;
  for (std::size_t i = 0; i < r.qq_synthetic_real.sample.size(); ++i) {
    qq_gap = std::max(qq_gap, std::abs(r.qq_synthetic_real.sample[i] - r.qq_synthetic_real.theoretical[i]));
  }
  write_text(out / "summary.txt",
             fmt::format("real_windows = {}\nsynthetic_windows = {}\nwindow_length = {}\n"
                         "mean_gap = {}\nstd_ratio = {}\nskewness_gap = {}\nkurtosis_gap = {}\n"
                         "qq_max_gap = {}\n",
                         real.size(), synthetic.size(), len,
                         format_real(r.synthetic_moments.mean - r.real_moments.mean),
                         format_real(r.synthetic_moments.std / r.real_moments.std),
                         format_real(r.synthetic_moments.skewness - r.real_moments.skewness),
                         format_real(r.synthetic_moments.kurtosis - r.real_moments.kurtosis),
                         format_real(qq_gap)));
  return r;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic financial return series with a gradient-penalty Wasserstein GAN",
               "tsforge"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train generator and critic on a price file");
  std::string config_path;
  std::string train_out;
  std::string resume;
  train_cmd->add_option("--config", config_path, "key = value settings file");
  train_cmd->add_option("--out", train_out, "run directory");
  train_cmd->add_option("--resume", resume, "continue from this checkpoint");
  std::map<std::string, std::string> overrides;
  for (const auto& key : config_keys()) {
    train_cmd->add_option("--" + key, overrides[key], "override " + key);
  }

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "sample windows from a checkpoint");
  GenerateRequest gen;
  std::string gen_ckpt;
  std::string gen_real;
  std::string gen_out;
  gen_cmd->add_option("--checkpoint", gen_ckpt, "checkpoint file")->required();
  gen_cmd->add_option("--n", gen.n, "number of windows");
  gen_cmd->add_option("--seed", gen.seed, "noise seed");
  gen_cmd->add_option("--p0", gen.p0, "starting price of the integrated paths");
  gen_cmd->add_option("--real", gen_real, "price file; overlays one real window on the plot");
  gen_cmd->add_option("--out", gen_out, "output directory");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "descriptive statistics of one price file");
  EvaluateRequest eval;
  std::string eval_data;
  std::string eval_out;
  eval_cmd->add_option("--data", eval_data, "price file")->required();
  eval_cmd->add_option("--max_lag", eval.max_lag, "largest ACF lag");
  eval_cmd->add_option("--bins", eval.bins, "histogram bins");
  eval_cmd->add_option("--out", eval_out, "output directory");

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "compare real and synthetic return distributions");
  CompareRequest cmp;
  std::string cmp_real;
  std::string cmp_synth;
  std::string cmp_ckpt;
  std::string cmp_out;
  cmp_cmd->add_option("--real", cmp_real, "price file")->required();
  cmp_cmd->add_option("--synthetic", cmp_synth, "generated_returns.csv style file");
  cmp_cmd->add_option("--checkpoint", cmp_ckpt, "sample from this checkpoint instead");
  cmp_cmd->add_option("--n", cmp.n, "windows to sample from the checkpoint");
  cmp_cmd->add_option("--seed", cmp.seed, "noise seed");
  cmp_cmd->add_option("--bins", cmp.options.bins, "histogram bins");
  cmp_cmd->add_option("--max_lag", cmp.options.max_lag, "largest ACF lag");
  cmp_cmd->add_option("--out", cmp_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'tsforge --help' for usage\n";
    return kExitUsage;
  }

  auto out_dir = [](const std::string& given, const std::string& fallback) {
    return given.empty() ? output_root() / fallback : fs::path(given);
  };

  try {
    if (*train_cmd) {
      TrainRequest req;
      if (!config_path.empty()) req.config = load_config(config_path);
      for (const auto& key : config_keys()) {
        if (train_cmd->count("--" + key) > 0) apply_setting(req.config, key, overrides[key]);
      }
      req.config.train.validate();
      if (!resume.empty()) req.resume = resume;
      req.out_dir = out_dir(train_out, fmt::format("train_{}_seed{}", to_string(req.config.train.loss_variant),
                                                   req.config.train.seed));
      cmd_train(req, out);
      out << "wrote " << req.out_dir.string() << "\n";
    } else if (*gen_cmd) {
      gen.checkpoint = gen_ckpt;
      if (!gen_real.empty()) gen.real = gen_real;
      gen.out_dir = out_dir(gen_out, fmt::format("generate_seed{}", gen.seed));
      cmd_generate(gen);
      out << "wrote " << gen.out_dir.string() << "\n";
    } else if (*eval_cmd) {
      eval.data = eval_data;
      eval.out_dir = out_dir(eval_out, "evaluate_" + fs::path(eval_data).stem().string());
      const EvaluateResult r = cmd_evaluate(eval);
      out << fmt::format("{} log returns, skewness {:.4f}, kurtosis {:.4f}\n", r.returns,
                         r.moments.skewness, r.moments.kurtosis);
      out << "wrote " << eval.out_dir.string() << "\n";
    } else if (*cmp_cmd) {
      cmp.real = cmp_real;
      if (!cmp_synth.empty()) cmp.synthetic = cmp_synth;
      if (!cmp_ckpt.empty()) cmp.checkpoint = cmp_ckpt;
      cmp.out_dir = out_dir(cmp_out, "compare_" + fs::path(cmp_real).stem().string());
      cmd_compare(cmp);
      out << "wrote " << cmp.out_dir.string() << "\n";
    }
  } catch (const NumericAbort& e) {
    err << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const StatsError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace tsforge
