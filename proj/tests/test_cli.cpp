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

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "synthetic.hpp"
#include "tsforge/commands.hpp"
#include "tsforge/report.hpp"

using namespace tsforge;
using namespace tsforge::testing;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "tsforge_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    write_price_csv(d / "prices.csv", synthetic_prices(2416, 3));
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tsforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string prices() { return (workdir() / "prices.csv").string(); }
std::string at(const std::string& name) { return (workdir() / name).string(); }

// Small but complete runs: window length 50 as in the defaults, tiny network.
std::vector<std::string> small_train(const std::string& out, const std::string& epochs) {
  return {"train",          "--data",       prices(), "--epochs",     epochs, "--lstm_units", "4",
          "--batch_size",   "8",            "--n_critic", "2",        "--seed", "7",
          "--checkpoint_every", "5",        "--out",  at(out)};
}

}  // namespace

TEST_CASE("train writes a complete, reproducible run directory") {
  const Outcome a = cli(small_train("run_a", "10"));
  REQUIRE_MESSAGE(a.code == kExitOk, a.err);
  const Outcome b = cli(small_train("run_b", "10"));
  REQUIRE(b.code == kExitOk);
  const fs::path run = at("run_a");
  for (const char* f : {"config.txt", "loss.csv", "loss.svg", "final.ckpt", "summary.txt",
                        "checkpoints/epoch_5.ckpt", "checkpoints/epoch_10.ckpt",
                        "samples/epoch_5/samples.csv", "samples/epoch_5/samples.svg",
                        "samples/epoch_10/moments.csv", "samples/epoch_10/histogram.svg"}) {
    CHECK_MESSAGE(fs::exists(run / f), f);
  }
  CHECK(slurp(run / "loss.csv") == slurp(at("run_b") + "/loss.csv"));
  CHECK(slurp(run / "samples/epoch_10/histogram.svg") ==
        slurp(at("run_b") + "/samples/epoch_10/histogram.svg"));
  const auto rows = read_csv_matrix(run / "loss.csv");
  CHECK(rows.size() == 10);
  CHECK(rows.back()[0] == 10.0);

  // The snapshot alone reproduces the run.
  const Outcome c = cli({"train", "--config", (run / "config.txt").string(), "--out", at("run_c")});
  REQUIRE(c.code == kExitOk);
  CHECK(slurp(run / "loss.csv") == slurp(at("run_c") + "/loss.csv"));
}

TEST_CASE("resuming from a checkpoint file matches a straight run") {
  const Outcome straight = cli(small_train("straight", "10"));
  REQUIRE(straight.code == kExitOk);
  auto first = small_train("first", "5");
  REQUIRE(cli(first).code == kExitOk);
  auto second = small_train("second", "10");
  second.push_back("--resume");
  second.push_back(at("first") + "/final.ckpt");
  const Outcome resumed = cli(second);
  REQUIRE_MESSAGE(resumed.code == kExitOk, resumed.err);
  CHECK(slurp(at("straight") + "/loss.csv") == slurp(at("second") + "/loss.csv"));
  CHECK(slurp(at("straight") + "/final.ckpt") == slurp(at("second") + "/final.ckpt"));
}

TEST_CASE("flags override the config file which overrides defaults") {
  std::ofstream(at("file.cfg")) << "lambda = 10\nepochs = 2\nlstm_units = 4\nbatch_size = 8\n";
  const Outcome r = cli({"train", "--config", at("file.cfg"), "--data", prices(), "--lambda", "0",
                         "--out", at("override")});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  const std::string snapshot = slurp(at("override") + "/config.txt");
  CHECK(snapshot.find("lambda = 0\n") != std::string::npos);
  CHECK(snapshot.find("epochs = 2\n") != std::string::npos);
  CHECK(snapshot.find("n_critic = 5\n") != std::string::npos);
  CHECK(snapshot.find("learning_rate = 5e-05\n") != std::string::npos);
}

TEST_CASE("generate") {
  REQUIRE(cli(small_train("gen_src", "2")).code == kExitOk);
  const std::string ckpt = at("gen_src") + "/final.ckpt";
  const Outcome a = cli({"generate", "--checkpoint", ckpt, "--n", "6", "--seed", "4", "--real",
                         prices(), "--out", at("gen_a")});
  REQUIRE_MESSAGE(a.code == kExitOk, a.err);
  REQUIRE(cli({"generate", "--checkpoint", ckpt, "--n", "6", "--seed", "4", "--out", at("gen_b")})
              .code == kExitOk);
  const auto returns = read_csv_matrix(at("gen_a") + "/generated_returns.csv");
  REQUIRE(returns.size() == 6);
  CHECK(returns[0].size() == 50);
  const auto priced = read_csv_matrix(at("gen_a") + "/generated_prices.csv");
  CHECK(priced[0].size() == 51);
  CHECK(priced[0][0] == 100.0);
  CHECK(slurp(at("gen_a") + "/generated_returns.csv") == slurp(at("gen_b") + "/generated_returns.csv"));
  CHECK(slurp(at("gen_a") + "/generated.svg").find("#d62728") != std::string::npos);

  std::string bytes = slurp(ckpt);
  bytes[0] = 'Z';
  std::ofstream(at("corrupt.ckpt"), std::ios::binary) << bytes;
  const Outcome bad = cli({"generate", "--checkpoint", at("corrupt.ckpt"), "--out", at("gen_c")});
  CHECK(bad.code == kExitData);
  CHECK(bad.err.find("magic") != std::string::npos);
}

TEST_CASE("evaluate") {
  const Outcome r = cli({"evaluate", "--data", prices(), "--out", at("eval")});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(r.out.find("2415 log returns") != std::string::npos);
  const std::string moments = slurp(at("eval") + "/moments.csv");
  CHECK(moments.rfind("statistic,log_return\ncount,2415\nmean,", 0) == 0);
  for (const char* row : {"\nstd,", "\nmin,", "\n25%,", "\n50%,", "\n75%,", "\nmax,", "\nskewness,",
                          "\nkurtosis,"}) {
    CHECK(moments.find(row) != std::string::npos);
  }
  CHECK(slurp(at("eval") + "/acf.csv").rfind("lag,acf,acf_abs,acf_band,acf_abs_band\n", 0) == 0);
  CHECK(read_csv_matrix(at("eval") + "/acf.csv").size() == 51);
  CHECK(read_csv_matrix(at("eval") + "/qq.csv").size() == 2415);
  for (const char* f : {"qq.svg", "acf.svg", "acf_abs.svg", "returns.svg", "returns.csv"}) {
    CHECK_MESSAGE(fs::exists(at("eval") + "/" + f), f);
  }

  write_price_csv(at("flat.csv"), std::vector<double>(100, 50.0));
  const Outcome flat = cli({"evaluate", "--data", at("flat.csv"), "--out", at("eval_flat")});
  CHECK(flat.code == kExitData);
  CHECK_FALSE(flat.err.empty());
}

TEST_CASE("compare real against itself") {
  const ReturnSeries r = log_returns(synthetic_prices(2416, 3));
  write_text(at("self.csv"), csv_text({"a"}, make_windows(r, 50, 50)));
  const Outcome c = cli({"compare", "--real", prices(), "--synthetic", at("self.csv"), "--out", at("cmp_self")});
  REQUIRE_MESSAGE(c.code == kExitOk, c.err);
  for (const auto& row : read_csv_matrix(at("cmp_self") + "/qq_synthetic_real.csv")) {
    CHECK(row[0] == row[1]);
  }
  for (const auto& row : read_csv_matrix(at("cmp_self") + "/acf.csv")) {
    CHECK(row[1] == row[3]);
    CHECK(row[2] == row[4]);
  }
  const std::string summary = slurp(at("cmp_self") + "/summary.txt");
  CHECK(summary.find("mean_gap = 0\n") != std::string::npos);
  CHECK(summary.find("kurtosis_gap = 0\n") != std::string::npos);
}

TEST_CASE("compare an untrained checkpoint") {
  REQUIRE(cli(small_train("untrained", "1")).code == kExitOk);
  const Outcome c = cli({"compare", "--real", prices(), "--checkpoint", at("untrained") + "/final.ckpt",
                         "--n", "64", "--out", at("cmp_ckpt")});
  REQUIRE_MESSAGE(c.code == kExitOk, c.err);
  for (const char* f : {"acf_real.svg", "acf_real_abs.svg", "acf_synthetic.svg", "acf_synthetic_abs.svg",
                        "histogram.svg", "qq_synthetic_real.svg", "moments.csv"}) {
    CHECK_MESSAGE(fs::exists(at("cmp_ckpt") + "/" + f), f);
  }
  CHECK(slurp(at("cmp_ckpt") + "/histogram.svg").find("kurtosis") != std::string::npos);
  const Outcome both = cli({"compare", "--real", prices(), "--checkpoint", at("untrained") + "/final.ckpt",
                            "--synthetic", at("self.csv")});
  CHECK(both.code == kExitUsage);
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"train", "--epochs", "-1", "--data", prices()}).code == kExitUsage);
  CHECK(cli({"train", "--epochs", "2", "--no_such_flag", "1"}).code == kExitUsage);
  CHECK(cli({"train", "--data", at("missing.csv"), "--out", at("missing")}).code == kExitData);
  CHECK(cli({"--help"}).code == kExitOk);

  auto exploding = small_train("exploding", "3");
  exploding.insert(exploding.end(), {"--learning_rate", "1e308"});
  const Outcome boom = cli(exploding);
  CHECK(boom.code == kExitNumeric);
  CHECK(fs::exists(at("exploding") + "/crash.ckpt"));
}

TEST_CASE("output root comes from the environment") {
  setenv("TSFORGE_OUT", at("env_root").c_str(), 1);
  const Outcome r = cli({"evaluate", "--data", prices()});
  unsetenv("TSFORGE_OUT");
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(at("env_root") + "/evaluate_prices/moments.csv"));
  CHECK(output_root() == fs::path("runs"));
}
