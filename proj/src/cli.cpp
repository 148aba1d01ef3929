// Copyright 2026 The tsflow Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tsflow/commands.hpp"
#include "tsflow/error.hpp"

namespace tsflow::cli {

namespace {

// Leftover "--section.key value" / "--section.key=value" pairs.
std::vector<config::Override> parse_overrides(std::vector<std::string> rest) {
  std::vector<config::Override> out;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const std::string& a = rest[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3)
      throw ValidationError("unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= rest.size())
      throw ValidationError("override --" + key + " needs a value");
    out.emplace_back(key, rest[++i]);
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"tsflow: flow matching for time series with Gaussian-process "
               "priors"};
  app.require_subcommand(1);
  std::string config_path;
  bool quiet = false;

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Run config (YAML)");
    sub->add_flag("-q,--quiet", quiet, "Only log warnings and errors");
    sub->allow_extras();
    sub->footer("Any config key can be overridden as --section.key value.");
  };

  auto* train = app.add_subcommand("train", "Train a model");
  with_config(train);

  ForecastArgs fa;
  std::string split = "test", mode;
  auto* forecast = app.add_subcommand("forecast", "Forecast every window of a split");
  with_config(forecast);
  forecast->add_option("--checkpoint", fa.checkpoint)->required();
  forecast->add_option("--split", split, "train | val | test");
  forecast->add_option("--n-samples", fa.n_samples, "Default: sampler.n_samples");
  forecast->add_option("--mode", mode, "cond-direct | uncond-cps-guided");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Unconditional generation");
  with_config(sample);
  sample->add_option("--checkpoint", sa.checkpoint)->required();
  sample->add_option("-n,--n", sa.n, "Number of sequences");

  auto* eval = app.add_subcommand("eval", "Evaluation reports");
  eval->require_subcommand(1);
  W2Args wa;
  auto* w2 = eval->add_subcommand("w2", "Mini-batch 2-Wasserstein distance");
  with_config(w2);
  w2->add_option("--samples", wa.samples)->required();
  w2->add_option("--reference", wa.reference,
                 "Second samples file (default: real training windows)");
  w2->add_option("--batch", wa.batch);
  LpsArgs la;
  auto* lps = eval->add_subcommand("lps", "Linear predictive score");
  with_config(lps);
  lps->add_option("--samples", la.samples)->required();
  WstudyArgs ws;
  std::string kernels, multiples;
  auto* wstudy = eval->add_subcommand("wstudy", "Prior-vs-data Wasserstein study");
  with_config(wstudy);
  wstudy->add_option("--kernels", kernels, "Comma-separated kernel kinds");
  wstudy->add_option("--multiples", multiples, "Comma-separated period multiples");
  wstudy->add_option("--batch", ws.batch);
  wstudy->add_option("--trials", ws.trials);

  std::string format = "csv";
  auto* synth = app.add_subcommand("synth", "Write the synthetic dataset");
  with_config(synth);
  synth->add_option("--format", format, "csv | jsonl");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (cmd == eval) cmd = eval->get_subcommands().front();
    const config::RunConfig cfg =
        config::load_config(config_path, parse_overrides(cmd->remaining()));
    Written files;
    if (cmd == train) {
      files = cmd_train(cfg);
    } else if (cmd == forecast) {
      fa.split = data::parse_split(split);
      if (!mode.empty()) fa.mode = sampling::parse_forecast_mode(mode);
      files = cmd_forecast(cfg, fa);
    } else if (cmd == sample) {
      files = cmd_sample(cfg, sa);
    } else if (cmd == w2) {
      files = cmd_eval_w2(cfg, wa);
    } else if (cmd == lps) {
      files = cmd_eval_lps(cfg, la);
    } else if (cmd == wstudy) {
      if (!kernels.empty()) ws.kernels = split_list(kernels);
      if (!multiples.empty()) {
        ws.multiples.clear();
        for (const auto& m : split_list(multiples)) ws.multiples.push_back(std::stoi(m));
      }
      files = cmd_eval_wstudy(cfg, ws);
    } else if (cmd == synth) {
      files = cmd_synth(cfg, data::parse_format(format));
    }
    for (const auto& f : files)
      std::cout << (cfg.output_dir / f).string() << "\n";
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad number: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace tsflow::cli
