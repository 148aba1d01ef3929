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

#ifndef TSFLOW_COMMANDS_HPP_
#define TSFLOW_COMMANDS_HPP_

// The CLI commands as library functions. Each validates first and only then
// creates `output_dir`; every file written is listed in manifest.json with
// its SHA-256.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tsflow/config.hpp"
#include "tsflow/data.hpp"
#include "tsflow/sampling.hpp"

namespace tsflow::cli {

struct ForecastArgs {
  std::filesystem::path checkpoint;
  data::Split split = data::Split::kTest;
  int n_samples = 0;  // 0: sampler.n_samples
  std::optional<sampling::ForecastMode> mode;  // default from the model
};

struct SampleArgs {
  std::filesystem::path checkpoint;
  int n = 10000;
};

struct W2Args {
  std::filesystem::path samples;
  std::filesystem::path reference;  // empty: real training windows
  int batch = 256;
};

struct LpsArgs {
  std::filesystem::path samples;
};

struct WstudyArgs {
  std::vector<std::string> kernels = {"isotropic", "se", "ou", "pe"};
  std::vector<int> multiples = {1, 2, 4};
  int batch = 64;
  int trials = 16;
};

// Paths of the files written, relative to output_dir.
using Written = std::vector<std::string>;

Written cmd_train(const config::RunConfig& cfg);
Written cmd_forecast(const config::RunConfig& cfg, const ForecastArgs& args);
Written cmd_sample(const config::RunConfig& cfg, const SampleArgs& args);
Written cmd_eval_w2(const config::RunConfig& cfg, const W2Args& args);
Written cmd_eval_lps(const config::RunConfig& cfg, const LpsArgs& args);
Written cmd_eval_wstudy(const config::RunConfig& cfg, const WstudyArgs& args);
Written cmd_synth(const config::RunConfig& cfg, data::FileFormat format);

// Rows of a samples file ("sample_idx,v0,v1,..."), one sequence per row.
Eigen::MatrixXd read_samples_csv(const std::filesystem::path& path);

// Full command-line entry point; returns the process exit code
// (0 success, 1 validation error, 2 runtime failure).
int run_cli(int argc, char** argv);

}  // namespace tsflow::cli

#endif  // TSFLOW_COMMANDS_HPP_
