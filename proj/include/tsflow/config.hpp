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

#ifndef TSFLOW_CONFIG_HPP_
#define TSFLOW_CONFIG_HPP_

// Run configuration: a YAML document with one mapping per section, plus
// `--section.key value` overrides from the command line. Every field has a
// default; `resolve_config` reports all problems at once.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsflow/cfm.hpp"
#include "tsflow/data.hpp"
#include "tsflow/gp.hpp"
#include "tsflow/net.hpp"
#include "tsflow/sampling.hpp"

namespace tsflow::config {

struct DatasetSection {
  std::string source = "synthetic";  // file | synthetic
  std::string path;
  std::string format;  // csv | jsonl; empty = from the file extension
  int period = 24;
  int context_len = 24;
  int pred_len = 24;
  data::NormKind normalization = data::NormKind::kFreqZscore;
  data::NormScope norm_scope = data::NormScope::kSeries;
};

struct RunConfig {
  DatasetSection dataset;
  data::SyntheticSpec synthetic;  // period / C / P are taken from `dataset`
  net::ModelConfig model;
  gp::KernelSpec kernel;
  cfm::TrainConfig train;
  sampling::SamplerConfig sampler;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "runs/default";
};

using Override = std::pair<std::string, std::string>;  // "section.key", value

// Parses `yaml_text` (may be empty), applies overrides, then TSFLOW_SEED when
// set, and validates. Throws ValidationError listing every violation.
RunConfig resolve_config(const std::string& yaml_text,
                         const std::vector<Override>& overrides,
                         const char* env_seed = nullptr);
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<Override>& overrides);

// Fully resolved YAML; feeding it back through resolve_config reproduces the
// same RunConfig.
std::string to_yaml(const RunConfig& config);

// Builds the dataset described by the config (loading or generating).
data::Dataset build_dataset(const RunConfig& config);

}  // namespace tsflow::config

#endif  // TSFLOW_CONFIG_HPP_
