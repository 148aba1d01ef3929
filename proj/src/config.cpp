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

#include "tsflow/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "tsflow/error.hpp"

namespace tsflow::config {

namespace {

using Errors = std::vector<std::string>;
using Setter = std::function<void(const YAML::Node&, RunConfig&)>;

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw ValidationError("expected " + what);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError("expected " + what + ", got '" + n.Scalar() + "'");
  }
}

int as_int(const YAML::Node& n) { return scalar<int>(n, "an integer"); }
double as_double(const YAML::Node& n) { return scalar<double>(n, "a number"); }
bool as_bool(const YAML::Node& n) { return scalar<bool>(n, "true/false"); }
std::string as_str(const YAML::Node& n) {
  return scalar<std::string>(n, "a string");
}
std::uint64_t as_u64(const YAML::Node& n) {
  return scalar<std::uint64_t>(n, "a non-negative integer");
}
std::vector<int> as_int_list(const YAML::Node& n) {
  if (n.IsNull()) return {};
  if (!n.IsSequence()) throw ValidationError("expected a list of integers");
  std::vector<int> out;
  for (const auto& e : n) out.push_back(as_int(e));
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](auto& n, auto& c) { c.seed = as_u64(n); }},
      {"output_dir", [](auto& n, auto& c) { c.output_dir = as_str(n); }},

      {"dataset.source", [](auto& n, auto& c) { c.dataset.source = as_str(n); }},
      {"dataset.path", [](auto& n, auto& c) { c.dataset.path = as_str(n); }},
      {"dataset.format", [](auto& n, auto& c) { c.dataset.format = as_str(n); }},
      {"dataset.period", [](auto& n, auto& c) { c.dataset.period = as_int(n); }},
      {"dataset.context_len",
       [](auto& n, auto& c) { c.dataset.context_len = as_int(n); }},
      {"dataset.pred_len",
       [](auto& n, auto& c) { c.dataset.pred_len = as_int(n); }},
      {"dataset.normalization",
       [](auto& n, auto& c) {
         c.dataset.normalization = data::parse_norm_kind(as_str(n));
       }},
      {"dataset.norm_scope",
       [](auto& n, auto& c) {
         c.dataset.norm_scope = data::parse_norm_scope(as_str(n));
       }},

      {"synthetic.kind",
       [](auto& n, auto& c) {
         c.synthetic.kind = data::parse_synthetic_kind(as_str(n));
       }},
      {"synthetic.n_series",
       [](auto& n, auto& c) { c.synthetic.n_series = as_int(n); }},
      {"synthetic.length",
       [](auto& n, auto& c) { c.synthetic.length = as_int(n); }},
      {"synthetic.noise_std",
       [](auto& n, auto& c) { c.synthetic.noise_std = as_double(n); }},
      {"synthetic.length_scale",
       [](auto& n, auto& c) { c.synthetic.length_scale = as_double(n); }},
      {"synthetic.seed",
       [](auto& n, auto& c) { c.synthetic.seed = as_u64(n); }},

      {"model.conditional",
       [](auto& n, auto& c) { c.model.conditional = as_bool(n); }},
      {"model.hidden_dim",
       [](auto& n, auto& c) { c.model.hidden_dim = as_int(n); }},
      {"model.num_blocks",
       [](auto& n, auto& c) { c.model.num_blocks = as_int(n); }},
      {"model.time_embed_dim",
       [](auto& n, auto& c) { c.model.time_embed_dim = as_int(n); }},
      {"model.time_scale",
       [](auto& n, auto& c) { c.model.time_scale = as_double(n); }},
      {"model.activation",
       [](auto& n, auto& c) { c.model.activation = as_str(n); }},
      {"model.lags", [](auto& n, auto& c) { c.model.lags = as_int_list(n); }},

      {"kernel.kind",
       [](auto& n, auto& c) { c.kernel.kind = gp::parse_kernel_kind(as_str(n)); }},
      {"kernel.length_scale",
       [](auto& n, auto& c) { c.kernel.length_scale = as_double(n); }},
      {"kernel.white_noise",
       [](auto& n, auto& c) { c.kernel.white_noise = as_double(n); }},

      {"train.epochs", [](auto& n, auto& c) { c.train.epochs = as_int(n); }},
      {"train.batch_size",
       [](auto& n, auto& c) { c.train.batch_size = as_int(n); }},
      {"train.batches_per_epoch",
       [](auto& n, auto& c) { c.train.batches_per_epoch = as_int(n); }},
      {"train.sigma_min",
       [](auto& n, auto& c) { c.train.sigma_min = as_double(n); }},
      {"train.coupling",
       [](auto& n, auto& c) { c.train.coupling = cfm::parse_coupling(as_str(n)); }},
      {"train.learning_rate",
       [](auto& n, auto& c) { c.train.learning_rate = as_double(n); }},
      {"train.clip_threshold",
       [](auto& n, auto& c) { c.train.clip_threshold = as_double(n); }},
      {"train.ema_momentum",
       [](auto& n, auto& c) { c.train.ema_momentum = as_double(n); }},
      {"train.window_stride",
       [](auto& n, auto& c) { c.train.window_stride = as_int(n); }},
      {"train.val_every",
       [](auto& n, auto& c) { c.train.val_every = as_int(n); }},
      {"train.val_samples",
       [](auto& n, auto& c) { c.train.val_samples = as_int(n); }},

      {"sampler.ode_steps",
       [](auto& n, auto& c) { c.sampler.ode_steps = as_int(n); }},
      {"sampler.n_samples",
       [](auto& n, auto& c) { c.sampler.n_samples = as_int(n); }},
      {"sampler.langevin.iterations",
       [](auto& n, auto& c) { c.sampler.langevin.iterations = as_int(n); }},
      {"sampler.langevin.step_size",
       [](auto& n, auto& c) { c.sampler.langevin.step_size = as_double(n); }},
      {"sampler.langevin.noise_scale",
       [](auto& n, auto& c) { c.sampler.langevin.noise_scale = as_double(n); }},
      {"sampler.langevin.inner_ode_steps",
       [](auto& n, auto& c) { c.sampler.langevin.inner_ode_steps = as_int(n); }},
      {"sampler.guidance.scale",
       [](auto& n, auto& c) { c.sampler.guidance.scale = as_double(n); }},
      {"sampler.guidance.kappa",
       [](auto& n, auto& c) {
         // "uniform" or a fixed level.
         if (n.IsScalar() && n.Scalar() == "uniform") {
           c.sampler.guidance.kappa_uniform = true;
         } else {
           c.sampler.guidance.kappa_uniform = false;
           c.sampler.guidance.kappa = as_double(n);
         }
       }},
      {"sampler.guidance.kappa_min",
       [](auto& n, auto& c) { c.sampler.guidance.kappa_min = as_double(n); }},
      {"sampler.guidance.kappa_max",
       [](auto& n, auto& c) { c.sampler.guidance.kappa_max = as_double(n); }},
  };
  return table;
}

// Leaves of the document as "a.b.c" -> node.
void flatten(const YAML::Node& node, const std::string& prefix,
             std::map<std::string, YAML::Node>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (!prefix.empty()) {
    out[prefix] = node;
  }
}

void check(Errors& errs, bool ok, const std::string& msg) {
  if (!ok) errs.push_back(msg);
}

template <typename F>
void collect(Errors& errs, const std::string& section, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    // "<name> config: a ...; b ...;" becomes one "section.a ..." entry each.
    const std::string msg = e.what();
    const auto colon = msg.find(" config:");
    if (colon == std::string::npos) {
      errs.push_back(msg);
      return;
    }
    std::istringstream items(msg.substr(colon + 8));
    for (std::string item; std::getline(items, item, ';');) {
      const auto start = item.find_first_not_of(' ');
      if (start != std::string::npos)
        errs.push_back(section + "." + item.substr(start));
    }
  }
}

}  // namespace

RunConfig resolve_config(const std::string& yaml_text,
                         const std::vector<Override>& overrides,
                         const char* env_seed) {
  std::map<std::string, YAML::Node> entries;
  try {
    const YAML::Node root = YAML::Load(yaml_text);
    if (!root.IsNull() && !root.IsMap())
      throw ValidationError("config: top level must be a mapping");
    flatten(root, "", entries);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.mark.line + 1, std::string("config: ") + e.msg);
  }
  for (const auto& [key, value] : overrides) {
    try {
      entries[key] = YAML::Load(value);
    } catch (const YAML::ParserException& e) {
      throw ValidationError(key + ": cannot parse override '" + value + "'");
    }
  }

  RunConfig cfg;
  Errors errs;
  const auto& table = setters();
  for (const auto& [key, node] : entries) {
    const auto it = table.find(key);
    if (it == table.end()) {
      errs.push_back(key + ": unknown key");
      continue;
    }
    try {
      it->second(node, cfg);
    } catch (const ValidationError& e) {
      errs.push_back(key + ": " + e.what());
    }
  }
  if (env_seed && *env_seed) {
    try {
      cfg.seed = YAML::Load(env_seed).as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      errs.push_back(std::string("TSFLOW_SEED: not an integer: ") + env_seed);
    }
  }

  // Defaults that depend on other fields.
  const bool cond = cfg.model.conditional;
  if (!entries.count("kernel.length_scale"))
    cfg.kernel.length_scale = gp::default_length_scale(cfg.kernel.kind);
  if (!entries.count("train.epochs"))
    cfg.train.epochs = cfm::TrainConfig::default_epochs(cond);
  if (!entries.count("train.coupling"))
    cfg.train.coupling = cond ? cfm::Coupling::kGpr : cfm::Coupling::kOt;

  cfg.model.seq_len = cfg.dataset.context_len + cfg.dataset.pred_len;
  cfg.synthetic.period = cfg.dataset.period;
  cfg.synthetic.context_len = cfg.dataset.context_len;
  cfg.synthetic.pred_len = cfg.dataset.pred_len;
  cfg.train.seed = cfg.seed;
  cfg.train.prior = cfg.kernel;

  const auto& ds = cfg.dataset;
  if (ds.source == "file") {
    if (ds.path.empty()) {
      errs.push_back("dataset.path: required when dataset.source is 'file'");
    } else if (!std::filesystem::exists(ds.path)) {
      errs.push_back("dataset.path: file not found: " + ds.path);
    }
    if (!ds.format.empty())
      collect(errs, "dataset", [&] { data::parse_format(ds.format); });
  } else if (ds.source == "synthetic") {
    const auto& s = cfg.synthetic;
    check(errs, s.n_series >= 1, "synthetic.n_series: must be >= 1");
    check(errs, s.noise_std >= 0.0, "synthetic.noise_std: must be >= 0");
    check(errs, s.length_scale > 0.0, "synthetic.length_scale: must be > 0");
    check(errs, s.length >= ds.context_len + 3 * ds.pred_len,
          "synthetic.length: must be >= context_len + 3*pred_len = " +
              std::to_string(ds.context_len + 3 * ds.pred_len));
  } else {
    errs.push_back("dataset.source: must be 'file' or 'synthetic', got '" +
                   ds.source + "'");
  }
  check(errs, ds.period >= 1, "dataset.period: must be >= 1");
  check(errs, ds.context_len >= 1, "dataset.context_len: must be >= 1");
  check(errs, ds.pred_len >= 1, "dataset.pred_len: must be >= 1");
  check(errs, !cfg.output_dir.empty(), "output_dir: must not be empty");
  if (ds.context_len >= 1 && ds.pred_len >= 1)
    collect(errs, "model", [&] { cfg.model.validate(); });
  collect(errs, "kernel", [&] { cfg.kernel.validate(); });
  collect(errs, "train", [&] { cfg.train.validate(cond); });
  collect(errs, "sampler", [&] { cfg.sampler.validate(); });

  if (!errs.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(errs.size()) +
                      (errs.size() == 1 ? " error):" : " errors):");
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ValidationError(msg);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<Override>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return resolve_config(text, overrides, std::getenv("TSFLOW_SEED"));
}

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter out;
  auto num = [](double v) { return fmt_double(v); };
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "output_dir" << YAML::Value << c.output_dir.string();

  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "source" << YAML::Value << c.dataset.source;
  out << YAML::Key << "path" << YAML::Value << c.dataset.path;
  out << YAML::Key << "format" << YAML::Value << c.dataset.format;
  out << YAML::Key << "period" << YAML::Value << c.dataset.period;
  out << YAML::Key << "context_len" << YAML::Value << c.dataset.context_len;
  out << YAML::Key << "pred_len" << YAML::Value << c.dataset.pred_len;
  out << YAML::Key << "normalization" << YAML::Value
      << std::string(data::to_string(c.dataset.normalization));
  out << YAML::Key << "norm_scope" << YAML::Value
      << std::string(data::to_string(c.dataset.norm_scope));
  out << YAML::EndMap;

  out << YAML::Key << "synthetic" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value
      << std::string(data::to_string(c.synthetic.kind));
  out << YAML::Key << "n_series" << YAML::Value << c.synthetic.n_series;
  out << YAML::Key << "length" << YAML::Value << c.synthetic.length;
  out << YAML::Key << "noise_std" << YAML::Value << num(c.synthetic.noise_std);
  out << YAML::Key << "length_scale" << YAML::Value
      << num(c.synthetic.length_scale);
  out << YAML::Key << "seed" << YAML::Value << c.synthetic.seed;
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "conditional" << YAML::Value << c.model.conditional;
  out << YAML::Key << "hidden_dim" << YAML::Value << c.model.hidden_dim;
  out << YAML::Key << "num_blocks" << YAML::Value << c.model.num_blocks;
  out << YAML::Key << "time_embed_dim" << YAML::Value << c.model.time_embed_dim;
  out << YAML::Key << "time_scale" << YAML::Value << num(c.model.time_scale);
  out << YAML::Key << "activation" << YAML::Value << c.model.activation;
  out << YAML::Key << "lags" << YAML::Value << YAML::Flow << c.model.lags;
  out << YAML::EndMap;

  out << YAML::Key << "kernel" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value
      << std::string(gp::to_string(c.kernel.kind));
  out << YAML::Key << "length_scale" << YAML::Value
      << num(c.kernel.length_scale);
  out << YAML::Key << "white_noise" << YAML::Value << num(c.kernel.white_noise);
  out << YAML::EndMap;

  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epochs" << YAML::Value << c.train.epochs;
  out << YAML::Key << "batch_size" << YAML::Value << c.train.batch_size;
  out << YAML::Key << "batches_per_epoch" << YAML::Value
      << c.train.batches_per_epoch;
  out << YAML::Key << "sigma_min" << YAML::Value << num(c.train.sigma_min);
  out << YAML::Key << "coupling" << YAML::Value
      << std::string(cfm::to_string(c.train.coupling));
  out << YAML::Key << "learning_rate" << YAML::Value
      << num(c.train.learning_rate);
  out << YAML::Key << "clip_threshold" << YAML::Value
      << num(c.train.clip_threshold);
  out << YAML::Key << "ema_momentum" << YAML::Value
      << num(c.train.ema_momentum);
  out << YAML::Key << "window_stride" << YAML::Value << c.train.window_stride;
  out << YAML::Key << "val_every" << YAML::Value << c.train.val_every;
  out << YAML::Key << "val_samples" << YAML::Value << c.train.val_samples;
  out << YAML::EndMap;

  const auto& s = c.sampler;
  out << YAML::Key << "sampler" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "ode_steps" << YAML::Value << s.ode_steps;
  out << YAML::Key << "n_samples" << YAML::Value << s.n_samples;
  out << YAML::Key << "langevin" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "iterations" << YAML::Value << s.langevin.iterations;
  out << YAML::Key << "step_size" << YAML::Value << num(s.langevin.step_size);
  out << YAML::Key << "noise_scale" << YAML::Value
      << num(s.langevin.noise_scale);
  out << YAML::Key << "inner_ode_steps" << YAML::Value
      << s.langevin.inner_ode_steps;
  out << YAML::EndMap;
  out << YAML::Key << "guidance" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "scale" << YAML::Value << num(s.guidance.scale);
  out << YAML::Key << "kappa" << YAML::Value
      << (s.guidance.kappa_uniform ? std::string("uniform")
                                   : num(s.guidance.kappa));
  out << YAML::Key << "kappa_min" << YAML::Value << num(s.guidance.kappa_min);
  out << YAML::Key << "kappa_max" << YAML::Value << num(s.guidance.kappa_max);
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

data::Dataset build_dataset(const RunConfig& c) {
  const auto& ds = c.dataset;
  if (ds.source == "synthetic") return data::gen_synthetic(c.synthetic);
  const data::FileFormat fmt = ds.format.empty()
                                   ? data::format_from_extension(ds.path)
                                   : data::parse_format(ds.format);
  return data::load_dataset(ds.path, fmt, ds.period, ds.context_len,
                            ds.pred_len);
}

}  // namespace tsflow::config
