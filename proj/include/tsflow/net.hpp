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

#ifndef TSFLOW_NET_HPP_
#define TSFLOW_NET_HPP_

// The learned vector field u(t, x[, c]): a residual MLP over the whole
// window with hand-written backward pass, Adam with global-norm clipping,
// an EMA shadow copy, and a checksummed checkpoint format.
//
// Batches are column-major: x is [L x B], one window per column.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace tsflow::net {

inline constexpr double kDefaultEmaMomentum = 0.9999;

struct ModelConfig {
  int seq_len = 48;  // L
  int hidden_dim = 64;
  int num_blocks = 3;
  int time_embed_dim = 64;
  double time_scale = 100.0;
  bool conditional = false;
  // Lag offsets appended to the condition, one L-long block per lag.
  std::vector<int> lags;
  std::string activation = "gelu";

  // (y_p padded to L) | mask | lag blocks.
  int cond_dim() const {
    return conditional ? seq_len * (2 + static_cast<int>(lags.size())) : 0;
  }
  int input_dim() const { return seq_len + time_embed_dim + cond_dim(); }
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Entry 2k = sin(t w_k), 2k+1 = cos(t w_k), w_k = scale * 10000^(-2k/dim).
Eigen::VectorXd time_embed(double t, int dim, double scale = 100.0);

// Offsets of each tensor inside the flat parameter vector, in declaration
// order: in.W, in.b, blocks[k].{W1, b1, W2, b2}, out.W, out.b. Weights are
// column-major [out x in].
struct ParamLayout {
  struct Block {
    Eigen::Index w1, b1, w2, b2;
  };
  Eigen::Index in_w = 0, in_b = 0;
  std::vector<Block> blocks;
  Eigen::Index out_w = 0, out_b = 0;
  Eigen::Index total = 0;

  explicit ParamLayout(const ModelConfig& config);
};

struct VectorFieldModel {
  ModelConfig config;
  Eigen::VectorXd params;
  Eigen::VectorXd ema;
  double ema_momentum = kDefaultEmaMomentum;
};

// Hidden layers ~ N(0, 1/fan_in), biases zero. The output projection is zero
// unless `zero_output` is false, so a fresh model is the zero field.
VectorFieldModel init_model(const ModelConfig& config, std::uint64_t seed,
                            bool zero_output = true);

// Intermediate activations kept for the backward pass.
struct ForwardCache {
  Eigen::MatrixXd z;                // network input
  std::vector<Eigen::MatrixXd> h;   // residual stream, num_blocks + 1
  std::vector<Eigen::MatrixXd> a;   // block pre-activations
  std::vector<Eigen::MatrixXd> g;   // gelu(a)
  Eigen::MatrixXd top;              // gelu(h.back())
};

// Builds the condition for a window whose first C entries are observed.
// `history` holds the values immediately before the past block (for lags).
Eigen::VectorXd make_condition(const Eigen::VectorXd& past, int seq_len,
                               const std::vector<int>& lags,
                               const Eigen::VectorXd& history = {});

// u(t_b, x_b, c_b) for every column. `c` must be empty for an unconditional
// model and [cond_dim x B] for a conditional one.
Eigen::MatrixXd forward(const ModelConfig& config,
                        const Eigen::VectorXd& params,
                        const Eigen::VectorXd& t, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXd& c,
                        ForwardCache* cache = nullptr);

// Pulls d_out back through a cached forward pass. Either output may be null.
void backward(const ModelConfig& config, const Eigen::VectorXd& params,
              const ForwardCache& cache, const Eigen::MatrixXd& d_out,
              Eigen::VectorXd* d_params, Eigen::MatrixXd* d_x);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grads;
};

// loss = mean over columns of |u - target|^2.
LossGrad regression_loss(const ModelConfig& config,
                         const Eigen::VectorXd& params,
                         const Eigen::VectorXd& t, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& c,
                         const Eigen::MatrixXd& target);

struct OptimState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double clip_threshold = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimState for_model(const VectorFieldModel& model);
};

// Rescales g so that |g| <= max_norm. Returns the norm before clipping.
double clip_global_norm(Eigen::VectorXd& g, double max_norm);

// Clip, Adam step with bias correction, then EMA update of the shadow copy.
void opt_step(VectorFieldModel& model, OptimState& opt, Eigen::VectorXd grads);

struct Checkpoint {
  VectorFieldModel model;
  OptimState opt;
};

void save_checkpoint(const VectorFieldModel& model, const OptimState& opt,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also rejects (ValidationError) a checkpoint whose model config differs
// from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const ModelConfig& expected);

}  // namespace tsflow::net

#endif  // TSFLOW_NET_HPP_
