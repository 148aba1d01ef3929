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

#ifndef TSFLOW_CFM_HPP_
#define TSFLOW_CFM_HPP_

// Conditional flow matching: Gaussian probability paths between prior and
// data samples, the regression loss, and the two training loops
// (unconditional with GP prior + optional OT pairing; conditional with the
// GPR conditional prior).

#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tsflow/data.hpp"
#include "tsflow/gp.hpp"
#include "tsflow/net.hpp"
#include "tsflow/random.hpp"
#include "tsflow/sampling.hpp"

namespace tsflow::cfm {

enum class Coupling { kIndependent, kOt, kGpr };

Coupling parse_coupling(std::string_view name);
std::string_view to_string(Coupling coupling);

struct TrainConfig {
  double sigma_min = 1e-4;
  int batch_size = 64;
  int epochs = 400;  // 1000 for unconditional runs, see default_epochs
  int batches_per_epoch = 128;
  std::uint64_t seed = 0;
  gp::KernelSpec prior = gp::KernelSpec::with_defaults(gp::KernelKind::kOU);
  Coupling coupling = Coupling::kGpr;
  double learning_rate = 1e-3;
  double clip_threshold = 0.5;
  double ema_momentum = net::kDefaultEmaMomentum;
  int window_stride = 1;
  int val_every = 10;   // epochs; 0 disables validation
  int val_samples = 8;

  static int default_epochs(bool conditional) {
    return conditional ? 400 : 1000;
  }
  void validate(bool conditional) const;
};

// x_t = t x1 + (1 - t) x0 + sigma_min z.
Eigen::VectorXd sample_path_point(const Eigen::VectorXd& x0,
                                  const Eigen::VectorXd& x1, double t,
                                  double sigma_min, Rng& rng);
Eigen::VectorXd sample_path_point(const Eigen::VectorXd& x0,
                                  const Eigen::VectorXd& x1, double t,
                                  double sigma_min, std::uint64_t seed);

// Mean over columns of |u(t, x_t, c) - (x1 - x0)|^2 with t ~ U[0, 1] drawn
// per column (then that column's noise). `c` is empty for unconditional
// models.
net::LossGrad cfm_loss_batch(const net::ModelConfig& config,
                             const Eigen::VectorXd& params,
                             const Eigen::MatrixXd& x0,
                             const Eigen::MatrixXd& x1,
                             const Eigen::MatrixXd& c, double sigma_min,
                             Rng& rng);

struct EpochLog {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double val_crps = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  // `model.ema` holds the selected (best validation) EMA weights.
  net::VectorFieldModel model;
  net::OptimState opt;
  std::vector<EpochLog> log;
  double best_val_crps = std::numeric_limits<double>::quiet_NaN();
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Windows are whole sequences y of length C + P drawn from the training
// ranges; x0 is a GP prior draw, paired by OT or left independent.
TrainResult train_uncond(const data::Dataset& dataset,
                         const data::Normalizer& normalizer,
                         const net::ModelConfig& model_config,
                         const TrainConfig& config,
                         const sampling::SamplerConfig& sampler,
                         const EpochCallback& on_epoch = {});

// x0 ~ (N(y_p, I), GPR(y_p)), condition c = (y_p padded, mask, lags).
TrainResult train_cond(const data::Dataset& dataset,
                       const data::Normalizer& normalizer,
                       const net::ModelConfig& model_config,
                       const TrainConfig& config,
                       const sampling::SamplerConfig& sampler,
                       const EpochCallback& on_epoch = {});

// Weighted CRPS (data units) of `n_samples`-sample forecasts on `windows`.
double evaluate_crps(const data::Dataset& dataset,
                     const data::Normalizer& normalizer,
                     const sampling::Forecaster& forecaster,
                     const std::vector<data::Window>& windows, int n_samples,
                     sampling::ForecastMode mode, std::uint64_t seed);

}  // namespace tsflow::cfm

#endif  // TSFLOW_CFM_HPP_
