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

#ifndef TSFLOW_SAMPLING_HPP_
#define TSFLOW_SAMPLING_HPP_

// Generation: Euler integration of a vector field, the differentiable flow
// map, Langevin conditional prior sampling and quantile-guided generation.
// Batches are column-major ([L x B]); sample i always draws from its own
// stream derive_seed(seed, i), so its random draws do not depend on
// batching.

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tsflow/gp.hpp"
#include "tsflow/net.hpp"
#include "tsflow/random.hpp"

namespace tsflow::sampling {

struct LangevinConfig {
  int iterations = 4;
  double step_size = 1e-3;  // tau
  double noise_scale = 0.01;
  int inner_ode_steps = 4;
};

struct GuidanceConfig {
  double scale = 4.0;  // s
  // Quantile level: drawn once per sample from U[kappa_min, kappa_max] when
  // `kappa_uniform`, otherwise fixed at `kappa`.
  bool kappa_uniform = true;
  double kappa = 0.5;
  double kappa_min = 0.1;
  double kappa_max = 0.9;
};

struct SamplerConfig {
  int ode_steps = 32;
  int n_samples = 100;
  LangevinConfig langevin;
  GuidanceConfig guidance;

  void validate() const;
};

// field(t, X) for every column of X at a shared time t. Fields built from a
// model keep references to its config and parameters.
using Field =
    std::function<Eigen::MatrixXd(double t, const Eigen::MatrixXd& x)>;

// n Euler steps from t0 to 1: x <- x + h field(t0 + k h, x), h = (1-t0)/n.
Eigen::MatrixXd euler_integrate(const Field& field, const Eigen::MatrixXd& x0,
                                int steps, double t0 = 0.0);

// The model field with a fixed condition (empty for unconditional models).
Field model_field(const net::ModelConfig& config,
                  const Eigen::VectorXd& params, const Eigen::MatrixXd& c);

// Euler flow of the model field from t0 to 1 in `steps` steps.
Eigen::MatrixXd flow_map(const net::ModelConfig& config,
                         const Eigen::VectorXd& params,
                         const Eigen::MatrixXd& x, const Eigen::MatrixXd& c,
                         int steps, double t0 = 0.0);

struct FlowVjp {
  Eigen::MatrixXd value;  // flow_map(x)
  Eigen::MatrixXd grad;   // J^T g, per column
};

// Flow map and the vector-Jacobian product with g(value), where g is
// evaluated on the flow output. Back-propagates through every Euler step.
FlowVjp flow_map_vjp(
    const net::ModelConfig& config, const Eigen::VectorXd& params,
    const Eigen::MatrixXd& x, const Eigen::MatrixXd& c, int steps, double t0,
    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& g);

struct AldResult {
  double loglik = 0.0;
  Eigen::VectorXd grad;  // d loglik / d y_hat; zero beyond the past block
};

// loglik = -sum_{i<C} pinball_kappa(y_hat_i, y_p_i) with unit scale. At a tie
// the slope is kappa.
AldResult ald_loglik_grad(const Eigen::VectorXd& y_p,
                          const Eigen::VectorXd& y_hat, double kappa);

// Column-wise gradient of the ALD log-likelihood, one kappa per column.
Eigen::MatrixXd ald_grad_batch(const Eigen::VectorXd& y_p,
                               const Eigen::MatrixXd& y_hat,
                               const Eigen::VectorXd& kappas);

// u + s J_phi^T grad loglik(phi(x)), phi the flow from t to 1 with
// `inner_steps` Euler steps. s = 0 returns the model field unchanged.
Field guided_field(const net::ModelConfig& config,
                   const Eigen::VectorXd& params, const Eigen::VectorXd& y_p,
                   double scale, const Eigen::VectorXd& kappas,
                   int inner_steps);

// Langevin ascent on log q1(y_p | x0) + log q0(x0), starting from x0:
//   x <- x + tau (J^T grad loglik + score) + noise_scale sqrt(2 tau) xi.
// `rngs` supplies the noise of each column.
Eigen::MatrixXd conditional_prior_sampling(
    const net::ModelConfig& config, const Eigen::VectorXd& params,
    const gp::CovMatrix& prior, const Eigen::VectorXd& y_p,
    const Eigen::MatrixXd& x0, const Eigen::VectorXd& kappas,
    const LangevinConfig& cfg, std::vector<Rng>& rngs);

enum class ForecastMode { kCondDirect, kUncondCpsGuided };

ForecastMode parse_forecast_mode(std::string_view name);
std::string_view to_string(ForecastMode mode);

// Draws the conditional prior (y_p || future) of one sample.
using CondPriorFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& y_p, Rng& rng)>;

// Forecasting for one model over windows of C past and P future points. The
// GP prior over the window (and its GPR conditioner for conditional models)
// is factorized once. Inputs and outputs are in normalized units; the EMA
// weights of the model are copied in.
class Forecaster {
 public:
  Forecaster(const net::VectorFieldModel& model, const gp::KernelSpec& kernel,
             int context_len, int pred_len, int period, SamplerConfig cfg);

  // [n_samples x P] future blocks. `history` feeds lag features.
  Eigen::MatrixXd sample(const Eigen::VectorXd& past,
                         const Eigen::VectorXd& history, int n_samples,
                         ForecastMode mode, std::uint64_t seed) const;

  // Full generated windows, [n_samples x L].
  Eigen::MatrixXd sample_window(const Eigen::VectorXd& past,
                                const Eigen::VectorXd& history, int n_samples,
                                ForecastMode mode, std::uint64_t seed) const;

  // Overrides the GPR conditional prior of cond-direct sampling.
  void set_cond_prior(CondPriorFn fn) { cond_prior_ = std::move(fn); }

  const SamplerConfig& config() const { return cfg_; }
  const gp::CovMatrix& prior() const { return prior_; }

 private:
  Eigen::MatrixXd cond_direct(const Eigen::VectorXd& past,
                              const Eigen::VectorXd& history, int n,
                              std::uint64_t seed) const;
  Eigen::MatrixXd uncond_guided(const Eigen::VectorXd& past, int n,
                                std::uint64_t seed) const;

  net::ModelConfig config_;
  Eigen::VectorXd params_;  // EMA weights
  int context_len_;
  int pred_len_;
  SamplerConfig cfg_;
  gp::CovMatrix prior_;
  std::optional<gp::GprConditioner> gpr_;
  CondPriorFn cond_prior_;
};

// Unconditional generation: GP prior draws pushed through the flow, [n x L].
Eigen::MatrixXd generate(const net::VectorFieldModel& model,
                         const gp::CovMatrix& prior, int n, int ode_steps,
                         std::uint64_t seed);

}  // namespace tsflow::sampling

#endif  // TSFLOW_SAMPLING_HPP_
