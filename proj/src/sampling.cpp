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

#include "tsflow/sampling.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tsflow/error.hpp"

namespace tsflow::sampling {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SamplerConfig::validate() const {
  std::string errs;
  if (ode_steps < 1) errs += " ode_steps must be >= 1;";
  if (n_samples < 1) errs += " n_samples must be >= 1;";
  if (langevin.iterations < 0) errs += " langevin.iterations must be >= 0;";
  if (!(langevin.step_size > 0.0)) errs += " langevin.step_size must be > 0;";
  if (!(langevin.noise_scale >= 0.0))
    errs += " langevin.noise_scale must be >= 0;";
  if (langevin.inner_ode_steps < 1)
    errs += " langevin.inner_ode_steps must be >= 1;";
  if (!(guidance.scale >= 0.0)) errs += " guidance.scale must be >= 0;";
  auto in_unit = [](double k) { return k > 0.0 && k < 1.0; };
  if (guidance.kappa_uniform) {
    if (!in_unit(guidance.kappa_min) || !in_unit(guidance.kappa_max) ||
        guidance.kappa_min > guidance.kappa_max)
      errs += " guidance kappa range must satisfy 0 < min <= max < 1;";
  } else if (!in_unit(guidance.kappa)) {
    errs += " guidance.kappa must be in (0, 1);";
  }
  if (!errs.empty()) throw ValidationError("sampler config:" + errs);
}

MatrixXd euler_integrate(const Field& field, const MatrixXd& x0, int steps,
                         double t0) {
  if (steps < 1) throw ValidationError("euler_integrate: steps must be >= 1");
  const double h = (1.0 - t0) / steps;
  MatrixXd x = x0;
  for (int k = 0; k < steps; ++k) {
    x += h * field(t0 + k * h, x);
    if (!x.allFinite())
      throw NumericalError("euler_integrate: non-finite state at step " +
                           std::to_string(k + 1) + " of " +
                           std::to_string(steps));
  }
  return x;
}

Field model_field(const net::ModelConfig& config, const VectorXd& params,
                  const MatrixXd& c) {
  return [&config, &params, c](double t, const MatrixXd& x) {
    const VectorXd tv = VectorXd::Constant(x.cols(), t);
    if (c.size() == 0) return net::forward(config, params, tv, x, c);
    if (c.cols() == x.cols()) return net::forward(config, params, tv, x, c);
    // One condition shared by the whole batch.
    return net::forward(config, params, tv, x, c.col(0).replicate(1, x.cols()));
  };
}

MatrixXd flow_map(const net::ModelConfig& config, const VectorXd& params,
                  const MatrixXd& x, const MatrixXd& c, int steps, double t0) {
  return euler_integrate(model_field(config, params, c), x, steps, t0);
}

FlowVjp flow_map_vjp(const net::ModelConfig& config, const VectorXd& params,
                     const MatrixXd& x, const MatrixXd& c, int steps,
                     double t0,
                     const std::function<MatrixXd(const MatrixXd&)>& g) {
  if (steps < 1) throw ValidationError("flow_map: steps must be >= 1");
  const double h = (1.0 - t0) / steps;
  const MatrixXd cb =
      (c.size() == 0 || c.cols() == x.cols()) ? c
                                              : c.col(0).replicate(1, x.cols());
  std::vector<net::ForwardCache> caches(steps);
  MatrixXd cur = x;
  for (int k = 0; k < steps; ++k) {
    const VectorXd tv = VectorXd::Constant(x.cols(), t0 + k * h);
    cur += h * net::forward(config, params, tv, cur, cb, &caches[k]);
    if (!cur.allFinite())
      throw NumericalError("flow_map: non-finite state at step " +
                           std::to_string(k + 1));
  }
  FlowVjp out;
  out.value = cur;
  MatrixXd grad = g(cur);
  MatrixXd dx;
  for (int k = steps - 1; k >= 0; --k) {
    net::backward(config, params, caches[k], h * grad, nullptr, &dx);
    grad += dx;
  }
  out.grad = std::move(grad);
  return out;
}

AldResult ald_loglik_grad(const VectorXd& y_p, const VectorXd& y_hat,
                          double kappa) {
  if (y_p.size() > y_hat.size())
    throw ValidationError("ald_loglik_grad: y_p longer than y_hat");
  if (!(kappa > 0.0 && kappa < 1.0))
    throw ValidationError("ald_loglik_grad: kappa must be in (0, 1)");
  AldResult r;
  r.grad = VectorXd::Zero(y_hat.size());
  for (Eigen::Index i = 0; i < y_p.size(); ++i) {
    const double below = y_p(i) < y_hat(i) ? 1.0 : 0.0;
    r.loglik -= (kappa - below) * (y_p(i) - y_hat(i));
    r.grad(i) = kappa - below;
  }
  return r;
}

MatrixXd ald_grad_batch(const VectorXd& y_p, const MatrixXd& y_hat,
                        const VectorXd& kappas) {
  if (kappas.size() != y_hat.cols())
    throw ValidationError("ald_grad_batch: one kappa per column required");
  MatrixXd g = MatrixXd::Zero(y_hat.rows(), y_hat.cols());
  for (Eigen::Index j = 0; j < y_hat.cols(); ++j)
    for (Eigen::Index i = 0; i < y_p.size(); ++i)
      g(i, j) = kappas(j) - (y_p(i) < y_hat(i, j) ? 1.0 : 0.0);
  return g;
}

Field guided_field(const net::ModelConfig& config, const VectorXd& params,
                   const VectorXd& y_p, double scale, const VectorXd& kappas,
                   int inner_steps) {
  const MatrixXd none;
  Field base = model_field(config, params, none);
  if (scale == 0.0) return base;
  return [&config, &params, y_p, scale, kappas, inner_steps, base](
             double t, const MatrixXd& x) {
    MatrixXd u = base(t, x);
    const FlowVjp vjp = flow_map_vjp(
        config, params, x, MatrixXd(), inner_steps, t,
        [&](const MatrixXd& y_hat) { return ald_grad_batch(y_p, y_hat, kappas); });
    u += scale * vjp.grad;
    return u;
  };
}

MatrixXd conditional_prior_sampling(const net::ModelConfig& config,
                                    const VectorXd& params,
                                    const gp::CovMatrix& prior,
                                    const VectorXd& y_p, const MatrixXd& x0,
                                    const VectorXd& kappas,
                                    const LangevinConfig& cfg,
                                    std::vector<Rng>& rngs) {
  if (static_cast<Eigen::Index>(rngs.size()) != x0.cols())
    throw ValidationError("conditional_prior_sampling: one rng per column");
  MatrixXd x = x0;
  const double noise = cfg.noise_scale * std::sqrt(2.0 * cfg.step_size);
  for (int it = 0; it < cfg.iterations; ++it) {
    const FlowVjp vjp = flow_map_vjp(
        config, params, x, MatrixXd(), cfg.inner_ode_steps, 0.0,
        [&](const MatrixXd& y_hat) { return ald_grad_batch(y_p, y_hat, kappas); });
    const MatrixXd score = gp::gp_score(prior, x);
    x += cfg.step_size * (vjp.grad + score);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      x.col(j) += noise * standard_normal(rngs[j], x.rows());
    if (!x.allFinite())
      throw NumericalError("conditional prior sampling: non-finite iterate " +
                           std::to_string(it + 1));
  }
  return x;
}

ForecastMode parse_forecast_mode(std::string_view name) {
  if (name == "cond-direct") return ForecastMode::kCondDirect;
  if (name == "uncond-cps-guided") return ForecastMode::kUncondCpsGuided;
  throw ValidationError("unknown forecast mode '" + std::string(name) +
                        "' (expected cond-direct or uncond-cps-guided)");
}

std::string_view to_string(ForecastMode mode) {
  return mode == ForecastMode::kCondDirect ? "cond-direct"
                                           : "uncond-cps-guided";
}

Forecaster::Forecaster(const net::VectorFieldModel& model,
                       const gp::KernelSpec& kernel, int context_len,
                       int pred_len, int period, SamplerConfig cfg)
    : config_(model.config),
      params_(model.ema),
      context_len_(context_len),
      pred_len_(pred_len),
      cfg_(std::move(cfg)) {
  cfg_.validate();
  if (context_len < 1 || pred_len < 1 ||
      context_len + pred_len != config_.seq_len)
    throw ValidationError("forecaster: C + P = " +
                          std::to_string(context_len + pred_len) +
                          " does not match model length " +
                          std::to_string(config_.seq_len));
  const VectorXd times = gp::normalize_times(0, config_.seq_len, period);
  if (config_.conditional) {
    gpr_.emplace(kernel, times.head(context_len), times.tail(pred_len));
  } else {
    prior_ = gp::build_cov(kernel, times);
  }
}

MatrixXd Forecaster::sample(const VectorXd& past, const VectorXd& history,
                            int n_samples, ForecastMode mode,
                            std::uint64_t seed) const {
  return sample_window(past, history, n_samples, mode, seed)
      .rightCols(pred_len_);
}

MatrixXd Forecaster::sample_window(const VectorXd& past,
                                   const VectorXd& history, int n_samples,
                                   ForecastMode mode,
                                   std::uint64_t seed) const {
  if (past.size() != context_len_)
    throw ValidationError("forecast: past has length " +
                          std::to_string(past.size()) + ", expected " +
                          std::to_string(context_len_));
  if (n_samples < 0) throw ValidationError("forecast: negative sample count");
  if (mode == ForecastMode::kCondDirect && !config_.conditional)
    throw ValidationError(
        "forecast mode cond-direct requires a conditional model");
  if (mode == ForecastMode::kUncondCpsGuided && config_.conditional)
    throw ValidationError(
        "forecast mode uncond-cps-guided requires an unconditional model");
  if (n_samples == 0) return MatrixXd(0, config_.seq_len);
  return mode == ForecastMode::kCondDirect
             ? cond_direct(past, history, n_samples, seed)
             : uncond_guided(past, n_samples, seed);
}

MatrixXd Forecaster::cond_direct(const VectorXd& past, const VectorXd& history,
                                 int n, std::uint64_t seed) const {
  const int l = config_.seq_len;
  std::optional<gp::GaussianDist> gpr;
  if (!cond_prior_) gpr = gpr_->condition(past);
  MatrixXd x0(l, n);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const VectorXd draw = cond_prior_ ? cond_prior_(past, rng)
                                      : gp::cond_prior_sample(*gpr, past, rng);
    if (draw.size() != l)
      throw ValidationError("conditional prior returned wrong length");
    x0.col(i) = draw;
  }
  const MatrixXd c = net::make_condition(past, l, config_.lags, history);
  const MatrixXd x1 =
      euler_integrate(model_field(config_, params_, c), x0, cfg_.ode_steps);
  return x1.transpose();
}

MatrixXd Forecaster::uncond_guided(const VectorXd& past, int n,
                                   std::uint64_t seed) const {
  const int l = config_.seq_len;
  std::vector<Rng> rngs;
  rngs.reserve(n);
  VectorXd kappas(n);
  MatrixXd x0(l, n);
  const auto& g = cfg_.guidance;
  for (int i = 0; i < n; ++i) {
    rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
    if (g.kappa_uniform) {
      std::uniform_real_distribution<double> u(g.kappa_min, g.kappa_max);
      kappas(i) = u(rngs.back());
    } else {
      kappas(i) = g.kappa;
    }
    x0.col(i) = prior_.chol.triangularView<Eigen::Lower>() *
                standard_normal(rngs.back(), l);
  }
  const MatrixXd start = conditional_prior_sampling(
      config_, params_, prior_, past, x0, kappas, cfg_.langevin, rngs);
  const Field field = guided_field(config_, params_, past, g.scale, kappas,
                                   cfg_.langevin.inner_ode_steps);
  return euler_integrate(field, start, cfg_.ode_steps).transpose();
}

MatrixXd generate(const net::VectorFieldModel& model,
                  const gp::CovMatrix& prior, int n, int ode_steps,
                  std::uint64_t seed) {
  const int l = model.config.seq_len;
  if (prior.size() != l)
    throw ValidationError("generate: prior dimension does not match model");
  if (model.config.conditional)
    throw ValidationError("generate requires an unconditional model");
  if (n < 0) throw ValidationError("generate: negative sample count");
  if (n == 0) return MatrixXd(0, l);
  MatrixXd x0(l, n);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    x0.col(i) =
        prior.chol.triangularView<Eigen::Lower>() * standard_normal(rng, l);
  }
  return flow_map(model.config, model.ema, x0, MatrixXd(), ode_steps)
      .transpose();
}

}  // namespace tsflow::sampling
