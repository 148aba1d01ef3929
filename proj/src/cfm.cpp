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

#include "tsflow/cfm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tsflow/error.hpp"
#include "tsflow/metrics.hpp"
#include "tsflow/ot.hpp"

namespace tsflow::cfm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Fixed stream tags so the init, batches and validation draw from
// independent streams of one run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kValStream = 3;

struct Batch {
  MatrixXd x0, x1, c;
};

// Normalized training windows as columns, with their conditions.
struct WindowBank {
  MatrixXd y;     // [L x N]
  MatrixXd cond;  // [cond_dim x N], empty when unconditional
};

int max_lag(const net::ModelConfig& mc) {
  return mc.lags.empty() ? 0 : *std::max_element(mc.lags.begin(), mc.lags.end());
}

WindowBank make_bank(const data::Dataset& ds, const data::Normalizer& norm,
                     const net::ModelConfig& mc, int stride) {
  const auto windows = data::make_windows(ds, ds.context_len, ds.pred_len,
                                          stride, data::Split::kTrain,
                                          max_lag(mc));
  if (windows.empty())
    throw ValidationError("no training windows: series too short for C + P = " +
                          std::to_string(ds.context_len + ds.pred_len));
  WindowBank bank;
  const auto n = static_cast<Eigen::Index>(windows.size());
  bank.y.resize(mc.seq_len, n);
  if (mc.conditional) bank.cond.resize(mc.cond_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const data::Window w = norm.normalize(ds, windows[i]);
    bank.y.col(i) << w.past, w.future;
    if (mc.conditional)
      bank.cond.col(i) =
          net::make_condition(w.past, mc.seq_len, mc.lags, w.history);
  }
  return bank;
}

void check_shapes(const data::Dataset& ds, const net::ModelConfig& mc,
                  const TrainConfig& tc, bool conditional) {
  mc.validate();
  tc.validate(conditional);
  if (mc.conditional != conditional)
    throw ValidationError(conditional
                              ? "conditional training needs model.conditional"
                              : "unconditional training needs an "
                                "unconditional model");
  if (mc.seq_len != ds.context_len + ds.pred_len)
    throw ValidationError("model seq_len " + std::to_string(mc.seq_len) +
                          " != context_len + pred_len = " +
                          std::to_string(ds.context_len + ds.pred_len));
}

TrainResult run(const data::Dataset& ds, const data::Normalizer& norm,
                const net::ModelConfig& mc, const TrainConfig& tc,
                const sampling::SamplerConfig& sampler,
                const std::function<Batch(Rng&)>& make_batch,
                sampling::ForecastMode mode, const EpochCallback& on_epoch) {
  TrainResult res;
  res.model = net::init_model(mc, derive_seed(tc.seed, kInitStream));
  res.model.ema_momentum = tc.ema_momentum;
  res.opt = net::OptimState::for_model(res.model);
  res.opt.learning_rate = tc.learning_rate;
  res.opt.clip_threshold = tc.clip_threshold;

  const auto val_windows = data::make_windows(
      ds, ds.context_len, ds.pred_len, 1, data::Split::kVal, max_lag(mc));
  VectorXd best_ema = res.model.ema;
  const std::uint64_t batch_seed = derive_seed(tc.seed, kBatchStream);

  for (int e = 0; e < tc.epochs; ++e) {
    EpochLog log;
    log.epoch = e + 1;
    for (int b = 0; b < tc.batches_per_epoch; ++b) {
      const auto k = static_cast<std::uint64_t>(e) * tc.batches_per_epoch + b;
      Rng rng(derive_seed(batch_seed, k));
      const Batch batch = make_batch(rng);
      net::LossGrad lg = cfm_loss_batch(mc, res.model.params, batch.x0,
                                        batch.x1, batch.c, tc.sigma_min, rng);
      log.loss += lg.loss;
      net::opt_step(res.model, res.opt, std::move(lg.grads));
    }
    log.loss /= tc.batches_per_epoch;

    const bool validate_now =
        tc.val_every > 0 && !val_windows.empty() &&
        ((e + 1) % tc.val_every == 0 || e + 1 == tc.epochs);
    if (validate_now) {
      sampling::Forecaster fc(res.model, tc.prior, ds.context_len,
                              ds.pred_len, ds.period, sampler);
      log.val_crps = evaluate_crps(ds, norm, fc, val_windows, tc.val_samples,
                                   mode, derive_seed(tc.seed, kValStream));
      if (std::isnan(res.best_val_crps) || log.val_crps < res.best_val_crps) {
        res.best_val_crps = log.val_crps;
        res.best_epoch = log.epoch;
        best_ema = res.model.ema;
      }
    }
    res.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  if (res.best_epoch > 0) {
    res.model.ema = best_ema;
  } else {
    res.best_epoch = tc.epochs;
  }
  return res;
}

}  // namespace

Coupling parse_coupling(std::string_view name) {
  if (name == "independent") return Coupling::kIndependent;
  if (name == "ot") return Coupling::kOt;
  if (name == "gpr") return Coupling::kGpr;
  throw ValidationError("unknown coupling '" + std::string(name) +
                        "' (expected independent, ot or gpr)");
}

std::string_view to_string(Coupling coupling) {
  switch (coupling) {
    case Coupling::kIndependent: return "independent";
    case Coupling::kOt: return "ot";
    case Coupling::kGpr: return "gpr";
  }
  return "?";
}

void TrainConfig::validate(bool conditional) const {
  std::string errs;
  if (!(sigma_min > 0.0)) errs += " sigma_min must be > 0;";
  if (batch_size < 1) errs += " batch_size must be >= 1;";
  if (coupling == Coupling::kOt && batch_size < 2)
    errs += " batch_size must be >= 2 for OT coupling;";
  if (epochs < 0) errs += " epochs must be >= 0;";
  if (batches_per_epoch < 1) errs += " batches_per_epoch must be >= 1;";
  if (!(learning_rate > 0.0)) errs += " learning_rate must be > 0;";
  if (!(clip_threshold > 0.0)) errs += " clip_threshold must be > 0;";
  if (!(ema_momentum >= 0.0 && ema_momentum < 1.0))
    errs += " ema_momentum must be in [0, 1);";
  if (window_stride < 1) errs += " window_stride must be >= 1;";
  if (val_every < 0) errs += " val_every must be >= 0;";
  if (val_samples < 1) errs += " val_samples must be >= 1;";
  if (conditional && coupling != Coupling::kGpr)
    errs += " conditional training uses coupling 'gpr';";
  if (!conditional && coupling == Coupling::kGpr)
    errs += " unconditional training uses coupling 'ot' or 'independent';";
  if (!errs.empty()) throw ValidationError("train config:" + errs);
  prior.validate();
}

VectorXd sample_path_point(const VectorXd& x0, const VectorXd& x1, double t,
                           double sigma_min, Rng& rng) {
  if (x0.size() != x1.size())
    throw ValidationError("sample_path_point: x0 and x1 differ in length");
  if (!(t >= 0.0 && t <= 1.0))
    throw ValidationError("sample_path_point: t must be in [0, 1]");
  return t * x1 + (1.0 - t) * x0 + sigma_min * standard_normal(rng, x0.size());
}

VectorXd sample_path_point(const VectorXd& x0, const VectorXd& x1, double t,
                           double sigma_min, std::uint64_t seed) {
  Rng rng(seed);
  return sample_path_point(x0, x1, t, sigma_min, rng);
}

net::LossGrad cfm_loss_batch(const net::ModelConfig& config,
                             const VectorXd& params, const MatrixXd& x0,
                             const MatrixXd& x1, const MatrixXd& c,
                             double sigma_min, Rng& rng) {
  if (x0.rows() != x1.rows() || x0.cols() != x1.cols())
    throw ValidationError("cfm_loss_batch: x0 and x1 shapes differ");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd t(x0.cols());
  MatrixXd xt(x0.rows(), x0.cols());
  for (Eigen::Index j = 0; j < x0.cols(); ++j) {
    t(j) = unif(rng);
    xt.col(j) = sample_path_point(x0.col(j), x1.col(j), t(j), sigma_min, rng);
  }
  return net::regression_loss(config, params, t, xt, c, x1 - x0);
}

TrainResult train_uncond(const data::Dataset& dataset,
                         const data::Normalizer& normalizer,
                         const net::ModelConfig& model_config,
                         const TrainConfig& config,
                         const sampling::SamplerConfig& sampler,
                         const EpochCallback& on_epoch) {
  check_shapes(dataset, model_config, config, false);
  const WindowBank bank =
      make_bank(dataset, normalizer, model_config, config.window_stride);
  const gp::CovMatrix prior = gp::build_cov(
      config.prior,
      gp::normalize_times(0, model_config.seq_len, dataset.period));
  const int l = model_config.seq_len;
  const int b = config.batch_size;

  auto make_batch = [&](Rng& rng) {
    std::uniform_int_distribution<Eigen::Index> pick(0, bank.y.cols() - 1);
    MatrixXd y(l, b);
    for (int j = 0; j < b; ++j) y.col(j) = bank.y.col(pick(rng));
    Batch batch;
    batch.x0 = prior.chol.triangularView<Eigen::Lower>() *
               standard_normal(rng, l, b);
    if (config.coupling == Coupling::kOt) {
      const ot::Assignment a =
          ot::assign(ot::cost_matrix(batch.x0.transpose(), y.transpose()));
      batch.x1.resize(l, b);
      for (int j = 0; j < b; ++j) batch.x1.col(j) = y.col(a.perm[j]);
    } else {
      batch.x1 = std::move(y);
    }
    return batch;
  };
  return run(dataset, normalizer, model_config, config, sampler, make_batch,
             sampling::ForecastMode::kUncondCpsGuided, on_epoch);
}

TrainResult train_cond(const data::Dataset& dataset,
                       const data::Normalizer& normalizer,
                       const net::ModelConfig& model_config,
                       const TrainConfig& config,
                       const sampling::SamplerConfig& sampler,
                       const EpochCallback& on_epoch) {
  check_shapes(dataset, model_config, config, true);
  const WindowBank bank =
      make_bank(dataset, normalizer, model_config, config.window_stride);
  const int c_len = dataset.context_len;
  const int p_len = dataset.pred_len;
  const VectorXd times =
      gp::normalize_times(0, model_config.seq_len, dataset.period);
  const gp::GprConditioner gpr(config.prior, times.head(c_len),
                               times.tail(p_len));
  // Conditional means of every training window, computed once.
  const MatrixXd means = gpr.gain() * bank.y.topRows(c_len);
  const int l = model_config.seq_len;
  const int b = config.batch_size;

  auto make_batch = [&](Rng& rng) {
    std::uniform_int_distribution<Eigen::Index> pick(0, bank.y.cols() - 1);
    Batch batch;
    batch.x0.resize(l, b);
    batch.x1.resize(l, b);
    batch.c.resize(model_config.cond_dim(), b);
    for (int j = 0; j < b; ++j) {
      const Eigen::Index i = pick(rng);
      batch.x1.col(j) = bank.y.col(i);
      batch.c.col(j) = bank.cond.col(i);
      const gp::GaussianDist dist{means.col(i), gpr.factor()};
      batch.x0.col(j) =
          gp::cond_prior_sample(dist, bank.y.col(i).head(c_len), rng);
    }
    return batch;
  };
  return run(dataset, normalizer, model_config, config, sampler, make_batch,
             sampling::ForecastMode::kCondDirect, on_epoch);
}

double evaluate_crps(const data::Dataset& dataset,
                     const data::Normalizer& normalizer,
                     const sampling::Forecaster& forecaster,
                     const std::vector<data::Window>& windows, int n_samples,
                     sampling::ForecastMode mode, std::uint64_t seed) {
  metrics::CrpsAccumulator acc;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const data::Window nw = normalizer.normalize(dataset, windows[w]);
    const MatrixXd s = forecaster.sample(nw.past, nw.history, n_samples, mode,
                                         derive_seed(seed, w));
    MatrixXd denorm(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i)
      denorm.row(i) = normalizer
                          .denormalize_future(dataset, windows[w],
                                              s.row(i).transpose())
                          .transpose();
    acc.add_samples(denorm, windows[w].future);
  }
  return acc.value();
}

}  // namespace tsflow::cfm
