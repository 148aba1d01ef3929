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

#include "tsflow/net.hpp"

#include <cmath>
#include <string>

#include "tsflow/error.hpp"
#include "tsflow/random.hpp"

namespace tsflow::net {

namespace {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using ConstMat = Map<const MatrixXd>;
using ConstVec = Map<const VectorXd>;

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Exact GELU, x * Phi(x).
MatrixXd gelu(const MatrixXd& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * std::erfc(-v * kInvSqrt2);
  });
}

// Phi(x) + x * phi(x).
MatrixXd gelu_grad(const MatrixXd& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * std::erfc(-v * kInvSqrt2) +
           v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
  });
}

ConstMat weight(const VectorXd& p, Index off, Index rows, Index cols) {
  return ConstMat(p.data() + off, rows, cols);
}
ConstVec bias(const VectorXd& p, Index off, Index n) {
  return ConstVec(p.data() + off, n);
}

}  // namespace

void ModelConfig::validate() const {
  std::string errs;
  if (seq_len < 1) errs += " seq_len must be >= 1;";
  if (hidden_dim < 1) errs += " hidden_dim must be >= 1;";
  if (num_blocks < 0) errs += " num_blocks must be >= 0;";
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
    errs += " time_embed_dim must be even and >= 2;";
  if (!(time_scale > 0.0)) errs += " time_scale must be > 0;";
  if (activation != "gelu") errs += " activation must be 'gelu';";
  for (int l : lags)
    if (l < 1) errs += " lags must be >= 1;";
  if (!lags.empty() && !conditional)
    errs += " lags require a conditional model;";
  if (!errs.empty()) throw ValidationError("model config:" + errs);
}

nlohmann::json to_json(const ModelConfig& config) {
  return nlohmann::json{{"seq_len", config.seq_len},
                        {"hidden_dim", config.hidden_dim},
                        {"num_blocks", config.num_blocks},
                        {"time_embed_dim", config.time_embed_dim},
                        {"time_scale", config.time_scale},
                        {"conditional", config.conditional},
                        {"lags", config.lags},
                        {"activation", config.activation},
                        {"architecture", "residual-mlp"}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.seq_len = j.at("seq_len").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.num_blocks = j.at("num_blocks").get<int>();
  c.time_embed_dim = j.at("time_embed_dim").get<int>();
  c.time_scale = j.at("time_scale").get<double>();
  c.conditional = j.at("conditional").get<bool>();
  c.lags = j.at("lags").get<std::vector<int>>();
  c.activation = j.at("activation").get<std::string>();
  return c;
}

VectorXd time_embed(double t, int dim, double scale) {
  if (dim < 2 || dim % 2 != 0)
    throw ValidationError("time_embed: dim must be even");
  VectorXd e(dim);
  for (int k = 0; k < dim / 2; ++k) {
    const double w = scale * std::pow(10000.0, -2.0 * k / dim);
    e(2 * k) = std::sin(t * w);
    e(2 * k + 1) = std::cos(t * w);
  }
  return e;
}

ParamLayout::ParamLayout(const ModelConfig& config) {
  const Index h = config.hidden_dim;
  const Index l = config.seq_len;
  Index off = 0;
  auto take = [&](Index n) {
    const Index at = off;
    off += n;
    return at;
  };
  in_w = take(h * config.input_dim());
  in_b = take(h);
  for (int k = 0; k < config.num_blocks; ++k) {
    Block b;
    b.w1 = take(h * h);
    b.b1 = take(h);
    b.w2 = take(h * h);
    b.b2 = take(h);
    blocks.push_back(b);
  }
  out_w = take(l * h);
  out_b = take(l);
  total = off;
}

VectorFieldModel init_model(const ModelConfig& config, std::uint64_t seed,
                            bool zero_output) {
  config.validate();
  const ParamLayout lay(config);
  VectorFieldModel m;
  m.config = config;
  m.params = VectorXd::Zero(lay.total);
  Rng rng(seed);
  const Index h = config.hidden_dim;
  auto fill = [&](Index off, Index rows, Index cols) {
    m.params.segment(off, rows * cols) =
        standard_normal(rng, rows * cols) / std::sqrt(static_cast<double>(cols));
  };
  fill(lay.in_w, h, config.input_dim());
  for (const auto& b : lay.blocks) {
    fill(b.w1, h, h);
    fill(b.w2, h, h);
  }
  if (!zero_output) fill(lay.out_w, config.seq_len, h);
  m.ema = m.params;
  return m;
}

VectorXd make_condition(const VectorXd& past, int seq_len,
                        const std::vector<int>& lags,
                        const VectorXd& history) {
  const Index c = past.size();
  const Index l = seq_len;
  if (c < 1 || c > l)
    throw ValidationError("make_condition: past length " + std::to_string(c) +
                          " outside [1, " + std::to_string(l) + "]");
  VectorXd out = VectorXd::Zero(l * (2 + static_cast<Index>(lags.size())));
  out.head(c) = past;
  out.segment(l, c).setOnes();
  const Index hist = history.size();
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const Index base = l * (2 + static_cast<Index>(k));
    for (Index i = 0; i < l; ++i) {
      const Index src = i - lags[k];
      if (src >= c) continue;  // not observed yet
      if (src >= 0)
        out(base + i) = past(src);
      else if (-src <= hist)
        out(base + i) = history(hist + src);
    }
  }
  return out;
}

MatrixXd forward(const ModelConfig& config, const VectorXd& params,
                 const VectorXd& t, const MatrixXd& x, const MatrixXd& c,
                 ForwardCache* cache) {
  const ParamLayout lay(config);
  const Index l = config.seq_len;
  const Index h = config.hidden_dim;
  const Index e = config.time_embed_dim;
  const Index b = x.cols();
  if (params.size() != lay.total)
    throw ValidationError("forward: expected " + std::to_string(lay.total) +
                          " parameters, got " + std::to_string(params.size()));
  if (x.rows() != l || t.size() != b)
    throw ValidationError("forward: x must be [" + std::to_string(l) +
                          " x B] with one time per column");
  if (config.conditional && (c.rows() != config.cond_dim() || c.cols() != b))
    throw ValidationError("forward: conditional model needs a [" +
                          std::to_string(config.cond_dim()) +
                          " x B] condition");
  if (!config.conditional && c.size() != 0)
    throw ValidationError("forward: unconditional model given a condition");

  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.z.resize(config.input_dim(), b);
  fc.z.topRows(l) = x;
  for (Index j = 0; j < b; ++j)
    fc.z.block(l, j, e, 1) = time_embed(t(j), static_cast<int>(e),
                                        config.time_scale);
  if (config.conditional) fc.z.bottomRows(config.cond_dim()) = c;

  fc.h.assign(1, MatrixXd());
  fc.a.clear();
  fc.g.clear();
  fc.h[0] = weight(params, lay.in_w, h, config.input_dim()) * fc.z;
  fc.h[0].colwise() += bias(params, lay.in_b, h);
  for (const auto& blk : lay.blocks) {
    MatrixXd a = weight(params, blk.w1, h, h) * fc.h.back();
    a.colwise() += bias(params, blk.b1, h);
    MatrixXd g = gelu(a);
    MatrixXd next = fc.h.back() + weight(params, blk.w2, h, h) * g;
    next.colwise() += bias(params, blk.b2, h);
    fc.a.push_back(std::move(a));
    fc.g.push_back(std::move(g));
    fc.h.push_back(std::move(next));
  }
  fc.top = gelu(fc.h.back());
  MatrixXd out = weight(params, lay.out_w, l, h) * fc.top;
  out.colwise() += bias(params, lay.out_b, l);
  return out;
}

void backward(const ModelConfig& config, const VectorXd& params,
              const ForwardCache& cache, const MatrixXd& d_out,
              VectorXd* d_params, MatrixXd* d_x) {
  const ParamLayout lay(config);
  const Index l = config.seq_len;
  const Index h = config.hidden_dim;
  if (d_params) d_params->setZero(lay.total);
  auto put = [&](Index off, const MatrixXd& m) {
    if (d_params) d_params->segment(off, m.size()) = m.reshaped();
  };

  put(lay.out_w, d_out * cache.top.transpose());
  put(lay.out_b, d_out.rowwise().sum());
  MatrixXd dh = (weight(params, lay.out_w, l, h).transpose() * d_out)
                    .cwiseProduct(gelu_grad(cache.h.back()));
  for (int k = config.num_blocks - 1; k >= 0; --k) {
    const auto& blk = lay.blocks[k];
    put(blk.w2, dh * cache.g[k].transpose());
    put(blk.b2, dh.rowwise().sum());
    const MatrixXd da = (weight(params, blk.w2, h, h).transpose() * dh)
                            .cwiseProduct(gelu_grad(cache.a[k]));
    put(blk.w1, da * cache.h[k].transpose());
    put(blk.b1, da.rowwise().sum());
    dh.noalias() += weight(params, blk.w1, h, h).transpose() * da;
  }
  put(lay.in_w, dh * cache.z.transpose());
  put(lay.in_b, dh.rowwise().sum());
  if (d_x) {
    // Only the x rows of the input projection matter for dx.
    *d_x = weight(params, lay.in_w, h, config.input_dim())
               .leftCols(l)
               .transpose() *
           dh;
  }
}

LossGrad regression_loss(const ModelConfig& config, const VectorXd& params,
                         const VectorXd& t, const MatrixXd& x,
                         const MatrixXd& c, const MatrixXd& target) {
  if (target.rows() != x.rows() || target.cols() != x.cols())
    throw ValidationError("regression_loss: target shape mismatch");
  ForwardCache cache;
  const MatrixXd out = forward(config, params, t, x, c, &cache);
  const MatrixXd resid = out - target;
  const double b = static_cast<double>(x.cols());
  LossGrad lg;
  lg.loss = resid.squaredNorm() / b;
  if (!std::isfinite(lg.loss))
    throw NumericalError("non-finite loss (max |u| = " +
                         std::to_string(out.cwiseAbs().maxCoeff()) + ")");
  backward(config, params, cache, (2.0 / b) * resid, &lg.grads, nullptr);
  return lg;
}

OptimState OptimState::for_model(const VectorFieldModel& model) {
  OptimState s;
  s.m = VectorXd::Zero(model.params.size());
  s.v = VectorXd::Zero(model.params.size());
  return s;
}

double clip_global_norm(VectorXd& g, double max_norm) {
  const double norm = g.norm();
  if (norm > max_norm) g *= max_norm / norm;
  return norm;
}

void opt_step(VectorFieldModel& model, OptimState& opt, VectorXd grads) {
  if (grads.size() != model.params.size())
    throw ValidationError("opt_step: gradient size mismatch");
  if (!grads.allFinite()) throw NumericalError("opt_step: non-finite gradient");
  if (opt.m.size() != grads.size()) opt.m = VectorXd::Zero(grads.size());
  if (opt.v.size() != grads.size()) opt.v = VectorXd::Zero(grads.size());
  clip_global_norm(grads, opt.clip_threshold);
  ++opt.step;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grads;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  model.params.array() -= opt.learning_rate * (opt.m.array() / c1) /
                          ((opt.v.array() / c2).sqrt() + opt.eps);
  const double mom = model.ema_momentum;
  model.ema = mom * model.ema + (1.0 - mom) * model.params;
}

}  // namespace tsflow::net
