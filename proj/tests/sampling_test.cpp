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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "tsflow/error.hpp"
#include "tsflow/gp.hpp"
#include "tsflow/net.hpp"
#include "tsflow/sampling.hpp"

namespace tsflow::sampling {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

net::ModelConfig tiny(int len = 8, bool conditional = false) {
  net::ModelConfig c;
  c.seq_len = len;
  c.hidden_dim = 8;
  c.num_blocks = 2;
  c.time_embed_dim = 8;
  c.conditional = conditional;
  return c;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

TEST(Euler, ConstantFieldExact) {
  const Field one = [](double, const MatrixXd& x) {
    return MatrixXd::Ones(x.rows(), x.cols());
  };
  for (int n : {1, 3, 32})
    EXPECT_EQ(euler_integrate(one, MatrixXd::Zero(2, 1), n)(0, 0), 1.0);
}

TEST(Euler, LinearFieldFirstOrder) {
  const Field lin = [](double, const MatrixXd& x) { return x; };
  const MatrixXd x0 = MatrixXd::Ones(1, 1);
  const double e = std::exp(1.0);
  const double y = euler_integrate(lin, x0, 1000)(0, 0);
  EXPECT_LT(std::abs(y - e) / e, 0.005);
  const double err1 = e - euler_integrate(lin, x0, 100)(0, 0);
  const double err2 = e - euler_integrate(lin, x0, 200)(0, 0);
  EXPECT_NEAR(err1 / err2, 2.0, 0.05);
}

TEST(Euler, SingleStepAndPartialInterval) {
  const Field f = [](double t, const MatrixXd& x) {
    return (x.array() + t).matrix();
  };
  MatrixXd x0(1, 1);
  x0 << 0.7;
  EXPECT_DOUBLE_EQ(euler_integrate(f, x0, 1)(0, 0), 0.7 + 0.7);
  // From t0 = 0.5 with one step: h = 0.5.
  EXPECT_DOUBLE_EQ(euler_integrate(f, x0, 1, 0.5)(0, 0), 0.7 + 0.5 * 1.2);
}

TEST(Euler, NonFiniteStateNamesStep) {
  const Field blow = [](double t, const MatrixXd& x) {
    MatrixXd u = x;
    if (t >= 0.5) u(0, 0) = std::numeric_limits<double>::infinity();
    return u;
  };
  try {
    euler_integrate(blow, MatrixXd::Ones(1, 1), 4);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 3 of 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(euler_integrate(blow, MatrixXd::Ones(1, 1), 0), ValidationError);
}

TEST(FlowMap, ZeroFieldIsIdentity) {
  const auto cfg = tiny();
  const auto m = net::init_model(cfg, 1);
  Rng rng(1);
  const MatrixXd x = standard_normal(rng, 8, 3);
  EXPECT_EQ(flow_map(cfg, m.params, x, MatrixXd(), 4), x);
  EXPECT_EQ(flow_map(cfg, VectorXd::Zero(m.params.size()), x, MatrixXd(), 4), x);
}

TEST(FlowMap, AgreesWithEulerOnModelField) {
  const auto cfg = tiny();
  const auto m = net::init_model(cfg, 2, false);
  Rng rng(2);
  const MatrixXd x = standard_normal(rng, 8, 3);
  const MatrixXd a = flow_map(cfg, m.params, x, MatrixXd(), 6, 0.25);
  const MatrixXd b =
      euler_integrate(model_field(cfg, m.params, MatrixXd()), x, 6, 0.25);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FlowMap, VjpMatchesFiniteDifferences) {
  const auto cfg = tiny();
  const auto m = net::init_model(cfg, 3, false);
  Rng rng(3);
  const MatrixXd x = standard_normal(rng, 8, 2);
  const MatrixXd w = standard_normal(rng, 8, 2);
  // Scalar objective sum(w .* phi(x)^2 / 2): gradient w .* phi.
  const auto g = [&](const MatrixXd& v) { return MatrixXd(w.cwiseProduct(v)); };
  const auto obj = [&](const MatrixXd& xx) {
    const MatrixXd v = flow_map(cfg, m.params, xx, MatrixXd(), 4, 0.2);
    return 0.5 * (w.array() * v.array().square()).sum();
  };
  const FlowVjp r = flow_map_vjp(cfg, m.params, x, MatrixXd(), 4, 0.2, g);
  EXPECT_EQ(r.value, flow_map(cfg, m.params, x, MatrixXd(), 4, 0.2));
  const double h = 1e-5;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 8; ++i) {
      MatrixXd xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      EXPECT_LE(rel_err(r.grad(i, j), (obj(xp) - obj(xm)) / (2 * h)), 1e-4);
    }
}

TEST(Ald, Examples) {
  AldResult r = ald_loglik_grad(VectorXd::Constant(1, 3.0),
                                VectorXd::Constant(1, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(r.loglik, -1.0);
  r = ald_loglik_grad(VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 2.0), 0.9);
  EXPECT_NEAR(r.loglik, -0.1, 1e-15);
  const VectorXd y = Eigen::Vector2d(0.4, -1.0);
  VectorXd yhat(4);
  yhat << 0.4, -1.0, 5.0, 6.0;
  r = ald_loglik_grad(y, yhat, 0.3);
  EXPECT_EQ(r.loglik, 0.0);
  EXPECT_EQ(r.grad(0), 0.3);
  EXPECT_EQ(r.grad(1), 0.3);
  EXPECT_EQ(r.grad(2), 0.0);
  EXPECT_EQ(r.grad(3), 0.0);
  EXPECT_THROW(ald_loglik_grad(y, yhat, 1.0), ValidationError);
}

TEST(Ald, NonPositiveAndMatchesFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd y = standard_normal(rng, 5);
    const VectorXd yhat = standard_normal(rng, 7);
    const double kappa = 0.1 + 0.04 * trial;
    const AldResult r = ald_loglik_grad(y, yhat, kappa);
    EXPECT_LT(r.loglik, 0.0);
    const double h = 1e-7;
    for (int i = 0; i < 7; ++i) {
      VectorXd p = yhat, m = yhat;
      p(i) += h;
      m(i) -= h;
      const double fd = (ald_loglik_grad(y, p, kappa).loglik -
                         ald_loglik_grad(y, m, kappa).loglik) / (2 * h);
      EXPECT_NEAR(r.grad(i), fd, 1e-6);
    }
  }
}

TEST(Ald, BatchUsesPerColumnKappa) {
  const VectorXd y = VectorXd::Constant(2, 1.0);
  const MatrixXd yhat = MatrixXd::Zero(3, 2);
  const MatrixXd g = ald_grad_batch(y, yhat, Eigen::Vector2d(0.2, 0.7));
  EXPECT_EQ(g(0, 0), 0.2);
  EXPECT_EQ(g(1, 1), 0.7);
  EXPECT_EQ(g(2, 1), 0.0);
}

TEST(GuidedField, ZeroScaleIsModelField) {
  const auto cfg = tiny();
  const auto m = net::init_model(cfg, 5, false);
  Rng rng(5);
  const MatrixXd x = standard_normal(rng, 8, 3);
  const VectorXd y = standard_normal(rng, 4);
  const Field gf = guided_field(cfg, m.params, y, 0.0, VectorXd::Constant(3, 0.5), 4);
  const Field base = model_field(cfg, m.params, MatrixXd());
  for (double t : {0.0, 0.3, 0.9}) EXPECT_EQ(gf(t, x), base(t, x));
}

TEST(GuidedField, ZeroModelPushesPastTowardObservation) {
  const auto cfg = tiny();
  const auto m = net::init_model(cfg, 6);
  VectorXd y(4);
  y << 1.0, -1.0, 0.0, 2.0;
  MatrixXd x = MatrixXd::Zero(8, 1);
  x(2, 0) = 0.5;
  const double s = 4.0, kappa = 0.3;
  const Field gf = guided_field(cfg, m.params, y, s, VectorXd::Constant(1, kappa), 4);
  const MatrixXd u = gf(0.999, x);
  // Below the observation: +s*kappa; above: -s*(1-kappa); future untouched.
  EXPECT_NEAR(u(0, 0), s * kappa, 1e-12);
  EXPECT_NEAR(u(1, 0), -s * (1 - kappa), 1e-12);
  EXPECT_NEAR(u(2, 0), -s * (1 - kappa), 1e-12);
  EXPECT_NEAR(u(3, 0), s * kappa, 1e-12);
  for (int i = 4; i < 8; ++i) EXPECT_EQ(u(i, 0), 0.0);
}

TEST(Langevin, ZeroIterationsIsIdentity) {
  const auto cfg = tiny();
  const auto m = net::init_model(cfg, 7, false);
  const gp::CovMatrix prior = gp::build_cov(
      gp::KernelSpec::with_defaults(gp::KernelKind::kOU), gp::normalize_times(0, 8, 4));
  Rng rng(7);
  const MatrixXd x0 = standard_normal(rng, 8, 2);
  std::vector<Rng> rngs{Rng(1), Rng(2)};
  LangevinConfig lc;
  lc.iterations = 0;
  EXPECT_EQ(conditional_prior_sampling(cfg, m.params, prior, VectorXd::Zero(4), x0,
                                       VectorXd::Constant(2, 0.5), lc, rngs),
            x0);
}

TEST(Langevin, LongRunConcentratesNearObservation) {
  const int l = 6;
  const auto cfg = tiny(l);
  const auto m = net::init_model(cfg, 8);  // zero field: flow is identity
  const gp::CovMatrix prior = gp::build_cov(
      gp::KernelSpec::with_defaults(gp::KernelKind::kIsotropic),
      gp::normalize_times(0, l, 4));
  const VectorXd y = VectorXd::Constant(l, 1.5);
  const int n = 64;
  const MatrixXd x0 = gp::gp_sample(prior, n, 3).transpose();
  std::vector<Rng> rngs;
  for (int i = 0; i < n; ++i) rngs.emplace_back(derive_seed(3, i));
  LangevinConfig lc;
  lc.iterations = 10000;
  lc.step_size = 1e-3;
  lc.noise_scale = 1.0;
  lc.inner_ode_steps = 1;
  const MatrixXd x = conditional_prior_sampling(
      cfg, m.params, prior, y, x0, VectorXd::Constant(n, 0.5), lc, rngs);
  const double before = (x0.colwise() - y).colwise().norm().mean();
  const double after = (x.colwise() - y).colwise().norm().mean();
  EXPECT_LT(after, before);
}

TEST(Langevin, Deterministic) {
  const auto cfg = tiny();
  const auto m = net::init_model(cfg, 9, false);
  const gp::CovMatrix prior = gp::build_cov(
      gp::KernelSpec::with_defaults(gp::KernelKind::kOU), gp::normalize_times(0, 8, 4));
  const MatrixXd x0 = gp::gp_sample(prior, 2, 1).transpose();
  const auto run = [&] {
    std::vector<Rng> rngs{Rng(5), Rng(6)};
    return conditional_prior_sampling(cfg, m.params, prior, VectorXd::Ones(4), x0,
                                      VectorXd::Constant(2, 0.5), LangevinConfig{},
                                      rngs);
  };
  EXPECT_EQ(run(), run());
}

TEST(Forecaster, ZeroFieldWithDegeneratePosteriorReturnsMean) {
  const auto cfg = tiny(8, true);
  const auto m = net::init_model(cfg, 10);
  const auto kernel = gp::KernelSpec::with_defaults(gp::KernelKind::kOU);
  Forecaster f(m, kernel, 4, 4, 4, SamplerConfig{});
  const gp::GprConditioner cond(kernel, gp::normalize_times(0, 4, 4),
                                gp::normalize_times(4, 4, 4));
  f.set_cond_prior([&](const VectorXd& y, Rng&) {
    VectorXd out(8);
    out << y, cond.condition(y).mean;
    return out;
  });
  const VectorXd past = Eigen::Vector4d(0.2, -0.3, 1.0, 0.4);
  const MatrixXd s = f.sample(past, VectorXd(), 3, ForecastMode::kCondDirect, 1);
  const VectorXd mu = cond.condition(past).mean;
  for (int i = 0; i < 3; ++i)
    for (int h = 0; h < 4; ++h) EXPECT_EQ(s(i, h), mu(h));
}

TEST(Forecaster, ShapesDeterminismAndBatchIndependence) {
  for (bool conditional : {true, false}) {
    const auto cfg = tiny(8, conditional);
    const auto m = net::init_model(cfg, 11, false);
    SamplerConfig sc;
    sc.ode_steps = 4;
    Forecaster f(m, gp::KernelSpec::with_defaults(gp::KernelKind::kOU), 4, 4, 4, sc);
    const ForecastMode mode =
        conditional ? ForecastMode::kCondDirect : ForecastMode::kUncondCpsGuided;
    const VectorXd past = Eigen::Vector4d(0.1, 0.5, -0.2, 0.0);
    const MatrixXd a = f.sample(past, VectorXd(), 5, mode, 42);
    ASSERT_EQ(a.rows(), 5);
    ASSERT_EQ(a.cols(), 4);
    EXPECT_TRUE(a.allFinite());
    EXPECT_EQ(a, f.sample(past, VectorXd(), 5, mode, 42));
    // Same random draws; matrix kernels may round differently per batch size.
    EXPECT_LE((a.topRows(2) - f.sample(past, VectorXd(), 2, mode, 42))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    EXPECT_NE(a, f.sample(past, VectorXd(), 5, mode, 43));
    const ForecastMode wrong =
        conditional ? ForecastMode::kUncondCpsGuided : ForecastMode::kCondDirect;
    EXPECT_THROW(f.sample(past, VectorXd(), 1, wrong, 1), ValidationError);
  }
}

TEST(Forecaster, LengthMismatchRejected) {
  const auto m = net::init_model(tiny(8, true), 1);
  EXPECT_THROW(Forecaster(m, gp::KernelSpec{}, 4, 5, 4, SamplerConfig{}),
               ValidationError);
}

TEST(Generate, ZeroFieldReturnsPriorDraws) {
  const auto cfg = tiny();
  const auto m = net::init_model(cfg, 1);
  const gp::CovMatrix prior = gp::build_cov(
      gp::KernelSpec::with_defaults(gp::KernelKind::kSE), gp::normalize_times(0, 8, 4));
  const MatrixXd g = generate(m, prior, 6, 4, 9);
  ASSERT_EQ(g.rows(), 6);
  EXPECT_EQ(g, generate(m, prior, 6, 4, 9));
  EXPECT_LE((g.topRows(2) - generate(m, prior, 2, 4, 9)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(SamplerConfig, Validation) {
  SamplerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.ode_steps = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SamplerConfig{};
  c.langevin.step_size = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SamplerConfig{};
  c.guidance.scale = -1;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_EQ(parse_forecast_mode("cond-direct"), ForecastMode::kCondDirect);
  EXPECT_THROW(parse_forecast_mode("direct"), ValidationError);
}

}  // namespace
}  // namespace tsflow::sampling
