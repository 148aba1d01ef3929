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

#include "oracles.hpp"
#include "tsflow/data.hpp"
#include "tsflow/error.hpp"
#include "tsflow/metrics.hpp"
#include "tsflow/random.hpp"

namespace tsflow::metrics {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Reference weighted CRPS from the definition: type-7 quantiles per horizon,
// nine pinball terms, sum over horizons divided by sum |y|.
double crps_oracle(const MatrixXd& samples, const VectorXd& y) {
  double loss = 0, scale = 0;
  for (Eigen::Index h = 0; h < y.size(); ++h) {
    const std::vector<double> col(samples.col(h).data(),
                                  samples.col(h).data() + samples.rows());
    double point = 0;
    for (int k = 1; k <= 9; ++k) {
      const double kappa = k / 10.0;
      const double q = oracle::quantile7(col, kappa);
      point += 2 * (kappa - (y(h) < q ? 1.0 : 0.0)) * (y(h) - q);
    }
    loss += point / 9;
    scale += std::abs(y(h));
  }
  return loss / scale;
}

TEST(Pinball, Examples) {
  EXPECT_EQ(pinball(2.0, 2.0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(pinball(1.0, 3.0, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(pinball(3.0, 1.0, 0.1), 1.8);
}

TEST(Pinball, NonNegativeAndConvex) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-3, 3), k(0.01, 0.99);
  for (int i = 0; i < 500; ++i) {
    const double y = u(rng), a = u(rng), b = u(rng), kappa = k(rng);
    EXPECT_GE(pinball(a, y, kappa), 0.0);
    const double mid = pinball(0.5 * (a + b), y, kappa);
    EXPECT_LE(mid, 0.5 * (pinball(a, y, kappa) + pinball(b, y, kappa)) + 1e-12);
  }
}

TEST(Quantiles, TypeSevenAndMonotone) {
  Rng rng(2);
  const MatrixXd s = standard_normal(rng, 37, 3);
  const QuantileForecast qf = quantiles_from_samples(s);
  for (int h = 0; h < 3; ++h) {
    const std::vector<double> col(s.col(h).data(), s.col(h).data() + 37);
    for (int k = 0; k < 9; ++k) {
      EXPECT_NEAR(qf.quantiles(k, h), oracle::quantile7(col, kQuantileLevels[k]),
                  1e-15);
      if (k) EXPECT_LE(qf.quantiles(k - 1, h), qf.quantiles(k, h));
    }
  }
  EXPECT_THROW(quantiles_from_samples(MatrixXd(0, 3)), ValidationError);
}

TEST(Crps, Examples) {
  const VectorXd y = VectorXd::Constant(1, 1.0);
  EXPECT_EQ(crps(MatrixXd::Constant(20, 1, 1.0), y), 0.0);
  // q = 0 at every level: 2 * mean(kappa) = 1.
  EXPECT_NEAR(crps(point_quantiles(VectorXd::Zero(1)), y), 1.0, 1e-15);
  EXPECT_NEAR(crps(MatrixXd::Zero(9, 1), y), 1.0, 1e-15);
}

TEST(Crps, MatchesDefinitionOracle) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const MatrixXd s = standard_normal(rng, 50 + t, 6);
    const VectorXd y = standard_normal(rng, 6);
    EXPECT_NEAR(crps(s, y), crps_oracle(s, y), 1e-12);
  }
}

TEST(Crps, WiderForecastScoresWorse) {
  Rng rng(4);
  const VectorXd y = VectorXd::Constant(5, 2.0);
  const MatrixXd z = standard_normal(rng, 1000, 5);
  const MatrixXd narrow = (z * 0.1).array() + 2.0;
  const MatrixXd wide = (z * 1.0).array() + 2.0;
  EXPECT_LT(crps(narrow, y), crps(wide, y));
  EXPECT_LT(crps(MatrixXd::Constant(9, 5, 2.0), y),
            crps(MatrixXd::Constant(9, 5, 3.0), y));
}

TEST(Crps, AccumulatorPoolsWindows) {
  Rng rng(5);
  CrpsAccumulator acc;
  double loss = 0, scale = 0;
  for (int w = 0; w < 4; ++w) {
    const MatrixXd s = standard_normal(rng, 30, 3);
    const VectorXd y = standard_normal(rng, 3);
    acc.add_samples(s, y);
    loss += crps_oracle(s, y) * y.cwiseAbs().sum();
    scale += y.cwiseAbs().sum();
  }
  EXPECT_NEAR(acc.value(), loss / scale, 1e-12);
  EXPECT_EQ(acc.points(), 12u);
  CrpsAccumulator zero;
  zero.add(point_quantiles(VectorXd::Ones(2)), VectorXd::Zero(2));
  // All-zero targets: the unweighted per-point mean, 2 * mean(1 - kappa).
  EXPECT_NEAR(zero.value(), 1.0, 1e-15);
}

TEST(SeasonalNaive, RepeatsLastSeason) {
  VectorXd past(6);
  past << 1, 2, 3, 4, 5, 6;
  const VectorXd f = seasonal_naive(past, 4, 6);
  const double want[] = {3, 4, 5, 6, 3, 4};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(f(i), want[i]);
}

std::vector<data::Window> windows_from(const MatrixXd& rows, int c, int p) {
  std::vector<data::Window> out;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    data::Window w;
    w.past = rows.row(r).head(c).transpose();
    w.future = rows.row(r).segment(c, p).transpose();
    out.push_back(w);
  }
  return out;
}

TEST(Lps, ExactLinearProcessIsRecovered) {
  Rng rng(6);
  const int c = 3, p = 2;
  auto make = [&](int n) {
    MatrixXd rows(n, c + p);
    for (int r = 0; r < n; ++r) {
      rows(r, 0) = standard_normal(rng, 1)(0) * 3;
      for (int i = 1; i < c + p; ++i) rows(r, i) = 0.5 * rows(r, i - 1);
    }
    return rows;
  };
  const MatrixXd train = make(40);
  EXPECT_LT(lps(train, windows_from(make(10), c, p), c, p), 1e-6);
}

TEST(Lps, WhiteNoiseMatchesMeanForecast) {
  Rng rng(7);
  const int c = 4, p = 3;
  const MatrixXd train = standard_normal(rng, 20000, c + p).array() + 1.0;
  const MatrixXd test = standard_normal(rng, 200, c + p).array() + 1.0;
  const auto windows = windows_from(test, c, p);
  const double got = lps(train, windows, c, p);
  CrpsAccumulator mean_fc;
  for (const auto& w : windows) mean_fc.add(point_quantiles(VectorXd::Ones(p)), w.future);
  EXPECT_NEAR(got, mean_fc.value(), 0.02 * mean_fc.value());
  EXPECT_EQ(got, lps(train, windows, c, p));
}

TEST(Lps, RidgeHandlesRankDeficiency) {
  const MatrixXd pasts = MatrixXd::Ones(10, 3);  // collinear with intercept
  const MatrixXd futures = MatrixXd::Constant(10, 2, 4.0);
  const LinearForecaster f = fit_linear(pasts, futures);
  EXPECT_TRUE(f.weights.allFinite());
  EXPECT_NEAR(f.predict(VectorXd::Ones(3))(0), 4.0, 1e-6);
}

TEST(WassersteinStudy, RatiosBoundedAndDeterministic) {
  data::SyntheticSpec spec;
  spec.n_series = 4;
  spec.length = 200;
  const data::Dataset ds = data::gen_synthetic(spec);
  const auto norm = data::Normalizer::fit(ds, data::NormKind::kFreqZscore,
                                          data::NormScope::kDataset);
  const std::vector<gp::KernelSpec> kernels = {
      gp::KernelSpec::with_defaults(gp::KernelKind::kIsotropic),
      gp::KernelSpec::with_defaults(gp::KernelKind::kPE)};
  const auto rows = wasserstein_study(ds, norm, kernels, {1, 2}, 8, 3, 5);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_LE(r.ratio, 1.0 + 1e-12);
    EXPECT_NEAR(r.ratio, r.w2 / r.baseline, 1e-15);
    EXPECT_EQ(r.length, r.multiple * 24);
  }
  const auto again = wasserstein_study(ds, norm, kernels, {1, 2}, 8, 3, 5);
  EXPECT_EQ(wasserstein_csv(rows), wasserstein_csv(again));
  EXPECT_EQ(wasserstein_csv(rows).substr(0, 41),
            "kernel,multiple,length,w2,baseline,ratio\n");
  EXPECT_THROW(wasserstein_study(ds, norm, kernels, {20}, 8, 3, 5),
               ValidationError);
}

}  // namespace
}  // namespace tsflow::metrics
