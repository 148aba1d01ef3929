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

#ifndef TSFLOW_METRICS_HPP_
#define TSFLOW_METRICS_HPP_

// Evaluation: pinball loss, quantile CRPS, the linear predictive score and
// the prior-vs-data Wasserstein study.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tsflow/data.hpp"
#include "tsflow/gp.hpp"

namespace tsflow::metrics {

inline constexpr std::array<double, 9> kQuantileLevels = {
    0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

// (kappa - 1{y < q}) (y - q)
double pinball(double q, double y, double kappa);

struct QuantileForecast {
  std::array<double, 9> levels = kQuantileLevels;
  Eigen::MatrixXd quantiles;  // [9 x P], non-decreasing down each column
};

// Type-7 empirical quantiles of each column of `samples` ([S x P]); crossing
// quantiles are sorted.
QuantileForecast quantiles_from_samples(const Eigen::MatrixXd& samples);

// Every level equal to the point forecast.
QuantileForecast point_quantiles(const Eigen::VectorXd& forecast);

// Mean over the nine levels of 2 * pinball, per horizon.
Eigen::VectorXd crps_per_point(const QuantileForecast& qf,
                               const Eigen::VectorXd& y);

// Weighted CRPS over any number of windows:
//   sum of per-point CRPS / sum |y|.
// When every target is zero the plain per-point mean is reported instead.
class CrpsAccumulator {
 public:
  void add(const QuantileForecast& qf, const Eigen::VectorXd& y);
  void add_samples(const Eigen::MatrixXd& samples, const Eigen::VectorXd& y);

  double value() const;
  double mean_per_point() const;
  double loss_sum() const { return loss_sum_; }
  double abs_sum() const { return abs_sum_; }
  std::size_t points() const { return points_; }

 private:
  double loss_sum_ = 0.0;
  double abs_sum_ = 0.0;
  std::size_t points_ = 0;
};

// Single-window weighted CRPS of a sample set ([S x P]).
double crps(const Eigen::MatrixXd& samples, const Eigen::VectorXd& y);
double crps(const QuantileForecast& qf, const Eigen::VectorXd& y);

// y_hat_h = y_{C - p + (h mod p)}: repeat the last observed season.
Eigen::VectorXd seasonal_naive(const Eigen::VectorXd& past, int period,
                               int pred_len);

// Ordinary least squares with intercept, future = W^T past + b. The ridge
// term (not applied to the intercept) keeps the normal equations solvable.
struct LinearForecaster {
  Eigen::MatrixXd weights;  // [C x P]
  Eigen::VectorXd intercept;

  Eigen::VectorXd predict(const Eigen::VectorXd& past) const;
};

inline constexpr double kLpsRidge = 1e-6;

LinearForecaster fit_linear(const Eigen::MatrixXd& pasts,
                            const Eigen::MatrixXd& futures,
                            double ridge = kLpsRidge);

// Fit on synthetic windows (rows of length >= C + P; the first C + P
// entries are used) and score point forecasts on `test` with weighted CRPS.
double lps(const Eigen::MatrixXd& synthetic, const std::vector<data::Window>& test,
           int context_len, int pred_len);
// Every length-(C + P) window (stride 1) of every synthetic series.
double lps(const data::Dataset& synthetic, const std::vector<data::Window>& test,
           int context_len, int pred_len);

struct WassersteinRow {
  std::string kernel;
  int multiple = 0;
  int length = 0;
  double w2 = 0.0;        // mean batch W2^2 over trials
  double baseline = 0.0;  // mean random-coupling cost over trials
  double ratio = 0.0;
};

// For each length m * period: T data batches of B normalized windows drawn
// from the training ranges (shared by all kernels) against T prior batches
// per kernel.
std::vector<WassersteinRow> wasserstein_study(
    const data::Dataset& dataset, const data::Normalizer& normalizer,
    const std::vector<gp::KernelSpec>& kernels,
    const std::vector<int>& multiples, int batch, int trials,
    std::uint64_t seed);

std::string wasserstein_csv(const std::vector<WassersteinRow>& rows);

}  // namespace tsflow::metrics

#endif  // TSFLOW_METRICS_HPP_
