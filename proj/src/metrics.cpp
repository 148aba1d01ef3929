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

#include "tsflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "tsflow/error.hpp"
#include "tsflow/ot.hpp"
#include "tsflow/random.hpp"

namespace tsflow::metrics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double pinball(double q, double y, double kappa) {
  return (kappa - (y < q ? 1.0 : 0.0)) * (y - q);
}

QuantileForecast quantiles_from_samples(const MatrixXd& samples) {
  if (samples.rows() == 0 || samples.cols() == 0)
    throw ValidationError("crps: empty sample set");
  const Eigen::Index s = samples.rows();
  QuantileForecast qf;
  qf.quantiles.resize(9, samples.cols());
  std::vector<double> col(static_cast<std::size_t>(s));
  for (Eigen::Index h = 0; h < samples.cols(); ++h) {
    for (Eigen::Index i = 0; i < s; ++i) col[i] = samples(i, h);
    std::sort(col.begin(), col.end());
    for (int k = 0; k < 9; ++k) {
      const double pos = (s - 1) * qf.levels[k];
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, col.size() - 1);
      qf.quantiles(k, h) = col[lo] + (pos - lo) * (col[hi] - col[lo]);
    }
    // Interpolation is monotone already; sorting guards against rounding.
    std::sort(qf.quantiles.col(h).begin(), qf.quantiles.col(h).end());
  }
  return qf;
}

QuantileForecast point_quantiles(const VectorXd& forecast) {
  QuantileForecast qf;
  qf.quantiles = forecast.transpose().replicate(9, 1);
  return qf;
}

VectorXd crps_per_point(const QuantileForecast& qf, const VectorXd& y) {
  if (qf.quantiles.rows() != 9 || qf.quantiles.cols() != y.size())
    throw ValidationError("crps: quantiles must be [9 x P] with P = |y|");
  VectorXd out = VectorXd::Zero(y.size());
  for (Eigen::Index h = 0; h < y.size(); ++h) {
    for (int k = 0; k < 9; ++k)
      out(h) += 2.0 * pinball(qf.quantiles(k, h), y(h), qf.levels[k]);
    out(h) /= 9.0;
  }
  return out;
}

void CrpsAccumulator::add(const QuantileForecast& qf, const VectorXd& y) {
  loss_sum_ += crps_per_point(qf, y).sum();
  abs_sum_ += y.cwiseAbs().sum();
  points_ += static_cast<std::size_t>(y.size());
}

void CrpsAccumulator::add_samples(const MatrixXd& samples, const VectorXd& y) {
  add(quantiles_from_samples(samples), y);
}

double CrpsAccumulator::value() const {
  if (points_ == 0) throw ValidationError("crps: nothing accumulated");
  if (abs_sum_ == 0.0) return mean_per_point();
  return loss_sum_ / abs_sum_;
}

double CrpsAccumulator::mean_per_point() const {
  if (points_ == 0) throw ValidationError("crps: nothing accumulated");
  return loss_sum_ / static_cast<double>(points_);
}

double crps(const MatrixXd& samples, const VectorXd& y) {
  CrpsAccumulator acc;
  acc.add_samples(samples, y);
  return acc.value();
}

double crps(const QuantileForecast& qf, const VectorXd& y) {
  CrpsAccumulator acc;
  acc.add(qf, y);
  return acc.value();
}

VectorXd seasonal_naive(const VectorXd& past, int period, int pred_len) {
  if (period < 1 || past.size() < period)
    throw ValidationError("seasonal_naive: need at least one full period");
  VectorXd out(pred_len);
  const Eigen::Index base = past.size() - period;
  for (int h = 0; h < pred_len; ++h) out(h) = past(base + h % period);
  return out;
}

VectorXd LinearForecaster::predict(const VectorXd& past) const {
  if (past.size() != weights.rows())
    throw ValidationError("linear forecaster: past length mismatch");
  return weights.transpose() * past + intercept;
}

LinearForecaster fit_linear(const MatrixXd& pasts, const MatrixXd& futures,
                            double ridge) {
  if (pasts.rows() != futures.rows() || pasts.rows() == 0)
    throw ValidationError("fit_linear: need matching, non-empty designs");
  const Eigen::Index n = pasts.rows();
  const Eigen::Index c = pasts.cols();
  MatrixXd x(n, c + 1);
  x.leftCols(c) = pasts;
  x.col(c).setOnes();
  MatrixXd gram = x.transpose() * x;
  gram.diagonal().head(c).array() += ridge;
  const MatrixXd coef = gram.ldlt().solve(x.transpose() * futures);
  if (!coef.allFinite())
    throw NumericalError("fit_linear: normal equations are singular");
  return LinearForecaster{coef.topRows(c), coef.row(c).transpose()};
}

double lps(const MatrixXd& synthetic, const std::vector<data::Window>& test,
           int context_len, int pred_len) {
  if (synthetic.cols() < context_len + pred_len)
    throw ValidationError("lps: synthetic windows shorter than C + P");
  if (test.empty()) throw ValidationError("lps: no test windows");
  const LinearForecaster lin =
      fit_linear(synthetic.leftCols(context_len),
                 synthetic.middleCols(context_len, pred_len));
  CrpsAccumulator acc;
  for (const auto& w : test) {
    if (w.past.size() != context_len || w.future.size() != pred_len)
      throw ValidationError("lps: test window shape mismatch");
    acc.add(point_quantiles(lin.predict(w.past)), w.future);
  }
  return acc.value();
}

double lps(const data::Dataset& synthetic,
           const std::vector<data::Window>& test, int context_len,
           int pred_len) {
  const int l = context_len + pred_len;
  std::vector<VectorXd> rows;
  for (const auto& s : synthetic.series)
    for (std::size_t o = 0; o + l <= s.values.size(); ++o)
      rows.push_back(Eigen::Map<const VectorXd>(s.values.data() + o, l));
  if (rows.empty()) throw ValidationError("lps: synthetic series shorter than C + P");
  MatrixXd x(static_cast<Eigen::Index>(rows.size()), l);
  for (std::size_t i = 0; i < rows.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return lps(x, test, context_len, pred_len);
}

std::vector<WassersteinRow> wasserstein_study(
    const data::Dataset& dataset, const data::Normalizer& normalizer,
    const std::vector<gp::KernelSpec>& kernels,
    const std::vector<int>& multiples, int batch, int trials,
    std::uint64_t seed) {
  if (batch < 1 || trials < 1)
    throw ValidationError("wasserstein_study: batch and trials must be >= 1");
  const int p = dataset.period;
  std::vector<WassersteinRow> rows;
  for (int m : multiples) {
    if (m < 1) throw ValidationError("wasserstein_study: multiples must be >= 1");
    const int len = m * p;
    // Series whose training range holds a full window, and how many offsets.
    std::vector<std::pair<std::size_t, std::int64_t>> room;
    for (std::size_t i = 0; i < dataset.series.size(); ++i) {
      const auto span = static_cast<std::int64_t>(dataset.train_end(i)) - len + 1;
      if (span > 0) room.emplace_back(i, span);
    }
    if (room.empty())
      throw ValidationError("wasserstein_study: no training range holds " +
                            std::to_string(len) + " points (multiple " +
                            std::to_string(m) + ")");

    // Data batches are shared by every kernel.
    std::vector<MatrixXd> data_batches;
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng(derive_seed(derive_seed(seed, 1000 + m), trial));
      std::uniform_int_distribution<std::size_t> pick(0, room.size() - 1);
      MatrixXd x(batch, len);
      for (int b = 0; b < batch; ++b) {
        const auto [si, span] = room[pick(rng)];
        std::uniform_int_distribution<std::int64_t> off(0, span - 1);
        const std::int64_t o = off(rng);
        const auto& s = dataset.series[si];
        const VectorXd raw = Eigen::Map<const VectorXd>(s.values.data() + o, len);
        x.row(b) = normalizer.stats(si).apply(raw, s.start_index + o).transpose();
      }
      data_batches.push_back(std::move(x));
    }

    const VectorXd times = gp::normalize_times(0, len, p);
    for (const auto& k : kernels) {
      const gp::CovMatrix cov = gp::build_cov(k, times);
      WassersteinRow row;
      row.kernel = std::string(gp::to_string(k.kind));
      row.multiple = m;
      row.length = len;
      for (int trial = 0; trial < trials; ++trial) {
        // Same normals for every kernel, so kernels differ only in L.
        const MatrixXd prior =
            gp::gp_sample(cov, batch, derive_seed(derive_seed(seed, 2000 + m), trial));
        const ot::BatchW2 r = ot::batch_w2_report(prior, data_batches[trial]);
        row.w2 += r.w2;
        row.baseline += r.baseline;
      }
      row.w2 /= trials;
      row.baseline /= trials;
      row.ratio = row.baseline > 0.0 ? row.w2 / row.baseline : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string wasserstein_csv(const std::vector<WassersteinRow>& rows) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "kernel,multiple,length,w2,baseline,ratio\n";
  for (const auto& r : rows)
    out << r.kernel << ',' << r.multiple << ',' << r.length << ',' << r.w2
        << ',' << r.baseline << ',' << r.ratio << '\n';
  return out.str();
}

}  // namespace tsflow::metrics
