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
#include <string>

#include <spdlog/spdlog.h>

#include "tsflow/data.hpp"
#include "tsflow/error.hpp"

namespace tsflow::data {
namespace {

std::size_t phase_of(std::int64_t abs_index, std::size_t period) {
  const auto p = static_cast<std::int64_t>(period);
  return static_cast<std::size_t>(((abs_index % p) + p) % p);
}

NormStats fit_phases(std::span<const Segment> segments, int period) {
  if (period < 1) throw ValidationError("period must be >= 1");
  const auto p = static_cast<std::size_t>(period);
  std::vector<double> sum(p, 0.0);
  std::vector<std::size_t> count(p, 0);
  for (const auto& seg : segments)
    for (std::size_t i = 0; i < seg.values.size(); ++i) {
      const std::size_t k = phase_of(seg.abs_start + static_cast<std::int64_t>(i), p);
      sum[k] += seg.values[i];
      ++count[k];
    }
  NormStats stats;
  stats.kind = NormKind::kFreqZscore;
  stats.phase_mean.resize(p);
  stats.phase_std.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    if (count[k] < 2)
      throw ValidationError("phase " + std::to_string(k) +
                            " has fewer than 2 observations; need length >= "
                            "2*period");
    stats.phase_mean[k] = sum[k] / static_cast<double>(count[k]);
  }
  std::vector<double> sq(p, 0.0);
  for (const auto& seg : segments)
    for (std::size_t i = 0; i < seg.values.size(); ++i) {
      const std::size_t k = phase_of(seg.abs_start + static_cast<std::int64_t>(i), p);
      const double d = seg.values[i] - stats.phase_mean[k];
      sq[k] += d * d;
    }
  std::size_t floored = 0;
  for (std::size_t k = 0; k < p; ++k) {
    const double sd = std::sqrt(sq[k] / static_cast<double>(count[k]));
    if (!(sd > kStatFloor)) ++floored;
    stats.phase_std[k] = sd > kStatFloor ? sd : kStatFloor;
  }
  if (floored > 0)
    spdlog::warn("freq-zscore: {} of {} phases have std <= {:g}; floored", floored,
                 p, kStatFloor);
  return stats;
}

}  // namespace

NormKind parse_norm_kind(std::string_view name) {
  if (name == "none") return NormKind::kNone;
  if (name == "mean-scale") return NormKind::kMeanScale;
  if (name == "freq-zscore") return NormKind::kFreqZscore;
  throw ValidationError("unknown normalization '" + std::string(name) + "'");
}

std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::kNone: return "none";
    case NormKind::kMeanScale: return "mean-scale";
    case NormKind::kFreqZscore: return "freq-zscore";
  }
  return "?";
}

NormScope parse_norm_scope(std::string_view name) {
  if (name == "series") return NormScope::kSeries;
  if (name == "dataset") return NormScope::kDataset;
  throw ValidationError("unknown normalization scope '" + std::string(name) +
                        "'");
}

std::string_view to_string(NormScope scope) {
  return scope == NormScope::kSeries ? "series" : "dataset";
}

Eigen::VectorXd NormStats::apply(const Eigen::VectorXd& values,
                                 std::int64_t abs_start) const {
  switch (kind) {
    case NormKind::kNone:
      return values;
    case NormKind::kMeanScale:
      return values / scale;
    case NormKind::kFreqZscore: {
      Eigen::VectorXd out(values.size());
      for (Eigen::Index i = 0; i < values.size(); ++i) {
        const std::size_t k = phase_of(abs_start + i, phase_mean.size());
        out(i) = (values(i) - phase_mean[k]) / phase_std[k];
      }
      return out;
    }
  }
  return values;
}

Eigen::VectorXd NormStats::invert(const Eigen::VectorXd& values,
                                  std::int64_t abs_start) const {
  switch (kind) {
    case NormKind::kNone:
      return values;
    case NormKind::kMeanScale:
      return values * scale;
    case NormKind::kFreqZscore: {
      Eigen::VectorXd out(values.size());
      for (Eigen::Index i = 0; i < values.size(); ++i) {
        const std::size_t k = phase_of(abs_start + i, phase_mean.size());
        out(i) = values(i) * phase_std[k] + phase_mean[k];
      }
      return out;
    }
  }
  return values;
}

std::pair<Eigen::VectorXd, NormStats> mean_scale(std::span<const double> series,
                                                 std::span<const double> hist) {
  if (hist.empty()) throw ValidationError("mean_scale: empty history");
  double sum = 0.0;
  for (double v : hist) sum += v;
  const double mean = sum / static_cast<double>(hist.size());
  NormStats stats;
  stats.kind = NormKind::kMeanScale;
  stats.scale = std::max(std::abs(mean), kStatFloor);
  if (!(std::abs(mean) >= kStatFloor))
    spdlog::warn("mean-scale: |mean| = {:g} floored to {:g}", std::abs(mean),
                 kStatFloor);
  const Eigen::VectorXd x =
      Eigen::Map<const Eigen::VectorXd>(series.data(), series.size());
  return {stats.apply(x, 0), stats};
}

std::pair<Eigen::VectorXd, NormStats> freq_zscore(std::span<const double> series,
                                                  int period) {
  if (period < 1) throw ValidationError("period must be >= 1");
  if (series.size() < 2 * static_cast<std::size_t>(period))
    throw ValidationError("freq_zscore: series length " +
                          std::to_string(series.size()) + " < 2*period");
  const Segment seg{series, 0};
  NormStats stats = fit_phases(std::span<const Segment>(&seg, 1), period);
  const Eigen::VectorXd x =
      Eigen::Map<const Eigen::VectorXd>(series.data(), series.size());
  return {stats.apply(x, 0), std::move(stats)};
}

NormStats fit_freq_zscore(std::span<const Segment> segments, int period) {
  return fit_phases(segments, period);
}

Normalizer Normalizer::fit(const Dataset& dataset, NormKind kind,
                           NormScope scope) {
  Normalizer n;
  n.kind_ = kind;
  const std::size_t count = dataset.series.size();
  auto train_span = [&](std::size_t i) {
    return std::span<const double>(dataset.series[i].values.data(),
                                   dataset.train_end(i));
  };
  switch (kind) {
    case NormKind::kNone:
      n.stats_.assign(1, NormStats{});
      n.shared_ = true;
      break;
    case NormKind::kMeanScale:
      if (scope == NormScope::kDataset) {
        std::vector<double> all;
        for (std::size_t i = 0; i < count; ++i) {
          auto s = train_span(i);
          all.insert(all.end(), s.begin(), s.end());
        }
        n.stats_.push_back(mean_scale({}, all).second);
        n.shared_ = true;
      } else {
        for (std::size_t i = 0; i < count; ++i)
          n.stats_.push_back(mean_scale({}, train_span(i)).second);
      }
      break;
    case NormKind::kFreqZscore:
      if (scope == NormScope::kDataset) {
        std::vector<Segment> segs;
        for (std::size_t i = 0; i < count; ++i)
          segs.push_back({train_span(i), dataset.series[i].start_index});
        n.stats_.push_back(fit_phases(segs, dataset.period));
        n.shared_ = true;
      } else {
        for (std::size_t i = 0; i < count; ++i) {
          const Segment seg{train_span(i), dataset.series[i].start_index};
          n.stats_.push_back(
              fit_phases(std::span<const Segment>(&seg, 1), dataset.period));
        }
      }
      break;
  }
  return n;
}

const NormStats& Normalizer::stats(std::size_t series_index) const {
  if (stats_.empty()) throw ValidationError("normalizer is not fitted");
  return shared_ ? stats_.front() : stats_.at(series_index);
}

Window Normalizer::normalize(const Dataset& dataset, const Window& window) const {
  const NormStats& st = stats(window.series_index);
  const std::int64_t start =
      dataset.series.at(window.series_index).start_index + window.offset;
  Window out = window;
  out.past = st.apply(window.past, start);
  out.future = st.apply(window.future, start + window.past.size());
  if (window.history.size() > 0)
    out.history = st.apply(window.history, start - window.history.size());
  return out;
}

Eigen::VectorXd Normalizer::denormalize_future(const Dataset& dataset,
                                               const Window& window,
                                               const Eigen::VectorXd& future) const {
  const std::int64_t start = dataset.series.at(window.series_index).start_index +
                             window.offset + window.past.size();
  return stats(window.series_index).invert(future, start);
}

}  // namespace tsflow::data
