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

#ifndef TSFLOW_DATA_HPP_
#define TSFLOW_DATA_HPP_

// Time-series ingestion, windowing, normalization and synthetic data.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace tsflow::data {

struct TimeSeries {
  std::string id;
  std::vector<double> values;
  int period = 1;
  std::int64_t start_index = 0;
};

enum class Split { kTrain, kVal, kTest };

Split parse_split(std::string_view name);
std::string_view to_string(Split split);

// A contiguous (past, future) slice. `offset` indexes the first past value
// inside the source series; `history` holds the values right before `past`
// (oldest first) when lag features are requested.
struct Window {
  Eigen::VectorXd past;
  Eigen::VectorXd future;
  std::string series_id;
  std::size_t series_index = 0;
  std::int64_t offset = 0;
  Eigen::VectorXd history;
};

// Series are split chronologically: the last pred_len points are the test
// block, the pred_len points before them the validation block, and
// everything earlier is the training range.
struct Dataset {
  std::vector<TimeSeries> series;
  int period = 1;
  int context_len = 1;
  int pred_len = 1;

  std::size_t min_length() const {
    return static_cast<std::size_t>(context_len + 3 * pred_len);
  }
  std::size_t train_end(std::size_t i) const {
    return series[i].values.size() - 2 * static_cast<std::size_t>(pred_len);
  }
};

enum class FileFormat { kCsv, kJsonl };

FileFormat parse_format(std::string_view name);
FileFormat format_from_extension(const std::filesystem::path& path);

// CSV: header `id,timestamp_index,value`, rows grouped by id with consecutive
// indices. JSONL: one object per line with `id`, `values`, `start_index`.
std::vector<TimeSeries> read_csv(std::istream& in, int period);
std::vector<TimeSeries> read_jsonl(std::istream& in, int period);

Dataset load_dataset(const std::filesystem::path& path, FileFormat format,
                     int period, int context_len, int pred_len);

// Checks period, window sizes and series lengths; throws ValidationError.
void validate_dataset(const Dataset& dataset);

void write_dataset(const Dataset& dataset, const std::filesystem::path& path,
                   FileFormat format);

// ---------------------------------------------------------------------------
// Normalization

inline constexpr double kStatFloor = 1e-8;

enum class NormKind { kNone, kMeanScale, kFreqZscore };
enum class NormScope { kSeries, kDataset };

NormKind parse_norm_kind(std::string_view name);
std::string_view to_string(NormKind kind);
NormScope parse_norm_scope(std::string_view name);
std::string_view to_string(NormScope scope);

// Phase of a value is (absolute time index) mod period, so statistics fitted
// on one range apply to any other range of the same clock.
struct NormStats {
  NormKind kind = NormKind::kNone;
  double scale = 1.0;
  std::vector<double> phase_mean;
  std::vector<double> phase_std;

  Eigen::VectorXd apply(const Eigen::VectorXd& values,
                        std::int64_t abs_start) const;
  Eigen::VectorXd invert(const Eigen::VectorXd& values,
                         std::int64_t abs_start) const;
};

// x / max(|mean(hist)|, 1e-8); the floor is logged when it applies.
std::pair<Eigen::VectorXd, NormStats> mean_scale(std::span<const double> series,
                                                 std::span<const double> hist);

// Per-phase z-score with population statistics; phases counted from index 0.
std::pair<Eigen::VectorXd, NormStats> freq_zscore(std::span<const double> series,
                                                  int period);

struct Segment {
  std::span<const double> values;
  std::int64_t abs_start = 0;
};

// Pools every segment into one set of per-phase statistics.
NormStats fit_freq_zscore(std::span<const Segment> segments, int period);

// Statistics for every series of a dataset, fitted on training ranges only.
class Normalizer {
 public:
  Normalizer() = default;

  static Normalizer fit(const Dataset& dataset, NormKind kind,
                        NormScope scope);

  NormKind kind() const { return kind_; }
  const NormStats& stats(std::size_t series_index) const;

  Window normalize(const Dataset& dataset, const Window& window) const;
  // Maps a normalized future block of `window` back to data units.
  Eigen::VectorXd denormalize_future(const Dataset& dataset,
                                     const Window& window,
                                     const Eigen::VectorXd& future) const;

 private:
  NormKind kind_ = NormKind::kNone;
  std::vector<NormStats> stats_;
  bool shared_ = false;
};

// ---------------------------------------------------------------------------
// Windowing

// Train windows tile the training range with the given stride; validation
// and test yield one window per series whose future is the held-out block.
std::vector<Window> make_windows(const Dataset& dataset, int stride,
                                 Split split, int history_len = 0);
std::vector<Window> make_windows(const Dataset& dataset, int context_len,
                                 int pred_len, int stride, Split split,
                                 int history_len = 0);

// Window of arbitrary length starting at `offset` of series `series_index`
// (past = whole slice, future empty).
Window slice_window(const Dataset& dataset, std::size_t series_index,
                    std::int64_t offset, int length);

// ---------------------------------------------------------------------------
// Synthetic data

inline constexpr double kAr1Coefficient = 0.9;

enum class SyntheticKind { kSineMix, kAr1, kOuPath };

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kSineMix;
  int n_series = 16;
  int length = 400;
  int period = 24;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  int context_len = 24;
  int pred_len = 24;
  // Kernel length scale of the ou-path generator, in normalized time.
  double length_scale = 1.0;
};

// sine-mix: a*sin(2*pi*t/p + phi1) + (1-a)*sin(4*pi*t/p + phi2) with
//   a ~ U[0.6, 0.8] and random phases per series (peak amplitude <= 1).
// ar1:      stationary unit-variance AR(1) with coefficient 0.9.
// ou-path:  unit-variance OU path sampled on normalized times t*pi/p.
// All kinds add i.i.d. N(0, noise_std^2) observation noise.
Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace tsflow::data

#endif  // TSFLOW_DATA_HPP_
