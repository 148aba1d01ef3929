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

#include "tsflow/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tsflow/error.hpp"
#include "tsflow/random.hpp"

namespace tsflow::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::int64_t parse_int(std::string_view field, std::size_t line,
                       std::string_view what) {
  std::int64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(line, "invalid " + std::string(what) + " '" +
                               std::string(field) + "'");
  return v;
}

}  // namespace

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split '" + std::string(name) + "'");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

FileFormat parse_format(std::string_view name) {
  if (name == "csv") return FileFormat::kCsv;
  if (name == "jsonl") return FileFormat::kJsonl;
  throw ValidationError("unknown dataset format '" + std::string(name) + "'");
}

FileFormat format_from_extension(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".csv") return FileFormat::kCsv;
  if (ext == ".jsonl" || ext == ".json") return FileFormat::kJsonl;
  throw ValidationError("cannot infer dataset format from '" + path.string() +
                        "'");
}

std::vector<TimeSeries> read_csv(std::istream& in, int period) {
  std::vector<TimeSeries> out;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  bool header_seen = false;
  std::int64_t last_index = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty()) continue;
    const auto fields = split_fields(text);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "id" ||
          fields[1] != "timestamp_index" || fields[2] != "value")
        throw ParseError(line, "expected header 'id,timestamp_index,value'");
      header_seen = true;
      continue;
    }
    if (fields.size() != 3)
      throw ParseError(line, "expected 3 fields, got " +
                                 std::to_string(fields.size()));
    const std::string id(fields[0]);
    if (id.empty()) throw ParseError(line, "empty series id");
    const std::int64_t index = parse_int(fields[1], line, "timestamp_index");

    if (out.empty() || out.back().id != id) {
      if (!seen.insert(id).second)
        throw ParseError(line, "rows of series '" + id + "' are not grouped");
      out.push_back(TimeSeries{id, {}, period, index});
    } else if (index != last_index + 1) {
      throw ParseError(line, "series '" + id + "': timestamp_index " +
                                 std::to_string(index) + " does not follow " +
                                 std::to_string(last_index));
    }
    last_index = index;

    const std::string_view field = fields[2];
    if (field.empty())
      throw ParseError(line, "series '" + id + "': missing value at index " +
                                 std::to_string(index));
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
      throw ParseError(line, "invalid value '" + std::string(field) + "'");
    if (!std::isfinite(value))
      throw ParseError(line, "series '" + id + "': non-finite value '" +
                                 std::string(field) + "' at index " +
                                 std::to_string(index));
    out.back().values.push_back(value);
  }
  if (!header_seen) throw ParseError(line, "empty CSV file");
  return out;
}

std::vector<TimeSeries> read_jsonl(std::istream& in, int period) {
  std::vector<TimeSeries> out;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
    if (!obj.contains("id") || !obj["id"].is_string())
      throw ParseError(line, "field 'id' must be a string");
    if (!obj.contains("values") || !obj["values"].is_array())
      throw ParseError(line, "field 'values' must be an array");
    TimeSeries ts;
    ts.id = obj["id"].get<std::string>();
    ts.period = period;
    if (obj.contains("start_index")) {
      if (!obj["start_index"].is_number_integer())
        throw ParseError(line, "field 'start_index' must be an integer");
      ts.start_index = obj["start_index"].get<std::int64_t>();
    }
    if (!seen.insert(ts.id).second)
      throw ParseError(line, "duplicate series id '" + ts.id + "'");
    const auto& values = obj["values"];
    ts.values.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::int64_t index = ts.start_index + static_cast<std::int64_t>(i);
      if (!values[i].is_number())
        throw ParseError(line, "series '" + ts.id +
                                   "': missing or non-numeric value at index " +
                                   std::to_string(index));
      const double v = values[i].get<double>();
      if (!std::isfinite(v))
        throw ParseError(line, "series '" + ts.id +
                                   "': non-finite value at index " +
                                   std::to_string(index));
      ts.values.push_back(v);
    }
    out.push_back(std::move(ts));
  }
  return out;
}

void validate_dataset(const Dataset& dataset) {
  if (dataset.period < 1) throw ValidationError("period must be >= 1");
  if (dataset.context_len < 1) throw ValidationError("context_len must be >= 1");
  if (dataset.pred_len < 1) throw ValidationError("pred_len must be >= 1");
  if (dataset.series.empty()) throw ValidationError("dataset has no series");
  for (const auto& s : dataset.series) {
    if (s.period != dataset.period)
      throw ValidationError("series '" + s.id + "' has period " +
                            std::to_string(s.period) + ", dataset has " +
                            std::to_string(dataset.period));
    if (s.values.size() < dataset.min_length())
      throw ValidationError(
          "series '" + s.id + "' too short: length " +
          std::to_string(s.values.size()) + " < context_len + 3*pred_len = " +
          std::to_string(dataset.min_length()));
  }
}

Dataset load_dataset(const std::filesystem::path& path, FileFormat format,
                     int period, int context_len, int pred_len) {
  if (period < 1) throw ValidationError("period must be >= 1");
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");
  Dataset ds;
  ds.period = period;
  ds.context_len = context_len;
  ds.pred_len = pred_len;
  ds.series = format == FileFormat::kCsv ? read_csv(in, period)
                                         : read_jsonl(in, period);
  validate_dataset(ds);
  return ds;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path,
                   FileFormat format) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  if (format == FileFormat::kCsv) {
    out << "id,timestamp_index,value\n";
    for (const auto& s : dataset.series)
      for (std::size_t i = 0; i < s.values.size(); ++i)
        out << s.id << ',' << s.start_index + static_cast<std::int64_t>(i)
            << ',' << s.values[i] << '\n';
  } else {
    for (const auto& s : dataset.series) {
      nlohmann::json obj;
      obj["id"] = s.id;
      obj["start_index"] = s.start_index;
      obj["values"] = s.values;
      out << obj.dump() << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<Window> make_windows(const Dataset& dataset, int stride,
                                 Split split, int history_len) {
  return make_windows(dataset, dataset.context_len, dataset.pred_len, stride,
                      split, history_len);
}

std::vector<Window> make_windows(const Dataset& dataset, int context_len,
                                 int pred_len, int stride, Split split,
                                 int history_len) {
  if (stride < 1) throw ValidationError("stride must be >= 1");
  if (context_len < 1 || pred_len < 1)
    throw ValidationError("window sizes must be >= 1");
  if (history_len < 0) throw ValidationError("history_len must be >= 0");
  const auto c = static_cast<std::int64_t>(context_len);
  const auto p = static_cast<std::int64_t>(pred_len);
  const auto h = static_cast<std::int64_t>(history_len);

  std::vector<Window> out;
  auto emit = [&](std::size_t si, std::int64_t offset) {
    const auto& v = dataset.series[si].values;
    Window w;
    w.series_id = dataset.series[si].id;
    w.series_index = si;
    w.offset = offset;
    w.past = Eigen::Map<const Eigen::VectorXd>(v.data() + offset, c);
    w.future = Eigen::Map<const Eigen::VectorXd>(v.data() + offset + c, p);
    if (h > 0)
      w.history = Eigen::Map<const Eigen::VectorXd>(v.data() + offset - h, h);
    out.push_back(std::move(w));
  };

  for (std::size_t si = 0; si < dataset.series.size(); ++si) {
    const auto n = static_cast<std::int64_t>(dataset.series[si].values.size());
    const auto holdout = 2 * static_cast<std::int64_t>(dataset.pred_len);
    switch (split) {
      case Split::kTrain: {
        const std::int64_t end = n - holdout;
        for (std::int64_t o = h; o + c + p <= end; o += stride) emit(si, o);
        break;
      }
      case Split::kVal: {
        const std::int64_t o = n - holdout - c;
        if (o >= h) emit(si, o);
        break;
      }
      case Split::kTest: {
        const std::int64_t o = n - dataset.pred_len - c;
        if (o >= h && o + c + p <= n) emit(si, o);
        break;
      }
    }
  }
  return out;
}

Window slice_window(const Dataset& dataset, std::size_t series_index,
                    std::int64_t offset, int length) {
  const auto& s = dataset.series.at(series_index);
  if (offset < 0 ||
      offset + length > static_cast<std::int64_t>(s.values.size()))
    throw ValidationError("slice out of bounds");
  Window w;
  w.series_id = s.id;
  w.series_index = series_index;
  w.offset = offset;
  w.past = Eigen::Map<const Eigen::VectorXd>(s.values.data() + offset, length);
  return w;
}

// ---------------------------------------------------------------------------

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "sine-mix") return SyntheticKind::kSineMix;
  if (name == "ar1") return SyntheticKind::kAr1;
  if (name == "ou-path") return SyntheticKind::kOuPath;
  throw ValidationError("unknown synthetic kind '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kSineMix: return "sine-mix";
    case SyntheticKind::kAr1: return "ar1";
    case SyntheticKind::kOuPath: return "ou-path";
  }
  return "?";
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n_series < 1) throw ValidationError("n_series must be >= 1");
  if (spec.period < 1) throw ValidationError("period must be >= 1");
  if (spec.noise_std < 0.0) throw ValidationError("noise_std must be >= 0");
  if (spec.length_scale <= 0.0)
    throw ValidationError("length_scale must be > 0");
  Dataset ds;
  ds.period = spec.period;
  ds.context_len = spec.context_len;
  ds.pred_len = spec.pred_len;
  if (spec.length < static_cast<int>(ds.min_length()))
    throw ValidationError("synthetic length " + std::to_string(spec.length) +
                          " < context_len + 3*pred_len = " +
                          std::to_string(ds.min_length()));

  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < spec.n_series; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    TimeSeries ts;
    ts.id = "series_" + std::to_string(i);
    ts.period = spec.period;
    ts.values.resize(static_cast<std::size_t>(spec.length));

    switch (spec.kind) {
      case SyntheticKind::kSineMix: {
        const double a = 0.6 + 0.2 * unif(rng);
        const double phi1 = two_pi * unif(rng);
        const double phi2 = two_pi * unif(rng);
        for (int t = 0; t < spec.length; ++t) {
          // Phase from t mod p keeps the series bit-exactly periodic.
          const double u = static_cast<double>(t % spec.period) / spec.period;
          ts.values[t] = a * std::sin(two_pi * u + phi1) +
                         (1.0 - a) * std::sin(2.0 * two_pi * u + phi2);
        }
        break;
      }
      case SyntheticKind::kAr1:
      case SyntheticKind::kOuPath: {
        const double phi =
            spec.kind == SyntheticKind::kAr1
                ? kAr1Coefficient
                : std::exp(-(std::numbers::pi / spec.period) / spec.length_scale);
        const double innovation = std::sqrt(1.0 - phi * phi);
        double x = normal(rng);
        for (int t = 0; t < spec.length; ++t) {
          ts.values[t] = x;
          x = phi * x + innovation * normal(rng);
        }
        break;
      }
    }
    if (spec.noise_std > 0.0)
      for (auto& v : ts.values) v += spec.noise_std * normal(rng);
    ds.series.push_back(std::move(ts));
  }
  return ds;
}

}  // namespace tsflow::data
