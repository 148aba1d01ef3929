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
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "tsflow/data.hpp"
#include "tsflow/error.hpp"

namespace tsflow::data {
namespace {

std::filesystem::path temp_file(const std::string& name,
                                const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "tsflow_data_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << content;
  return path;
}

std::string csv_series(const std::string& id, int n, double base = 0.0) {
  std::ostringstream out;
  for (int i = 0; i < n; ++i) out << id << ',' << i << ',' << base + i << '\n';
  return out.str();
}

Dataset one_series(int length, int c = 24, int p = 24) {
  Dataset ds;
  ds.period = 24;
  ds.context_len = c;
  ds.pred_len = p;
  TimeSeries ts;
  ts.id = "s";
  ts.period = 24;
  ts.values.resize(static_cast<std::size_t>(length));
  std::iota(ts.values.begin(), ts.values.end(), 0.0);
  ds.series.push_back(ts);
  return ds;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(LoadDataset, LengthBoundary) {
  const auto ok = temp_file("ok.csv", "id,timestamp_index,value\n" +
                                          csv_series("a", 96));
  EXPECT_EQ(load_dataset(ok, FileFormat::kCsv, 24, 24, 24).series.size(), 1u);
  const auto ok100 = temp_file("ok100.csv", "id,timestamp_index,value\n" +
                                                csv_series("a", 100));
  EXPECT_NO_THROW(load_dataset(ok100, FileFormat::kCsv, 24, 24, 24));

  const auto short90 = temp_file("short.csv", "id,timestamp_index,value\n" +
                                                  csv_series("a", 90));
  try {
    load_dataset(short90, FileFormat::kCsv, 24, 24, 24);
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("too short"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("90"), std::string::npos);
  }
}

TEST(LoadDataset, JsonlTwoSeries) {
  std::string text;
  for (const char* id : {"x", "y"}) {
    text += std::string("{\"id\": \"") + id + "\", \"values\": [";
    for (int i = 0; i < 100; ++i) text += (i ? "," : "") + std::to_string(i);
    text += "]}\n";
  }
  const auto path = temp_file("two.jsonl", text);
  const Dataset ds = load_dataset(path, FileFormat::kJsonl, 24, 24, 24);
  ASSERT_EQ(ds.series.size(), 2u);
  EXPECT_EQ(ds.period, 24);
  for (const auto& s : ds.series) {
    EXPECT_EQ(s.period, 24);
    EXPECT_EQ(s.start_index, 0);
    EXPECT_EQ(s.values.size(), 100u);
  }
  EXPECT_EQ(ds.series[1].id, "y");
}

TEST(LoadDataset, JsonlStartIndex) {
  std::istringstream in(R"({"id": "a", "values": [1, 2.5, 3], "start_index": 7})");
  const auto series = read_jsonl(in, 1);
  ASSERT_EQ(series.size(), 1u);
  EXPECT_EQ(series[0].start_index, 7);
  EXPECT_DOUBLE_EQ(series[0].values[1], 2.5);
}

TEST(LoadDataset, NanTokenNamesItsRow) {
  // Header on line 1, NaN on line 7.
  std::string text = "id,timestamp_index,value\n";
  for (int i = 0; i < 5; ++i) text += "a," + std::to_string(i) + ",1.0\n";
  text += "a,5,NaN\n";
  std::istringstream in(text);
  try {
    read_csv(in, 24);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
  }
}

TEST(LoadDataset, MissingValueNamesIndex) {
  std::istringstream in("id,timestamp_index,value\na,0,1\na,1,\n");
  try {
    read_csv(in, 1);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("missing value at index 1"),
              std::string::npos);
  }
}

TEST(LoadDataset, RejectsBadCsvStructure) {
  std::istringstream bad_header("series,t,v\na,0,1\n");
  EXPECT_THROW(read_csv(bad_header, 1), ParseError);
  std::istringstream ungrouped("id,timestamp_index,value\na,0,1\nb,0,1\na,1,2\n");
  EXPECT_THROW(read_csv(ungrouped, 1), ParseError);
  std::istringstream gap("id,timestamp_index,value\na,0,1\na,2,1\n");
  EXPECT_THROW(read_csv(gap, 1), ParseError);
}

TEST(LoadDataset, SplitReservesTail) {
  const Dataset ds = one_series(100);
  EXPECT_EQ(ds.train_end(0), 52u);
  const auto test = make_windows(ds, 1, Split::kTest);
  ASSERT_EQ(test.size(), 1u);
  EXPECT_DOUBLE_EQ(test[0].future(0), 76.0);  // last P points
  EXPECT_DOUBLE_EQ(test[0].future(23), 99.0);
  const auto val = make_windows(ds, 1, Split::kVal);
  ASSERT_EQ(val.size(), 1u);
  EXPECT_DOUBLE_EQ(val[0].future(0), 52.0);  // preceding P points
  for (const auto& w : make_windows(ds, 1, Split::kTrain))
    EXPECT_LE(w.future(23), 51.0);  // never touches val/test
}

TEST(MeanScale, Examples) {
  const std::vector<double> s{2, 4}, hist{1, 3};
  auto [out, st] = mean_scale(s, hist);
  EXPECT_DOUBLE_EQ(out(0), 1.0);
  EXPECT_DOUBLE_EQ(out(1), 2.0);

  const std::vector<double> zeros{0, 0}, h5{5, 5};
  auto [z, st5] = mean_scale(zeros, h5);
  EXPECT_EQ(z(0), 0.0);
  EXPECT_EQ(z(1), 0.0);

  const std::vector<double> hz{0, 0, 0};
  auto [f, stz] = mean_scale(s, hz);
  EXPECT_DOUBLE_EQ(stz.scale, kStatFloor);
  EXPECT_TRUE(f.allFinite());
}

TEST(MeanScale, RoundTrip) {
  std::vector<double> s(50);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(0.3 * i) * 7 + 0.1;
  auto [out, st] = mean_scale(s, s);
  const Eigen::VectorXd back = st.invert(out, 0);
  for (std::size_t i = 0; i < s.size(); ++i)
    EXPECT_LE(std::abs(back(i) - s[i]), 1e-12 * std::max(1.0, std::abs(s[i])));
}

TEST(FreqZscore, ConstantPhaseFloored) {
  const std::vector<double> s{1, 3, 1, 3};
  auto [out, st] = freq_zscore(s, 2);
  EXPECT_DOUBLE_EQ(st.phase_mean[0], 1.0);
  EXPECT_DOUBLE_EQ(st.phase_mean[1], 3.0);
  EXPECT_DOUBLE_EQ(st.phase_std[0], kStatFloor);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(out(i), 0.0);
}

TEST(FreqZscore, HandComputed) {
  const std::vector<double> s{0, 10, 2, 12};
  auto [out, st] = freq_zscore(s, 2);
  EXPECT_DOUBLE_EQ(st.phase_mean[0], 1.0);
  EXPECT_DOUBLE_EQ(st.phase_mean[1], 11.0);
  EXPECT_DOUBLE_EQ(st.phase_std[0], 1.0);
  EXPECT_DOUBLE_EQ(st.phase_std[1], 1.0);
  const double want[] = {-1, -1, 1, 1};
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(out(i), want[i]);
}

TEST(FreqZscore, PhaseMomentsAndRoundTrip) {
  std::vector<double> s(24 * 7);
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = std::cos(0.7 * i) * 3 + 0.01 * (i % 5) + i * 0.02;
  auto [out, st] = freq_zscore(s, 24);
  for (int ph = 0; ph < 24; ++ph) {
    double m = 0, v = 0;
    int n = 0;
    for (std::size_t i = ph; i < s.size(); i += 24, ++n) m += out(i);
    m /= n;
    for (std::size_t i = ph; i < s.size(); i += 24) v += (out(i) - m) * (out(i) - m);
    EXPECT_LT(std::abs(m), 1e-10);
    EXPECT_LT(std::abs(std::sqrt(v / n) - 1.0), 1e-10);
  }
  const Eigen::VectorXd back = st.invert(out, 0);
  for (std::size_t i = 0; i < s.size(); ++i)
    EXPECT_LE(std::abs(back(i) - s[i]), 1e-12 * std::max(1.0, std::abs(s[i])));
}

TEST(FreqZscore, NeedsTwoPeriods) {
  const std::vector<double> s{1, 2, 3};
  EXPECT_THROW(freq_zscore(s, 2), ValidationError);
}

TEST(Normalizer, WindowRoundTripBothScopes) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kAr1;
  spec.n_series = 3;
  spec.length = 200;
  const Dataset ds = gen_synthetic(spec);
  for (NormKind kind : {NormKind::kMeanScale, NormKind::kFreqZscore})
    for (NormScope scope : {NormScope::kSeries, NormScope::kDataset}) {
      const Normalizer norm = Normalizer::fit(ds, kind, scope);
      for (const auto& w : make_windows(ds, 7, Split::kTrain)) {
        const Window n = norm.normalize(ds, w);
        const Eigen::VectorXd back = norm.denormalize_future(ds, w, n.future);
        EXPECT_LE((back - w.future).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
}

TEST(MakeWindows, CountsAndOffsets) {
  // Training range of a length-96 series is 48 points: one window.
  EXPECT_EQ(make_windows(one_series(96), 1, Split::kTrain).size(), 1u);
  const auto w = make_windows(one_series(98), 1, Split::kTrain);
  ASSERT_EQ(w.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(w[i].offset, i);
  EXPECT_DOUBLE_EQ(w[2].past(0), 2.0);
  EXPECT_DOUBLE_EQ(w[2].future(0), 26.0);
}

TEST(MakeWindows, ClosedFormCount) {
  for (int len : {96, 97, 120, 151})
    for (int stride : {1, 2, 5, 7}) {
      const Dataset ds = one_series(len);
      const int train = len - 48;
      const auto expect = static_cast<std::size_t>((train - 48) / stride + 1);
      EXPECT_EQ(make_windows(ds, stride, Split::kTrain).size(), expect)
          << len << " " << stride;
    }
}

TEST(MakeWindows, StrideZeroRejected) {
  EXPECT_THROW(make_windows(one_series(96), 0, Split::kTrain), ValidationError);
}

TEST(MakeWindows, HistoryShiftsFirstWindow) {
  const auto w = make_windows(one_series(120), 1, Split::kTrain, 5);
  ASSERT_FALSE(w.empty());
  EXPECT_EQ(w[0].offset, 5);
  ASSERT_EQ(w[0].history.size(), 5);
  EXPECT_DOUBLE_EQ(w[0].history(4), 4.0);
}

TEST(GenSynthetic, NoiselessSineIsPeriodic) {
  SyntheticSpec spec;
  spec.n_series = 3;
  const Dataset ds = gen_synthetic(spec);
  for (const auto& s : ds.series) {
    const std::vector<double> a(s.values.begin(), s.values.end() - 24);
    const std::vector<double> b(s.values.begin() + 24, s.values.end());
    EXPECT_NEAR(pearson(a, b), 1.0, 1e-9);
  }
}

TEST(GenSynthetic, SameSeedBitIdentical) {
  for (SyntheticKind k :
       {SyntheticKind::kSineMix, SyntheticKind::kAr1, SyntheticKind::kOuPath}) {
    SyntheticSpec spec;
    spec.kind = k;
    spec.noise_std = 0.1;
    spec.seed = 42;
    const Dataset a = gen_synthetic(spec), b = gen_synthetic(spec);
    ASSERT_EQ(a.series.size(), b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i)
      EXPECT_EQ(a.series[i].values, b.series[i].values);
    spec.seed = 43;
    EXPECT_NE(gen_synthetic(spec).series[0].values, a.series[0].values);
  }
}

TEST(GenSynthetic, Ar1LagOneAutocorrelation) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kAr1;
  spec.n_series = 1;
  spec.length = 100000;
  spec.seed = 3;
  const Dataset ds = gen_synthetic(spec);
  const auto& v = ds.series[0].values;
  const std::vector<double> a(v.begin(), v.end() - 1), b(v.begin() + 1, v.end());
  EXPECT_NEAR(pearson(a, b), 0.9, 0.02);
}

TEST(GenSynthetic, UnknownKindAndShortLength) {
  EXPECT_THROW(parse_synthetic_kind("fractal"), ValidationError);
  SyntheticSpec spec;
  spec.length = 50;
  EXPECT_THROW(gen_synthetic(spec), ValidationError);
}

TEST(WriteDataset, CsvAndJsonlRoundTrip) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kAr1;
  spec.n_series = 2;
  spec.length = 100;
  const Dataset ds = gen_synthetic(spec);
  const auto dir = std::filesystem::temp_directory_path() / "tsflow_data_test";
  std::filesystem::create_directories(dir);
  for (FileFormat f : {FileFormat::kCsv, FileFormat::kJsonl}) {
    const auto path = dir / (f == FileFormat::kCsv ? "rt.csv" : "rt.jsonl");
    write_dataset(ds, path, f);
    const Dataset back = load_dataset(path, f, 24, 24, 24);
    ASSERT_EQ(back.series.size(), 2u);
    EXPECT_EQ(back.series[1].values, ds.series[1].values);
  }
}

}  // namespace
}  // namespace tsflow::data
