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

#include "tsflow/commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "tsflow/cfm.hpp"
#include "tsflow/error.hpp"
#include "tsflow/hash.hpp"
#include "tsflow/metrics.hpp"
#include "tsflow/ot.hpp"
#include "tsflow/net.hpp"
#include "tsflow/random.hpp"

namespace tsflow::cli {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

constexpr std::uint64_t kForecastStream = 11;
constexpr std::uint64_t kSampleStream = 12;
constexpr std::uint64_t kEvalStream = 13;
constexpr std::uint64_t kStudyStream = 14;

// Shortest representation that parses back to the same double.
std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    out << content;
    if (!out) throw Error("write failed: " + (dir_ / name).string());
    record(name, sha256_hex(content), content.size());
  }

  // For files produced elsewhere (the checkpoint).
  void adopt(const std::string& name) {
    const auto path = dir_ / name;
    record(name, sha256_file(path), std::filesystem::file_size(path));
  }

  const std::filesystem::path& path() const { return dir_; }

  Written finish(const std::string& command) {
    json files = json::array();
    for (const auto& f : files_) files.push_back(f);
    const json manifest{{"command", command}, {"files", files}};
    std::ofstream out(dir_ / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << "\n";
    Written names;
    for (const auto& f : files_) names.push_back(f["path"]);
    names.push_back("manifest.json");
    return names;
  }

 private:
  void record(const std::string& name, const std::string& sha,
              std::uintmax_t bytes) {
    files_.push_back({{"path", name}, {"sha256", sha}, {"bytes", bytes}});
  }

  std::filesystem::path dir_;
  std::vector<json> files_;
};

int max_lag(const net::ModelConfig& mc) {
  return mc.lags.empty() ? 0 : *std::max_element(mc.lags.begin(), mc.lags.end());
}

struct Prepared {
  data::Dataset dataset;
  data::Normalizer normalizer;
};

Prepared prepare(const config::RunConfig& cfg) {
  Prepared p;
  p.dataset = config::build_dataset(cfg);
  p.normalizer = data::Normalizer::fit(p.dataset, cfg.dataset.normalization,
                                       cfg.dataset.norm_scope);
  return p;
}

std::string samples_csv(const MatrixXd& rows) {
  std::ostringstream out;
  out << "sample_idx";
  for (Eigen::Index j = 0; j < rows.cols(); ++j) out << ",v" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) out << ',' << num(rows(i, j));
    out << "\n";
  }
  return out.str();
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

// Normalized training windows of length C + P as rows.
MatrixXd real_windows(const Prepared& p) {
  const auto windows = data::make_windows(p.dataset, 1, data::Split::kTrain);
  if (windows.empty()) throw ValidationError("dataset has no training windows");
  const int l = p.dataset.context_len + p.dataset.pred_len;
  MatrixXd out(static_cast<Eigen::Index>(windows.size()), l);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const data::Window w = p.normalizer.normalize(p.dataset, windows[i]);
    out.row(static_cast<Eigen::Index>(i)) << w.past.transpose(),
        w.future.transpose();
  }
  return out;
}

std::string single_row_csv(const json& row) {
  std::ostringstream head, vals;
  bool first = true;
  for (const auto& [k, v] : row.items()) {
    head << (first ? "" : ",") << k;
    vals << (first ? "" : ",");
    if (v.is_number_float())
      vals << num(v.get<double>());
    else if (v.is_string())
      vals << v.get<std::string>();
    else
      vals << v.dump();
    first = false;
  }
  return head.str() + "\n" + vals.str() + "\n";
}

}  // namespace

Eigen::MatrixXd read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open samples file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "samples file is empty");
  const auto width =
      static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  std::vector<double> values;
  std::size_t lineno = 1;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t pos = line.find(',');
    Eigen::Index cols = 0;
    while (pos != std::string::npos) {
      const std::size_t next = line.find(',', pos + 1);
      const std::size_t end = next == std::string::npos ? line.size() : next;
      double v = 0.0;
      const auto r = std::from_chars(line.data() + pos + 1, line.data() + end, v);
      if (r.ec != std::errc() || r.ptr != line.data() + end || !std::isfinite(v))
        throw ParseError(lineno, "bad number in samples file");
      values.push_back(v);
      ++cols;
      pos = next;
    }
    if (cols != width)
      throw ParseError(lineno, "expected " + std::to_string(width) + " values");
    ++rows;
  }
  MatrixXd m(rows, width);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < width; ++j)
      m(i, j) = values[static_cast<std::size_t>(i * width + j)];
  return m;
}

Written cmd_train(const config::RunConfig& cfg) {
  const Prepared p = prepare(cfg);
  const std::string resolved = config::to_yaml(cfg);
  OutputDir out(cfg.output_dir);

  std::ostringstream log;
  log << "epoch,loss,val_crps\n";
  auto on_epoch = [&](const cfm::EpochLog& e) {
    log << e.epoch << ',' << num(e.loss) << ','
        << (std::isnan(e.val_crps) ? std::string() : num(e.val_crps)) << "\n";
    spdlog::info("epoch {} loss {:.6g}{}", e.epoch, e.loss,
                 std::isnan(e.val_crps) ? std::string()
                                        : " val_crps " + num(e.val_crps));
  };
  const cfm::TrainResult r =
      cfg.model.conditional
          ? cfm::train_cond(p.dataset, p.normalizer, cfg.model, cfg.train,
                            cfg.sampler, on_epoch)
          : cfm::train_uncond(p.dataset, p.normalizer, cfg.model, cfg.train,
                              cfg.sampler, on_epoch);

  net::save_checkpoint(r.model, r.opt, out.path() / "checkpoint.bin");
  out.adopt("checkpoint.bin");
  out.write("metrics.csv", log.str());
  out.write("config.resolved.yaml", resolved);
  return out.finish("train");
}

Written cmd_forecast(const config::RunConfig& cfg, const ForecastArgs& args) {
  const Prepared p = prepare(cfg);
  const net::Checkpoint ck = net::load_checkpoint(args.checkpoint, cfg.model);
  const sampling::ForecastMode mode =
      args.mode.value_or(cfg.model.conditional
                             ? sampling::ForecastMode::kCondDirect
                             : sampling::ForecastMode::kUncondCpsGuided);
  if ((mode == sampling::ForecastMode::kCondDirect) != cfg.model.conditional)
    throw ValidationError("forecast mode " +
                          std::string(sampling::to_string(mode)) +
                          " does not match the " +
                          (cfg.model.conditional ? "conditional"
                                                 : "unconditional") +
                          " checkpoint");
  const int n = args.n_samples > 0 ? args.n_samples : cfg.sampler.n_samples;
  const auto& ds = p.dataset;
  const auto windows =
      data::make_windows(ds, 1, args.split, max_lag(cfg.model));
  if (windows.empty())
    throw ValidationError("no " + std::string(data::to_string(args.split)) +
                          " windows in the dataset");
  const sampling::Forecaster fc(ck.model, cfg.kernel, ds.context_len,
                                ds.pred_len, ds.period, cfg.sampler);
  OutputDir out(cfg.output_dir);

  std::ostringstream csv;
  csv << "series_id,offset,sample_idx,h,value\n";
  json quantiles = json::array();
  metrics::CrpsAccumulator acc, naive;
  const std::uint64_t seed = derive_seed(cfg.seed, kForecastStream);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    const data::Window nw = p.normalizer.normalize(ds, win);
    const MatrixXd s = fc.sample(nw.past, nw.history, n, mode, derive_seed(seed, w));
    MatrixXd samples(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i)
      samples.row(i) =
          p.normalizer.denormalize_future(ds, win, s.row(i).transpose())
              .transpose();
    for (Eigen::Index i = 0; i < samples.rows(); ++i)
      for (Eigen::Index h = 0; h < samples.cols(); ++h)
        csv << win.series_id << ',' << win.offset << ',' << i << ',' << h << ','
            << num(samples(i, h)) << "\n";
    const metrics::QuantileForecast qf = metrics::quantiles_from_samples(samples);
    acc.add(qf, win.future);
    if (win.past.size() >= ds.period)
      naive.add(metrics::point_quantiles(
                    metrics::seasonal_naive(win.past, ds.period, ds.pred_len)),
                win.future);
    quantiles.push_back({{"series_id", win.series_id},
                         {"offset", win.offset},
                         {"levels", metrics::kQuantileLevels},
                         {"quantiles", matrix_json(qf.quantiles)}});
  }
  out.write("forecast.csv", csv.str());
  out.write("quantiles.json", quantiles.dump(1) + "\n");

  json report{{"split", std::string(data::to_string(args.split))},
              {"mode", std::string(sampling::to_string(mode))},
              {"n_windows", windows.size()},
              {"n_samples", n},
              {"crps", acc.value()},
              {"crps_mean_per_point", acc.mean_per_point()}};
  if (naive.points() > 0) report["seasonal_naive_crps"] = naive.value();
  out.write("crps.csv", single_row_csv(report));
  out.write("crps.json", report.dump(2) + "\n");
  spdlog::info("crps {:.6g} over {} windows", acc.value(), windows.size());
  return out.finish("forecast");
}

Written cmd_sample(const config::RunConfig& cfg, const SampleArgs& args) {
  if (args.n < 0) throw ValidationError("sample: n must be >= 0");
  if (cfg.model.conditional)
    throw ValidationError("sample needs an unconditional model "
                          "(model.conditional: false)");
  const Prepared p = prepare(cfg);
  const net::Checkpoint ck = net::load_checkpoint(args.checkpoint, cfg.model);
  const gp::CovMatrix prior = gp::build_cov(
      cfg.kernel, gp::normalize_times(0, cfg.model.seq_len, p.dataset.period));
  OutputDir out(cfg.output_dir);
  const MatrixXd x = sampling::generate(ck.model, prior, args.n,
                                        cfg.sampler.ode_steps,
                                        derive_seed(cfg.seed, kSampleStream));
  out.write("samples.csv", samples_csv(x));

  const MatrixXd real = real_windows(p);
  const json plot{
      {"length", cfg.model.seq_len},
      {"generated", matrix_json(x.topRows(std::min<Eigen::Index>(x.rows(), 16)))},
      {"real", matrix_json(real.topRows(std::min<Eigen::Index>(real.rows(), 16)))}};
  out.write("plot_data.json", plot.dump(1) + "\n");
  return out.finish("sample");
}

Written cmd_eval_w2(const config::RunConfig& cfg, const W2Args& args) {
  if (args.batch < 1) throw ValidationError("eval w2: batch must be >= 1");
  const MatrixXd a = read_samples_csv(args.samples);
  MatrixXd b;
  if (args.reference.empty()) {
    const MatrixXd real = real_windows(prepare(cfg));
    // Random training windows, as many as there are samples.
    Rng rng(derive_seed(cfg.seed, kEvalStream));
    std::uniform_int_distribution<Eigen::Index> pick(0, real.rows() - 1);
    b.resize(a.rows(), real.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) b.row(i) = real.row(pick(rng));
  } else {
    b = read_samples_csv(args.reference);
  }
  if (a.cols() != b.cols())
    throw ValidationError("eval w2: sequence lengths differ (" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.cols()) + ")");
  const Eigen::Index n = std::min(a.rows(), b.rows());
  if (n == 0) throw ValidationError("eval w2: no samples");
  const Eigen::Index bs = std::min<Eigen::Index>(args.batch, n);
  const Eigen::Index batches = n / bs;
  OutputDir out(cfg.output_dir);
  double w2 = 0.0, base = 0.0;
  for (Eigen::Index k = 0; k < batches; ++k) {
    const ot::BatchW2 r = ot::batch_w2_report(a.middleRows(k * bs, bs),
                                              b.middleRows(k * bs, bs));
    w2 += r.w2;
    base += r.baseline;
  }
  w2 /= static_cast<double>(batches);
  base /= static_cast<double>(batches);
  const json report{{"batches", batches},
                    {"batch", bs},
                    {"w2", w2},
                    {"baseline", base},
                    {"ratio", base > 0.0 ? w2 / base : 0.0}};
  out.write("w2.csv", single_row_csv(report));
  out.write("w2.json", report.dump(2) + "\n");
  return out.finish("eval w2");
}

Written cmd_eval_lps(const config::RunConfig& cfg, const LpsArgs& args) {
  const Prepared p = prepare(cfg);
  const MatrixXd synth = read_samples_csv(args.samples);
  const auto& ds = p.dataset;
  std::vector<data::Window> test;
  for (const auto& w : data::make_windows(ds, 1, data::Split::kTest))
    test.push_back(p.normalizer.normalize(ds, w));
  const double score = metrics::lps(synth, test, ds.context_len, ds.pred_len);
  OutputDir out(cfg.output_dir);
  const json report{{"lps", score},
                    {"n_synthetic", synth.rows()},
                    {"n_test_windows", test.size()}};
  out.write("lps.csv", single_row_csv(report));
  out.write("lps.json", report.dump(2) + "\n");
  return out.finish("eval lps");
}

Written cmd_eval_wstudy(const config::RunConfig& cfg, const WstudyArgs& args) {
  std::vector<gp::KernelSpec> kernels;
  for (const auto& k : args.kernels) {
    gp::KernelSpec spec = gp::KernelSpec::with_defaults(gp::parse_kernel_kind(k));
    // The configured kernel's length scale applies to its own family.
    if (spec.kind == cfg.kernel.kind) spec = cfg.kernel;
    kernels.push_back(spec);
  }
  const Prepared p = prepare(cfg);
  const auto rows = metrics::wasserstein_study(
      p.dataset, p.normalizer, kernels, args.multiples, args.batch,
      args.trials, derive_seed(cfg.seed, kStudyStream));
  OutputDir out(cfg.output_dir);
  out.write("wstudy.csv", metrics::wasserstein_csv(rows));
  json j = json::array();
  for (const auto& r : rows)
    j.push_back({{"kernel", r.kernel},
                 {"multiple", r.multiple},
                 {"length", r.length},
                 {"w2", r.w2},
                 {"baseline", r.baseline},
                 {"ratio", r.ratio}});
  out.write("wstudy.json", j.dump(2) + "\n");
  return out.finish("eval wstudy");
}

Written cmd_synth(const config::RunConfig& cfg, data::FileFormat format) {
  const data::Dataset ds = data::gen_synthetic(cfg.synthetic);
  OutputDir out(cfg.output_dir);
  const std::string name =
      format == data::FileFormat::kCsv ? "dataset.csv" : "dataset.jsonl";
  data::write_dataset(ds, out.path() / name, format);
  out.adopt(name);
  return out.finish("synth");
}

}  // namespace tsflow::cli
