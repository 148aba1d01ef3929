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

// Checkpoint container:
//   "TSFLOWCK" | u32 version | u64 header bytes | JSON header | blobs
// Blobs are little-endian f64 in the order params, ema, adam m, adam v. The
// header carries the config, shapes, step count and a SHA-256 of the blobs.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "tsflow/error.hpp"
#include "tsflow/hash.hpp"
#include "tsflow/net.hpp"

namespace tsflow::net {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'F', 'L', 'O', 'W', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(buf), std::end(buf));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("checkpoint truncated");
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(buf), std::end(buf));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

void put_blob(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_le<double>(out, v(i));
}

Eigen::VectorXd get_blob(const std::string& in, std::size_t& pos,
                         Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = get_le<double>(in, pos);
  return v;
}

}  // namespace

void save_checkpoint(const VectorFieldModel& model, const OptimState& opt,
                     const std::filesystem::path& path) {
  const Eigen::Index n = model.params.size();
  if (model.ema.size() != n || opt.m.size() != n || opt.v.size() != n)
    throw CheckpointError("save_checkpoint: inconsistent tensor sizes");
  std::string blobs;
  blobs.reserve(static_cast<std::size_t>(4 * n) * sizeof(double));
  put_blob(blobs, model.params);
  put_blob(blobs, model.ema);
  put_blob(blobs, opt.m);
  put_blob(blobs, opt.v);

  nlohmann::json header{
      {"format", "tsflow-checkpoint"},
      {"config", to_json(model.config)},
      {"num_params", n},
      {"blobs", {"params", "ema", "adam_m", "adam_v"}},
      {"ema_momentum", model.ema_momentum},
      {"optimizer",
       {{"step", opt.step},
        {"learning_rate", opt.learning_rate},
        {"clip_threshold", opt.clip_threshold},
        {"beta1", opt.beta1},
        {"beta2", opt.beta2},
        {"eps", opt.eps}}},
      {"sha256", sha256_hex(blobs)}};
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out += blobs;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string in((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  if (in.size() < sizeof(kMagic) ||
      std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(path.string() + " is not a tsflow checkpoint");
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(in, pos);
  if (version != kVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(kVersion) +
                          ")");
  const auto header_len = get_le<std::uint64_t>(in, pos);
  if (pos + header_len > in.size())
    throw CheckpointError("checkpoint truncated in header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;

  const std::string blobs = in.substr(pos);
  if (sha256_hex(blobs) != header.value("sha256", ""))
    throw CheckpointError("checkpoint checksum mismatch (corrupted or truncated)");

  Checkpoint ck;
  try {
    ck.model.config = model_config_from_json(header.at("config"));
    ck.model.ema_momentum = header.at("ema_momentum").get<double>();
    const auto& o = header.at("optimizer");
    ck.opt.step = o.at("step").get<std::int64_t>();
    ck.opt.learning_rate = o.at("learning_rate").get<double>();
    ck.opt.clip_threshold = o.at("clip_threshold").get<double>();
    ck.opt.beta1 = o.at("beta1").get<double>();
    ck.opt.beta2 = o.at("beta2").get<double>();
    ck.opt.eps = o.at("eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
  const auto n = header.at("num_params").get<Eigen::Index>();
  if (n != ParamLayout(ck.model.config).total ||
      blobs.size() != static_cast<std::size_t>(4 * n) * sizeof(double))
    throw CheckpointError("checkpoint parameter count does not match config");
  std::size_t bp = 0;
  ck.model.params = get_blob(blobs, bp, n);
  ck.model.ema = get_blob(blobs, bp, n);
  ck.opt.m = get_blob(blobs, bp, n);
  ck.opt.v = get_blob(blobs, bp, n);
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const ModelConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.model.config == expected))
    throw ValidationError("checkpoint config mismatch: checkpoint has " +
                          to_json(ck.model.config).dump() + ", run expects " +
                          to_json(expected).dump());
  return ck;
}

}  // namespace tsflow::net
