#pragma once

// Checkpoint file layout:
//   8 bytes   magic "STGCKPT1"
//   8 bytes   header length H (u64, little-endian)
//   H bytes   JSON header: format, version, config, provenance, tensors[]
//   payload   little-endian IEEE-754 doubles, tensors back to back

#include <bit>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <limits>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stenograph/digest.hpp"
#include "stenograph/mtl.hpp"
#include "stenograph/net1d.hpp"

namespace stenograph {

inline constexpr char kCheckpointMagic[8] = {'S', 'T', 'G', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

struct Provenance {
  int fold = -1;
  int epoch = 0;
  double val_macro_auc = 0.0;
  std::uint64_t seed = 0;
  int format_version = kCheckpointVersion;
};

struct ModelCheckpoint {
  Net1DConfig config;
  ParameterSet params;
  TaskUncertainty uncertainty;
  Provenance provenance;

  Net1D model() const { return Net1D(config, params); }
};

inline nlohmann::json to_json(const Net1DConfig& c) {
  return {{"leads", c.leads},   {"input_length", c.input_length}, {"stem_channels", c.stem_channels},
          {"stem_stride", c.stem_stride}, {"blocks", c.blocks}, {"kernel", c.kernel},
          {"max_channels", c.max_channels}, {"seed", c.seed}};
}

inline Net1DConfig net_config_from_json(const nlohmann::json& j, Net1DConfig c = {}) {
  c.leads = j.value("leads", c.leads);
  c.input_length = j.value("input_length", c.input_length);
  c.stem_channels = j.value("stem_channels", c.stem_channels);
  c.stem_stride = j.value("stem_stride", c.stem_stride);
  c.blocks = j.value("blocks", c.blocks);
  c.kernel = j.value("kernel", c.kernel);
  c.max_channels = j.value("max_channels", c.max_channels);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline std::string checkpoint_digest(const ModelCheckpoint& ckpt) {
  Digest d;
  for (std::size_t i = 0; i < ckpt.params.count(); ++i) {
    d.update(ckpt.params.name(i));
    d.update(ckpt.params.value(i).data());
  }
  d.update(std::span<const double>(ckpt.uncertainty.s));
  return d.hex();
}

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  std::uint64_t offset = 0;
  auto add = [&](const std::string& name, const Shape& shape, std::span<const double> values) {
    tensors.push_back({{"name", name}, {"shape", shape}, {"offset", offset}, {"count", values.size()}});
    for (double v : values) detail::put_u64(payload, std::bit_cast<std::uint64_t>(v));
    offset += values.size();
  };
  for (std::size_t i = 0; i < ckpt.params.count(); ++i) {
    add(ckpt.params.name(i), ckpt.params.value(i).shape(), ckpt.params.value(i).data());
  }
  add("task.log_var", {kNumVessels}, ckpt.uncertainty.s);

  const auto& p = ckpt.provenance;
  const nlohmann::json header = {
      {"format", "stenograph-checkpoint"},
      {"version", kCheckpointVersion},
      {"config", to_json(ckpt.config)},
      {"provenance",
       {{"fold", p.fold}, {"epoch", p.epoch}, {"val_macro_auc", std::isfinite(p.val_macro_auc) ? nlohmann::json(p.val_macro_auc) : nlohmann::json(nullptr)}, {"seed", p.seed},
        {"format_version", p.format_version}}},
      {"tensors", tensors}};
  const std::string h = header.dump();

  std::string bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u64(bytes, h.size());
  bytes += h;
  bytes += payload;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::data, "short write to checkpoint " + path.string());
}

// expected_input_length, when given, must match the stored config.
inline ModelCheckpoint load_checkpoint(const std::filesystem::path& path,
                                       std::optional<std::size_t> expected_input_length = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot read checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string();
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    fail(ErrorKind::corrupt_file, where + ": bad magic");
  }
  const std::uint64_t hlen = detail::get_u64(bytes.data() + 8);
  if (hlen > bytes.size() - 16) fail(ErrorKind::corrupt_file, where + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(hlen));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::corrupt_file, where + ": unreadable header (" + e.what() + ")");
  }

  ModelCheckpoint ckpt;
  std::vector<nlohmann::json> manifest;
  try {
    if (header.at("format") != "stenograph-checkpoint") fail(ErrorKind::corrupt_file, where + ": unknown format");
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion) {
      fail(ErrorKind::version, where + ": version " + std::to_string(version) + " (supported: " +
                                   std::to_string(kCheckpointVersion) + ")");
    }
    ckpt.config = net_config_from_json(header.at("config"));
    const auto& p = header.at("provenance");
    ckpt.provenance = {p.at("fold").get<int>(), p.at("epoch").get<int>(), p.at("val_macro_auc").is_null() ? std::numeric_limits<double>::quiet_NaN() : p.at("val_macro_auc").get<double>(),
                       p.at("seed").get<std::uint64_t>(), p.at("format_version").get<int>()};
    manifest = header.at("tensors").get<std::vector<nlohmann::json>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::corrupt_file, where + ": malformed header (" + e.what() + ")");
  }
  if (expected_input_length && *expected_input_length != ckpt.config.input_length) {
    fail(ErrorKind::shape, where + " expects input length " + std::to_string(ckpt.config.input_length) +
                               ", data has " + std::to_string(*expected_input_length));
  }

  const char* payload = bytes.data() + 16 + hlen;
  const std::uint64_t payload_bytes = bytes.size() - 16 - hlen;
  if (payload_bytes % 8 != 0) fail(ErrorKind::corrupt_file, where + ": payload is not a whole number of float64");
  const std::uint64_t payload_values = payload_bytes / 8;
  std::uint64_t expected_values = 0;
  ParameterSet params;
  bool have_log_var = false;
  for (const auto& t : manifest) {
    std::string name;
    Shape shape;
    std::uint64_t offset = 0, count = 0;
    try {
      name = t.at("name").get<std::string>();
      shape = t.at("shape").get<Shape>();
      offset = t.at("offset").get<std::uint64_t>();
      count = t.at("count").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::corrupt_file, where + ": malformed tensor entry (" + e.what() + ")");
    }
    if (shape_numel(shape) != count) fail(ErrorKind::corrupt_file, where + ": tensor " + name + " count/shape disagree");
    if (offset > payload_values || count > payload_values - offset) {
      fail(ErrorKind::corrupt_file, where + ": truncated payload at tensor " + name);
    }
    expected_values += count;
    std::vector<double> values(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      values[i] = std::bit_cast<double>(detail::get_u64(payload + 8 * (offset + i)));
    }
    if (name == "task.log_var") {
      if (count != kNumVessels) fail(ErrorKind::shape, where + ": task.log_var has " + std::to_string(count) + " values");
      std::copy(values.begin(), values.end(), ckpt.uncertainty.s.begin());
      have_log_var = true;
    } else {
      params.add(name, Tensor(shape, std::move(values)));
    }
  }
  if (!have_log_var) fail(ErrorKind::corrupt_file, where + ": missing task.log_var");
  if (expected_values != payload_values) fail(ErrorKind::corrupt_file, where + ": payload size does not match manifest");
  try {
    ckpt.config.validate();
  } catch (const Error& e) {
    fail(ErrorKind::shape, where + ": " + e.what());
  }
  // Verifies names and shapes against the config.
  ckpt.params = Net1D(ckpt.config, std::move(params)).params();
  return ckpt;
}

}  // namespace stenograph
