#include "attiqa/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"

namespace attiqa {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'T', 'Q', 'W'};

template <class T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <class T>
T get(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw CheckpointError("weights.bin is truncated");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::span<const unsigned char> as_bytes(const std::string& s, std::size_t n) {
  return {reinterpret_cast<const unsigned char*>(s.data()), n};
}

std::vector<std::string> canonical_order() {
  std::vector<std::string> out;
  for (Attribute a : kAttributes) out.emplace_back(to_string(a));
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("failed to write " + path.string());
}

}  // namespace

json CheckpointManifest::to_json() const {
  return json{{"format_version", format_version},
              {"stage", stage},
              {"config_hash", config_hash},
              {"provider_id", provider_id},
              {"prompt_set_id", prompt_set_id},
              {"dataset", dataset},
              {"epoch", epoch},
              {"seed", seed},
              {"metrics", metrics},
              {"config", config},
              {"attribute_order", attribute_order},
              {"weights_sha256", weights_sha256}};
}

CheckpointManifest CheckpointManifest::from_json(const json& j) {
  CheckpointManifest m;
  try {
    m.format_version = j.at("format_version").get<std::uint32_t>();
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.provider_id = j.at("provider_id").get<std::string>();
    m.prompt_set_id = j.at("prompt_set_id").get<std::string>();
    m.dataset = j.at("dataset").get<std::string>();
    m.epoch = j.at("epoch").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.metrics = j.at("metrics");
    m.config = j.at("config");
    m.attribute_order = j.at("attribute_order").get<std::vector<std::string>>();
    m.weights_sha256 = j.at("weights_sha256").get<std::string>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  return m;
}

void save_checkpoint(const AttributeModel& model, CheckpointManifest manifest, const std::filesystem::path& dir) {
  const auto params = model.parameters();
  std::string blob(kMagic, 4);
  put<std::uint32_t>(blob, kWeightsFormatVersion);
  const std::string spec = model.spec().to_json().dump();
  put<std::uint64_t>(blob, spec.size());
  blob += spec;
  put<std::uint64_t>(blob, params.size());
  blob.append(reinterpret_cast<const char*>(params.data()), params.size() * sizeof(double));
  put<std::uint32_t>(blob, crc32_of(as_bytes(blob, blob.size())));

  manifest.format_version = kWeightsFormatVersion;
  manifest.attribute_order = canonical_order();
  manifest.weights_sha256 = sha256_hex(as_bytes(blob, blob.size()));

  std::filesystem::path parent = dir.parent_path();
  if (parent.empty()) parent = ".";
  std::filesystem::create_directories(parent);
  std::random_device rd;
  const std::filesystem::path tmp =
      parent / ("." + dir.filename().string() + ".tmp-" + std::to_string((std::uint64_t(rd()) << 32) | rd()));
  std::filesystem::create_directories(tmp);
  try {
    write_file(tmp / "weights.bin", blob);
    write_file(tmp / "manifest.json", manifest.to_json().dump(2) + "\n");
    if (std::filesystem::exists(dir)) std::filesystem::remove_all(dir);
    std::filesystem::rename(tmp, dir);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove_all(tmp, ec);
    throw;
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto mpath = dir / "manifest.json";
  const auto wpath = dir / "weights.bin";
  if (!std::filesystem::exists(mpath) || !std::filesystem::exists(wpath)) {
    throw CheckpointError("incomplete checkpoint at " + dir.string() + " (need manifest.json and weights.bin)");
  }
  Checkpoint ck;
  {
    std::ifstream in(mpath);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CheckpointError("checkpoint manifest: " + std::string(e.what()));
    }
    ck.manifest = CheckpointManifest::from_json(j);
  }
  if (ck.manifest.format_version != kWeightsFormatVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(ck.manifest.format_version) +
                          " is not supported (expected " + std::to_string(kWeightsFormatVersion) + ")");
  }
  if (ck.manifest.attribute_order != canonical_order()) {
    throw CheckpointError("checkpoint attribute order differs from the canonical order");
  }

  std::ifstream in(wpath, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string blob = ss.str();
  if (blob.size() < 4 + 4 + 4 || std::memcmp(blob.data(), kMagic, 4) != 0) {
    throw CheckpointError("weights.bin has a bad header");
  }
  std::size_t tail = blob.size() - 4;
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, blob.data() + tail, 4);
  if (crc32_of(as_bytes(blob, tail)) != stored_crc) throw CheckpointError("weights.bin checksum mismatch");
  if (!ck.manifest.weights_sha256.empty() && sha256_hex(as_bytes(blob, blob.size())) != ck.manifest.weights_sha256) {
    throw CheckpointError("weights.bin does not match the manifest digest");
  }
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(blob, pos);
  if (version != kWeightsFormatVersion) {
    throw CheckpointError("weights format version " + std::to_string(version) + " is not supported");
  }
  const auto spec_len = get<std::uint64_t>(blob, pos);
  if (pos + spec_len > tail) throw CheckpointError("weights.bin is truncated");
  ModelSpec spec;
  try {
    spec = ModelSpec::from_json(json::parse(blob.substr(pos, spec_len)));
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("weights.bin model spec: ") + e.what());
  }
  pos += spec_len;
  const auto count = get<std::uint64_t>(blob, pos);
  if (pos + count * sizeof(double) != tail) throw CheckpointError("weights.bin size does not match its header");
  std::vector<double> params(count);
  std::memcpy(params.data(), blob.data() + pos, count * sizeof(double));
  try {
    ck.model = AttributeModel::from_parameters(spec, std::move(params));
  } catch (const ValidationError& e) {
    throw CheckpointError(e.what());
  }
  return ck;
}

}  // namespace attiqa
