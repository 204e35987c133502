#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "gnep/error.hpp"
#include "json.hpp"

namespace gnep::io {

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kIo, "sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

/// Everything that determines a run's outputs.
struct RunManifest {
  std::string subcommand;
  std::string scenario_path;
  std::string scenario_sha256;
  std::map<std::string, std::string> options;  // effective values, including defaults
  std::string output_dir;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand;
    j["scenario"] = scenario_path;
    j["scenario_sha256"] = scenario_sha256;
    j["seed"] = seed;
    j["options"] = nlohmann::ordered_json(options);
    j["output_dir"] = output_dir;
    return j;
  }

  /// Hash of the canonical manifest text; the output directory is excluded so
  /// that the same run written elsewhere carries the same hash.
  std::string hash() const {
    nlohmann::ordered_json j = to_json();
    j.erase("output_dir");
    return sha256_hex(j.dump());
  }

  std::string stamp() const { return "manifest_sha256=" + hash() + " seed=" + std::to_string(seed); }

  void write(const std::filesystem::path& dir) const {
    nlohmann::ordered_json j = to_json();
    j["manifest_sha256"] = hash();
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in '" + dir.string() + "'");
    out << j.dump(2) << '\n';
  }
};

/// Creates `dir` if needed and checks that a file can be written there.
inline void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error(ErrorCode::kIo, "output directory '" + dir.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace gnep::io
