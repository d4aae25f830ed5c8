#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include <json.hpp>

#include "hero/errors.hpp"

namespace hero::campaign {

namespace detail {

inline std::string to_hex(const unsigned char* data, unsigned int len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(len) * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = kDigits[data[i] >> 4];
    out[2 * i + 1] = kDigits[data[i] & 0xF];
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("SHA-256 initialization failed");
  }
  void update(const void* data, std::size_t len) {
    if (EVP_DigestUpdate(ctx_.get(), data, len) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("SHA-256 finalization failed");
    return to_hex(md.data(), len);
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace detail

inline std::string sha256_hex(std::string_view bytes) {
  detail::Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  detail::Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

/// Append-only record of stage artifacts in <out>/manifest.jsonl. Each line
/// holds {stage, path, sha256, bytes}; paths are relative to the output
/// directory and the latest line for a path wins.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path out_dir) : dir_(std::move(out_dir)) {}

  std::filesystem::path file() const { return dir_ / "manifest.jsonl"; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

  void reset() const {
    std::filesystem::create_directories(dir_);
    std::ofstream(file(), std::ios::trunc);
  }

  /// Hashes `rel` and appends a manifest line for it.
  std::string record(std::string_view stage, const std::filesystem::path& rel) const {
    const auto path = dir_ / rel;
    const std::string digest = sha256_file(path);
    std::ofstream os(file(), std::ios::app);
    if (!os) throw DataError("cannot append to '" + file().string() + "'");
    const nlohmann::json line = {{"stage", stage},
                                 {"path", rel.generic_string()},
                                 {"sha256", digest},
                                 {"bytes", std::filesystem::file_size(path)}};
    os << line.dump() << '\n';
    return digest;
  }

  std::map<std::string, std::string> entries() const {
    std::map<std::string, std::string> out;
    std::ifstream in(file());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        out[j.at("path").get<std::string>()] = j.at("sha256").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest line " + std::to_string(n) + " is malformed: " + e.what());
      }
    }
    return out;
  }

  /// Confirms an upstream artifact exists and matches its recorded hash.
  /// A missing file is an argument error naming the path; an unrecorded or
  /// altered file is a data error.
  std::filesystem::path require(const std::filesystem::path& rel) const {
    const auto path = dir_ / rel;
    if (!std::filesystem::exists(path))
      throw ArgumentError("missing input artifact '" + path.string() + "'; run the upstream stage first");
    const auto all = entries();
    const auto it = all.find(rel.generic_string());
    if (it == all.end()) throw DataError("artifact '" + path.string() + "' is not recorded in the manifest");
    if (sha256_file(path) != it->second)
      throw DataError("artifact '" + path.string() + "' does not match its manifest hash");
    return path;
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace hero::campaign
