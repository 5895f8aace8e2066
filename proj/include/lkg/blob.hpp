#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace lkg {

// Checkpoint container: one line of JSON (the manifest), a '\n', then every
// parameter block as little-endian IEEE-754 binary64 values, back to back, in the
// order the manifest's "blocks" array lists them.

struct BlobBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> values;
};

inline void write_blob(const std::string& path, nlohmann::ordered_json manifest,
                       const std::vector<BlobBlock>& blocks) {
  manifest["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : blocks) {
    if (b.rows * b.cols != b.values.size()) {
      throw UsageError("checkpoint block '" + b.name + "' has inconsistent shape");
    }
    manifest["blocks"].push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out << manifest.dump() << '\n';
  for (const auto& b : blocks) {
    for (double v : b.values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<char>(bits & 0xFF);
        bits >>= 8;
      }
      out.write(bytes, 8);
    }
  }
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

struct Blob {
  nlohmann::json manifest;
  std::vector<std::pair<std::string, std::vector<double>>> blocks;

  const std::vector<double>& block(const std::string& name) const {
    for (const auto& [n, v] : blocks) {
      if (n == name) return v;
    }
    throw DataError("checkpoint has no block '" + name + "'");
  }
};

inline Blob read_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) throw DataError("checkpoint '" + path + "' is empty");
  Blob blob;
  try {
    blob.manifest = nlohmann::json::parse(header);
    for (const auto& b : blob.manifest.at("blocks")) {
      const auto name = b.at("name").get<std::string>();
      const auto count = b.at("rows").get<std::size_t>() * b.at("cols").get<std::size_t>();
      std::vector<double> values(count);
      for (auto& v : values) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
          throw DataError("checkpoint '" + path + "' is truncated in block '" + name + "'");
        }
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
        v = std::bit_cast<double>(bits);
      }
      blob.blocks.emplace_back(name, std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path + "' has a malformed manifest: " + e.what());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint '" + path + "' has trailing bytes");
  }
  return blob;
}

} // namespace lkg
