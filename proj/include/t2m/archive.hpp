#pragma once

// Self-describing array container used for motion files, dataset caches,
// embedding caches, BERT weights and checkpoints.
//
// Byte layout (little endian):
//   [0, 8)        magic "T2MARC01"
//   [8, 16)       uint64 header length H
//   [16, 16+H)    UTF-8 JSON header:
//                   {"meta": {...},
//                    "arrays": [{"name", "dtype": "f64"|"f32"|"i64",
//                                "shape": [...], "offset", "nbytes"}, ...]}
//   [16+H, ...)   array payloads; offsets are relative to the start of this
//                 region and every payload starts on an 8-byte boundary.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace t2m {

enum class DType { f64, f32, i64 };

class Archive {
 public:
  nlohmann::json meta = nlohmann::json::object();

  void put(const std::string& name, std::span<const double> data, std::vector<std::size_t> shape);
  void put(const std::string& name, std::span<const float> data, std::vector<std::size_t> shape);
  void put(const std::string& name, std::span<const std::int64_t> data,
           std::vector<std::size_t> shape);

  bool contains(const std::string& name) const;
  const std::vector<std::size_t>& shape(const std::string& name) const;
  DType dtype(const std::string& name) const;
  std::vector<std::string> names() const { return order_; }

  /// Converts from the stored dtype when needed.
  std::vector<double> get_f64(const std::string& name) const;
  std::vector<float> get_f32(const std::string& name) const;
  std::vector<std::int64_t> get_i64(const std::string& name) const;

  /// Writes to a temporary sibling and renames it into place.
  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

 private:
  struct Entry {
    DType dtype;
    std::vector<std::size_t> shape;
    std::vector<std::byte> bytes;
  };
  const Entry& entry(const std::string& name) const;
  void insert(const std::string& name, DType dtype, std::vector<std::size_t> shape,
              const void* data, std::size_t nbytes, std::size_t count);

  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

/// Writes `contents` to `path` via a temporary file and rename.
void atomic_write_text(const std::filesystem::path& path, const std::string& contents);

}  // namespace t2m
