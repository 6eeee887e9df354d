#pragma once

// Minimal NumPy .npy (format 1.0/2.0) reader and writer for C-ordered
// float32/float64 arrays, which is how joint-position corpora are shipped.

#include <cstddef>
#include <filesystem>
#include <vector>

namespace t2m {

struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;  // C order, widened to double
};

NpyArray read_npy(const std::filesystem::path& path);

/// Writes a little-endian float64 array (format 1.0).
void write_npy(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               const std::vector<double>& data);

}  // namespace t2m
