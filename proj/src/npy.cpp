#include "t2m/npy.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <regex>
#include <string>

#include "t2m/error.hpp"

namespace t2m {

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("npy: cannot open '" + path.string() + "'");
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) {
    throw FormatError("npy: '" + path.string() + "' is not a .npy file");
  }
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    std::uint16_t len16 = 0;
    in.read(reinterpret_cast<char*>(&len16), 2);
    header_len = len16;
  } else if (version[0] == 2 || version[0] == 3) {
    in.read(reinterpret_cast<char*>(&header_len), 4);
  } else {
    throw FormatError("npy: unsupported version in '" + path.string() + "'");
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) throw FormatError("npy: truncated header in '" + path.string() + "'");

  std::smatch m;
  if (!std::regex_search(header, m, std::regex(R"('descr'\s*:\s*'([^']*)')"))) {
    throw FormatError("npy: missing descr in '" + path.string() + "'");
  }
  const std::string descr = m[1];
  if (std::regex_search(header, m, std::regex(R"('fortran_order'\s*:\s*True)"))) {
    throw FormatError("npy: fortran-ordered arrays are not supported ('" + path.string() + "')");
  }
  if (!std::regex_search(header, m, std::regex(R"('shape'\s*:\s*\(([^)]*)\))"))) {
    throw FormatError("npy: missing shape in '" + path.string() + "'");
  }
  NpyArray arr;
  const std::string dims = m[1];
  const std::regex num(R"(\d+)");
  for (auto it = std::sregex_iterator(dims.begin(), dims.end(), num); it != std::sregex_iterator(); ++it) {
    arr.shape.push_back(static_cast<std::size_t>(std::stoull(it->str())));
  }
  const std::size_t n =
      std::accumulate(arr.shape.begin(), arr.shape.end(), std::size_t{1}, std::multiplies<>());
  arr.data.resize(n);
  if (descr == "<f8" || descr == "=f8") {
    in.read(reinterpret_cast<char*>(arr.data.data()), static_cast<std::streamsize>(n * 8));
  } else if (descr == "<f4" || descr == "=f4") {
    std::vector<float> tmp(n);
    in.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(n * 4));
    std::copy(tmp.begin(), tmp.end(), arr.data.begin());
  } else {
    throw FormatError("npy: unsupported dtype '" + descr + "' in '" + path.string() + "'");
  }
  if (!in) throw FormatError("npy: truncated payload in '" + path.string() + "'");
  return arr;
}

void write_npy(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               const std::vector<double>& data) {
  std::string dims;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dims += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dims += ",";
    if (i + 1 < shape.size()) dims += " ";
  }
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" + dims + "), }";
  const std::size_t total = 10 + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header.push_back('\n');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("npy: cannot open '" + path.string() + "' for writing");
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  out.write(reinterpret_cast<const char*>(&len), 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * 8));
}

}  // namespace t2m
