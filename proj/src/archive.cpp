#include "t2m/archive.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "t2m/error.hpp"

namespace t2m {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little endian");

namespace {

constexpr char kMagic[8] = {'T', '2', 'M', 'A', 'R', 'C', '0', '1'};

const char* dtype_name(DType d) {
  switch (d) {
    case DType::f64: return "f64";
    case DType::f32: return "f32";
    case DType::i64: return "i64";
  }
  return "?";
}

DType parse_dtype(const std::string& s) {
  if (s == "f64") return DType::f64;
  if (s == "f32") return DType::f32;
  if (s == "i64") return DType::i64;
  throw FormatError("archive: unknown dtype '" + s + "'");
}

std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

template <typename Out>
std::vector<Out> convert(DType dtype, const std::vector<std::byte>& bytes) {
  const std::size_t n = bytes.size() / dtype_size(dtype);
  std::vector<Out> out(n);
  switch (dtype) {
    case DType::f64: {
      std::vector<double> tmp(n);
      std::memcpy(tmp.data(), bytes.data(), bytes.size());
      std::transform(tmp.begin(), tmp.end(), out.begin(), [](double v) { return static_cast<Out>(v); });
      break;
    }
    case DType::f32: {
      std::vector<float> tmp(n);
      std::memcpy(tmp.data(), bytes.data(), bytes.size());
      std::transform(tmp.begin(), tmp.end(), out.begin(), [](float v) { return static_cast<Out>(v); });
      break;
    }
    case DType::i64: {
      std::vector<std::int64_t> tmp(n);
      std::memcpy(tmp.data(), bytes.data(), bytes.size());
      std::transform(tmp.begin(), tmp.end(), out.begin(),
                     [](std::int64_t v) { return static_cast<Out>(v); });
      break;
    }
  }
  return out;
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

}  // namespace

void Archive::insert(const std::string& name, DType dtype, std::vector<std::size_t> shape,
                     const void* data, std::size_t nbytes, std::size_t count) {
  if (element_count(shape) != count) {
    throw ShapeError("archive: array '" + name + "' has " + std::to_string(count) +
                     " elements but shape says " + std::to_string(element_count(shape)));
  }
  Entry e{dtype, std::move(shape), std::vector<std::byte>(nbytes)};
  if (nbytes > 0) std::memcpy(e.bytes.data(), data, nbytes);
  if (!entries_.contains(name)) order_.push_back(name);
  entries_[name] = std::move(e);
}

void Archive::put(const std::string& name, std::span<const double> data,
                  std::vector<std::size_t> shape) {
  insert(name, DType::f64, std::move(shape), data.data(), data.size_bytes(), data.size());
}

void Archive::put(const std::string& name, std::span<const float> data,
                  std::vector<std::size_t> shape) {
  insert(name, DType::f32, std::move(shape), data.data(), data.size_bytes(), data.size());
}

void Archive::put(const std::string& name, std::span<const std::int64_t> data,
                  std::vector<std::size_t> shape) {
  insert(name, DType::i64, std::move(shape), data.data(), data.size_bytes(), data.size());
}

bool Archive::contains(const std::string& name) const { return entries_.contains(name); }

const Archive::Entry& Archive::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw FormatError("archive: no array named '" + name + "'");
  return it->second;
}

const std::vector<std::size_t>& Archive::shape(const std::string& name) const {
  return entry(name).shape;
}

DType Archive::dtype(const std::string& name) const { return entry(name).dtype; }

std::vector<double> Archive::get_f64(const std::string& name) const {
  const auto& e = entry(name);
  return convert<double>(e.dtype, e.bytes);
}

std::vector<float> Archive::get_f32(const std::string& name) const {
  const auto& e = entry(name);
  return convert<float>(e.dtype, e.bytes);
}

std::vector<std::int64_t> Archive::get_i64(const std::string& name) const {
  const auto& e = entry(name);
  return convert<std::int64_t>(e.dtype, e.bytes);
}

void Archive::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["meta"] = meta;
  header["arrays"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& name : order_) {
    const auto& e = entries_.at(name);
    header["arrays"].push_back({{"name", name},
                                {"dtype", dtype_name(e.dtype)},
                                {"shape", e.shape},
                                {"offset", offset},
                                {"nbytes", e.bytes.size()}});
    offset += (e.bytes.size() + 7) / 8 * 8;
  }
  const std::string text = header.dump();
  const std::uint64_t header_len = text.size();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("archive: cannot open '" + tmp.string() + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    const char zeros[8] = {};
    for (const auto& name : order_) {
      const auto& e = entries_.at(name);
      out.write(reinterpret_cast<const char*>(e.bytes.data()),
                static_cast<std::streamsize>(e.bytes.size()));
      out.write(zeros, static_cast<std::streamsize>((8 - e.bytes.size() % 8) % 8));
    }
    if (!out) throw ResourceError("archive: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("archive: cannot open '" + path.string() + "'");
  char magic[8];
  std::uint64_t header_len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("archive: '" + path.string() + "' is not a t2m archive");
  }
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("archive: truncated header in '" + path.string() + "'");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("archive: bad header in '" + path.string() + "': " + e.what());
  }
  const auto data_start = static_cast<std::streamoff>(16 + header_len);

  Archive ar;
  ar.meta = header.value("meta", nlohmann::json::object());
  for (const auto& a : header.at("arrays")) {
    Entry e;
    e.dtype = parse_dtype(a.at("dtype").get<std::string>());
    e.shape = a.at("shape").get<std::vector<std::size_t>>();
    const auto nbytes = a.at("nbytes").get<std::size_t>();
    if (nbytes != element_count(e.shape) * dtype_size(e.dtype)) {
      throw FormatError("archive: size mismatch for array '" + a.at("name").get<std::string>() + "'");
    }
    e.bytes.resize(nbytes);
    in.seekg(data_start + static_cast<std::streamoff>(a.at("offset").get<std::size_t>()));
    in.read(reinterpret_cast<char*>(e.bytes.data()), static_cast<std::streamsize>(nbytes));
    if (!in) throw FormatError("archive: truncated payload in '" + path.string() + "'");
    const auto name = a.at("name").get<std::string>();
    ar.order_.push_back(name);
    ar.entries_[name] = std::move(e);
  }
  return ar;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ResourceError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    if (!out) throw ResourceError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace t2m
