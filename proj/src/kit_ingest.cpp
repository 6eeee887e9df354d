#include "t2m/kit_ingest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "t2m/archive.hpp"
#include "t2m/error.hpp"
#include "t2m/hashing.hpp"
#include "t2m/motion_repr.hpp"
#include "t2m/npy.hpp"

namespace fs = std::filesystem;

namespace t2m {

namespace {

constexpr std::string_view kJointsSuffix = "_joints.npy";
constexpr std::string_view kAnnotationsSuffix = "_annotations.json";
constexpr std::string_view kMetaSuffix = "_meta.json";

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open '" + path.string() + "'");
  return nlohmann::json::parse(in);
}

struct LoadResult {
  RawMotion motion;
  std::string error;
  std::vector<std::string> warnings;
};

LoadResult load_one(const fs::path& root, const std::string& id, const Skeleton& skeleton,
                    const LoadOptions& options) {
  LoadResult r;
  r.motion.id = id;
  try {
    const auto joints_path = root / (id + std::string(kJointsSuffix));
    const auto ann_path = root / (id + std::string(kAnnotationsSuffix));
    if (!fs::exists(joints_path)) {
      r.error = "missing motion file";
      return r;
    }
    if (!fs::exists(ann_path)) {
      r.error = "missing annotation file";
      return r;
    }
    const NpyArray arr = read_npy(joints_path);
    const std::size_t J = skeleton.joint_count();
    const bool ok_shape = (arr.shape.size() == 3 && arr.shape[1] == J && arr.shape[2] == 3) ||
                          (arr.shape.size() == 2 && arr.shape[1] == J * 3);
    if (!ok_shape || arr.shape[0] == 0) {
      r.error = "motion array must be (T, " + std::to_string(J) + ", 3)";
      return r;
    }
    for (double v : arr.data) {
      if (!std::isfinite(v)) {
        r.error = "non-finite joint position";
        return r;
      }
    }
    double fps = options.default_fps;
    const auto meta_path = root / (id + std::string(kMetaSuffix));
    if (fs::exists(meta_path)) {
      const auto meta = read_json_file(meta_path);
      if (meta.is_object() && meta.contains("fps")) fps = meta.at("fps").get<double>();
    }
    r.motion.motion.joints = J;
    r.motion.motion.traj_dims = 0;
    r.motion.motion.fps = fps;
    r.motion.motion.frames = arr.data;

    const auto ann = read_json_file(ann_path);
    if (!ann.is_array()) {
      r.error = "annotation file is not a JSON array";
      return r;
    }
    int index = 0;
    for (const auto& s : ann) {
      const std::string sentence = normalize_sentence(s.get<std::string>());
      if (sentence.empty()) {
        r.warnings.push_back(id + ": empty annotation #" + std::to_string(index) + " skipped");
      } else {
        r.motion.annotations.push_back({id, sentence, index});
      }
      ++index;
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

std::size_t Corpus::annotation_count() const {
  std::size_t n = 0;
  for (const auto& m : motions) n += m.annotations.size();
  return n;
}

std::string normalize_sentence(std::string_view sentence) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = sentence.size();
  while (b < e && is_space(static_cast<unsigned char>(sentence[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(sentence[e - 1]))) --e;
  return std::string(sentence.substr(b, e - b));
}

std::string corpus_checksum(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& f : files) {
    h.update(f.filename().string());
    h.update(sha256_file(f));
  }
  return h.hex();
}

Corpus load_corpus(const fs::path& root, const Skeleton& skeleton, const LoadOptions& options) {
  if (!fs::is_directory(root)) throw ResourceError("corpus path '" + root.string() + "' is not a directory");
  std::set<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (ends_with(name, kJointsSuffix)) {
      ids.insert(name.substr(0, name.size() - kJointsSuffix.size()));
    } else if (ends_with(name, kAnnotationsSuffix)) {
      ids.insert(name.substr(0, name.size() - kAnnotationsSuffix.size()));
    }
  }
  Corpus corpus;
  if (ids.empty()) {
    corpus.warnings.push_back("no motions found in '" + root.string() + "'");
    spdlog::warn("no motions found in '{}'", root.string());
    corpus.checksum = corpus_checksum(root);
    return corpus;
  }

  const std::vector<std::string> id_list(ids.begin(), ids.end());
  std::vector<LoadResult> results(id_list.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(id_list.size()); ++i) {
    results[static_cast<std::size_t>(i)] = load_one(root, id_list[static_cast<std::size_t>(i)], skeleton, options);
  }

  std::vector<std::string> bad;
  std::string detail;
  for (auto& r : results) {
    corpus.warnings.insert(corpus.warnings.end(), r.warnings.begin(), r.warnings.end());
    if (!r.error.empty()) {
      bad.push_back(r.motion.id);
      detail += "\n  " + r.motion.id + ": " + r.error;
      continue;
    }
    if (r.motion.annotations.empty()) corpus.unannotated.push_back(r.motion.id);
    corpus.motions.push_back(std::move(r.motion));
  }
  if (!bad.empty()) {
    if (!options.permissive) {
      throw IngestError("corpus ingest failed for " + std::to_string(bad.size()) + " motion(s):" + detail, bad);
    }
    spdlog::warn("skipping {} unreadable motion(s):{}", bad.size(), detail);
    corpus.failed = bad;
  }
  for (const auto& id : corpus.unannotated) spdlog::warn("motion {} has no annotations", id);
  for (const auto& w : corpus.warnings) spdlog::warn("{}", w);
  corpus.checksum = corpus_checksum(root);
  return corpus;
}

SampleSet make_samples(const Corpus& corpus, const Skeleton& skeleton, double target_fps) {
  SampleSet out;
  for (const auto& raw : corpus.motions) {
    if (raw.annotations.empty()) continue;
    MotionSequence local;
    try {
      local = to_local_representation(subsample(raw.motion, target_fps), skeleton);
    } catch (const Error& e) {
      out.dropped.push_back(raw.id + ": " + e.what());
      spdlog::warn("dropping motion {}: {}", raw.id, e.what());
      continue;
    }
    if (local.length() < 2) {
      out.dropped.push_back(raw.id + ": fewer than 2 frames after subsampling");
      spdlog::warn("dropping motion {}: {} frame(s) after subsampling", raw.id, local.length());
      continue;
    }
    auto shared = std::make_shared<const MotionSequence>(std::move(local));
    for (const auto& a : raw.annotations) {
      out.samples.push_back({shared, a.sentence, raw.id, a.annotation_index});
    }
  }
  return out;
}

void SplitConfig::validate() const {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

Splits split(const std::vector<Sample>& samples, const SplitConfig& config) {
  config.validate();
  // Split units: distinct motion ids (sorted) or individual samples.
  std::vector<std::string> units;
  if (config.unit == SplitUnit::by_motion) {
    std::set<std::string> ids;
    for (const auto& s : samples) ids.insert(s.motion_id);
    units.assign(ids.begin(), ids.end());
  } else {
    units.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) units.push_back(std::to_string(i));
  }

  // Fisher-Yates on raw mt19937_64 output keeps the permutation identical
  // across standard library implementations.
  std::vector<std::size_t> order(units.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }

  const std::size_t n = units.size();
  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(config.ratios[0] * static_cast<double>(n))));
  const auto n_val =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(config.ratios[1] * static_cast<double>(n))));
  std::map<std::string, int> bucket;
  for (std::size_t k = 0; k < n; ++k) {
    bucket[units[order[k]]] = k < n_train ? 0 : (k < n_train + n_val ? 1 : 2);
  }

  Splits out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& key = config.unit == SplitUnit::by_motion ? samples[i].motion_id : units[i];
    switch (bucket.at(key)) {
      case 0: out.train.push_back(samples[i]); break;
      case 1: out.val.push_back(samples[i]); break;
      default: out.test.push_back(samples[i]); break;
    }
  }
  return out;
}

std::vector<double> NormalizationStats::apply(const MotionSequence& motion) const {
  const std::size_t C = motion.channel_count();
  if (C != channels()) throw ShapeError("normalization: channel count mismatch");
  const std::size_t T = motion.length();
  std::vector<double> out(T * C);
  for (std::size_t t = 0; t < T; ++t) {
    const auto ch = motion.channels(t);
    for (std::size_t c = 0; c < C; ++c) out[t * C + c] = (ch[c] - mean[c]) / std[c];
  }
  return out;
}

MotionSequence NormalizationStats::invert(std::span<const double> normalized, std::size_t joints,
                                          std::size_t traj_dims, double fps) const {
  const std::size_t C = joints * 3 + traj_dims;
  if (C != channels() || normalized.size() % C != 0) throw ShapeError("normalization: channel count mismatch");
  std::vector<double> raw(normalized.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t c = i % C;
    raw[i] = normalized[i] * std[c] + mean[c];
  }
  return MotionSequence::from_channels(raw, joints, traj_dims, fps);
}

nlohmann::json NormalizationStats::to_json() const {
  return {{"mean", mean}, {"std", std}, {"epsilon", kEpsilon}, {"clamped", clamped}};
}

NormalizationStats NormalizationStats::from_json(const nlohmann::json& j) {
  NormalizationStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std = j.at("std").get<std::vector<double>>();
  s.clamped = j.value("clamped", std::vector<std::size_t>{});
  if (s.mean.size() != s.std.size()) throw FormatError("normalization: mean/std length mismatch");
  return s;
}

NormalizationStats fit_normalization(std::span<const Sample> train) {
  if (train.empty()) throw ConfigError("fit_normalization: empty training split");
  const std::size_t C = train.front().motion->channel_count();
  // Welford accumulation over every frame of every distinct motion.
  std::vector<double> mean(C, 0.0);
  std::vector<double> m2(C, 0.0);
  double count = 0.0;
  std::set<const MotionSequence*> seen;
  for (const auto& s : train) {
    if (!seen.insert(s.motion.get()).second) continue;
    if (s.motion->channel_count() != C) throw ShapeError("fit_normalization: inconsistent channel count");
    for (std::size_t t = 0; t < s.motion->length(); ++t) {
      const auto ch = s.motion->channels(t);
      count += 1.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double delta = ch[c] - mean[c];
        mean[c] += delta / count;
        m2[c] += delta * (ch[c] - mean[c]);
      }
    }
  }
  NormalizationStats stats;
  stats.mean = mean;
  stats.std.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const double sd = std::sqrt(m2[c] / count);
    if (sd < NormalizationStats::kEpsilon) {
      stats.std[c] = NormalizationStats::kEpsilon;
      stats.clamped.push_back(c);
    } else {
      stats.std[c] = sd;
    }
  }
  if (!stats.clamped.empty()) {
    spdlog::warn("normalization: {} zero-variance channel(s) clamped to epsilon", stats.clamped.size());
  }
  return stats;
}

void write_split_cache(const fs::path& path, const std::vector<Sample>& samples) {
  std::vector<double> channels;
  nlohmann::json motions = nlohmann::json::array();
  nlohmann::json sample_list = nlohmann::json::array();
  std::map<const MotionSequence*, std::size_t> motion_index;
  std::size_t offset = 0;
  std::size_t width = 0;
  for (const auto& s : samples) {
    const MotionSequence* m = s.motion.get();
    if (!motion_index.contains(m)) {
      motion_index[m] = motions.size();
      width = m->channel_count();
      for (std::size_t t = 0; t < m->length(); ++t) {
        const auto ch = m->channels(t);
        channels.insert(channels.end(), ch.begin(), ch.end());
      }
      motions.push_back({{"id", s.motion_id},
                         {"frames", m->length()},
                         {"offset", offset},
                         {"fps", m->fps},
                         {"joints", m->joints},
                         {"traj_dims", m->traj_dims}});
      offset += m->length();
    }
    sample_list.push_back({{"motion", motion_index[m]},
                           {"motion_id", s.motion_id},
                           {"annotation_index", s.annotation_index},
                           {"sentence", s.sentence}});
  }
  Archive ar;
  ar.meta = {{"format", "t2m-split"},
             {"preprocessing_version", kPreprocessingVersion},
             {"motions", motions},
             {"samples", sample_list}};
  ar.put("channels", std::span<const double>(channels), {offset, width});
  ar.save(path);
}

std::vector<Sample> read_split_cache(const fs::path& path) {
  const Archive ar = Archive::load(path);
  if (ar.meta.value("format", "") != "t2m-split") {
    throw FormatError("'" + path.string() + "' is not a split cache");
  }
  if (ar.meta.value("preprocessing_version", 0) != kPreprocessingVersion) {
    throw FormatError("split cache '" + path.string() + "' was written by another preprocessing version");
  }
  const auto channels = ar.get_f64("channels");
  const auto& shape = ar.shape("channels");
  const std::size_t width = shape.size() == 2 ? shape[1] : 0;
  std::vector<std::shared_ptr<const MotionSequence>> motions;
  for (const auto& m : ar.meta.at("motions")) {
    const auto T = m.at("frames").get<std::size_t>();
    const auto off = m.at("offset").get<std::size_t>();
    auto seq = MotionSequence::from_channels(std::span<const double>(channels).subspan(off * width, T * width),
                                             m.at("joints").get<std::size_t>(),
                                             m.at("traj_dims").get<std::size_t>(), m.at("fps").get<double>());
    motions.push_back(std::make_shared<const MotionSequence>(std::move(seq)));
  }
  std::vector<Sample> out;
  for (const auto& s : ar.meta.at("samples")) {
    out.push_back({motions.at(s.at("motion").get<std::size_t>()), s.at("sentence").get<std::string>(),
                   s.at("motion_id").get<std::string>(), s.at("annotation_index").get<int>()});
  }
  return out;
}

}  // namespace t2m
