#pragma once

// KIT Motion-Language corpus ingestion, preprocessing, splitting,
// normalization and the on-disk dataset cache.
//
// Corpus layout, one set of files per motion id:
//   <id>_joints.npy        global joint positions, shape (T, 21, 3) or (T, 63), mm
//   <id>_annotations.json  JSON array of sentences (may be empty)
//   <id>_meta.json         optional; {"fps": <source frame rate>} (default 100)

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "t2m/skeleton.hpp"

namespace t2m {

inline constexpr int kPreprocessingVersion = 1;
inline constexpr double kTargetFps = 12.5;

struct AnnotationRecord {
  std::string motion_id;
  std::string sentence;
  int annotation_index = 0;
};

struct RawMotion {
  std::string id;
  MotionSequence motion;  // global positions, traj_dims == 0
  std::vector<AnnotationRecord> annotations;
};

struct Corpus {
  std::vector<RawMotion> motions;
  std::vector<std::string> warnings;
  std::vector<std::string> unannotated;  // motions with zero annotations
  std::vector<std::string> failed;       // skipped under the permissive flag
  std::string checksum;

  std::size_t annotation_count() const;
};

struct LoadOptions {
  bool permissive = false;
  double default_fps = 100.0;
};

/// Reads every motion in `root`. Without `permissive`, any missing or corrupt
/// file raises an IngestError naming all offending ids.
Corpus load_corpus(const std::filesystem::path& root, const Skeleton& skeleton,
                   const LoadOptions& options = {});

struct Sample {
  std::shared_ptr<const MotionSequence> motion;  // local representation, mm
  std::string sentence;
  std::string motion_id;
  int annotation_index = 0;
};

struct SampleSet {
  std::vector<Sample> samples;
  std::vector<std::string> dropped;  // "<id>: reason"
};

/// Trims outer whitespace; case and punctuation are kept (cased tokenizer).
std::string normalize_sentence(std::string_view sentence);

/// One sample per (motion, annotation); motions are subsampled to
/// `target_fps` and converted to the local representation. Annotations of one
/// motion share the same motion array.
SampleSet make_samples(const Corpus& corpus, const Skeleton& skeleton, double target_fps = kTargetFps);

enum class SplitUnit { by_motion, by_annotation };

struct SplitConfig {
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
  SplitUnit unit = SplitUnit::by_motion;

  void validate() const;
};

struct Splits {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

/// Deterministic shuffled split. With SplitUnit::by_motion all annotations of
/// a motion land in the same split and the ratios apply to motion ids.
Splits split(const std::vector<Sample>& samples, const SplitConfig& config);

struct NormalizationStats {
  static constexpr double kEpsilon = 1e-6;

  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::size_t> clamped;  // channels whose std was clamped

  std::size_t channels() const { return mean.size(); }
  /// Frame-major T x C normalized channels of a motion.
  std::vector<double> apply(const MotionSequence& motion) const;
  /// Inverse of apply().
  MotionSequence invert(std::span<const double> normalized, std::size_t joints, std::size_t traj_dims,
                        double fps) const;
  nlohmann::json to_json() const;
  static NormalizationStats from_json(const nlohmann::json& j);
};

/// Per-channel mean / population std over the frames of the distinct
/// motions in `train` (each motion counted once).
NormalizationStats fit_normalization(std::span<const Sample> train);

/// Split cache archive: unique motions plus the sample list.
void write_split_cache(const std::filesystem::path& path, const std::vector<Sample>& samples);
std::vector<Sample> read_split_cache(const std::filesystem::path& path);

/// SHA-256 over the sorted file names and contents of a corpus directory.
std::string corpus_checksum(const std::filesystem::path& root);

}  // namespace t2m
