#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "t2m/skeleton.hpp"

namespace t2m {

struct MotionFile {
  MotionSequence motion;
  std::vector<std::string> joint_names;
};

/// Canonical motion file: an archive with meta {"format": "t2m-motion",
/// "version": 1, "fps", "joint_names", "units": "mm"} and arrays
/// "frames" [T, J, 3] and "trajectory" [T, D] (both f64).
void write_motion_file(const std::filesystem::path& path, const MotionSequence& motion,
                       const std::vector<std::string>& joint_names);
MotionFile read_motion_file(const std::filesystem::path& path);

/// Plain-text BVH with position channels on every joint and no rotations,
/// which stick-figure viewers (e.g. Blender's importer) read directly.
/// Motions carrying trajectory channels are first integrated to global space.
void export_bvh(const std::filesystem::path& path, const MotionSequence& motion,
                const Skeleton& skeleton);

}  // namespace t2m
