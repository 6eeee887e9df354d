#include "t2m/skeleton.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "skeleton_data.hpp"
#include "t2m/error.hpp"
#include "t2m/hashing.hpp"

namespace t2m {

std::string_view to_string(BodyPart part) {
  switch (part) {
    case BodyPart::left_arm: return "left_arm";
    case BodyPart::right_arm: return "right_arm";
    case BodyPart::trunk: return "trunk";
    case BodyPart::left_leg: return "left_leg";
    case BodyPart::right_leg: return "right_leg";
  }
  return "?";
}

BodyPart parse_body_part(std::string_view name) {
  for (auto p : kBodyParts) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown body part '" + std::string(name) + "'");
}

Skeleton Skeleton::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("skeleton: invalid JSON: ") + e.what());
  }
  Skeleton s;
  s.checksum_ = sha256_hex(text);
  s.name_ = j.at("name").get<std::string>();
  s.version_ = j.at("version").get<int>();
  for (const auto& joint : j.at("joints")) {
    s.names_.push_back(joint.at("name").get<std::string>());
    s.parents_.push_back(joint.at("parent").get<int>());
    s.parts_.push_back(parse_body_part(joint.at("part").get<std::string>()));
  }
  if (s.names_.size() != kJointCount) {
    throw ConfigError("skeleton: expected " + std::to_string(kJointCount) + " joints, got " +
                      std::to_string(s.names_.size()));
  }
  for (std::size_t i = 0; i < s.names_.size(); ++i) {
    const int parent = s.parents_[i];
    if (parent >= static_cast<int>(i) || (parent < 0 && i != 0)) {
      throw ConfigError("skeleton: joint '" + s.names_[i] + "' must have an earlier parent");
    }
    s.members_[static_cast<std::size_t>(s.parts_[i])].push_back(i);
  }
  for (auto p : kBodyParts) {
    if (s.joints_in(p).empty()) {
      throw ConfigError("skeleton: body part '" + std::string(to_string(p)) + "' has no joints");
    }
  }
  const auto up = j.value("up_axis", std::string("y"));
  if (up == "y") {
    s.up_axis_ = 1;
  } else if (up == "z") {
    s.up_axis_ = 2;
  } else {
    throw ConfigError("skeleton: up_axis must be 'y' or 'z'");
  }
  const auto& facing = j.at("facing");
  s.facing_ = {s.index_of(facing.at("left_shoulder").get<std::string>()),
               s.index_of(facing.at("right_shoulder").get<std::string>()),
               s.index_of(facing.at("left_hip").get<std::string>()),
               s.index_of(facing.at("right_hip").get<std::string>())};
  for (const auto& row : j.value("report_rows", nlohmann::json::array())) {
    s.report_rows_.push_back(
        {row.at("label").get<std::string>(), s.index_of(row.at("joint").get<std::string>())});
  }
  return s;
}

Skeleton Skeleton::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("skeleton: cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

const Skeleton& Skeleton::kit21() {
  static const Skeleton s = from_json(detail::kKit21SkeletonJson);
  return s;
}

std::size_t Skeleton::index_of(std::string_view joint_name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == joint_name) return i;
  }
  throw ConfigError("skeleton: unknown joint '" + std::string(joint_name) + "'");
}

std::vector<double> MotionSequence::channels(std::size_t t) const {
  std::vector<double> out(channel_count());
  auto p = pose(t);
  std::copy(p.begin(), p.end(), out.begin());
  auto r = traj(t);
  std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(pose_width()));
  return out;
}

MotionSequence MotionSequence::from_channels(std::span<const double> data, std::size_t joints,
                                             std::size_t traj_dims, double fps) {
  MotionSequence seq;
  seq.joints = joints;
  seq.traj_dims = traj_dims;
  seq.fps = fps;
  const std::size_t width = joints * 3 + traj_dims;
  if (data.size() % width != 0) throw ShapeError("from_channels: size is not a multiple of frame width");
  const std::size_t T = data.size() / width;
  seq.frames.reserve(T * joints * 3);
  seq.trajectory.reserve(T * traj_dims);
  for (std::size_t t = 0; t < T; ++t) {
    auto row = data.subspan(t * width, width);
    seq.frames.insert(seq.frames.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(joints * 3));
    seq.trajectory.insert(seq.trajectory.end(), row.begin() + static_cast<std::ptrdiff_t>(joints * 3),
                          row.end());
  }
  return seq;
}

void MotionSequence::validate() const {
  if (joints == 0 || frames.size() % (joints * 3) != 0) {
    throw ShapeError("motion: frame buffer is not T x J x 3");
  }
  if (trajectory.size() != length() * traj_dims) {
    throw ShapeError("motion: trajectory has " + std::to_string(trajectory.size()) +
                     " values, expected " + std::to_string(length() * traj_dims));
  }
  for (double v : frames) {
    if (!std::isfinite(v)) throw FormatError("motion: non-finite joint position");
  }
  for (double v : trajectory) {
    if (!std::isfinite(v)) throw FormatError("motion: non-finite trajectory value");
  }
}

PartitionedPose partition_pose(std::span<const double> pose, const Skeleton& skeleton) {
  if (pose.size() != skeleton.joint_count() * 3) {
    throw ShapeError("partition_pose: pose has " + std::to_string(pose.size() / 3) + " joints, skeleton has " +
                     std::to_string(skeleton.joint_count()));
  }
  PartitionedPose out;
  for (auto part : kBodyParts) {
    auto& dst = out.parts[static_cast<std::size_t>(part)];
    for (std::size_t j : skeleton.joints_in(part)) {
      dst.insert(dst.end(), pose.begin() + static_cast<std::ptrdiff_t>(3 * j),
                 pose.begin() + static_cast<std::ptrdiff_t>(3 * j + 3));
    }
  }
  return out;
}

std::vector<double> unpartition_pose(const PartitionedPose& parts, const Skeleton& skeleton) {
  std::vector<double> pose(skeleton.joint_count() * 3);
  for (auto part : kBodyParts) {
    const auto& src = parts[part];
    const auto& joints = skeleton.joints_in(part);
    if (src.size() != joints.size() * 3) throw ShapeError("unpartition_pose: part size mismatch");
    for (std::size_t k = 0; k < joints.size(); ++k) {
      for (std::size_t c = 0; c < 3; ++c) pose[3 * joints[k] + c] = src[3 * k + c];
    }
  }
  return pose;
}

std::array<std::vector<std::size_t>, 5> part_channels(const Skeleton& skeleton, std::size_t traj_dims) {
  std::array<std::vector<std::size_t>, 5> out;
  for (auto part : kBodyParts) {
    auto& dst = out[static_cast<std::size_t>(part)];
    for (std::size_t j : skeleton.joints_in(part)) {
      for (std::size_t c = 0; c < 3; ++c) dst.push_back(3 * j + c);
    }
  }
  auto& trunk = out[static_cast<std::size_t>(BodyPart::trunk)];
  for (std::size_t d = 0; d < traj_dims; ++d) trunk.push_back(skeleton.joint_count() * 3 + d);
  return out;
}

std::vector<double> velocity(const MotionSequence& seq) {
  const std::size_t T = seq.length();
  if (T < 2) throw LengthError("velocity: need at least 2 frames, got " + std::to_string(T));
  const std::size_t w = seq.pose_width();
  std::vector<double> out((T - 1) * w);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = seq.frames[i + w] - seq.frames[i];
  return out;
}

MotionSequence subsample(const MotionSequence& seq, double target_fps) {
  if (!(target_fps > 0.0) || !(seq.fps > 0.0)) throw ConfigError("subsample: fps must be positive");
  const double ratio = seq.fps / target_fps;
  const double step_rounded = std::round(ratio);
  if (step_rounded < 1.0 || std::abs(ratio - step_rounded) > 1e-9 * ratio) {
    throw ConfigError("subsample: " + std::to_string(seq.fps) + " fps is not an integer multiple of " +
                      std::to_string(target_fps));
  }
  const auto step = static_cast<std::size_t>(step_rounded);
  MotionSequence out;
  out.joints = seq.joints;
  out.traj_dims = seq.traj_dims;
  out.fps = target_fps;
  const std::size_t T = seq.length();
  const std::size_t w = seq.pose_width();
  if (seq.trajectory.size() != T * seq.traj_dims) throw ShapeError("subsample: trajectory size mismatch");
  const bool has_traj = seq.traj_dims > 0;
  for (std::size_t t = 0; t < T; t += step) {
    out.frames.insert(out.frames.end(), seq.frames.begin() + static_cast<std::ptrdiff_t>(t * w),
                      seq.frames.begin() + static_cast<std::ptrdiff_t>((t + 1) * w));
    if (has_traj) {
      auto r = seq.traj(t);
      out.trajectory.insert(out.trajectory.end(), r.begin(), r.end());
    }
  }
  return out;
}

}  // namespace t2m
