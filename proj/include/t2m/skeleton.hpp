#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace t2m {

enum class BodyPart { left_arm = 0, right_arm = 1, trunk = 2, left_leg = 3, right_leg = 4 };

inline constexpr std::array<BodyPart, 5> kBodyParts = {
    BodyPart::left_arm, BodyPart::right_arm, BodyPart::trunk, BodyPart::left_leg,
    BodyPart::right_leg};

std::string_view to_string(BodyPart part);
BodyPart parse_body_part(std::string_view name);

struct ReportRow {
  std::string label;
  std::size_t joint;
};

/// Joint set, hierarchy and body-part assignment. Loaded from a versioned
/// JSON file; the checksum of that file identifies the skeleton in caches
/// and checkpoints.
class Skeleton {
 public:
  static constexpr std::size_t kJointCount = 21;

  static Skeleton from_json(std::string_view text);
  static Skeleton load(const std::filesystem::path& path);
  /// The bundled 21-joint KIT skeleton (data/skeleton_kit21.json).
  static const Skeleton& kit21();

  const std::string& name() const { return name_; }
  int version() const { return version_; }
  const std::string& checksum() const { return checksum_; }
  std::size_t joint_count() const { return names_.size(); }
  const std::vector<std::string>& joint_names() const { return names_; }
  const std::vector<int>& parents() const { return parents_; }
  BodyPart part_of(std::size_t joint) const { return parts_.at(joint); }
  /// Joints of one part, in skeleton order.
  const std::vector<std::size_t>& joints_in(BodyPart part) const {
    return members_[static_cast<std::size_t>(part)];
  }
  std::size_t index_of(std::string_view joint_name) const;

  /// Index of the vertical axis (1 = y-up, 2 = z-up).
  std::size_t up_axis() const { return up_axis_; }
  std::size_t left_shoulder() const { return facing_[0]; }
  std::size_t right_shoulder() const { return facing_[1]; }
  std::size_t left_hip() const { return facing_[2]; }
  std::size_t right_hip() const { return facing_[3]; }

  const std::vector<ReportRow>& report_rows() const { return report_rows_; }

 private:
  std::string name_;
  int version_ = 0;
  std::string checksum_;
  std::vector<std::string> names_;
  std::vector<int> parents_;
  std::vector<BodyPart> parts_;
  std::array<std::vector<std::size_t>, 5> members_;
  std::size_t up_axis_ = 1;
  std::array<std::size_t, 4> facing_{};
  std::vector<ReportRow> report_rows_;
};

/// Time-indexed skeleton poses plus global root-trajectory channels.
///
/// `frames` holds T x J x 3 root-relative joint positions in millimetres,
/// `trajectory` holds T x traj_dims channels (planar root velocity along the
/// two ground axes, then angular velocity about the vertical axis).
struct MotionSequence {
  static constexpr std::size_t kTrajectoryDims = 3;

  std::size_t joints = Skeleton::kJointCount;
  std::size_t traj_dims = kTrajectoryDims;
  double fps = 12.5;
  std::vector<double> frames;
  std::vector<double> trajectory;

  std::size_t length() const { return joints == 0 ? 0 : frames.size() / (joints * 3); }
  std::size_t pose_width() const { return joints * 3; }
  /// Width of one model frame: joint coordinates followed by trajectory.
  std::size_t channel_count() const { return joints * 3 + traj_dims; }

  std::span<const double> pose(std::size_t t) const {
    return std::span<const double>(frames).subspan(t * pose_width(), pose_width());
  }
  std::span<double> pose(std::size_t t) {
    return std::span<double>(frames).subspan(t * pose_width(), pose_width());
  }
  std::span<const double> traj(std::size_t t) const {
    return std::span<const double>(trajectory).subspan(t * traj_dims, traj_dims);
  }

  /// Frame t as [pose | trajectory].
  std::vector<double> channels(std::size_t t) const;
  /// Inverse of channels(): builds a sequence from T concatenated frames.
  static MotionSequence from_channels(std::span<const double> data, std::size_t joints,
                                      std::size_t traj_dims, double fps);

  /// Throws ShapeError/FormatError on inconsistent sizes or non-finite values.
  void validate() const;
};

struct PartitionedPose {
  /// Indexed by BodyPart; each holds the (x, y, z) triples of that part's joints.
  std::array<std::vector<double>, 5> parts;
  const std::vector<double>& operator[](BodyPart p) const { return parts[static_cast<std::size_t>(p)]; }
};

PartitionedPose partition_pose(std::span<const double> pose, const Skeleton& skeleton);
std::vector<double> unpartition_pose(const PartitionedPose& parts, const Skeleton& skeleton);

/// Channel indices of each body part inside a model frame [pose | trajectory].
/// Trajectory channels are routed through the trunk.
std::array<std::vector<std::size_t>, 5> part_channels(const Skeleton& skeleton,
                                                      std::size_t traj_dims);

/// (T-1) x J x 3 frame differences, frames[t+1] - frames[t].
std::vector<double> velocity(const MotionSequence& seq);

/// Keeps every (fps / target_fps)-th frame starting at frame 0.
MotionSequence subsample(const MotionSequence& seq, double target_fps);

}  // namespace t2m
