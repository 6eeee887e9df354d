#include "t2m/motion_io.hpp"

#include <fstream>
#include <functional>
#include <iomanip>

#include "t2m/archive.hpp"
#include "t2m/error.hpp"
#include "t2m/motion_repr.hpp"

namespace t2m {

void write_motion_file(const std::filesystem::path& path, const MotionSequence& motion,
                       const std::vector<std::string>& joint_names) {
  motion.validate();
  if (joint_names.size() != motion.joints) throw ShapeError("write_motion_file: joint name count mismatch");
  Archive ar;
  ar.meta = {{"format", "t2m-motion"},
             {"version", 1},
             {"fps", motion.fps},
             {"units", "mm"},
             {"joint_names", joint_names}};
  ar.put("frames", std::span<const double>(motion.frames), {motion.length(), motion.joints, 3});
  ar.put("trajectory", std::span<const double>(motion.trajectory), {motion.length(), motion.traj_dims});
  ar.save(path);
}

MotionFile read_motion_file(const std::filesystem::path& path) {
  const Archive ar = Archive::load(path);
  if (ar.meta.value("format", "") != "t2m-motion") {
    throw FormatError("'" + path.string() + "' is not a t2m motion file");
  }
  if (ar.meta.value("version", 0) != 1) throw FormatError("unsupported motion file version");
  MotionFile f;
  f.joint_names = ar.meta.at("joint_names").get<std::vector<std::string>>();
  const auto& fshape = ar.shape("frames");
  const auto& tshape = ar.shape("trajectory");
  if (fshape.size() != 3 || fshape[2] != 3 || tshape.size() != 2 || tshape[0] != fshape[0]) {
    throw FormatError("motion file '" + path.string() + "' has inconsistent array shapes");
  }
  f.motion.joints = fshape[1];
  f.motion.traj_dims = tshape[1];
  f.motion.fps = ar.meta.at("fps").get<double>();
  f.motion.frames = ar.get_f64("frames");
  f.motion.trajectory = ar.get_f64("trajectory");
  f.motion.validate();
  return f;
}

void export_bvh(const std::filesystem::path& path, const MotionSequence& motion,
                const Skeleton& skeleton) {
  if (motion.joints != skeleton.joint_count()) throw ShapeError("export_bvh: joint count mismatch");
  const MotionSequence global = motion.traj_dims > 0 ? to_global(motion, skeleton) : motion;
  const std::size_t T = global.length();
  if (T == 0) throw LengthError("export_bvh: empty motion");
  const auto& names = skeleton.joint_names();
  const auto& parents = skeleton.parents();
  const std::size_t J = names.size();

  std::vector<std::vector<std::size_t>> children(J);
  for (std::size_t j = 1; j < J; ++j) children[static_cast<std::size_t>(parents[j])].push_back(j);

  auto relative = [&](std::size_t t, std::size_t j, std::size_t c) {
    const auto pose = global.pose(t);
    return parents[j] < 0 ? pose[3 * j + c] : pose[3 * j + c] - pose[3 * static_cast<std::size_t>(parents[j]) + c];
  };

  std::ofstream out(path);
  if (!out) throw ResourceError("export_bvh: cannot open '" + path.string() + "'");
  out << std::fixed << std::setprecision(4);
  out << "HIERARCHY\n";
  std::vector<std::size_t> order;
  std::function<void(std::size_t, int)> emit = [&](std::size_t j, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    order.push_back(j);
    out << pad << (parents[j] < 0 ? "ROOT " : "JOINT ") << names[j] << "\n" << pad << "{\n";
    const double ox = parents[j] < 0 ? 0.0 : relative(0, j, 0);
    const double oy = parents[j] < 0 ? 0.0 : relative(0, j, 1);
    const double oz = parents[j] < 0 ? 0.0 : relative(0, j, 2);
    out << pad << "  OFFSET " << ox << " " << oy << " " << oz << "\n";
    out << pad << "  CHANNELS 3 Xposition Yposition Zposition\n";
    if (children[j].empty()) {
      out << pad << "  End Site\n" << pad << "  {\n" << pad << "    OFFSET 0 0 0\n" << pad << "  }\n";
    }
    for (std::size_t c : children[j]) emit(c, depth + 1);
    out << pad << "}\n";
  };
  emit(0, 0);

  out << "MOTION\nFrames: " << T << "\nFrame Time: " << std::setprecision(6) << 1.0 / global.fps << "\n";
  out << std::setprecision(4);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t j = order[k];
      for (std::size_t c = 0; c < 3; ++c) {
        const double base = parents[j] < 0 ? 0.0 : relative(0, j, c);
        out << (k == 0 && c == 0 ? "" : " ") << relative(t, j, c) - base;
      }
    }
    out << "\n";
  }
  if (!out) throw ResourceError("export_bvh: write failed for '" + path.string() + "'");
}

}  // namespace t2m
