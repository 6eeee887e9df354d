#include "t2m/motion_repr.hpp"

#include <cmath>
#include <numbers>

#include "t2m/error.hpp"

namespace t2m {

namespace {

struct GroundAxes {
  std::size_t a;
  std::size_t b;
};

GroundAxes ground_axes(const Skeleton& s) {
  return s.up_axis() == 1 ? GroundAxes{0, 2} : GroundAxes{0, 1};
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

void rotate(double angle, double& u, double& v) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double nu = c * u - s * v;
  const double nv = s * u + c * v;
  u = nu;
  v = nv;
}

}  // namespace

double heading_angle(std::span<const double> pose, const Skeleton& skeleton) {
  const auto [ga, gb] = ground_axes(skeleton);
  auto coord = [&](std::size_t joint, std::size_t axis) { return pose[3 * joint + axis]; };
  const double across_a = coord(skeleton.left_shoulder(), ga) - coord(skeleton.right_shoulder(), ga) +
                          coord(skeleton.left_hip(), ga) - coord(skeleton.right_hip(), ga);
  const double across_b = coord(skeleton.left_shoulder(), gb) - coord(skeleton.right_shoulder(), gb) +
                          coord(skeleton.left_hip(), gb) - coord(skeleton.right_hip(), gb);
  // forward = across rotated a quarter turn in the ground plane
  return std::atan2(across_a, -across_b);
}

MotionSequence to_local_representation(const MotionSequence& global, const Skeleton& skeleton) {
  if (global.joints != skeleton.joint_count()) {
    throw ShapeError("to_local_representation: motion has " + std::to_string(global.joints) +
                     " joints, skeleton has " + std::to_string(skeleton.joint_count()));
  }
  const auto [ga, gb] = ground_axes(skeleton);
  const std::size_t T = global.length();
  const std::size_t J = global.joints;

  std::vector<double> heading(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto pose = global.pose(t);
    double across = 0.0;
    for (std::size_t axis : {ga, gb}) {
      const double d = pose[3 * skeleton.left_shoulder() + axis] - pose[3 * skeleton.right_shoulder() + axis] +
                       pose[3 * skeleton.left_hip() + axis] - pose[3 * skeleton.right_hip() + axis];
      across += d * d;
    }
    heading[t] = (across > 0.0 || t == 0) ? heading_angle(pose, skeleton) : heading[t - 1];
  }

  MotionSequence out;
  out.joints = J;
  out.traj_dims = MotionSequence::kTrajectoryDims;
  out.fps = global.fps;
  out.frames.resize(T * J * 3);
  out.trajectory.assign(T * out.traj_dims, 0.0);

  for (std::size_t t = 0; t < T; ++t) {
    const auto pose = global.pose(t);
    const double ra = pose[ga];
    const double rb = pose[gb];
    auto dst = out.pose(t);
    for (std::size_t j = 0; j < J; ++j) {
      double u = pose[3 * j + ga] - ra;
      double v = pose[3 * j + gb] - rb;
      rotate(-heading[t], u, v);
      for (std::size_t c = 0; c < 3; ++c) dst[3 * j + c] = pose[3 * j + c];
      dst[3 * j + ga] = u;
      dst[3 * j + gb] = v;
    }
    if (t + 1 < T) {
      const auto next = global.pose(t + 1);
      double u = next[ga] - ra;
      double v = next[gb] - rb;
      rotate(-heading[t], u, v);
      out.trajectory[t * 3 + 0] = u;
      out.trajectory[t * 3 + 1] = v;
      out.trajectory[t * 3 + 2] = wrap_angle(heading[t + 1] - heading[t]);
    } else if (T >= 2) {
      for (std::size_t d = 0; d < 3; ++d) out.trajectory[t * 3 + d] = out.trajectory[(t - 1) * 3 + d];
    }
  }
  return out;
}

MotionSequence to_global(const MotionSequence& local, const Skeleton& skeleton) {
  if (local.traj_dims != MotionSequence::kTrajectoryDims) {
    throw ShapeError("to_global: expected 3 trajectory channels");
  }
  const auto [ga, gb] = ground_axes(skeleton);
  const std::size_t T = local.length();
  const std::size_t J = local.joints;
  MotionSequence out;
  out.joints = J;
  out.traj_dims = 0;
  out.fps = local.fps;
  out.frames.resize(T * J * 3);

  double ra = 0.0;
  double rb = 0.0;
  double theta = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto src = local.pose(t);
    auto dst = out.pose(t);
    for (std::size_t j = 0; j < J; ++j) {
      double u = src[3 * j + ga];
      double v = src[3 * j + gb];
      rotate(theta, u, v);
      for (std::size_t c = 0; c < 3; ++c) dst[3 * j + c] = src[3 * j + c];
      dst[3 * j + ga] = u + ra;
      dst[3 * j + gb] = v + rb;
    }
    const auto tr = local.traj(t);
    double du = tr[0];
    double dv = tr[1];
    rotate(theta, du, dv);
    ra += du;
    rb += dv;
    theta += tr[2];
  }
  return out;
}

}  // namespace t2m
