#pragma once

#include "t2m/skeleton.hpp"

namespace t2m {

/// Converts global joint positions (traj_dims == 0) into root-relative,
/// heading-aligned joint positions plus per-frame trajectory channels:
/// planar root velocity expressed in the current heading frame (two ground
/// axes) and the heading change to the next frame in radians. The last frame
/// repeats the previous frame's trajectory values.
MotionSequence to_local_representation(const MotionSequence& global, const Skeleton& skeleton);

/// Integrates the trajectory channels back into global positions. The first
/// frame starts at the origin with zero heading, so the result equals the
/// original motion up to the rigid transform of its first frame.
MotionSequence to_global(const MotionSequence& local, const Skeleton& skeleton);

/// Heading angle of one global pose (radians, measured in the ground plane).
double heading_angle(std::span<const double> pose, const Skeleton& skeleton);

}  // namespace t2m
