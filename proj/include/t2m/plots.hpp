#pragma once

// Minimal SVG figures: grouped bar charts and top-down root trajectories.

#include <string>
#include <vector>

#include "t2m/skeleton.hpp"

namespace t2m {

struct BarSeries {
  std::string name;
  std::vector<double> values;  // one per label
};

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<BarSeries>& series, const std::string& y_label);

/// Ground-plane path of the root of a global motion; orange cross at the
/// start, green dot at the end.
std::string trajectory_svg(const MotionSequence& global, const Skeleton& skeleton, const std::string& title);

}  // namespace t2m
