#pragma once

// Evaluation metrics on denormalized motions (mm) and embedding sets.
//
// Motion metrics work on "rows": rows 0..J-1 are the joints (3 channels each)
// and row J is the trajectory channel block.

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "t2m/kit_ingest.hpp"
#include "t2m/losses.hpp"
#include "t2m/model.hpp"
#include "t2m/skeleton.hpp"

namespace t2m {

/// CEE reading: mean absolute elementwise difference, or the mean per-sample
/// Euclidean norm of the difference.
enum class CeeReading { elementwise, euclidean };
/// SEE prefactor: 1/(M N) or 1/(M^2 N).
enum class SeeScale { mn, m2n };

struct MetricOptions {
  CeeReading cee = CeeReading::elementwise;
  SeeScale see = SeeScale::mn;
  bool parallel = true;
};

/// Per-row average position error: (1/NT) sum_n sum_t ||P_t[j] - P^_t[j]||.
std::vector<double> ape_rows(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt,
                             bool parallel = true);
double ape(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt, std::size_t joint);

/// Per-row average variance error with the 1/(T-1) sequence variance.
std::vector<double> ave_rows(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt,
                             bool parallel = true);
double ave(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt, std::size_t joint);

double cee(std::span<const std::vector<double>> zs, std::span<const std::vector<double>> zp,
           CeeReading reading = CeeReading::elementwise, bool parallel = true);
/// Frobenius norm of the per-sample Gram-matrix difference, summed and scaled.
double see(std::span<const std::vector<double>> zs, std::span<const std::vector<double>> zp,
           SeeScale scale = SeeScale::mn, bool parallel = true);

struct TableRow {
  std::string label;
  double ape = 0.0;
  double ave = 0.0;
};

struct EvalReport {
  std::vector<std::string> joint_names;
  std::vector<double> ape_per_joint;  // J joints
  double ape_trajectory = 0.0;
  double ape_mean = 0.0;
  double ape_mean_without_trajectory = 0.0;
  std::vector<double> ave_per_joint;
  double ave_trajectory = 0.0;
  double ave_mean = 0.0;
  double ave_mean_without_trajectory = 0.0;
  double cee = 0.0;
  double see = 0.0;
  std::size_t n = 0;
  /// Trajectory followed by the skeleton's report rows.
  std::vector<TableRow> rows;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  /// Aligned text table with the "Mean w/o trajectory" and "Mean" rows.
  std::string table() const;
};

/// Builds the report from generated / ground-truth motions and the sentence /
/// pose latents ([z_ub | z_lb] each).
EvalReport make_report(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt,
                       std::span<const std::vector<double>> zs, std::span<const std::vector<double>> zp,
                       const Skeleton& skeleton, const MetricOptions& options = {});

struct EvaluationOutput {
  EvalReport report;
  std::vector<MotionSequence> generated;
  std::vector<MotionSequence> ground_truth;
};

/// Generates P^s for every example from its sentence and first frame,
/// denormalizes and scores it. With `ground_truth_only`, the ground truth is
/// scored against itself.
EvaluationOutput evaluate(const MotionModel& model, std::span<const TrainingExample> examples,
                          const NormalizationStats& norm, const Skeleton& skeleton,
                          const MetricOptions& options = {}, bool ground_truth_only = false);

}  // namespace t2m
