#include "t2m/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <sstream>

#include "t2m/error.hpp"

namespace t2m {

namespace {

void check_pairs(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt) {
  if (gen.size() != gt.size()) {
    throw ShapeError("metrics: " + std::to_string(gen.size()) + " generated vs " + std::to_string(gt.size()) +
                     " ground-truth sequences");
  }
  if (gen.empty()) throw LengthError("metrics: empty evaluation set");
  for (std::size_t n = 0; n < gen.size(); ++n) {
    if (gen[n].length() != gt[n].length()) {
      throw LengthError("metrics: pair " + std::to_string(n) + " has " + std::to_string(gen[n].length()) +
                        " generated vs " + std::to_string(gt[n].length()) + " ground-truth frames");
    }
    if (gen[n].joints != gt[n].joints || gen[n].traj_dims != gt[n].traj_dims) {
      throw ShapeError("metrics: pair " + std::to_string(n) + " has mismatched joints or trajectory channels");
    }
  }
}

/// Row r of frame t: joint r, or the trajectory block when r == joints.
std::span<const double> row_of(const MotionSequence& m, std::size_t t, std::size_t r) {
  if (r < m.joints) return m.pose(t).subspan(3 * r, 3);
  return m.traj(t);
}

double norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Per-sample contributions are computed independently, then reduced in
/// sample order so serial and parallel runs give identical sums.
template <class F>
std::vector<std::vector<double>> per_sample(std::size_t n, bool parallel, F&& f) {
  std::vector<std::vector<double>> out(n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
  }
  return out;
}

std::vector<double> reduce_rows(const std::vector<std::vector<double>>& parts, std::size_t rows) {
  std::vector<double> sum(rows, 0.0);
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) sum[r] += p[r];
  }
  return sum;
}

std::vector<double> variance(const MotionSequence& m, std::size_t r) {
  const std::size_t T = m.length();
  const std::size_t w = row_of(m, 0, r).size();
  std::vector<double> mean(w, 0.0), var(w, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = row_of(m, t, r);
    for (std::size_t i = 0; i < w; ++i) mean[i] += x[i];
  }
  for (auto& x : mean) x /= static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = row_of(m, t, r);
    for (std::size_t i = 0; i < w; ++i) var[i] += (x[i] - mean[i]) * (x[i] - mean[i]);
  }
  for (auto& x : var) x /= static_cast<double>(T - 1);
  return var;
}

void check_latents(std::span<const std::vector<double>> zs, std::span<const std::vector<double>> zp) {
  if (zs.size() != zp.size()) throw ShapeError("embedding metrics: set sizes differ");
  if (zs.empty()) throw LengthError("embedding metrics: empty set");
  for (std::size_t n = 0; n < zs.size(); ++n) {
    if (zs[n].size() != zp[n].size() || zs[n].size() != zs[0].size() || zs[n].empty()) {
      throw ShapeError("embedding metrics: width mismatch at sample " + std::to_string(n));
    }
  }
}

}  // namespace

std::vector<double> ape_rows(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt, bool parallel) {
  check_pairs(gen, gt);
  const std::size_t rows = gt[0].joints + (gt[0].traj_dims > 0 ? 1 : 0);
  std::size_t frames = 0;
  for (const auto& m : gt) frames += m.length();
  const auto parts = per_sample(gen.size(), parallel, [&](std::size_t n) {
    std::vector<double> acc(rows, 0.0);
    for (std::size_t t = 0; t < gt[n].length(); ++t) {
      for (std::size_t r = 0; r < rows; ++r) acc[r] += norm_diff(row_of(gen[n], t, r), row_of(gt[n], t, r));
    }
    return acc;
  });
  auto sum = reduce_rows(parts, rows);
  // Every pair has the same T in the usual setting; dividing by the total
  // frame count is the (1/NT) normalization for ragged sets as well.
  for (auto& x : sum) x /= static_cast<double>(frames);
  return sum;
}

double ape(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt, std::size_t joint) {
  const auto rows = ape_rows(gen, gt);
  if (joint >= rows.size()) throw ShapeError("ape: joint index out of range");
  return rows[joint];
}

std::vector<double> ave_rows(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt, bool parallel) {
  check_pairs(gen, gt);
  for (std::size_t n = 0; n < gt.size(); ++n) {
    if (gt[n].length() < 2) throw LengthError("ave: pair " + std::to_string(n) + " has fewer than 2 frames");
  }
  const std::size_t rows = gt[0].joints + (gt[0].traj_dims > 0 ? 1 : 0);
  const auto parts = per_sample(gen.size(), parallel, [&](std::size_t n) {
    std::vector<double> acc(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) acc[r] = norm_diff(variance(gt[n], r), variance(gen[n], r));
    return acc;
  });
  auto sum = reduce_rows(parts, rows);
  for (auto& x : sum) x /= static_cast<double>(gen.size());
  return sum;
}

double ave(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt, std::size_t joint) {
  const auto rows = ave_rows(gen, gt);
  if (joint >= rows.size()) throw ShapeError("ave: joint index out of range");
  return rows[joint];
}

double cee(std::span<const std::vector<double>> zs, std::span<const std::vector<double>> zp, CeeReading reading,
           bool parallel) {
  check_latents(zs, zp);
  const std::size_t M = zs[0].size();
  const auto parts = per_sample(zs.size(), parallel, [&](std::size_t n) {
    double s = 0.0;
    if (reading == CeeReading::elementwise) {
      for (std::size_t m = 0; m < M; ++m) s += std::abs(zs[n][m] - zp[n][m]);
    } else {
      s = norm_diff(zs[n], zp[n]);
    }
    return std::vector<double>{s};
  });
  const double total = reduce_rows(parts, 1)[0];
  const double denom = reading == CeeReading::elementwise ? static_cast<double>(M * zs.size())
                                                          : static_cast<double>(zs.size());
  return total / denom;
}

double see(std::span<const std::vector<double>> zs, std::span<const std::vector<double>> zp, SeeScale scale,
           bool parallel) {
  check_latents(zs, zp);
  const std::size_t M = zs[0].size();
  const auto parts = per_sample(zs.size(), parallel, [&](std::size_t n) {
    const auto& a = zs[n];
    const auto& b = zp[n];
    double fro = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < M; ++j) {
        const double d = a[i] * a[j] - b[i] * b[j];
        fro += d * d;
      }
    }
    return std::vector<double>{std::sqrt(fro)};
  });
  const double total = reduce_rows(parts, 1)[0];
  const double m = static_cast<double>(M);
  const double denom = (scale == SeeScale::mn ? m : m * m) * static_cast<double>(zs.size());
  return total / denom;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : rows) table.push_back({{"label", r.label}, {"ape", r.ape}, {"ave", r.ave}});
  return {{"n", n},
          {"joint_names", joint_names},
          {"ape_per_joint", ape_per_joint},
          {"ape_trajectory", ape_trajectory},
          {"ape_mean", ape_mean},
          {"ape_mean_without_trajectory", ape_mean_without_trajectory},
          {"ave_per_joint", ave_per_joint},
          {"ave_trajectory", ave_trajectory},
          {"ave_mean", ave_mean},
          {"ave_mean_without_trajectory", ave_mean_without_trajectory},
          {"cee", cee},
          {"see", see},
          {"rows", table}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.n = j.at("n").get<std::size_t>();
  r.joint_names = j.at("joint_names").get<std::vector<std::string>>();
  r.ape_per_joint = j.at("ape_per_joint").get<std::vector<double>>();
  r.ape_trajectory = j.at("ape_trajectory").get<double>();
  r.ape_mean = j.at("ape_mean").get<double>();
  r.ape_mean_without_trajectory = j.at("ape_mean_without_trajectory").get<double>();
  r.ave_per_joint = j.at("ave_per_joint").get<std::vector<double>>();
  r.ave_trajectory = j.at("ave_trajectory").get<double>();
  r.ave_mean = j.at("ave_mean").get<double>();
  r.ave_mean_without_trajectory = j.at("ave_mean_without_trajectory").get<double>();
  r.cee = j.at("cee").get<double>();
  r.see = j.at("see").get<double>();
  for (const auto& row : j.at("rows")) {
    r.rows.push_back({row.at("label").get<std::string>(), row.at("ape").get<double>(), row.at("ave").get<double>()});
  }
  return r;
}

std::string EvalReport::table() const {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-22s %12s %12s\n", "Joint", "APE (mm)", "AVE");
  os << buf;
  auto line = [&](const std::string& label, double a, double v) {
    std::snprintf(buf, sizeof buf, "%-22s %12.4f %12.4f\n", label.c_str(), a, v);
    os << buf;
  };
  for (const auto& r : rows) line(r.label, r.ape, r.ave);
  line("Mean w/o trajectory", ape_mean_without_trajectory, ave_mean_without_trajectory);
  line("Mean", ape_mean, ave_mean);
  std::snprintf(buf, sizeof buf, "\nCEE %.6f\nSEE %.6f\nN   %zu\n", cee, see, n);
  os << buf;
  return os.str();
}

EvalReport make_report(std::span<const MotionSequence> gen, std::span<const MotionSequence> gt,
                       std::span<const std::vector<double>> zs, std::span<const std::vector<double>> zp,
                       const Skeleton& skeleton, const MetricOptions& options) {
  EvalReport rep;
  const auto a = ape_rows(gen, gt, options.parallel);
  const auto v = ave_rows(gen, gt, options.parallel);
  const std::size_t J = gt[0].joints;
  if (J != skeleton.joint_count()) throw ShapeError("make_report: motions do not match the skeleton");
  if (a.size() != J + 1) throw ShapeError("make_report: motions carry no trajectory channels");
  rep.n = gen.size();
  rep.joint_names = skeleton.joint_names();
  rep.ape_per_joint.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(J));
  rep.ave_per_joint.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(J));
  rep.ape_trajectory = a[J];
  rep.ave_trajectory = v[J];
  rep.rows.push_back({"Trajectory", a[J], v[J]});
  double sa = 0.0, sv = 0.0;
  for (const auto& r : skeleton.report_rows()) {
    rep.rows.push_back({r.label, a[r.joint], v[r.joint]});
    sa += a[r.joint];
    sv += v[r.joint];
  }
  const double k = static_cast<double>(skeleton.report_rows().size());
  rep.ape_mean_without_trajectory = sa / k;
  rep.ave_mean_without_trajectory = sv / k;
  rep.ape_mean = (sa + a[J]) / (k + 1.0);
  rep.ave_mean = (sv + v[J]) / (k + 1.0);
  rep.cee = cee(zs, zp, options.cee, options.parallel);
  rep.see = see(zs, zp, options.see, options.parallel);
  return rep;
}

EvaluationOutput evaluate(const MotionModel& model, std::span<const TrainingExample> examples,
                          const NormalizationStats& norm, const Skeleton& skeleton, const MetricOptions& options,
                          bool ground_truth_only) {
  if (examples.empty()) throw LengthError("evaluate: no examples");
  const ModelDims& d = model.dims();
  const std::size_t C = d.channels();
  const std::size_t N = examples.size();
  EvaluationOutput out;
  out.generated.resize(N);
  out.ground_truth.resize(N);
  std::vector<std::vector<double>> zs(N), zp(N);
  std::vector<std::exception_ptr> errors(N);
  // Inference over frozen weights is safe to run concurrently.
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) {
    const auto n = static_cast<std::size_t>(i);
    try {
    const TrainingExample& ex = examples[n];
    const std::size_t T = ex.frames.size() / C;
    out.ground_truth[n] = norm.invert(ex.frames, d.joints, d.traj_dims, kTargetFps);
    zp[n] = model.encode_pose(ex.frames).concatenated();
    if (ground_truth_only) {
      out.generated[n] = out.ground_truth[n];
      zs[n] = zp[n];
      continue;
    }
    zs[n] = model.encode_sentence(ex.words).concatenated();
    LatentPair z;
    const auto full = zs[n];
    if (d.streams == 2) {
      z.streams = {std::vector<double>(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(d.latent_width)),
                   std::vector<double>(full.begin() + static_cast<std::ptrdiff_t>(d.latent_width), full.end())};
    } else {
      z.streams = {full};
    }
    const auto gen = model.decode(z, std::span<const double>(ex.frames).first(C), T);
    out.generated[n] = norm.invert(gen, d.joints, d.traj_dims, kTargetFps);
    } catch (...) {
      errors[n] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.report = make_report(out.generated, out.ground_truth, zs, zp, skeleton, options);
  return out;
}

}  // namespace t2m
