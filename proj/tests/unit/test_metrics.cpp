#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "t2m/error.hpp"
#include "t2m/metrics.hpp"

using namespace t2m;
using namespace t2m::testing;

namespace {

MotionSequence constant_motion(std::size_t T, double v = 0.0) {
  MotionSequence m;
  m.frames.assign(T * m.pose_width(), v);
  m.trajectory.assign(T * m.traj_dims, v);
  return m;
}

}  // namespace

TEST_CASE("ape examples") {
  std::mt19937_64 rng(1);
  const std::vector<MotionSequence> gt{random_motion(6, rng)};
  auto rows = ape_rows(gt, gt);
  for (double v : rows) CHECK(v == 0.0);
  auto gen = gt;
  for (std::size_t t = 0; t < 6; ++t) {
    gen[0].pose(t)[3 * 4 + 0] += 3.0;
    gen[0].pose(t)[3 * 4 + 2] += 4.0;
  }
  CHECK(ape(gen, gt, 4) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(ape(gen, gt, 3) == 0.0);
  CHECK(ape_rows(gen, gt).size() == 22);
}

TEST_CASE("ave examples") {
  const std::vector<MotionSequence> c{constant_motion(4, 7.0)};
  for (double v : ave_rows(c, c)) CHECK(v == 0.0);
  std::vector<MotionSequence> gen{constant_motion(4, 0.0)};
  const std::vector<MotionSequence> gt{constant_motion(4, 0.0)};
  const double alt[4] = {1, -1, 1, -1};
  for (std::size_t t = 0; t < 4; ++t) gen[0].pose(t)[3 * 2] = alt[t];
  CHECK(ave(gen, gt, 2) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(ave(gen, gt, 1) == 0.0);
}

TEST_CASE("cee and see examples") {
  const std::vector<std::vector<double>> a{{1.0, -3.0}}, zero{{0.0, 0.0}};
  CHECK(cee(a, a) == 0.0);
  CHECK(cee(a, zero) == doctest::Approx(2.0));
  CHECK(cee(a, zero, CeeReading::euclidean) == doctest::Approx(std::sqrt(10.0)));
  const std::vector<std::vector<double>> s{{1.0, 0.0}}, p{{0.0, 1.0}};
  CHECK(see(s, s) == 0.0);
  CHECK(see(s, p) == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(see(s, p, SeeScale::m2n) == doctest::Approx(std::sqrt(2.0) / 4.0));
  CHECK_THROWS_AS(cee(a, std::vector<std::vector<double>>{{1.0}}), ShapeError);
  CHECK_THROWS_AS(see(a, std::vector<std::vector<double>>{{1.0}}), ShapeError);
}

TEST_CASE("motion metrics agree with loop oracles on random sets") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> len(2, 9), count(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t N = count(rng);
    std::vector<MotionSequence> gen, gt;
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t T = len(rng);
      gen.push_back(random_motion(T, rng));
      gt.push_back(random_motion(T, rng));
    }
    const auto a = ape_rows(gen, gt);
    const auto v = ave_rows(gen, gt);
    const auto a_serial = ape_rows(gen, gt, false);
    const auto v_serial = ave_rows(gen, gt, false);
    CHECK(a == a_serial);
    CHECK(v == v_serial);
    for (std::size_t r = 0; r <= 21; ++r) {
      CHECK(std::abs(a[r] - ape_oracle(gen, gt, r)) < 1e-9);
      CHECK(std::abs(v[r] - ave_oracle(gen, gt, r)) < 1e-9 * std::max(1.0, v[r]));
    }
  }
}

TEST_CASE("embedding metrics agree with loop oracles on random sets") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t N = 1 + trial % 4, M = 2 + trial % 7;
    const auto zs = random_latents(N, M, rng), zp = random_latents(N, M, rng);
    CHECK(std::abs(cee(zs, zp) - cee_oracle(zs, zp)) < 1e-9);
    CHECK(std::abs(see(zs, zp) - see_oracle(zs, zp)) < 1e-9);
    CHECK(cee(zs, zp, CeeReading::elementwise, true) == cee(zs, zp, CeeReading::elementwise, false));
    CHECK(see(zs, zp, SeeScale::mn, true) == see(zs, zp, SeeScale::mn, false));
    // Gram matrices are invariant to the sign of the embedding.
    std::vector<std::vector<double>> neg = zs;
    for (auto& v : neg) {
      for (auto& x : v) x = -x;
    }
    CHECK(see(zs, neg) < 1e-9);
  }
}

TEST_CASE("metrics are invariant to a shared translation and symmetric") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0.0, 50.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<MotionSequence> gen{random_motion(5, rng)}, gt{random_motion(5, rng)};
    const auto a0 = ape_rows(gen, gt), v0 = ave_rows(gen, gt);
    const double off[3] = {nd(rng), nd(rng), nd(rng)};
    for (auto* set : {&gen, &gt}) {
      for (auto& m : *set) {
        for (std::size_t i = 0; i < m.frames.size(); ++i) m.frames[i] += off[i % 3];
      }
    }
    const auto a1 = ape_rows(gen, gt), v1 = ave_rows(gen, gt);
    const auto a2 = ape_rows(gt, gen);
    for (std::size_t r = 0; r < a0.size(); ++r) {
      CHECK(a1[r] == doctest::Approx(a0[r]).epsilon(1e-9));
      CHECK(v1[r] == doctest::Approx(v0[r]).epsilon(1e-9));
      CHECK(a2[r] == doctest::Approx(a1[r]).epsilon(1e-12));
      CHECK(a0[r] >= 0.0);
      CHECK(v0[r] >= 0.0);
    }
  }
}

TEST_CASE("precondition errors") {
  std::mt19937_64 rng(5);
  const std::vector<MotionSequence> short_a{random_motion(1, rng)}, short_b{random_motion(1, rng)};
  CHECK_NOTHROW(ape_rows(short_a, short_b));
  CHECK_THROWS_AS(ave_rows(short_a, short_b), LengthError);
  const std::vector<MotionSequence> a{random_motion(4, rng)}, b{random_motion(5, rng)};
  CHECK_THROWS_AS(ape_rows(a, b), LengthError);
  const std::vector<MotionSequence> two{random_motion(4, rng), random_motion(4, rng)};
  CHECK_THROWS_AS(ape_rows(a, two), ShapeError);
  try {
    const std::vector<MotionSequence> c{random_motion(4, rng), random_motion(6, rng)};
    const std::vector<MotionSequence> d{random_motion(4, rng), random_motion(7, rng)};
    ape_rows(c, d);
    FAIL("expected an error");
  } catch (const LengthError& e) {
    CHECK(std::string(e.what()).find("pair 1") != std::string::npos);
  }
}

TEST_CASE("report rows, means and serializations agree") {
  std::mt19937_64 rng(6);
  std::vector<MotionSequence> gen, gt;
  for (int n = 0; n < 3; ++n) {
    gen.push_back(random_motion(6, rng));
    gt.push_back(random_motion(6, rng));
  }
  const auto zs = random_latents(3, 8, rng), zp = random_latents(3, 8, rng);
  const auto& sk = Skeleton::kit21();
  const EvalReport rep = make_report(gen, gt, zs, zp, sk);
  const std::vector<std::string> labels{"Trajectory", "Root",      "Torso",     "Pelvis",    "Neck",      "Left Arm",
                                        "Right Arm",  "Left Hip",  "Right Hip", "Left Foot", "Right Foot"};
  REQUIRE(rep.rows.size() == labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(rep.rows[i].label == labels[i]);
  CHECK(rep.n == 3);
  CHECK(rep.ape_per_joint.size() == 21);

  double with = 0.0, without = 0.0;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    with += rep.rows[i].ape;
    if (i > 0) without += rep.rows[i].ape;
  }
  CHECK(rep.ape_mean == doctest::Approx(with / 11.0));
  CHECK(rep.ape_mean_without_trajectory == doctest::Approx(without / 10.0));
  CHECK(rep.rows[5].ape == rep.ape_per_joint[sk.index_of("LW")]);
  CHECK(rep.cee == doctest::Approx(cee(zs, zp)));
  CHECK(rep.see == doctest::Approx(see(zs, zp)));

  const auto back = EvalReport::from_json(nlohmann::json::parse(rep.to_json().dump()));
  CHECK(back.to_json() == rep.to_json());

  // Every number printed in the table matches the JSON to print precision.
  std::istringstream is(rep.table());
  std::string line;
  std::getline(is, line);
  for (const auto& r : rep.rows) {
    std::getline(is, line);
    CHECK(line.rfind(r.label, 0) == 0);
    std::istringstream ls(line.substr(22));
    double a = 0, v = 0;
    ls >> a >> v;
    CHECK(a == doctest::Approx(r.ape).epsilon(1e-4));
    CHECK(v == doctest::Approx(r.ave).epsilon(1e-4));
  }
  std::getline(is, line);
  CHECK(line.rfind("Mean w/o trajectory", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("Mean", 0) == 0);
}

TEST_CASE("evaluate scores ground truth against itself as zero") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, Skeleton::kit21(), 1);
  std::mt19937_64 rng(7);
  std::vector<TrainingExample> exs;
  for (int i = 0; i < 3; ++i) exs.push_back(random_example(dims, 5, 3, rng));
  NormalizationStats norm;
  norm.mean.assign(dims.channels(), 10.0);
  norm.std.assign(dims.channels(), 2.0);
  const auto gt = evaluate(model, exs, norm, Skeleton::kit21(), {}, true);
  for (double v : gt.report.ape_per_joint) CHECK(v == 0.0);
  for (double v : gt.report.ave_per_joint) CHECK(v == 0.0);
  CHECK(gt.report.ape_mean == 0.0);
  CHECK(gt.report.cee == 0.0);

  const auto out = evaluate(model, exs, norm, Skeleton::kit21());
  CHECK(out.generated.size() == 3);
  CHECK(out.report.ape_mean > 0.0);
  CHECK(out.ground_truth[0].frames[0] == doctest::Approx(exs[0].frames[0] * 2.0 + 10.0));
  MetricOptions serial;
  serial.parallel = false;
  CHECK(evaluate(model, exs, norm, Skeleton::kit21(), serial).report.to_json() == out.report.to_json());
}
