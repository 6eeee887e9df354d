#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "t2m/error.hpp"
#include "t2m/kit_ingest.hpp"
#include "t2m/npy.hpp"

using namespace t2m;
using namespace t2m::testing;
namespace fs = std::filesystem;

namespace {

const Skeleton& sk() { return Skeleton::kit21(); }

// Rest pose translated by (dx, dz) per frame.
std::vector<double> translated_rest(std::size_t T, double dx, double dz) {
  const auto rest = rest_pose();
  std::vector<double> out;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < 21; ++j) {
      out.push_back(rest[3 * j] + dx * static_cast<double>(t));
      out.push_back(rest[3 * j + 1]);
      out.push_back(rest[3 * j + 2] + dz * static_cast<double>(t));
    }
  }
  return out;
}

void write_motion(const fs::path& dir, const std::string& id, const std::vector<double>& frames,
                  const nlohmann::json& sentences, double fps) {
  write_npy(dir / (id + "_joints.npy"), {frames.size() / 63, 21, 3}, frames);
  std::ofstream(dir / (id + "_annotations.json")) << sentences.dump();
  std::ofstream(dir / (id + "_meta.json")) << nlohmann::json{{"fps", fps}}.dump();
}

std::set<std::string> ids_of(const std::vector<Sample>& xs) {
  std::set<std::string> s;
  for (const auto& x : xs) s.insert(x.motion_id);
  return s;
}

std::vector<Sample> corpus_samples(std::size_t motions, const std::string& tag) {
  const auto dir = temp_dir(tag);
  CorpusSpec spec;
  spec.motions = motions;
  spec.target_frames = 6;
  write_corpus(dir, spec);
  auto set = make_samples(load_corpus(dir, sk()), sk());
  fs::remove_all(dir);
  return set.samples;
}

}  // namespace

TEST_CASE("hand-made corpus with 1/2/0 annotations") {
  const auto dir = temp_dir("ingest-hand");
  write_motion(dir, "a", translated_rest(16, 0, 5), {"a person walks forward"}, 100.0);
  write_motion(dir, "b", translated_rest(16, 0, 0), {"a person stands", "  someone stands still \n"}, 100.0);
  write_motion(dir, "c", translated_rest(16, 0, 0), nlohmann::json::array(), 100.0);
  const Corpus c = load_corpus(dir, sk());
  CHECK(c.motions.size() == 3);
  CHECK(c.annotation_count() == 3);
  CHECK(c.unannotated == std::vector<std::string>{"c"});
  CHECK(c.checksum.size() == 64);
  CHECK(c.motions[1].annotations[1].sentence == "someone stands still");
  CHECK(c.motions[1].annotations[1].annotation_index == 1);

  const SampleSet s = make_samples(c, sk());
  CHECK(s.samples.size() == 3);
  CHECK(s.samples[1].motion == s.samples[2].motion);
  CHECK(s.samples[1].motion_id == "b");
  CHECK(s.samples[0].motion->length() == 2);
  CHECK(s.samples[0].motion->fps == kTargetFps);
  fs::remove_all(dir);
}

TEST_CASE("empty directory yields no motions and a warning") {
  const auto dir = temp_dir("ingest-empty");
  const Corpus c = load_corpus(dir, sk());
  CHECK(c.motions.empty());
  CHECK(c.warnings.size() == 1);
  CHECK_THROWS_AS(load_corpus(dir / "nope", sk()), ResourceError);
  fs::remove_all(dir);
}

TEST_CASE("corrupt and missing files are itemized") {
  const auto dir = temp_dir("ingest-bad");
  write_motion(dir, "good", translated_rest(16, 0, 0), {"a person stands"}, 100.0);
  write_motion(dir, "corrupt", translated_rest(16, 0, 0), {"x"}, 100.0);
  std::ofstream(dir / "corrupt_joints.npy") << "garbage";
  std::ofstream(dir / "orphan_annotations.json") << "[\"lonely\"]";
  write_npy(dir / "shape_joints.npy", {4, 20, 3}, std::vector<double>(240, 0.0));
  std::ofstream(dir / "shape_annotations.json") << "[\"x\"]";
  try {
    load_corpus(dir, sk());
    FAIL("expected an IngestError");
  } catch (const IngestError& e) {
    CHECK(e.ids() == std::vector<std::string>{"corrupt", "orphan", "shape"});
    const std::string what = e.what();
    CHECK(what.find("orphan: missing motion file") != std::string::npos);
  }
  LoadOptions opt;
  opt.permissive = true;
  const Corpus c = load_corpus(dir, sk(), opt);
  CHECK(c.motions.size() == 1);
  CHECK(c.failed.size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("subsampling an 800-frame recording gives 100 frames") {
  const auto dir = temp_dir("ingest-800");
  write_motion(dir, "long", translated_rest(800, 1, 0), {"a person walks sideways"}, 100.0);
  // Already at the target rate: preprocessing does not change the length.
  write_motion(dir, "slow", translated_rest(7, 1, 0), {"a person walks sideways"}, kTargetFps);
  write_motion(dir, "short", translated_rest(7, 1, 0), {"too short"}, 100.0);
  const auto s = make_samples(load_corpus(dir, sk()), sk());
  REQUIRE(s.samples.size() == 2);
  CHECK(s.samples[0].motion->length() == 100);
  CHECK(s.samples[1].motion->length() == 7);
  CHECK(s.dropped.size() == 1);
  CHECK(s.dropped[0].rfind("short:", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("trajectory channels of a straight path match hand computation") {
  const auto dir = temp_dir("ingest-traj");
  // 5 frames at 12.5 Hz, root moving 4 mm in x and 10 mm in z per frame.
  write_motion(dir, "line", translated_rest(5, 4, 10), {"a person walks"}, kTargetFps);
  const auto s = make_samples(load_corpus(dir, sk()), sk());
  const auto& m = *s.samples[0].motion;
  // The rest pose faces +z with its left side on +x; the local frame puts
  // the facing direction on the first channel and the right side on the
  // second, so a (4, 10) step reads as 10 forward and -4 sideways.
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(m.traj(t)[0] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(m.traj(t)[1] == doctest::Approx(-4.0).epsilon(1e-12));
    CHECK(std::abs(m.traj(t)[2]) < 1e-12);
  }
  fs::remove_all(dir);
}

TEST_CASE("split sizes, determinism and disjointness") {
  const auto samples = corpus_samples(10, "split");
  SplitConfig cfg;
  cfg.seed = 5;
  const Splits a = split(samples, cfg);
  CHECK(ids_of(a.train).size() == 6);
  CHECK(ids_of(a.val).size() == 2);
  CHECK(ids_of(a.test).size() == 2);
  CHECK(a.train.size() + a.val.size() + a.test.size() == samples.size());
  std::set<std::string> all;
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const auto& id : ids_of(*part)) CHECK(all.insert(id).second);
  }
  CHECK(all == ids_of(samples));

  const Splits b = split(samples, cfg);
  CHECK(ids_of(b.train) == ids_of(a.train));
  CHECK(ids_of(b.test) == ids_of(a.test));
  bool changed = false;
  for (std::uint64_t seed = 6; seed < 12 && !changed; ++seed) {
    cfg.seed = seed;
    const Splits c = split(samples, cfg);
    CHECK(ids_of(c.train).size() == 6);
    changed = ids_of(c.train) != ids_of(a.train);
  }
  CHECK(changed);

  cfg.unit = SplitUnit::by_annotation;
  const Splits d = split(samples, cfg);
  const double n = static_cast<double>(samples.size());
  CHECK(std::abs(static_cast<double>(d.train.size()) - 0.6 * n) <= 1.0);
  CHECK(std::abs(static_cast<double>(d.val.size()) - 0.2 * n) <= 1.0);

  SplitConfig bad;
  bad.ratios = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("split sizes stay within one of the ratios for random counts") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    auto motion = std::make_shared<const MotionSequence>();
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < n; ++i) samples.push_back({motion, "s", "m" + std::to_string(i), 0});
    SplitConfig cfg;
    cfg.seed = rng();
    const Splits s = split(samples, cfg);
    CHECK(s.train.size() + s.val.size() + s.test.size() == n);
    CHECK(std::abs(static_cast<double>(s.train.size()) - 0.6 * static_cast<double>(n)) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.val.size()) - 0.2 * static_cast<double>(n)) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.test.size()) - 0.2 * static_cast<double>(n)) <= 1.0);
  }
}

TEST_CASE("normalization statistics match a two-pass oracle") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> nd(50.0, 20.0);
  std::vector<Sample> samples;
  for (int i = 0; i < 4; ++i) {
    MotionSequence m;
    const std::size_t T = 3 + static_cast<std::size_t>(i);
    m.frames.resize(T * 63);
    m.trajectory.resize(T * 3);
    for (auto& x : m.frames) x = nd(rng);
    for (auto& x : m.trajectory) x = nd(rng);
    auto shared = std::make_shared<const MotionSequence>(m);
    samples.push_back({shared, "s", "m" + std::to_string(i), 0});
    samples.push_back({shared, "t", "m" + std::to_string(i), 1});  // counted once
  }
  const auto stats = fit_normalization(samples);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < samples.size(); i += 2) {
    for (std::size_t t = 0; t < samples[i].motion->length(); ++t) rows.push_back(samples[i].motion->channels(t));
  }
  for (std::size_t c = 0; c < 66; ++c) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[c];
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (const auto& r : rows) var += (r[c] - mean) * (r[c] - mean);
    var /= static_cast<double>(rows.size());
    CHECK(std::abs(stats.mean[c] - mean) < 1e-9);
    CHECK(std::abs(stats.std[c] - std::sqrt(var)) < 1e-9);
  }
  CHECK(stats.clamped.empty());

  for (std::size_t i = 0; i < samples.size(); i += 2) {
    const auto& m = *samples[i].motion;
    const auto z = stats.apply(m);
    const auto back = stats.invert(z, 21, 3, m.fps);
    for (std::size_t k = 0; k < m.frames.size(); ++k) CHECK(std::abs(back.frames[k] - m.frames[k]) < 1e-9);
    for (std::size_t k = 0; k < m.trajectory.size(); ++k) CHECK(std::abs(back.trajectory[k] - m.trajectory[k]) < 1e-9);
  }
  const auto j = NormalizationStats::from_json(stats.to_json());
  CHECK(j.mean == stats.mean);
  CHECK(j.std == stats.std);
}

TEST_CASE("constant channels are clamped to epsilon") {
  MotionSequence m;
  m.frames.assign(4 * 63, 0.0);
  m.trajectory.assign(4 * 3, 0.0);
  for (std::size_t t = 0; t < 4; ++t) m.frames[t * 63] = 7.5;
  m.frames[63 + 1] = 1.0;
  const std::vector<Sample> samples{{std::make_shared<const MotionSequence>(m), "s", "m", 0}};
  const auto stats = fit_normalization(samples);
  CHECK(stats.mean[0] == 7.5);
  CHECK(stats.std[0] == NormalizationStats::kEpsilon);
  CHECK(stats.mean[2] == 0.0);
  CHECK(stats.clamped.size() == 65);
  CHECK(stats.std[1] > 0.1);
  CHECK_THROWS_AS(fit_normalization(std::vector<Sample>{}), ConfigError);
}

TEST_CASE("split cache round trip is value-exact") {
  const auto samples = corpus_samples(6, "cache-src");
  const auto dir = temp_dir("cache");
  write_split_cache(dir / "train.t2ma", samples);
  const auto back = read_split_cache(dir / "train.t2ma");
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].sentence == samples[i].sentence);
    CHECK(back[i].motion_id == samples[i].motion_id);
    CHECK(back[i].annotation_index == samples[i].annotation_index);
    CHECK(back[i].motion->frames == samples[i].motion->frames);
    CHECK(back[i].motion->trajectory == samples[i].motion->trajectory);
    CHECK(back[i].motion->fps == samples[i].motion->fps);
    if (i > 0 && samples[i].motion == samples[i - 1].motion) CHECK(back[i].motion == back[i - 1].motion);
  }
  std::ofstream(dir / "bad.t2ma") << "nope";
  CHECK_THROWS(read_split_cache(dir / "bad.t2ma"));
  fs::remove_all(dir);
}
