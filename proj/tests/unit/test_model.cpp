#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "t2m/error.hpp"
#include "t2m/model.hpp"
#include "t2m/training.hpp"

using namespace t2m;
using namespace t2m::testing;

namespace {

const Skeleton& skel() { return Skeleton::kit21(); }

std::vector<std::size_t> joint_channels(BodyPart part) {
  std::vector<std::size_t> out;
  for (auto j : skel().joints_in(part)) {
    for (std::size_t k = 0; k < 3; ++k) out.push_back(3 * j + k);
  }
  return out;
}

void perturb(std::vector<double>& frames, std::size_t C, const std::vector<std::size_t>& channels,
             std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 0.5);
  for (std::size_t t = 0; t < frames.size() / C; ++t) {
    for (auto c : channels) frames[t * C + c] += nd(rng);
  }
}

}  // namespace

TEST_CASE("full-size model has 512-wide stream latents and 4096-wide embeddings") {
  const ModelDims dims;
  CHECK(dims.channels() == 66);
  MotionModel model(dims, skel(), 7);
  std::mt19937_64 rng(1);
  const auto frames = random_frames(16, dims.channels(), rng);
  const LatentPair zp = model.encode_pose(frames);
  REQUIRE(zp.streams.size() == 2);
  CHECK(zp.z_ub().size() == 512);
  CHECK(zp.z_lb().size() == 512);
  const LatentPair zs = model.encode_sentence(random_words(1, 4096, rng));
  CHECK(zs.z_ub().size() == 512);
  CHECK(zs.z_lb().size() == 512);

  const auto& p = model.params();
  CHECK(p.at("pe.part.left_arm.w").cols == 9);
  CHECK(p.at("pe.part.left_arm.w").rows == 32);
  CHECK(p.at("pe.part.trunk.w").cols == 5 * 3 + 3);
  CHECK(p.at("pe.part.left_leg.w").cols == 15);
  for (const char* pair : {"left_arm", "right_arm", "left_leg", "right_leg"}) {
    CHECK(p.at(std::string("pe.pair.") + pair + ".w").cols == 64);
    CHECK(p.at(std::string("pe.pair.") + pair + ".w").rows == 128);
  }
  CHECK(p.at("pe.gru.upper.input.w").cols == 256);
  CHECK(p.at("pe.gru.lower.input.w").cols == 256);
  CHECK(p.at("pe.gru.upper.hidden.w").cols == 512);
  CHECK(p.at("se.lstm1.input.w").cols == 4096);
  CHECK(p.at("se.lstm2.hidden.w").cols == 1024);

  const auto arch = model.architecture();
  CHECK(arch.at("latent_width") == 512);
  CHECK(arch.at("streams") == 2);
}

TEST_CASE("trajectory channels are routed through the trunk") {
  const auto pc = part_channels(skel(), 3);
  const auto& trunk = pc[static_cast<std::size_t>(BodyPart::trunk)];
  CHECK(trunk.size() == 18);
  CHECK(trunk[15] == 63);
  CHECK(trunk[16] == 64);
  CHECK(trunk[17] == 65);
}

TEST_CASE("stream separation: arm inputs never reach z_lb, leg inputs never reach z_ub") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 3);
  std::mt19937_64 rng(2);
  const std::size_t C = dims.channels();
  for (int trial = 0; trial < 10; ++trial) {
    const auto base = random_frames(6, C, rng);
    const auto z0 = model.encode_pose(base);

    auto arms = base;
    perturb(arms, C, joint_channels(BodyPart::left_arm), rng);
    perturb(arms, C, joint_channels(BodyPart::right_arm), rng);
    const auto za = model.encode_pose(arms);
    CHECK(za.z_lb() == z0.z_lb());
    CHECK(za.z_ub() != z0.z_ub());

    auto legs = base;
    perturb(legs, C, joint_channels(BodyPart::left_leg), rng);
    const auto zl = model.encode_pose(legs);
    CHECK(zl.z_ub() == z0.z_ub());
    CHECK(zl.z_lb() != z0.z_lb());

    auto trunk = base;
    perturb(trunk, C, joint_channels(BodyPart::trunk), rng);
    const auto zt = model.encode_pose(trunk);
    CHECK(zt.z_ub() != z0.z_ub());
    CHECK(zt.z_lb() != z0.z_lb());
  }
}

TEST_CASE("left-wrist-only change alters z_ub and leaves z_lb identical") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 4);
  std::mt19937_64 rng(3);
  const auto base = random_frames(16, dims.channels(), rng);
  auto moved = base;
  const std::size_t lw = skel().index_of("LW");
  for (std::size_t t = 0; t < 16; ++t) moved[t * dims.channels() + 3 * lw] += 0.3;
  const auto a = model.encode_pose(base), b = model.encode_pose(moved);
  CHECK(a.z_lb() == b.z_lb());
  CHECK(a.z_ub() != b.z_ub());
}

TEST_CASE("decoder residual identity with zeroed delta layers") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 5);
  model.zero_delta_layers();
  std::mt19937_64 rng(4);
  const auto initial = random_frames(1, dims.channels(), rng);
  const auto z = model.encode_sentence(random_words(3, dims.embed_width, rng));
  for (std::size_t T : {1u, 2u, 9u}) {
    const auto out = model.decode(z, initial, T);
    REQUIRE(out.size() == T * dims.channels());
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < dims.channels(); ++c) CHECK(out[t * dims.channels() + c] == initial[c]);
    }
  }
}

TEST_CASE("decoder depends on the initial pose and generates T frames") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 6);
  std::mt19937_64 rng(5);
  const auto z = model.encode_pose(random_frames(4, dims.channels(), rng));
  const auto a = random_frames(1, dims.channels(), rng);
  const auto b = random_frames(1, dims.channels(), rng);
  CHECK(model.decode(z, a, 1).size() == dims.channels());
  CHECK(model.decode(z, a, 5) != model.decode(z, b, 5));
  CHECK(model.decode(z, a, 5) == model.decode(z, a, 5));
}

TEST_CASE("sentence encoder is deterministic and order-sensitive") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 8);
  std::mt19937_64 rng(6);
  const auto s = random_words(5, dims.embed_width, rng);
  CHECK(model.encode_sentence(s).concatenated() == model.encode_sentence(s).concatenated());
  auto swapped = s;
  std::swap_ranges(swapped.vectors.begin(), swapped.vectors.begin() + static_cast<std::ptrdiff_t>(s.width),
                   swapped.vectors.begin() + static_cast<std::ptrdiff_t>(4 * s.width));
  CHECK(model.encode_sentence(s).concatenated() != model.encode_sentence(swapped).concatenated());
  const auto one = random_words(1, dims.embed_width, rng);
  CHECK(model.encode_sentence(one).concatenated().size() == 2 * dims.latent_width);
}

TEST_CASE("shape errors") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 9);
  std::mt19937_64 rng(7);
  CHECK_THROWS_AS(model.encode_sentence(random_words(2, dims.embed_width + 1, rng)), ShapeError);
  CHECK_THROWS_AS(model.encode_pose(std::vector<double>(20 * 3 + 3, 0.0)), ShapeError);
  CHECK_THROWS_AS(model.encode_pose(std::vector<double>{}), LengthError);
  ModelDims wrong = dims;
  wrong.joints = 20;
  CHECK_THROWS_AS(MotionModel(wrong, skel(), 1), ShapeError);
}

TEST_CASE("shared decoder: equal latents give bitwise equal motions") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 10);
  std::mt19937_64 rng(8);
  TrainingExample ex = random_example(dims, 5, 3, rng);
  Tape t(false);
  ForwardVars fv = model.forward(t, ex.frames, ex.words);
  CHECK(fv.from_pose.size() == 5);
  CHECK(fv.from_sentence.size() == 5);
  CHECK(t.width(fv.from_sentence[0]) == 66);
  fv.sentence_latent = fv.pose_latent;
  const auto a = model.decode(t, fv.pose_latent, fv.target[0], 5);
  const auto b = model.decode(t, fv.sentence_latent, fv.target[0], 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(t.value(a[i]) == t.value(b[i]));
}

TEST_CASE("discriminator output lies strictly inside (0, 1) and is order independent") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 11);
  std::mt19937_64 rng(9);
  std::vector<std::vector<double>> batch;
  for (int k = 0; k < 4; ++k) batch.push_back(random_frames(3 + k, dims.channels(), rng, 5.0));
  std::vector<double> forward, backward;
  for (const auto& b : batch) forward.push_back(model.discriminate(b));
  for (auto it = batch.rbegin(); it != batch.rend(); ++it) backward.push_back(model.discriminate(*it));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    CHECK(forward[k] > 0.0);
    CHECK(forward[k] < 1.0);
    CHECK(forward[k] == backward[batch.size() - 1 - k]);
  }
}

TEST_CASE("same seed gives identical parameters") {
  const ModelDims dims = small_dims();
  MotionModel a(dims, skel(), 12), b(dims, skel(), 12), c(dims, skel(), 13);
  bool all_equal = true, any_diff = false;
  for (const auto& p : a.params().all()) {
    all_equal = all_equal && p.value == b.params().at(p.name).value;
    any_diff = any_diff || p.value != c.params().at(p.name).value;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("recurrent kernels are initialized orthogonal") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 14);
  const Param& h = model.params().at("pe.gru.upper.hidden.w");
  const std::size_t n = h.cols;
  for (std::size_t blk = 0; blk < 3; ++blk) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += h.value[(blk * n + i) * n + k] * h.value[(blk * n + j) * n + k];
        CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
      }
    }
  }
}

TEST_CASE("single-stream variant uses one latent of width 2h") {
  const ModelDims dims = small_dims(8, 1);
  MotionModel model(dims, skel(), 15);
  std::mt19937_64 rng(10);
  const auto z = model.encode_pose(random_frames(3, dims.channels(), rng));
  REQUIRE(z.streams.size() == 1);
  CHECK(z.streams[0].size() == 2 * dims.latent_width);
  CHECK(model.params().at("pe.gru.body.input.w").cols == 4 * dims.pair_width);
  CHECK(model.architecture().at("latent_width") == 2 * dims.latent_width);
  CHECK_FALSE(model.params().contains("pe.gru.upper.input.w"));
}

TEST_CASE("discriminator learns to separate smooth motions from noise") {
  const ModelDims dims = small_dims();
  MotionModel model(dims, skel(), 16);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<std::vector<double>> real, fake;
  for (int k = 0; k < 8; ++k) {
    real.push_back(random_frames(6, dims.channels(), rng, 0.3));
    std::vector<double> f(6 * dims.channels());
    for (auto& x : f) x = 1.5 * nd(rng);
    fake.push_back(f);
  }
  Adam adam;
  LossWeights w;
  w.g = 1.0;
  for (int step = 0; step < 200; ++step) {
    model.params().zero_grad();
    for (std::size_t k = 0; k < real.size(); ++k) {
      Tape t;
      double l_d = 0.0;
      t.backward(discriminator_objective(t, model, real[k], {fake[k]}, w, l_d));
    }
    adam.step(model.params(), {MotionModel::kDiscriminator}, 1e-2);
  }
  double sr = 0.0, sf = 0.0;
  for (std::size_t k = 0; k < real.size(); ++k) {
    sr += model.discriminate(real[k]);
    sf += model.discriminate(fake[k]);
  }
  CHECK(sr > sf);
}
