#include "fixtures.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "t2m/archive.hpp"
#include "t2m/npy.hpp"

namespace fs = std::filesystem;

namespace t2m::testing {

fs::path temp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  const fs::path p = fs::temp_directory_path() /
                     ("t2m-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<double> rest_pose() {
  return {
      0,    950,  0,    // root
      0,    1000, 0,    // BP
      0,    1200, 0,    // BT
      0,    1450, 0,    // BLN
      0,    1550, 0,    // BUN
      180,  1400, 0,    // LS
      200,  1120, 0,    // LE
      210,  850,  0,    // LW
      -180, 1400, 0,    // RS
      -200, 1120, 0,    // RE
      -210, 850,  0,    // RW
      100,  920,  0,    // LH
      100,  500,  0,    // LK
      100,  80,   0,    // LA
      100,  30,   80,   // LMrot
      100,  20,   160,  // LF
      -100, 920,  0,    // RH
      -100, 500,  0,    // RK
      -100, 80,   0,    // RA
      -100, 30,   80,   // RMrot
      -100, 20,   160,  // RF
  };
}

namespace {

// Rotates joints [first, last] about the x axis through `pivot` (y-z plane).
void swing(std::vector<double>& pose, std::size_t pivot, std::size_t first, std::size_t last, double angle) {
  const double py = pose[3 * pivot + 1], pz = pose[3 * pivot + 2];
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t j = first; j <= last; ++j) {
    const double y = pose[3 * j + 1] - py, z = pose[3 * j + 2] - pz;
    pose[3 * j + 1] = py + c * y - s * z;
    pose[3 * j + 2] = pz + s * y + c * z;
  }
}

}  // namespace

SyntheticMotion synthetic_motion(std::size_t index, std::uint64_t seed, std::size_t target_frames) {
  std::mt19937_64 rng(seed * 1000003ULL + index);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int kind = static_cast<int>(index % 4);  // walk, walk+turn, wave, jog
  const double speed = kind == 2 ? 0.0 : (kind == 3 ? 25.0 : 12.0) * (0.8 + 0.4 * u(rng));  // mm per 10 ms
  const double turn = kind == 1 ? (u(rng) < 0.5 ? -1.0 : 1.0) * (0.6 + 0.4 * u(rng)) : 0.0;  // rad/s
  const double freq = (kind == 3 ? 2.6 : 1.8) * (0.9 + 0.2 * u(rng));
  const double arm_amp = kind == 2 ? 0.1 : 0.35 + 0.1 * u(rng);
  const double leg_amp = kind == 2 ? 0.02 : 0.4 + 0.1 * u(rng);
  const double phase = 2.0 * std::numbers::pi * u(rng);
  const double heading0 = 2.0 * std::numbers::pi * u(rng);

  SyntheticMotion m;
  char id[16];
  std::snprintf(id, sizeof id, "%05zu", index + 1);
  m.id = id;
  const std::size_t T = target_frames * 8 + (index % 3);
  m.global.joints = Skeleton::kJointCount;
  m.global.traj_dims = 0;
  m.global.fps = 100.0;
  m.global.frames.resize(T * 63);
  const auto rest = rest_pose();
  double x = 500.0 * (u(rng) - 0.5), z = 500.0 * (u(rng) - 0.5), heading = heading0;
  for (std::size_t t = 0; t < T; ++t) {
    const double time = static_cast<double>(t) / 100.0;
    const double w = 2.0 * std::numbers::pi * freq * time + phase;
    auto pose = rest;
    swing(pose, 5, 6, 7, arm_amp * std::sin(w));
    swing(pose, 8, 9, 10, -arm_amp * std::sin(w));
    swing(pose, 11, 12, 15, -leg_amp * std::sin(w));
    swing(pose, 16, 17, 20, leg_amp * std::sin(w));
    if (kind == 2) swing(pose, 5, 6, 7, -2.2 + 0.4 * std::sin(2.0 * w));  // raised, waving left arm
    const double bounce = (kind == 2 ? 0.0 : 15.0) * std::abs(std::sin(w));
    const double c = std::cos(heading), s = std::sin(heading);
    for (std::size_t j = 0; j < 21; ++j) {
      const double px = pose[3 * j], pz = pose[3 * j + 2];
      m.global.frames[t * 63 + 3 * j] = x + c * px + s * pz;
      m.global.frames[t * 63 + 3 * j + 1] = pose[3 * j + 1] + bounce;
      m.global.frames[t * 63 + 3 * j + 2] = z - s * px + c * pz;
    }
    x += speed * s;
    z += speed * c;
    heading += turn / 100.0;
  }

  static const char* kWalk[] = {"A person walks forward.", "Someone is walking straight ahead."};
  static const char* kTurnL[] = {"A person walks and turns left.", "Someone walks in a left curve."};
  static const char* kTurnR[] = {"A person walks and turns right.", "Someone walks in a right curve."};
  static const char* kWave[] = {"A person waves with the left hand.", "Someone stands still and waves."};
  static const char* kJog[] = {"A person jogs forward quickly.", "Someone is running straight ahead."};
  const char** pool = kind == 0 ? kWalk : kind == 1 ? (turn > 0 ? kTurnL : kTurnR) : kind == 2 ? kWave : kJog;
  m.sentences.push_back(pool[index % 2]);
  if (index % 3 == 0) m.sentences.push_back(pool[(index + 1) % 2]);
  return m;
}

std::vector<SyntheticMotion> write_corpus(const fs::path& dir, const CorpusSpec& spec) {
  fs::create_directories(dir);
  std::vector<SyntheticMotion> out;
  for (std::size_t i = 0; i < spec.motions; ++i) {
    SyntheticMotion m = synthetic_motion(i, spec.seed, spec.target_frames);
    if (i + spec.unannotated >= spec.motions) m.sentences.clear();
    write_npy(dir / (m.id + "_joints.npy"), {m.global.length(), 21, 3}, m.global.frames);
    std::ofstream(dir / (m.id + "_annotations.json")) << nlohmann::json(m.sentences).dump();
    if (spec.write_meta) std::ofstream(dir / (m.id + "_meta.json")) << nlohmann::json{{"fps", 100.0}}.dump();
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::string> fixture_vocab() {
  std::vector<std::string> v = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", ".", ",", "!", "?"};
  for (const char* w : {"A", "a", "person", "Someone", "someone", "walks", "walk", "walking", "is", "forward",
                        "straight", "ahead", "and", "turns", "left", "right", "in", "curve", "waves", "with",
                        "the", "hand", "stands", "still", "jogs", "quickly", "running", "run", "man", "woman",
                        "circle", "kicks", "ball", "foot", "slowly", "backwards", "jumps", "up", "down", "dance"}) {
    v.emplace_back(w);
  }
  for (const char* p : {"##s", "##ing", "##ed", "##ly", "wa", "##ve", "jo", "##g"}) v.emplace_back(p);
  return v;
}

void write_random_bert(const fs::path& dir, const BertConfig& config, std::uint64_t seed) {
  fs::create_directories(dir);
  auto vocab = fixture_vocab();
  while (vocab.size() < config.vocab_size) vocab.push_back("tok" + std::to_string(vocab.size()));
  vocab.resize(config.vocab_size);
  {
    std::ofstream out(dir / "vocab.txt");
    for (const auto& w : vocab) out << w << "\n";
  }
  nlohmann::json cfg = config.to_json();
  cfg["hidden_act"] = "gelu";
  std::ofstream(dir / "config.json") << cfg.dump(2);

  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd(0.0f, 0.02f);
  Archive ar;
  auto randn = [&](const std::string& name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    std::vector<float> v(n);
    for (auto& x : v) x = nd(rng);
    ar.put(name, std::span<const float>(v), shape);
  };
  auto layer_norm = [&](const std::string& p, std::size_t h) {
    std::vector<float> g(h), b(h);
    for (std::size_t i = 0; i < h; ++i) {
      g[i] = 1.0f + nd(rng);
      b[i] = nd(rng);
    }
    ar.put(p + ".weight", std::span<const float>(g), {h});
    ar.put(p + ".bias", std::span<const float>(b), {h});
  };
  const std::size_t H = config.hidden, I = config.intermediate;
  randn("embeddings.word_embeddings.weight", {config.vocab_size, H});
  randn("embeddings.position_embeddings.weight", {config.max_positions, H});
  randn("embeddings.token_type_embeddings.weight", {config.type_vocab, H});
  layer_norm("embeddings.LayerNorm", H);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "encoder.layer." + std::to_string(l) + ".";
    for (const char* d : {"attention.self.query", "attention.self.key", "attention.self.value",
                          "attention.output.dense"}) {
      randn(p + d + ".weight", {H, H});
      randn(p + d + ".bias", {H});
    }
    layer_norm(p + "attention.output.LayerNorm", H);
    randn(p + "intermediate.dense.weight", {I, H});
    randn(p + "intermediate.dense.bias", {I});
    randn(p + "output.dense.weight", {H, I});
    randn(p + "output.dense.bias", {H});
    layer_norm(p + "output.LayerNorm", H);
  }
  ar.save(dir / "weights.t2ma");
}

BertConfig tiny_bert_config() {
  BertConfig c;
  c.hidden = 16;
  c.layers = 4;
  c.heads = 2;
  c.intermediate = 32;
  c.vocab_size = 64;
  c.max_positions = 64;
  return c;
}

BertConfig wide_bert_config() {
  BertConfig c;
  c.hidden = 1024;
  c.layers = 15;
  c.heads = 16;
  c.intermediate = 64;
  c.vocab_size = 64;
  c.max_positions = 32;
  return c;
}

void write_static_vectors(const fs::path& path, std::size_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.5);
  std::vector<std::string> words;
  for (const auto& w : fixture_vocab()) {
    if (w.front() != '[' && w.rfind("##", 0) != 0) words.push_back(w);
  }
  std::ofstream out(path);
  out << words.size() << " " << width << "\n";
  for (const auto& w : words) {
    out << w;
    for (std::size_t i = 0; i < width; ++i) out << " " << nd(rng);
    out << "\n";
  }
}

std::vector<double> random_frames(std::size_t T, std::size_t C, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> out(T * C);
  std::vector<double> cur(C);
  for (auto& x : cur) x = nd(rng);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      cur[c] += 0.2 * nd(rng);
      out[t * C + c] = cur[c];
    }
  }
  return out;
}

WordEmbeddingSequence random_words(std::size_t W, std::size_t width, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  WordEmbeddingSequence s;
  s.width = width;
  for (std::size_t w = 0; w < W; ++w) s.words.push_back("w" + std::to_string(w));
  s.vectors.resize(W * width);
  for (auto& x : s.vectors) x = nd(rng);
  return s;
}

TrainingExample random_example(const ModelDims& dims, std::size_t T, std::size_t W, std::mt19937_64& rng) {
  TrainingExample ex;
  ex.frames = random_frames(T, dims.channels(), rng);
  ex.words = random_words(W, dims.embed_width, rng);
  ex.motion_id = "rand";
  ex.sentence = "random";
  return ex;
}

ModelDims small_dims(std::size_t embed_width, std::size_t streams) {
  ModelDims d;
  d.part_width = 4;
  d.pair_width = 6;
  d.latent_width = 8;
  d.embed_width = embed_width;
  d.streams = streams;
  d.disc_channels = 4;
  return d;
}

}  // namespace t2m::testing
