#include "t2m/model.hpp"

#include <Eigen/QR>

#include <cmath>

#include "t2m/error.hpp"

namespace t2m {

namespace {

constexpr std::array<BodyPart, 4> kPairLimbs = {BodyPart::left_arm, BodyPart::right_arm, BodyPart::left_leg,
                                                BodyPart::right_leg};
constexpr std::size_t kTrunk = static_cast<std::size_t>(BodyPart::trunk);
const std::array<std::string, 2> kStreamNames = {"upper", "lower"};

std::size_t idx(BodyPart p) { return static_cast<std::size_t>(p); }

void fill_uniform(std::vector<double>& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& x : v) x = dist(rng);
}

// Orthogonal square blocks stacked vertically (one per gate).
void fill_orthogonal_blocks(Param& p, std::size_t blocks, std::mt19937_64& rng) {
  const std::size_t n = p.cols;
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = dist(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        p.value[(b * n + i) * n + j] = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
}

}  // namespace

void ModelDims::validate() const {
  if (streams != 1 && streams != 2) throw ConfigError("model: streams must be 1 or 2");
  if (joints == 0 || part_width == 0 || pair_width == 0 || latent_width == 0 || embed_width == 0 ||
      disc_channels == 0) {
    throw ConfigError("model: all widths must be positive");
  }
}

nlohmann::json ModelDims::to_json() const {
  return {{"joints", joints},           {"traj_dims", traj_dims},     {"part_width", part_width},
          {"pair_width", pair_width},   {"latent_width", latent_width}, {"embed_width", embed_width},
          {"streams", streams},         {"disc_channels", disc_channels}};
}

ModelDims ModelDims::from_json(const nlohmann::json& j) {
  ModelDims d;
  d.joints = j.at("joints").get<std::size_t>();
  d.traj_dims = j.at("traj_dims").get<std::size_t>();
  d.part_width = j.at("part_width").get<std::size_t>();
  d.pair_width = j.at("pair_width").get<std::size_t>();
  d.latent_width = j.at("latent_width").get<std::size_t>();
  d.embed_width = j.at("embed_width").get<std::size_t>();
  d.streams = j.at("streams").get<std::size_t>();
  d.disc_channels = j.at("disc_channels").get<std::size_t>();
  d.validate();
  return d;
}

std::vector<double> LatentPair::concatenated() const {
  std::vector<double> out;
  for (const auto& s : streams) out.insert(out.end(), s.begin(), s.end());
  return out;
}

Var GruCell::step(Tape& t, Var x, Var h) const {
  const std::size_t H = width;
  const Var gx = ad::linear(t, input, x);
  const Var gh = ad::linear(t, hidden, h);
  const Var r = ad::sigmoid(t, ad::add(t, ad::slice(t, gx, 0, H), ad::slice(t, gh, 0, H)));
  const Var z = ad::sigmoid(t, ad::add(t, ad::slice(t, gx, H, H), ad::slice(t, gh, H, H)));
  const Var n = ad::tanh(t, ad::add(t, ad::slice(t, gx, 2 * H, H), ad::mul(t, r, ad::slice(t, gh, 2 * H, H))));
  return ad::add(t, ad::mul(t, ad::one_minus(t, z), n), ad::mul(t, z, h));
}

std::pair<Var, Var> LstmCell::step(Tape& t, Var x, Var h, Var c) const {
  const std::size_t H = width;
  const Var g = ad::add(t, ad::linear(t, input, x), ad::linear(t, hidden, h));
  const Var i = ad::sigmoid(t, ad::slice(t, g, 0, H));
  const Var f = ad::sigmoid(t, ad::slice(t, g, H, H));
  const Var gg = ad::tanh(t, ad::slice(t, g, 2 * H, H));
  const Var o = ad::sigmoid(t, ad::slice(t, g, 3 * H, H));
  const Var c_next = ad::add(t, ad::mul(t, f, c), ad::mul(t, i, gg));
  return {ad::mul(t, o, ad::tanh(t, c_next)), c_next};
}

Linear MotionModel::make_linear(const std::string& name, const std::string& group, std::size_t in,
                                std::size_t out, bool bias) {
  Linear l;
  l.w = &params_.add(name + ".w", group, out, in);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  fill_uniform(l.w->value, bound, rng_);
  if (bias) {
    l.b = &params_.add(name + ".b", group, out, 1);
    fill_uniform(l.b->value, bound, rng_);
  }
  return l;
}

GruCell MotionModel::make_gru(const std::string& name, const std::string& group, std::size_t in,
                              std::size_t width) {
  GruCell g;
  g.width = width;
  g.input = make_linear(name + ".input", group, in, 3 * width);
  g.hidden = make_linear(name + ".hidden", group, width, 3 * width);
  fill_orthogonal_blocks(*g.hidden.w, 3, rng_);
  return g;
}

LstmCell MotionModel::make_lstm(const std::string& name, std::size_t in, std::size_t width) {
  LstmCell c;
  c.width = width;
  c.input = make_linear(name + ".input", kSentenceEncoder, in, 4 * width);
  c.hidden = make_linear(name + ".hidden", kSentenceEncoder, width, 4 * width, false);
  fill_orthogonal_blocks(*c.hidden.w, 4, rng_);
  return c;
}

MotionModel::Hierarchy MotionModel::make_hierarchy(const std::string& prefix, const std::string& group) {
  Hierarchy h;
  for (auto p : kBodyParts) {
    h.parts[idx(p)] = make_linear(prefix + ".part." + std::string(to_string(p)), group,
                                  part_channels_[idx(p)].size(), dims_.part_width);
  }
  for (std::size_t l = 0; l < kPairLimbs.size(); ++l) {
    h.pairs[l] = make_linear(prefix + ".pair." + std::string(to_string(kPairLimbs[l])), group,
                             2 * dims_.part_width, dims_.pair_width);
  }
  return h;
}

MotionModel::MotionModel(const ModelDims& dims, const Skeleton& skeleton, std::uint64_t seed)
    : dims_(dims), rng_(seed) {
  dims_.validate();
  if (dims_.joints != skeleton.joint_count()) throw ShapeError("model: joint count differs from skeleton");
  part_channels_ = part_channels(skeleton, dims_.traj_dims);

  const std::size_t S = dims_.streams;
  const std::size_t H = dims_.stream_width();
  const std::size_t stream_in = (4 / S) * dims_.pair_width;

  enc_ = make_hierarchy("pe", kPoseEncoder);
  for (std::size_t s = 0; s < S; ++s) {
    enc_gru_.push_back(make_gru("pe.gru." + (S == 2 ? kStreamNames[s] : std::string("body")), kPoseEncoder,
                                stream_in, H));
  }

  lstm_.push_back(make_lstm("se.lstm1", dims_.embed_width, dims_.sentence_width()));
  lstm_.push_back(make_lstm("se.lstm2", dims_.sentence_width(), dims_.sentence_width()));

  for (std::size_t s = 0; s < S; ++s) {
    const std::string sn = S == 2 ? kStreamNames[s] : std::string("body");
    dec_init_.push_back(make_linear("de.init." + sn, kDecoder, H, H));
  }
  dec_in_ = make_hierarchy("de.in", kDecoder);
  for (std::size_t s = 0; s < S; ++s) {
    const std::string sn = S == 2 ? kStreamNames[s] : std::string("body");
    dec_gru_.push_back(make_gru("de.gru." + sn, kDecoder, stream_in, H));
    dec_stream_out_.push_back(make_linear("de.out.stream." + sn, kDecoder, H, stream_in));
  }
  for (std::size_t l = 0; l < kPairLimbs.size(); ++l) {
    dec_pair_out_[l] = make_linear("de.out.pair." + std::string(to_string(kPairLimbs[l])), kDecoder,
                                   dims_.pair_width, 2 * dims_.part_width);
  }
  for (auto p : kBodyParts) {
    dec_part_out_[idx(p)] = make_linear("de.out.part." + std::string(to_string(p)), kDecoder, dims_.part_width,
                                        part_channels_[idx(p)].size());
  }

  const std::size_t C = dims_.channels();
  const std::size_t K = dims_.disc_channels;
  disc_conv1_ = make_linear("d.conv1", kDiscriminator, 3 * C, K);
  disc_conv2_ = make_linear("d.conv2", kDiscriminator, 3 * K, K);
  disc_head_ = make_linear("d.head", kDiscriminator, K, 1);
}

std::vector<Var> MotionModel::stream_inputs(Tape& t, const Hierarchy& h, Var frame) const {
  std::array<Var, 5> parts;
  for (auto p : kBodyParts) {
    parts[idx(p)] = ad::tanh(t, ad::linear(t, h.parts[idx(p)], ad::gather(t, frame, part_channels_[idx(p)])));
  }
  std::array<Var, 4> pairs;
  for (std::size_t l = 0; l < kPairLimbs.size(); ++l) {
    const std::array<Var, 2> both = {parts[idx(kPairLimbs[l])], parts[kTrunk]};
    pairs[l] = ad::tanh(t, ad::linear(t, h.pairs[l], ad::concat(t, both)));
  }
  if (dims_.streams == 2) {
    const std::array<Var, 2> upper = {pairs[0], pairs[1]};
    const std::array<Var, 2> lower = {pairs[2], pairs[3]};
    return {ad::concat(t, upper), ad::concat(t, lower)};
  }
  return {ad::concat(t, pairs)};
}

std::vector<Var> MotionModel::frames_as_vars(Tape& t, std::span<const double> frames) const {
  const std::size_t C = dims_.channels();
  if (frames.size() % C != 0) {
    throw ShapeError("model: frame buffer is not a multiple of " + std::to_string(C) + " channels");
  }
  std::vector<Var> out;
  for (std::size_t i = 0; i < frames.size(); i += C) {
    out.push_back(t.constant(std::vector<double>(frames.begin() + static_cast<std::ptrdiff_t>(i),
                                                 frames.begin() + static_cast<std::ptrdiff_t>(i + C))));
  }
  return out;
}

LatentVars MotionModel::encode_pose(Tape& t, std::span<const Var> frames) const {
  if (frames.empty()) throw LengthError("encode_pose: empty sequence");
  for (Var f : frames) {
    if (t.width(f) != dims_.channels()) {
      throw ShapeError("encode_pose: frame has " + std::to_string(t.width(f)) + " channels, expected " +
                       std::to_string(dims_.channels()));
    }
  }
  LatentVars z;
  for (std::size_t s = 0; s < dims_.streams; ++s) {
    z.streams.push_back(t.constant(std::vector<double>(dims_.stream_width(), 0.0)));
  }
  for (Var f : frames) {
    const auto ins = stream_inputs(t, enc_, f);
    for (std::size_t s = 0; s < dims_.streams; ++s) z.streams[s] = enc_gru_[s].step(t, ins[s], z.streams[s]);
  }
  return z;
}

LatentVars MotionModel::encode_sentence(Tape& t, std::span<const Var> words) const {
  if (words.empty()) throw LengthError("encode_sentence: empty sentence");
  const std::size_t W = dims_.sentence_width();
  std::array<Var, 2> h = {t.constant(std::vector<double>(W, 0.0)), t.constant(std::vector<double>(W, 0.0))};
  std::array<Var, 2> c = h;
  for (Var x : words) {
    if (t.width(x) != dims_.embed_width) {
      throw ShapeError("encode_sentence: word vector width " + std::to_string(t.width(x)) + ", expected " +
                       std::to_string(dims_.embed_width));
    }
    std::tie(h[0], c[0]) = lstm_[0].step(t, x, h[0], c[0]);
    std::tie(h[1], c[1]) = lstm_[1].step(t, h[0], h[1], c[1]);
  }
  LatentVars z;
  if (dims_.streams == 2) {
    z.streams = {ad::slice(t, h[1], 0, dims_.latent_width), ad::slice(t, h[1], dims_.latent_width, dims_.latent_width)};
  } else {
    z.streams = {h[1]};
  }
  return z;
}

std::vector<Var> MotionModel::decode(Tape& t, const LatentVars& latent, Var initial, std::size_t frames) const {
  if (latent.streams.size() != dims_.streams) throw ShapeError("decode: latent stream count mismatch");
  if (t.width(initial) != dims_.channels()) throw ShapeError("decode: initial pose has wrong channel count");
  const std::size_t S = dims_.streams;
  const std::size_t P = dims_.pair_width;
  const std::size_t h1 = dims_.part_width;

  std::vector<Var> hidden;
  for (std::size_t s = 0; s < S; ++s) hidden.push_back(ad::linear(t, dec_init_[s], latent.streams[s]));

  std::vector<Var> out;
  out.reserve(frames);
  Var prev = initial;
  for (std::size_t step = 0; step < frames; ++step) {
    const auto ins = stream_inputs(t, dec_in_, prev);
    std::array<Var, 4> pairs;
    for (std::size_t s = 0; s < S; ++s) {
      hidden[s] = dec_gru_[s].step(t, ins[s], hidden[s]);
      const Var a = ad::tanh(t, ad::linear(t, dec_stream_out_[s], hidden[s]));
      const std::size_t per_stream = 4 / S;
      for (std::size_t k = 0; k < per_stream; ++k) pairs[s * per_stream + k] = ad::slice(t, a, k * P, P);
    }
    std::array<Var, 5> deltas;
    std::array<Var, 4> trunk;
    for (std::size_t l = 0; l < kPairLimbs.size(); ++l) {
      const Var u = ad::tanh(t, ad::linear(t, dec_pair_out_[l], pairs[l]));
      deltas[idx(kPairLimbs[l])] = ad::linear(t, dec_part_out_[idx(kPairLimbs[l])], ad::slice(t, u, 0, h1));
      trunk[l] = ad::linear(t, dec_part_out_[kTrunk], ad::slice(t, u, h1, h1));
    }
    deltas[kTrunk] = ad::mean(t, trunk);
    const Var delta = ad::scatter(t, dims_.channels(), deltas, part_channels_);
    prev = ad::add(t, prev, delta);
    out.push_back(prev);
  }
  return out;
}

Var MotionModel::discriminate_logit(Tape& t, std::span<const Var> frames) const {
  if (frames.empty()) throw LengthError("discriminate: empty sequence");
  auto conv = [&](std::span<const Var> xs, const Linear& layer) {
    const Var zero = t.constant(std::vector<double>(t.width(xs[0]), 0.0));
    std::vector<Var> ys;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const std::array<Var, 3> window = {i > 0 ? xs[i - 1] : zero, xs[i], i + 1 < xs.size() ? xs[i + 1] : zero};
      ys.push_back(ad::tanh(t, ad::linear(t, layer, ad::concat(t, window))));
    }
    return ys;
  };
  const auto h1 = conv(frames, disc_conv1_);
  const auto h2 = conv(h1, disc_conv2_);
  return ad::linear(t, disc_head_, ad::mean(t, h2));
}

ForwardVars MotionModel::forward(Tape& t, std::span<const double> frames, const WordEmbeddingSequence& sentence) const {
  ForwardVars fv;
  fv.target = frames_as_vars(t, frames);
  if (fv.target.empty()) throw LengthError("forward: empty motion");
  std::vector<Var> words;
  for (std::size_t w = 0; w < sentence.length(); ++w) {
    const auto row = sentence.row(w);
    words.push_back(t.constant(std::vector<double>(row.begin(), row.end())));
  }
  fv.pose_latent = encode_pose(t, fv.target);
  fv.sentence_latent = encode_sentence(t, words);
  fv.from_pose = decode(t, fv.pose_latent, fv.target[0], fv.target.size());
  fv.from_sentence = decode(t, fv.sentence_latent, fv.target[0], fv.target.size());
  return fv;
}

namespace {

LatentPair to_values(const Tape& t, const LatentVars& z) {
  LatentPair out;
  for (Var v : z.streams) out.streams.push_back(t.value(v));
  return out;
}

std::vector<double> flatten(const Tape& t, const std::vector<Var>& frames) {
  std::vector<double> out;
  for (Var v : frames) {
    const auto& f = t.value(v);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

}  // namespace

LatentPair MotionModel::encode_pose(std::span<const double> frames) const {
  Tape t(false);
  return to_values(t, encode_pose(t, frames_as_vars(t, frames)));
}

LatentPair MotionModel::encode_sentence(const WordEmbeddingSequence& sentence) const {
  Tape t(false);
  std::vector<Var> words;
  for (std::size_t w = 0; w < sentence.length(); ++w) {
    const auto row = sentence.row(w);
    words.push_back(t.constant(std::vector<double>(row.begin(), row.end())));
  }
  return to_values(t, encode_sentence(t, words));
}

std::vector<double> MotionModel::decode(const LatentPair& latent, std::span<const double> initial,
                                        std::size_t frames) const {
  Tape t(false);
  LatentVars z;
  for (const auto& s : latent.streams) {
    if (s.size() != dims_.stream_width()) throw ShapeError("decode: latent width mismatch");
    z.streams.push_back(t.constant(s));
  }
  const Var init = t.constant(std::vector<double>(initial.begin(), initial.end()));
  return flatten(t, decode(t, z, init, frames));
}

double MotionModel::discriminate(std::span<const double> frames) const {
  Tape t(false);
  return sigmoid(t.scalar(discriminate_logit(t, frames_as_vars(t, frames))));
}

ForwardResult MotionModel::forward(std::span<const double> frames, const WordEmbeddingSequence& sentence) const {
  Tape t(false);
  const auto fv = forward(t, frames, sentence);
  return {flatten(t, fv.from_pose), flatten(t, fv.from_sentence), to_values(t, fv.pose_latent),
          to_values(t, fv.sentence_latent)};
}

std::vector<std::string> MotionModel::delta_layer_params() const {
  std::vector<std::string> names;
  for (const auto& l : dec_part_out_) {
    names.push_back(l.w->name);
    names.push_back(l.b->name);
  }
  return names;
}

void MotionModel::zero_delta_layers() {
  for (const auto& name : delta_layer_params()) {
    auto& p = params_.at(name);
    std::fill(p.value.begin(), p.value.end(), 0.0);
  }
}

nlohmann::json MotionModel::architecture() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& p : params_.all()) {
    layers.push_back({{"name", p.name}, {"group", p.group}, {"rows", p.rows}, {"cols", p.cols}});
  }
  return {{"dims", dims_.to_json()},
          {"streams", dims_.streams},
          {"latent_width", dims_.stream_width()},
          {"sentence_width", dims_.sentence_width()},
          {"embed_width", dims_.embed_width},
          {"param_counts",
           {{kPoseEncoder, params_.group_size(kPoseEncoder)},
            {kSentenceEncoder, params_.group_size(kSentenceEncoder)},
            {kDecoder, params_.group_size(kDecoder)},
            {kDiscriminator, params_.group_size(kDiscriminator)}}},
          {"layers", layers}};
}

}  // namespace t2m
