#include "t2m/losses.hpp"

#include <cmath>

#include "t2m/error.hpp"

namespace t2m {

double smooth_l1(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("smooth_l1: sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  if (a.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += smooth_l1_element(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

void LossWeights::validate() const {
  for (double w : {m, v, e, g}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and non-negative");
  }
}

nlohmann::json LossWeights::to_json() const { return {{"m", m}, {"v", v}, {"e", e}, {"g", g}}; }

LossWeights LossWeights::from_json(const nlohmann::json& j) {
  LossWeights w;
  w.m = j.value("m", w.m);
  w.v = j.value("v", w.v);
  w.e = j.value("e", w.e);
  w.g = j.value("g", w.g);
  w.validate();
  return w;
}

bool LossBundle::finite() const {
  for (double x : {r, m, v, e, g, d, total_generator, total_discriminator}) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

LossBundle& LossBundle::operator+=(const LossBundle& o) {
  r += o.r;
  m += o.m;
  v += o.v;
  e += o.e;
  g += o.g;
  d += o.d;
  total_generator += o.total_generator;
  total_discriminator += o.total_discriminator;
  return *this;
}

LossBundle LossBundle::scaled(double c) const {
  return {r * c, m * c, v * c, e * c, g * c, d * c, total_generator * c, total_discriminator * c};
}

nlohmann::json LossBundle::to_json() const {
  return {{"L_R", r}, {"L_M", m}, {"L_V", v}, {"L_E", e}, {"L_G", g}, {"L_D", d},
          {"generator", total_generator}, {"discriminator", total_discriminator}};
}

std::string to_string(DiscSource s) {
  switch (s) {
    case DiscSource::both: return "both";
    case DiscSource::sentence: return "sentence";
    case DiscSource::pose: return "pose";
  }
  return "both";
}

DiscSource parse_disc_source(const std::string& s) {
  if (s == "both") return DiscSource::both;
  if (s == "sentence") return DiscSource::sentence;
  if (s == "pose") return DiscSource::pose;
  throw ConfigError("unknown discriminator source '" + s + "' (both, sentence, pose)");
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::joint: return "joint";
    case Phase::pose_autoencoder: return "pose_autoencoder";
    case Phase::sentence_alignment: return "sentence_alignment";
  }
  return "joint";
}

std::vector<std::string> ObjectiveOptions::generator_groups() const {
  switch (phase) {
    case Phase::pose_autoencoder: return {MotionModel::kPoseEncoder, MotionModel::kDecoder};
    case Phase::sentence_alignment: return {MotionModel::kSentenceEncoder, MotionModel::kDecoder};
    case Phase::joint: break;
  }
  return {MotionModel::kPoseEncoder, MotionModel::kSentenceEncoder, MotionModel::kDecoder};
}

bool ObjectiveOptions::trains_discriminator() const {
  return extra_losses && phase != Phase::sentence_alignment;
}

namespace {

std::vector<Var> velocities(Tape& t, const std::vector<Var>& frames) {
  std::vector<Var> out;
  for (std::size_t i = 1; i < frames.size(); ++i) out.push_back(ad::sub(t, frames[i], frames[i - 1]));
  return out;
}

Var latent_distance(Tape& t, const LatentVars& a, const LatentVars& b) {
  std::vector<std::pair<double, Var>> terms;
  for (std::size_t s = 0; s < a.streams.size(); ++s) {
    const std::array<Var, 1> x = {a.streams[s]};
    const std::array<Var, 1> y = {b.streams[s]};
    terms.emplace_back(1.0, ad::smooth_l1(t, x, y));
  }
  return ad::weighted_sum(t, terms);
}

std::vector<double> flatten(const Tape& t, const std::vector<Var>& frames) {
  std::vector<double> out;
  for (Var v : frames) out.insert(out.end(), t.value(v).begin(), t.value(v).end());
  return out;
}

std::vector<double> frame_diffs(std::span<const double> x, std::size_t c) {
  std::vector<double> out;
  for (std::size_t i = c; i < x.size(); ++i) out.push_back(x[i] - x[i - c]);
  return out;
}

}  // namespace

GeneratorPass generator_objective(Tape& t, const MotionModel& model, const TrainingExample& ex,
                                  const ObjectiveOptions& opt) {
  GeneratorPass pass;
  ForwardVars& fv = pass.forward;
  const bool sentence_branch = opt.phase != Phase::pose_autoencoder;
  if (sentence_branch) {
    fv = model.forward(t, ex.frames, ex.words);
  } else {
    const std::size_t c = model.dims().channels();
    if (ex.frames.empty() || ex.frames.size() % c != 0) throw ShapeError("generator_objective: bad frame buffer");
    for (std::size_t i = 0; i < ex.frames.size(); i += c) {
      fv.target.push_back(t.constant(std::vector<double>(ex.frames.begin() + static_cast<std::ptrdiff_t>(i),
                                                         ex.frames.begin() + static_cast<std::ptrdiff_t>(i + c))));
    }
    fv.pose_latent = model.encode_pose(t, fv.target);
    fv.from_pose = model.decode(t, fv.pose_latent, fv.target[0], fv.target.size());
  }

  std::vector<std::pair<double, Var>> terms;
  LossBundle& lb = pass.losses;

  std::vector<std::pair<double, Var>> r_terms = {{1.0, ad::smooth_l1(t, fv.from_pose, fv.target)}};
  if (sentence_branch) r_terms.emplace_back(1.0, ad::smooth_l1(t, fv.from_sentence, fv.target));
  const Var r = ad::weighted_sum(t, r_terms);
  lb.r = t.scalar(r);
  terms.emplace_back(1.0, r);

  if (opt.extra_losses && opt.phase != Phase::sentence_alignment) {
    // Generated motions that receive L_M / L_V.
    std::vector<const std::vector<Var>*> generated;
    if (opt.phase == Phase::pose_autoencoder) {
      generated.push_back(&fv.from_pose);
    } else {
      generated.push_back(&fv.from_sentence);
      if (opt.mv_on_pose_branch) generated.push_back(&fv.from_pose);
    }
    const auto target_vel = velocities(t, fv.target);
    std::vector<std::pair<double, Var>> m_terms;
    std::vector<std::pair<double, Var>> v_terms;
    for (const auto* gen : generated) {
      m_terms.emplace_back(1.0, latent_distance(t, model.encode_pose(t, *gen), fv.pose_latent));
      v_terms.emplace_back(1.0, ad::smooth_l1(t, velocities(t, *gen), target_vel));
    }
    const Var m = ad::weighted_sum(t, m_terms);
    const Var v = ad::weighted_sum(t, v_terms);
    lb.m = t.scalar(m);
    lb.v = t.scalar(v);
    terms.emplace_back(opt.weights.m, m);
    terms.emplace_back(opt.weights.v, v);

    std::vector<const std::vector<Var>*> fakes;
    if (opt.phase == Phase::pose_autoencoder || opt.disc_source == DiscSource::pose) {
      fakes.push_back(&fv.from_pose);
    } else {
      fakes.push_back(&fv.from_sentence);
      if (opt.disc_source == DiscSource::both) fakes.push_back(&fv.from_pose);
    }
    std::vector<std::pair<double, Var>> g_terms;
    const double inv = 1.0 / static_cast<double>(fakes.size());
    for (const auto* f : fakes) {
      g_terms.emplace_back(inv, ad::bce_with_logits(t, model.discriminate_logit(t, *f), 1.0));
      pass.fakes.push_back(flatten(t, *f));
    }
    const Var g = ad::weighted_sum(t, g_terms);
    lb.g = t.scalar(g);
    terms.emplace_back(opt.weights.g, g);
  }

  if (opt.extra_losses && opt.phase != Phase::pose_autoencoder) {
    const Var e = latent_distance(t, fv.pose_latent, fv.sentence_latent);
    lb.e = t.scalar(e);
    terms.emplace_back(opt.weights.e, e);
  }

  pass.total = ad::weighted_sum(t, terms);
  lb.total_generator = t.scalar(pass.total);
  return pass;
}

Var discriminator_objective(Tape& t, const MotionModel& model, std::span<const double> real,
                            const std::vector<std::vector<double>>& fakes, const LossWeights& w,
                            double& l_d) {
  if (fakes.empty()) throw ConfigError("discriminator_objective: no generated motions");
  const std::size_t c = model.dims().channels();
  auto as_frames = [&](std::span<const double> x) {
    std::vector<Var> out;
    for (std::size_t i = 0; i + c <= x.size(); i += c) {
      const auto row = x.subspan(i, c);
      out.push_back(t.constant(std::vector<double>(row.begin(), row.end())));
    }
    return out;
  };
  std::vector<std::pair<double, Var>> terms;
  terms.emplace_back(0.5, ad::bce_with_logits(t, model.discriminate_logit(t, as_frames(real)), 1.0));
  const double inv = 0.5 / static_cast<double>(fakes.size());
  for (const auto& f : fakes) {
    terms.emplace_back(inv, ad::bce_with_logits(t, model.discriminate_logit(t, as_frames(f)), 0.0));
  }
  const Var d = ad::weighted_sum(t, terms);
  l_d = t.scalar(d);
  const std::array<std::pair<double, Var>, 1> total = {std::pair<double, Var>{w.g, d}};
  return ad::weighted_sum(t, total);
}

LossBundle compute_losses(const LossInputs& in, const LossWeights& w) {
  const std::size_t c = in.channels;
  if (c == 0 || in.target.size() % c != 0) throw ShapeError("compute_losses: bad channel count");
  auto latent_term = [](const LatentPair& a, const LatentPair& b) {
    if (a.streams.size() != b.streams.size()) throw ShapeError("compute_losses: latent stream count mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.streams.size(); ++k) s += smooth_l1(a.streams[k], b.streams[k]);
    return s;
  };
  auto bce = [](double p, double target) {
    if (!(p > 0.0 && p < 1.0)) throw ShapeError("compute_losses: discriminator output outside (0, 1)");
    return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
  };

  LossBundle lb;
  lb.r = smooth_l1(in.from_sentence, in.target) + smooth_l1(in.from_pose, in.target);
  lb.m = latent_term(in.reencoded, in.pose_latent);
  lb.v = smooth_l1(frame_diffs(in.from_sentence, c), frame_diffs(in.target, c));
  lb.e = latent_term(in.pose_latent, in.sentence_latent);
  if (!in.d_fake.empty()) {
    double g = 0.0;
    double fake = 0.0;
    for (double p : in.d_fake) {
      g += bce(p, 1.0);
      fake += bce(p, 0.0);
    }
    const double n = static_cast<double>(in.d_fake.size());
    lb.g = g / n;
    lb.d = 0.5 * (bce(in.d_real, 1.0) + fake / n);
  }
  lb.total_generator = lb.r + w.m * lb.m + w.v * lb.v + w.e * lb.e + w.g * lb.g;
  lb.total_discriminator = w.g * lb.d;
  return lb;
}

}  // namespace t2m
