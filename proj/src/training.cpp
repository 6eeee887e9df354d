#include "t2m/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "t2m/error.hpp"

namespace t2m {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_joint_training: return "no_joint_training";
    case Variant::no_two_stream: return "no_two_stream";
    case Variant::no_extra_losses: return "no_extra_losses";
    case Variant::no_bert: return "no_bert";
  }
  return "full";
}

Variant parse_variant(const std::string& s) {
  if (s == "full" || s == "none") return Variant::full;
  if (s == "no_joint_training" || s == "jt") return Variant::no_joint_training;
  if (s == "no_two_stream" || s == "2st") return Variant::no_two_stream;
  if (s == "no_extra_losses" || s == "lo") return Variant::no_extra_losses;
  if (s == "no_bert" || s == "bert") return Variant::no_bert;
  throw ConfigError("unknown ablation '" + s + "' (full, jt, 2st, lo, bert)");
}

void AblationConfig::validate() const {
  if (!(phase_split > 0.0 && phase_split < 1.0)) throw ConfigError("phase_split must be in (0, 1)");
  if (static_width == 0) throw ConfigError("static_width must be positive");
}

ModelDims AblationConfig::apply(ModelDims dims) const {
  if (variant == Variant::no_two_stream) dims.streams = 1;
  if (variant == Variant::no_bert) dims.embed_width = static_width;
  return dims;
}

Phase AblationConfig::phase_for(std::size_t epoch, std::size_t epochs) const {
  if (variant != Variant::no_joint_training) return Phase::joint;
  const auto first = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(phase_split * epochs)));
  return epoch < first ? Phase::pose_autoencoder : Phase::sentence_alignment;
}

nlohmann::json AblationConfig::to_json() const {
  return {{"variant", to_string(variant)}, {"phase_split", phase_split}, {"static_width", static_width}};
}

AblationConfig AblationConfig::from_json(const nlohmann::json& j) {
  AblationConfig a;
  a.variant = parse_variant(j.value("variant", std::string("full")));
  a.phase_split = j.value("phase_split", a.phase_split);
  a.static_width = j.value("static_width", a.static_width);
  a.validate();
  return a;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must be in (0, 1]");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be >= 0");
  weights.validate();
}

double TrainConfig::lr_at(std::size_t epoch) const {
  return learning_rate * std::pow(lr_decay, static_cast<double>(epoch));
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},       {"batch_size", batch_size},
          {"learning_rate", learning_rate}, {"lr_decay", lr_decay},
          {"beta1", beta1},         {"beta2", beta2},
          {"adam_eps", adam_eps},   {"clip_norm", clip_norm},
          {"seed", seed},           {"weights", weights.to_json()},
          {"mv_on_pose_branch", mv_on_pose_branch}, {"disc_source", to_string(disc_source)}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.seed = j.value("seed", c.seed);
  if (j.contains("weights")) c.weights = LossWeights::from_json(j.at("weights"));
  c.mv_on_pose_branch = j.value("mv_on_pose_branch", c.mv_on_pose_branch);
  c.disc_source = parse_disc_source(j.value("disc_source", std::string("both")));
  c.validate();
  return c;
}

ObjectiveOptions objective_for(const TrainConfig& cfg, const AblationConfig& abl, Phase phase) {
  ObjectiveOptions o;
  o.weights = cfg.weights;
  o.extra_losses = abl.variant != Variant::no_extra_losses;
  o.mv_on_pose_branch = cfg.mv_on_pose_branch;
  o.disc_source = cfg.disc_source;
  o.phase = phase;
  return o;
}

void Adam::step(ParamStore& params, const std::vector<std::string>& groups, double lr) {
  for (auto& p : params.all()) {
    if (std::find(groups.begin(), groups.end(), p.group) == groups.end()) continue;
    Slot& s = slots_[p.name];
    if (s.m.empty()) {
      s.m.assign(p.size(), 0.0);
      s.v.assign(p.size(), 0.0);
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
      p.value[i] -= lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + eps_);
    }
  }
}

void Adam::save(Archive& ar) const {
  nlohmann::json steps = nlohmann::json::object();
  for (const auto& [name, s] : slots_) {
    ar.put("adam.m/" + name, std::span<const double>(s.m), {s.m.size()});
    ar.put("adam.v/" + name, std::span<const double>(s.v), {s.v.size()});
    steps[name] = s.t;
  }
  ar.meta["adam_steps"] = steps;
}

void Adam::load(const Archive& ar) {
  slots_.clear();
  if (!ar.meta.contains("adam_steps")) return;
  for (const auto& [name, t] : ar.meta.at("adam_steps").items()) {
    Slot s;
    s.t = t.template get<std::int64_t>();
    s.m = ar.get_f64("adam.m/" + name);
    s.v = ar.get_f64("adam.v/" + name);
    slots_[name] = std::move(s);
  }
}

Trainer::Trainer(MotionModel& model, TrainConfig config, AblationConfig ablation)
    : model_(model),
      config_(std::move(config)),
      ablation_(ablation),
      adam_(config_.beta1, config_.beta2, config_.adam_eps) {
  config_.validate();
  ablation_.validate();
}

namespace {

struct GeneratorBatch {
  LossBundle losses;
  std::vector<std::vector<std::vector<double>>> fakes;  // per example
};

GeneratorBatch run_generator(MotionModel& model, std::span<const TrainingExample* const> batch,
                             const ObjectiveOptions& opt) {
  GeneratorBatch out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const TrainingExample* ex : batch) {
    Tape t;
    GeneratorPass pass = generator_objective(t, model, *ex, opt);
    t.backward(ad::scale(t, pass.total, inv));
    out.losses += pass.losses.scaled(inv);
    out.fakes.push_back(std::move(pass.fakes));
  }
  return out;
}

}  // namespace

bool Trainer::gradients_finite(const std::vector<std::string>& groups) const {
  for (const auto& p : model_.params().all()) {
    if (std::find(groups.begin(), groups.end(), p.group) == groups.end()) continue;
    for (double g : p.grad) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

void Trainer::clip(const std::vector<std::string>& groups) {
  if (config_.clip_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& p : model_.params().all()) {
    if (std::find(groups.begin(), groups.end(), p.group) == groups.end()) continue;
    for (double g : p.grad) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= config_.clip_norm) return;
  const double c = config_.clip_norm / norm;
  for (auto& p : model_.params().all()) {
    if (std::find(groups.begin(), groups.end(), p.group) == groups.end()) continue;
    for (double& g : p.grad) g *= c;
  }
}

LossBundle Trainer::accumulate_generator_gradients(std::span<const TrainingExample* const> batch, Phase phase) {
  if (batch.empty()) throw ConfigError("empty batch");
  model_.params().zero_grad();
  return run_generator(model_, batch, objective_for(config_, ablation_, phase)).losses;
}

StepResult Trainer::train_step(std::span<const TrainingExample* const> batch, Phase phase, double lr) {
  if (batch.empty()) throw ConfigError("empty batch");
  const ObjectiveOptions opt = objective_for(config_, ablation_, phase);
  const double inv = 1.0 / static_cast<double>(batch.size());
  StepResult res;

  model_.params().zero_grad();
  GeneratorBatch gen = run_generator(model_, batch, opt);
  res.losses = gen.losses;
  const auto groups = opt.generator_groups();
  if (!gen.losses.finite() || !gradients_finite(groups)) {
    res.skipped = true;
    res.reason = "non-finite generator loss or gradient";
    spdlog::warn("skipping step: {} ({})", res.reason, gen.losses.to_json().dump());
    model_.params().zero_grad();
    return res;
  }
  clip(groups);
  adam_.step(model_.params(), groups, lr);

  if (!opt.trains_discriminator()) return res;
  const std::vector<std::string> disc = {MotionModel::kDiscriminator};
  model_.params().zero_grad();
  double l_d_sum = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    Tape t;
    double l_d = 0.0;
    const Var total = discriminator_objective(t, model_, batch[k]->frames, gen.fakes[k], config_.weights, l_d);
    t.backward(ad::scale(t, total, inv));
    l_d_sum += l_d * inv;
  }
  res.losses.d = l_d_sum;
  res.losses.total_discriminator = config_.weights.g * l_d_sum;
  if (!std::isfinite(l_d_sum) || !gradients_finite(disc)) {
    res.skipped = true;
    res.reason = "non-finite discriminator loss or gradient";
    spdlog::warn("skipping discriminator update: {}", res.reason);
    model_.params().zero_grad();
    return res;
  }
  clip(disc);
  adam_.step(model_.params(), disc, lr);
  model_.params().zero_grad();
  return res;
}

LossBundle Trainer::evaluate_losses(std::span<const TrainingExample* const> batch, Phase phase) const {
  LossBundle sum;
  if (batch.empty()) return sum;
  const ObjectiveOptions opt = objective_for(config_, ablation_, phase);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const TrainingExample* ex : batch) {
    Tape t(false);
    GeneratorPass pass = generator_objective(t, model_, *ex, opt);
    LossBundle lb = pass.losses;
    if (opt.trains_discriminator()) {
      Tape td(false);
      double l_d = 0.0;
      discriminator_objective(td, model_, ex->frames, pass.fakes, config_.weights, l_d);
      lb.d = l_d;
      lb.total_discriminator = config_.weights.g * l_d;
    }
    sum += lb.scaled(inv);
  }
  return sum;
}

void save_checkpoint(const std::filesystem::path& path, const MotionModel& model, const CheckpointMeta& meta,
                     const Adam* optimizer) {
  Archive ar;
  ar.meta = {{"format", "t2m-checkpoint"},
             {"version", kCheckpointVersion},
             {"dims", model.dims().to_json()},
             {"architecture", model.architecture()},
             {"embedder", {{"kind", meta.embedder_kind}, {"hash", meta.embedder_hash}}},
             {"skeleton_checksum", meta.skeleton_checksum},
             {"normalization", meta.normalization.to_json()},
             {"train", meta.train.to_json()},
             {"ablation", meta.ablation.to_json()},
             {"epoch", meta.epoch},
             {"best_val", meta.best_val}};
  for (const auto& p : model.params().all()) {
    ar.put("param/" + p.name, std::span<const double>(p.value), {p.rows, p.cols});
  }
  if (optimizer != nullptr) optimizer->save(ar);
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  ar.save(path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const Skeleton& skeleton) {
  if (!std::filesystem::exists(path)) throw ResourceError("checkpoint not found: " + path.string());
  LoadedCheckpoint out;
  out.archive = Archive::load(path);
  const auto& m = out.archive.meta;
  if (m.value("format", std::string()) != "t2m-checkpoint") {
    throw CheckpointError(path.string() + " is not a checkpoint");
  }
  if (m.value("version", 0) != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(m.value("version", 0)) + " is not supported");
  }
  try {
    CheckpointMeta& meta = out.meta;
    meta.dims = ModelDims::from_json(m.at("dims"));
    meta.architecture = m.at("architecture");
    meta.embedder_kind = m.at("embedder").at("kind").get<std::string>();
    meta.embedder_hash = m.at("embedder").at("hash").get<std::string>();
    meta.skeleton_checksum = m.at("skeleton_checksum").get<std::string>();
    meta.normalization = NormalizationStats::from_json(m.at("normalization"));
    meta.train = TrainConfig::from_json(m.at("train"));
    meta.ablation = AblationConfig::from_json(m.at("ablation"));
    meta.epoch = m.at("epoch").get<std::size_t>();
    meta.best_val = m.at("best_val").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint metadata is incomplete: " + std::string(e.what()));
  }
  if (out.meta.skeleton_checksum != skeleton.checksum()) {
    throw CheckpointError("checkpoint was trained on a different skeleton definition");
  }
  if (out.meta.normalization.channels() != out.meta.dims.channels()) {
    throw CheckpointError("normalization statistics do not match the model channel count");
  }
  out.model = std::make_unique<MotionModel>(out.meta.dims, skeleton, 0);
  if (out.model->architecture() != out.meta.architecture) {
    throw CheckpointError("checkpoint architecture manifest does not match its dimensions");
  }
  for (auto& p : out.model->params().all()) {
    const std::string key = "param/" + p.name;
    if (!out.archive.contains(key)) throw CheckpointError("checkpoint is missing tensor " + p.name);
    const auto& shape = out.archive.shape(key);
    if (shape != std::vector<std::size_t>{p.rows, p.cols}) {
      throw CheckpointError("tensor " + p.name + " has the wrong shape");
    }
    p.value = out.archive.get_f64(key);
  }
  return out;
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch}, {"phase", to_string(phase)}, {"lr", lr},
          {"train", train.to_json()}, {"val", val.to_json()}, {"steps", steps},
          {"skipped", skipped}, {"best", best}, {"seconds", seconds}};
}

namespace {

std::vector<const TrainingExample*> pointers(const std::vector<TrainingExample>& xs) {
  std::vector<const TrainingExample*> out;
  for (const auto& x : xs) out.push_back(&x);
  return out;
}

void copy_params(const MotionModel& from, MotionModel& to) {
  for (auto& p : to.params().all()) {
    const Param& q = from.params().at(p.name);
    if (q.rows != p.rows || q.cols != p.cols) throw CheckpointError("resume: tensor " + p.name + " differs");
    p.value = q.value;
  }
}

}  // namespace

TrainSummary train(MotionModel& model, const std::vector<TrainingExample>& train_set,
                   const std::vector<TrainingExample>& val_set, CheckpointMeta meta, const RunOptions& options) {
  if (train_set.empty()) throw ConfigError("training set is empty");
  const TrainConfig& cfg = meta.train;
  Trainer trainer(model, cfg, meta.ablation);
  TrainSummary summary;
  summary.last_checkpoint = options.run_dir / "checkpoint_last.t2ma";
  summary.best_checkpoint = options.run_dir / "checkpoint_best.t2ma";
  const auto metrics_path = options.run_dir / "metrics.jsonl";
  if (options.save_checkpoints) std::filesystem::create_directories(options.run_dir);

  double best = std::numeric_limits<double>::infinity();
  std::size_t start = 0;
  if (options.resume && std::filesystem::exists(summary.last_checkpoint)) {
    auto ck = load_checkpoint(summary.last_checkpoint, Skeleton::kit21());
    if (ck.model->architecture() != model.architecture()) {
      throw CheckpointError("resume: checkpoint architecture differs from the configured model");
    }
    copy_params(*ck.model, model);
    trainer.optimizer().load(ck.archive);
    start = ck.meta.epoch;
    best = ck.meta.best_val;
    spdlog::info("resuming after epoch {}", start);
  } else if (options.save_checkpoints) {
    std::ofstream(metrics_path, std::ios::trunc);
  }
  summary.start_epoch = start;

  const auto train_ptrs = pointers(train_set);
  const auto val_ptrs = pointers(val_set);
  for (std::size_t epoch = start; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.phase = meta.ablation.phase_for(epoch, cfg.epochs);
    rec.lr = cfg.lr_at(epoch);

    std::vector<std::size_t> order(train_ptrs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * (epoch + 1)));
    std::shuffle(order.begin(), order.end(), rng);

    LossBundle sum;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
      std::vector<const TrainingExample*> batch;
      for (std::size_t k = i; k < std::min(order.size(), i + cfg.batch_size); ++k) batch.push_back(train_ptrs[order[k]]);
      const StepResult step = trainer.train_step(batch, rec.phase, rec.lr);
      ++rec.steps;
      if (step.skipped) {
        ++rec.skipped;
        continue;
      }
      sum += step.losses;
      ++counted;
    }
    if (counted > 0) rec.train = sum.scaled(1.0 / static_cast<double>(counted));
    rec.val = val_ptrs.empty() ? rec.train : trainer.evaluate_losses(val_ptrs, rec.phase);
    rec.best = rec.val.total_generator < best;
    if (rec.best) best = rec.val.total_generator;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (options.save_checkpoints) {
      meta.epoch = epoch + 1;
      meta.best_val = best;
      meta.architecture = model.architecture();
      meta.dims = model.dims();
      save_checkpoint(summary.last_checkpoint, model, meta, &trainer.optimizer());
      if (rec.best) save_checkpoint(summary.best_checkpoint, model, meta);
      std::ofstream(metrics_path, std::ios::app) << rec.to_json().dump() << '\n';
    }
    spdlog::info("epoch {}/{} [{}] lr={:.3g} train={:.5f} val={:.5f}{}", rec.epoch, cfg.epochs, to_string(rec.phase),
                 rec.lr, rec.train.total_generator, rec.val.total_generator, rec.best ? " *" : "");
    summary.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec, model);
  }
  return summary;
}

std::vector<TrainingExample> make_examples(std::span<const Sample> samples, const NormalizationStats& norm,
                                           EmbeddingCache& cache, const SentenceEmbedder& embedder) {
  if (cache.width() != embedder.width()) throw ShapeError("embedding cache width differs from the embedder");
  std::vector<TrainingExample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    TrainingExample ex;
    ex.frames = norm.apply(*s.motion);
    ex.words = cache.get_or_compute(s.sentence, embedder);
    ex.motion_id = s.motion_id;
    ex.sentence = s.sentence;
    if (ex.words.length() == 0) throw LengthError("sentence of " + s.motion_id + " has no words");
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace t2m
