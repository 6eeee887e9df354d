#pragma once

// Optimization: configs, ablation variants, Adam, the per-batch train step,
// the epoch loop and checkpoints.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "t2m/archive.hpp"
#include "t2m/kit_ingest.hpp"
#include "t2m/losses.hpp"
#include "t2m/model.hpp"

namespace t2m {

enum class Variant { full, no_joint_training, no_two_stream, no_extra_losses, no_bert };

std::string to_string(Variant v);
/// Accepts the long names and the short flags jt, 2st, lo, bert.
Variant parse_variant(const std::string& s);

struct AblationConfig {
  Variant variant = Variant::full;
  double phase_split = 0.5;  // fraction of epochs in phase 1 of the two-phase schedule
  std::size_t static_width = 300;

  void validate() const;
  /// Model dimensions for this variant.
  ModelDims apply(ModelDims dims) const;
  /// Phase used for a 0-based epoch.
  Phase phase_for(std::size_t epoch, std::size_t epochs) const;
  nlohmann::json to_json() const;
  static AblationConfig from_json(const nlohmann::json& j);
};

struct TrainConfig {
  std::size_t epochs = 350;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double lr_decay = 0.99;  // multiplied in once per epoch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;  // 0 disables clipping
  std::uint64_t seed = 0;
  LossWeights weights;
  bool mv_on_pose_branch = false;
  DiscSource disc_source = DiscSource::both;

  void validate() const;
  double lr_at(std::size_t epoch) const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

ObjectiveOptions objective_for(const TrainConfig& cfg, const AblationConfig& abl, Phase phase);

class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Updates every parameter of the given groups from its gradient.
  void step(ParamStore& params, const std::vector<std::string>& groups, double lr);

  void save(Archive& ar) const;
  void load(const Archive& ar);

 private:
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
  };
  double beta1_, beta2_, eps_;
  std::map<std::string, Slot> slots_;
};

struct StepResult {
  LossBundle losses;  // averaged over the batch
  bool skipped = false;
  std::string reason;
};

/// Owns the optimizer state of one training run over a model.
class Trainer {
 public:
  Trainer(MotionModel& model, TrainConfig config, AblationConfig ablation);

  /// One generator update followed (when enabled) by one discriminator update.
  StepResult train_step(std::span<const TrainingExample* const> batch, Phase phase, double lr);

  /// Batch-averaged losses with no update.
  LossBundle evaluate_losses(std::span<const TrainingExample* const> batch, Phase phase) const;

  /// Generator gradient of the averaged objective, left in the param grads.
  LossBundle accumulate_generator_gradients(std::span<const TrainingExample* const> batch, Phase phase);

  MotionModel& model() { return model_; }
  Adam& optimizer() { return adam_; }
  const TrainConfig& config() const { return config_; }
  const AblationConfig& ablation() const { return ablation_; }

 private:
  bool gradients_finite(const std::vector<std::string>& groups) const;
  void clip(const std::vector<std::string>& groups);

  MotionModel& model_;
  TrainConfig config_;
  AblationConfig ablation_;
  Adam adam_;
};

/// Everything a checkpoint records besides the parameters.
struct CheckpointMeta {
  ModelDims dims;
  nlohmann::json architecture;
  std::string embedder_kind;
  std::string embedder_hash;
  std::string skeleton_checksum;
  NormalizationStats normalization;
  TrainConfig train;
  AblationConfig ablation;
  std::size_t epoch = 0;  // epochs completed
  double best_val = 0.0;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const MotionModel& model, const CheckpointMeta& meta,
                     const Adam* optimizer = nullptr);

struct LoadedCheckpoint {
  std::unique_ptr<MotionModel> model;
  CheckpointMeta meta;
  Archive archive;
};

/// Rebuilds the model from the recorded dimensions and validates every tensor.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const Skeleton& skeleton);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  Phase phase = Phase::joint;
  double lr = 0.0;
  LossBundle train;
  LossBundle val;
  std::size_t steps = 0;
  std::size_t skipped = 0;
  bool best = false;
  double seconds = 0.0;
  nlohmann::json to_json() const;
};

struct RunOptions {
  std::filesystem::path run_dir;
  bool resume = false;
  bool save_checkpoints = true;
  std::function<void(const EpochRecord&, const MotionModel&)> on_epoch;
};

struct TrainSummary {
  std::vector<EpochRecord> epochs;
  std::size_t start_epoch = 0;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
};

/// Runs the epoch loop. Writes metrics.jsonl, checkpoint_last.t2ma and
/// checkpoint_best.t2ma into run_dir. With `resume`, continues from
/// checkpoint_last.t2ma when present.
TrainSummary train(MotionModel& model, const std::vector<TrainingExample>& train_set,
                   const std::vector<TrainingExample>& val_set, CheckpointMeta meta, const RunOptions& options);

/// Normalized training examples for a sample list; sentences are embedded
/// through the cache.
std::vector<TrainingExample> make_examples(std::span<const Sample> samples, const NormalizationStats& norm,
                                           EmbeddingCache& cache, const SentenceEmbedder& embedder);

}  // namespace t2m
