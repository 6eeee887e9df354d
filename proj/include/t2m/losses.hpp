#pragma once

// Loss terms and the weighted generator / discriminator objectives.
//
//   L_R  smooth-L1 between each reconstruction and the target
//   L_M  re-encoded generated motion vs the pose latent, per stream
//   L_V  frame-difference velocities of the generated motion vs the target
//   L_E  pose latent vs sentence latent, per stream
//   L_G  BCE(D(fake), 1), averaged over the fake sources
//   L_D  (BCE(D(real), 1) + mean_fake BCE(D(fake), 0)) / 2

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "t2m/autodiff.hpp"
#include "t2m/model.hpp"

namespace t2m {

/// Elementwise smooth-L1 (transition at 1) averaged over all elements.
double smooth_l1(std::span<const double> a, std::span<const double> b);

struct LossWeights {
  double m = 0.001;
  double v = 0.1;
  double e = 0.1;
  double g = 0.001;

  void validate() const;
  nlohmann::json to_json() const;
  static LossWeights from_json(const nlohmann::json& j);
};

struct LossBundle {
  double r = 0.0;
  double m = 0.0;
  double v = 0.0;
  double e = 0.0;
  double g = 0.0;
  double d = 0.0;
  double total_generator = 0.0;
  double total_discriminator = 0.0;

  bool finite() const;
  LossBundle& operator+=(const LossBundle& o);
  LossBundle scaled(double c) const;
  nlohmann::json to_json() const;
};

/// Which generated motions the discriminator judges.
enum class DiscSource { both, sentence, pose };
std::string to_string(DiscSource s);
DiscSource parse_disc_source(const std::string& s);

/// Training phase. `joint` is the normal schedule; the other two are the
/// halves of the two-phase (no joint training) schedule.
enum class Phase { joint, pose_autoencoder, sentence_alignment };
std::string to_string(Phase p);

struct ObjectiveOptions {
  LossWeights weights;
  bool extra_losses = true;        // false: generator objective is L_R only
  bool mv_on_pose_branch = false;  // also apply L_M and L_V to the pose reconstruction
  DiscSource disc_source = DiscSource::both;
  Phase phase = Phase::joint;

  /// Sub-networks updated by the generator step.
  std::vector<std::string> generator_groups() const;
  bool trains_discriminator() const;
};

/// Normalized frames (T x C) and the word embeddings of one sample.
struct TrainingExample {
  std::vector<double> frames;
  WordEmbeddingSequence words;
  std::string motion_id;
  std::string sentence;
};

struct GeneratorPass {
  ForwardVars forward;
  LossBundle losses;                // every term except d
  Var total;
  std::vector<std::vector<double>> fakes;  // generated motions for the D step
};

/// Records the generator objective of one sample on `t`.
GeneratorPass generator_objective(Tape& t, const MotionModel& model, const TrainingExample& ex,
                                  const ObjectiveOptions& opt);

/// Records lambda_G * L_D for one real motion and its generated counterparts.
/// Returns the weighted total; `l_d` receives the unweighted term.
Var discriminator_objective(Tape& t, const MotionModel& model, std::span<const double> real,
                            const std::vector<std::vector<double>>& fakes, const LossWeights& w,
                            double& l_d);

/// Value-level evaluation of every term from precomputed tensors.
struct LossInputs {
  std::size_t channels = 0;
  std::vector<double> target;          // P, T x C
  std::vector<double> from_pose;       // P^p
  std::vector<double> from_sentence;   // P^s
  LatentPair pose_latent;              // Z^p
  LatentPair sentence_latent;          // Z^s
  LatentPair reencoded;                // pe(P^s)
  double d_real = 0.5;                 // D(P)
  std::vector<double> d_fake;          // D of each fake source
};

LossBundle compute_losses(const LossInputs& in, const LossWeights& w);

}  // namespace t2m
