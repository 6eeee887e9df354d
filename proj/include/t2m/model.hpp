#pragma once

// Two-stream hierarchical pose encoder, recurrent sentence encoder,
// residual hierarchical pose decoder and the pose discriminator.
//
// Frames are model channels [J*3 joint coordinates | trajectory], normalized.
// Stream 0 is the upper body (arm pairs), stream 1 the lower body (leg pairs).
// With a single stream the whole body shares one latent of width 2h.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "t2m/autodiff.hpp"
#include "t2m/skeleton.hpp"
#include "t2m/text_embed.hpp"

namespace t2m {

struct ModelDims {
  std::size_t joints = Skeleton::kJointCount;
  std::size_t traj_dims = MotionSequence::kTrajectoryDims;
  std::size_t part_width = 32;    // h1
  std::size_t pair_width = 128;   // h2
  std::size_t latent_width = 512; // h, per stream
  std::size_t embed_width = 4096; // K
  std::size_t streams = 2;
  std::size_t disc_channels = 64;

  std::size_t channels() const { return joints * 3 + traj_dims; }
  /// Width of each stream's latent: h with two streams, 2h with one.
  std::size_t stream_width() const { return streams == 2 ? latent_width : 2 * latent_width; }
  /// Sentence encoder output width (always 2h).
  std::size_t sentence_width() const { return 2 * latent_width; }

  void validate() const;
  nlohmann::json to_json() const;
  static ModelDims from_json(const nlohmann::json& j);
};

/// Value-level latent code. streams[0] = z_ub, streams[1] = z_lb; a single
/// stream holds the whole-body latent.
struct LatentPair {
  std::vector<std::vector<double>> streams;

  const std::vector<double>& z_ub() const { return streams.at(0); }
  const std::vector<double>& z_lb() const { return streams.at(1); }
  /// [z_ub | z_lb] (or the single latent), width 2h.
  std::vector<double> concatenated() const;
};

struct LatentVars {
  std::vector<Var> streams;
};

struct GruCell {
  Linear input;   // 3H x in, bias b_x
  Linear hidden;  // 3H x H, bias b_h
  std::size_t width = 0;
  Var step(Tape& t, Var x, Var h) const;
};

struct LstmCell {
  Linear input;   // 4H x in, bias
  Linear hidden;  // 4H x H, no bias
  std::size_t width = 0;
  /// Returns {h, c}.
  std::pair<Var, Var> step(Tape& t, Var x, Var h, Var c) const;
};

/// Output of one joint forward pass over a sample.
struct ForwardVars {
  std::vector<Var> target;         // P
  LatentVars pose_latent;          // Z^p
  LatentVars sentence_latent;      // Z^s
  std::vector<Var> from_pose;      // P^p
  std::vector<Var> from_sentence;  // P^s
};

struct ForwardResult {
  std::vector<double> from_pose;      // T x C
  std::vector<double> from_sentence;  // T x C
  LatentPair pose_latent;
  LatentPair sentence_latent;
};

class MotionModel {
 public:
  MotionModel(const ModelDims& dims, const Skeleton& skeleton, std::uint64_t seed);
  MotionModel(const MotionModel&) = delete;
  MotionModel& operator=(const MotionModel&) = delete;

  const ModelDims& dims() const { return dims_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Tape-level passes used by training.
  LatentVars encode_pose(Tape& t, std::span<const Var> frames) const;
  LatentVars encode_sentence(Tape& t, std::span<const Var> words) const;
  std::vector<Var> decode(Tape& t, const LatentVars& latent, Var initial, std::size_t frames) const;
  Var discriminate_logit(Tape& t, std::span<const Var> frames) const;
  /// Decodes from both latent sources with shared decoder weights.
  ForwardVars forward(Tape& t, std::span<const double> frames, const WordEmbeddingSequence& sentence) const;

  // Value-level passes (no gradient recording). `frames` is T x C.
  LatentPair encode_pose(std::span<const double> frames) const;
  LatentPair encode_sentence(const WordEmbeddingSequence& sentence) const;
  /// Generates T frames; frame t = frame t-1 + delta, frame -1 = `initial`.
  std::vector<double> decode(const LatentPair& latent, std::span<const double> initial, std::size_t frames) const;
  /// Probability in (0, 1) that a sequence is real.
  double discriminate(std::span<const double> frames) const;
  ForwardResult forward(std::span<const double> frames, const WordEmbeddingSequence& sentence) const;

  /// Zeroes the layers producing per-part pose deltas.
  void zero_delta_layers();
  std::vector<std::string> delta_layer_params() const;

  /// Architecture manifest stored in checkpoints.
  nlohmann::json architecture() const;

  static constexpr const char* kPoseEncoder = "pose_encoder";
  static constexpr const char* kSentenceEncoder = "sentence_encoder";
  static constexpr const char* kDecoder = "decoder";
  static constexpr const char* kDiscriminator = "discriminator";

 private:
  struct Hierarchy {
    std::array<Linear, 5> parts;  // indexed by BodyPart
    std::array<Linear, 4> pairs;  // left_arm, right_arm, left_leg, right_leg (each + trunk)
  };

  Linear make_linear(const std::string& name, const std::string& group, std::size_t in, std::size_t out,
                     bool bias = true);
  GruCell make_gru(const std::string& name, const std::string& group, std::size_t in, std::size_t width);
  LstmCell make_lstm(const std::string& name, std::size_t in, std::size_t width);
  Hierarchy make_hierarchy(const std::string& prefix, const std::string& group);

  /// Part and pair features of one frame; returns the per-stream GRU inputs.
  std::vector<Var> stream_inputs(Tape& t, const Hierarchy& h, Var frame) const;
  std::vector<Var> frames_as_vars(Tape& t, std::span<const double> frames) const;

  ModelDims dims_;
  std::array<std::vector<std::size_t>, 5> part_channels_;
  ParamStore params_;
  std::mt19937_64 rng_;

  Hierarchy enc_;
  std::vector<GruCell> enc_gru_;
  std::vector<LstmCell> lstm_;
  std::vector<Linear> dec_init_;
  Hierarchy dec_in_;
  std::vector<GruCell> dec_gru_;
  std::vector<Linear> dec_stream_out_;
  std::array<Linear, 4> dec_pair_out_;
  std::array<Linear, 5> dec_part_out_;
  Linear disc_conv1_, disc_conv2_, disc_head_;
};

}  // namespace t2m
