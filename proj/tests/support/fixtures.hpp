#pragma once

// Synthetic corpora, embedders and model inputs for the test suites.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "t2m/kit_ingest.hpp"
#include "t2m/losses.hpp"
#include "t2m/model.hpp"
#include "t2m/skeleton.hpp"
#include "t2m/text_embed.hpp"

namespace t2m::testing {

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

/// Rest pose of the bundled skeleton (mm, y up, facing +z).
std::vector<double> rest_pose();

struct SyntheticMotion {
  std::string id;
  MotionSequence global;  // traj_dims == 0, source fps
  std::vector<std::string> sentences;
};

/// Procedural walking / waving / turning motions at 100 fps with sentences
/// describing them.
SyntheticMotion synthetic_motion(std::size_t index, std::uint64_t seed, std::size_t target_frames = 24);

struct CorpusSpec {
  std::size_t motions = 10;
  std::uint64_t seed = 1;
  std::size_t target_frames = 24;
  std::size_t unannotated = 0;  // trailing motions written without sentences
  bool write_meta = true;
};

/// Writes the corpus files; returns the motions in id order.
std::vector<SyntheticMotion> write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

/// Vocabulary covering the synthetic sentences, with a few subword pieces.
std::vector<std::string> fixture_vocab();

/// Random BERT in HuggingFace layout (config.json, vocab.txt, weights.t2ma).
void write_random_bert(const std::filesystem::path& dir, const BertConfig& config, std::uint64_t seed);

/// Small BERT used by fast tests: hidden 16, 4 blocks.
BertConfig tiny_bert_config();
/// Hidden 1024 with 15 blocks, narrow FFN and vocabulary: layers 12..15
/// give the full 4096-wide word vectors.
BertConfig wide_bert_config();

/// word2vec text table over fixture_vocab() words.
void write_static_vectors(const std::filesystem::path& path, std::size_t width, std::uint64_t seed);

/// Random smooth normalized frames (T x C).
std::vector<double> random_frames(std::size_t T, std::size_t C, std::mt19937_64& rng, double scale = 1.0);
WordEmbeddingSequence random_words(std::size_t W, std::size_t width, std::mt19937_64& rng);
TrainingExample random_example(const ModelDims& dims, std::size_t T, std::size_t W, std::mt19937_64& rng);

/// Reduced model dimensions that keep gradient checks and overfit runs fast.
ModelDims small_dims(std::size_t embed_width = 8, std::size_t streams = 2);

}  // namespace t2m::testing
