#pragma once

// Sentence -> per-word feature vectors.
//
// BertEmbedder runs a BERT encoder (weights exported to a t2m archive, see
// tools/export_bert.py) and concatenates the hidden states of selected
// transformer blocks. Blocks are numbered 1..N; the embedding layer is not a
// block, so layer 12 is the output of the twelfth transformer block
// (hidden_states[12] in the usual HuggingFace convention).
//
// StaticEmbedder looks words up in a word2vec text table.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace t2m {

enum class SubwordPooling {
  mean,       // average of a word's pieces, per layer
  first,      // first piece only
  wordpiece,  // no pooling: one vector per piece (sequence-level variant)
};

std::string_view to_string(SubwordPooling p);
SubwordPooling parse_pooling(std::string_view s);

struct EmbedderConfig {
  std::filesystem::path model_dir;
  std::vector<int> selected_layers{12, 13, 14, 15};
  std::size_t per_layer_width = 1024;
  SubwordPooling pooling = SubwordPooling::mean;
  std::size_t max_words = 64;

  std::size_t output_width() const { return per_layer_width * selected_layers.size(); }
  void validate() const;
};

struct WordEmbeddingSequence {
  std::vector<std::string> words;
  std::size_t width = 0;
  std::vector<double> vectors;  // words.size() x width

  std::size_t length() const { return words.size(); }
  std::span<const double> row(std::size_t w) const {
    return std::span<const double>(vectors).subspan(w * width, width);
  }
};

/// BERT basic + WordPiece tokenization for cased vocabularies.
class WordPieceTokenizer {
 public:
  explicit WordPieceTokenizer(std::vector<std::string> vocab);
  static WordPieceTokenizer load(const std::filesystem::path& vocab_file);

  /// Whitespace cleanup and punctuation splitting; case is preserved.
  std::vector<std::string> basic_tokenize(std::string_view text) const;
  /// Greedy longest-match-first pieces of one basic token ("##" continuation).
  std::vector<int> wordpiece(std::string_view token) const;
  /// Pieces of one whitespace-delimited word.
  std::vector<int> word_pieces(std::string_view word) const;

  int id(std::string_view piece) const;
  const std::string& piece(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return vocab_.size(); }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }
  int unk_id() const { return unk_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  int cls_ = 0;
  int sep_ = 0;
  int unk_ = 0;
};

struct BertConfig {
  std::size_t hidden = 1024;
  std::size_t layers = 24;
  std::size_t heads = 16;
  std::size_t intermediate = 4096;
  std::size_t vocab_size = 28996;
  std::size_t max_positions = 512;
  std::size_t type_vocab = 2;
  double layer_norm_eps = 1e-12;

  static BertConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class Archive;

/// Forward-only BERT encoder with float32 weights and double activations.
class BertModel {
 public:
  /// Reads config.json, vocab.txt and weights.t2ma from `dir`.
  static BertModel load(const std::filesystem::path& dir);
  BertModel(BertConfig config, const Archive& weights);

  const BertConfig& config() const { return config_; }

  /// Hidden states of blocks 1..up_to for a token-id sequence; result[l-1]
  /// is n x hidden, row-major.
  std::vector<std::vector<double>> hidden_states(const std::vector<int>& ids, std::size_t up_to) const;

 private:
  struct Dense {
    std::vector<float> w;  // out x in
    std::vector<float> b;
    std::size_t in = 0;
    std::size_t out = 0;
  };
  struct Norm {
    std::vector<float> gamma;
    std::vector<float> beta;
  };
  struct Block {
    Dense query, key, value, attn_out, inter, out;
    Norm attn_norm, out_norm;
  };

  static Dense dense(const Archive& ar, const std::string& prefix, std::size_t in, std::size_t out);
  static Norm norm(const Archive& ar, const std::string& prefix, std::size_t width);
  std::vector<double> apply(const Dense& d, std::span<const double> x, std::size_t n) const;
  void layer_norm(const Norm& n, std::vector<double>& x, std::size_t rows) const;

  BertConfig config_;
  std::vector<float> word_emb_, pos_emb_, type_emb_;
  Norm emb_norm_;
  std::vector<Block> blocks_;
};

/// Common interface of the contextual and static embedders.
class SentenceEmbedder {
 public:
  virtual ~SentenceEmbedder() = default;
  virtual WordEmbeddingSequence embed(std::string_view sentence) const = 0;
  virtual std::size_t width() const = 0;
  virtual std::string kind() const = 0;
  /// Identifies the configuration and weights; keys the embedding cache.
  virtual std::string config_hash() const = 0;
  virtual nlohmann::json describe() const = 0;
};

class BertEmbedder : public SentenceEmbedder {
 public:
  /// Loads weights from config.model_dir; throws ResourceError when absent.
  explicit BertEmbedder(EmbedderConfig config);
  BertEmbedder(EmbedderConfig config, std::shared_ptr<const BertModel> model,
               std::shared_ptr<const WordPieceTokenizer> tokenizer, std::string model_fingerprint);

  WordEmbeddingSequence embed(std::string_view sentence) const override;
  std::size_t width() const override { return config_.output_width(); }
  std::string kind() const override { return "bert"; }
  std::string config_hash() const override;
  nlohmann::json describe() const override;

  /// Raw per-piece hidden states of the selected layers for one sentence,
  /// before pooling: pieces[k] is the concatenation for piece k, and
  /// word_of[k] names its word. Exposed for verification.
  struct PieceStates {
    std::vector<std::vector<double>> pieces;
    std::vector<std::size_t> word_of;
    std::vector<std::string> words;
  };
  PieceStates piece_states(std::string_view sentence) const;

  const EmbedderConfig& config() const { return config_; }

 private:
  EmbedderConfig config_;
  std::shared_ptr<const BertModel> model_;
  std::shared_ptr<const WordPieceTokenizer> tokenizer_;
  std::string fingerprint_;
};

/// Word2vec text-format table (first line "<count> <dim>" optional).
class StaticEmbedder : public SentenceEmbedder {
 public:
  static StaticEmbedder load(const std::filesystem::path& table, std::size_t max_words = 64);
  StaticEmbedder(std::unordered_map<std::string, std::vector<double>> table, std::size_t width,
                 std::string fingerprint, std::size_t max_words = 64);

  WordEmbeddingSequence embed(std::string_view sentence) const override;
  std::size_t width() const override { return width_; }
  std::string kind() const override { return "static"; }
  std::string config_hash() const override;
  nlohmann::json describe() const override;

  /// Vector used for out-of-vocabulary words (all zeros).
  const std::vector<double>& oov_vector() const { return oov_; }

 private:
  std::unordered_map<std::string, std::vector<double>> table_;
  std::size_t width_;
  std::string fingerprint_;
  std::size_t max_words_;
  std::vector<double> oov_;
};

/// Whitespace-delimited words of a sentence.
std::vector<std::string> split_words(std::string_view sentence);

/// Precomputed embeddings keyed by SHA-256 of the sentence; one file per
/// embedder configuration. Single writer.
class EmbeddingCache {
 public:
  EmbeddingCache(std::string kind, std::string config_hash, std::size_t width);
  static EmbeddingCache load(const std::filesystem::path& path);
  static std::string file_name(const SentenceEmbedder& embedder);

  bool contains(std::string_view sentence) const;
  const WordEmbeddingSequence& get(std::string_view sentence) const;
  const WordEmbeddingSequence& get_or_compute(std::string_view sentence, const SentenceEmbedder& embedder);
  void put(std::string_view sentence, WordEmbeddingSequence emb);
  void save(const std::filesystem::path& path) const;

  const std::string& kind() const { return kind_; }
  const std::string& config_hash() const { return config_hash_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::string kind_;
  std::string config_hash_;
  std::size_t width_;
  std::map<std::string, WordEmbeddingSequence> entries_;
};

}  // namespace t2m
