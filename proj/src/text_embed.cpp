#include "t2m/text_embed.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "t2m/archive.hpp"
#include "t2m/error.hpp"
#include "t2m/hashing.hpp"
#include "t2m/kernels.hpp"

namespace fs = std::filesystem;

namespace t2m {

namespace {

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

bool is_ascii_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string_view to_string(SubwordPooling p) {
  switch (p) {
    case SubwordPooling::mean: return "mean";
    case SubwordPooling::first: return "first";
    case SubwordPooling::wordpiece: return "wordpiece";
  }
  return "?";
}

SubwordPooling parse_pooling(std::string_view s) {
  if (s == "mean") return SubwordPooling::mean;
  if (s == "first") return SubwordPooling::first;
  if (s == "wordpiece") return SubwordPooling::wordpiece;
  throw ConfigError("unknown subword pooling '" + std::string(s) + "'");
}

void EmbedderConfig::validate() const {
  if (selected_layers.empty()) throw ConfigError("embedder: no layers selected");
  for (int l : selected_layers) {
    if (l < 1) throw ConfigError("embedder: layers are numbered from 1");
  }
  if (max_words == 0) throw ConfigError("embedder: max_words must be positive");
}

std::vector<std::string> split_words(std::string_view sentence) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : sentence) {
    if (is_ascii_space(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// ---------------------------------------------------------------- tokenizer

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], static_cast<int>(i));
  auto need = [&](const char* tok) {
    auto it = index_.find(tok);
    if (it == index_.end()) throw FormatError(std::string("vocab is missing ") + tok);
    return it->second;
  };
  cls_ = need("[CLS]");
  sep_ = need("[SEP]");
  unk_ = need("[UNK]");
}

WordPieceTokenizer WordPieceTokenizer::load(const fs::path& vocab_file) {
  std::ifstream in(vocab_file);
  if (!in) throw ResourceError("cannot open vocabulary '" + vocab_file.string() + "'");
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return WordPieceTokenizer(std::move(vocab));
}

int WordPieceTokenizer::id(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? unk_ : it->second;
}

std::vector<std::string> WordPieceTokenizer::basic_tokenize(std::string_view text) const {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == 0 || (c < 32 && !is_ascii_space(c)) || c == 127) continue;  // control characters
    if (is_ascii_space(c)) {
      flush();
    } else if (is_ascii_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

std::vector<int> WordPieceTokenizer::wordpiece(std::string_view token) const {
  constexpr std::size_t kMaxChars = 100;
  if (token.size() > kMaxChars) return {unk_};
  std::vector<int> pieces;
  std::size_t start = 0;
  while (start < token.size()) {
    std::size_t end = token.size();
    int found = -1;
    while (start < end) {
      std::string sub(token.substr(start, end - start));
      if (start > 0) sub = "##" + sub;
      auto it = index_.find(sub);
      if (it != index_.end()) {
        found = it->second;
        break;
      }
      --end;
    }
    if (found < 0) return {unk_};
    pieces.push_back(found);
    start = end;
  }
  return pieces;
}

std::vector<int> WordPieceTokenizer::word_pieces(std::string_view word) const {
  std::vector<int> ids;
  for (const auto& tok : basic_tokenize(word)) {
    const auto p = wordpiece(tok);
    ids.insert(ids.end(), p.begin(), p.end());
  }
  return ids;
}

// ---------------------------------------------------------------- BERT

BertConfig BertConfig::from_json(const nlohmann::json& j) {
  BertConfig c;
  c.hidden = j.at("hidden_size").get<std::size_t>();
  c.layers = j.at("num_hidden_layers").get<std::size_t>();
  c.heads = j.at("num_attention_heads").get<std::size_t>();
  c.intermediate = j.at("intermediate_size").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_positions = j.value("max_position_embeddings", std::size_t{512});
  c.type_vocab = j.value("type_vocab_size", std::size_t{2});
  c.layer_norm_eps = j.value("layer_norm_eps", 1e-12);
  if (c.hidden % c.heads != 0) throw FormatError("bert: hidden size not divisible by head count");
  if (j.contains("hidden_act") && j.at("hidden_act") != "gelu") {
    throw FormatError("bert: only exact gelu activation is supported");
  }
  return c;
}

nlohmann::json BertConfig::to_json() const {
  return {{"hidden_size", hidden},
          {"num_hidden_layers", layers},
          {"num_attention_heads", heads},
          {"intermediate_size", intermediate},
          {"vocab_size", vocab_size},
          {"max_position_embeddings", max_positions},
          {"type_vocab_size", type_vocab},
          {"layer_norm_eps", layer_norm_eps},
          {"hidden_act", "gelu"}};
}

BertModel::Dense BertModel::dense(const Archive& ar, const std::string& prefix, std::size_t in,
                                  std::size_t out) {
  Dense d;
  d.in = in;
  d.out = out;
  d.w = ar.get_f32(prefix + ".weight");
  d.b = ar.get_f32(prefix + ".bias");
  if (d.w.size() != in * out || d.b.size() != out) throw FormatError("bert: bad shape for " + prefix);
  return d;
}

BertModel::Norm BertModel::norm(const Archive& ar, const std::string& prefix, std::size_t width) {
  Norm n;
  n.gamma = ar.get_f32(prefix + ".weight");
  n.beta = ar.get_f32(prefix + ".bias");
  if (n.gamma.size() != width || n.beta.size() != width) throw FormatError("bert: bad shape for " + prefix);
  return n;
}

BertModel::BertModel(BertConfig config, const Archive& ar) : config_(config) {
  const std::size_t H = config_.hidden;
  word_emb_ = ar.get_f32("embeddings.word_embeddings.weight");
  pos_emb_ = ar.get_f32("embeddings.position_embeddings.weight");
  type_emb_ = ar.get_f32("embeddings.token_type_embeddings.weight");
  if (word_emb_.size() != config_.vocab_size * H || pos_emb_.size() != config_.max_positions * H ||
      type_emb_.size() < H) {
    throw FormatError("bert: embedding table shape mismatch");
  }
  emb_norm_ = norm(ar, "embeddings.LayerNorm", H);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "encoder.layer." + std::to_string(l) + ".";
    Block b;
    b.query = dense(ar, p + "attention.self.query", H, H);
    b.key = dense(ar, p + "attention.self.key", H, H);
    b.value = dense(ar, p + "attention.self.value", H, H);
    b.attn_out = dense(ar, p + "attention.output.dense", H, H);
    b.attn_norm = norm(ar, p + "attention.output.LayerNorm", H);
    b.inter = dense(ar, p + "intermediate.dense", H, config_.intermediate);
    b.out = dense(ar, p + "output.dense", config_.intermediate, H);
    b.out_norm = norm(ar, p + "output.LayerNorm", H);
    blocks_.push_back(std::move(b));
  }
}

BertModel BertModel::load(const fs::path& dir) {
  const auto cfg = dir / "config.json";
  const auto weights = dir / "weights.t2ma";
  if (dir.empty() || !fs::exists(cfg) || !fs::exists(weights)) {
    throw ResourceError("BERT weights not found in '" + dir.string() +
                        "' (expected config.json, vocab.txt, weights.t2ma; see tools/export_bert.py)");
  }
  return BertModel(BertConfig::from_json(nlohmann::json::parse(read_text(cfg))), Archive::load(weights));
}

std::vector<double> BertModel::apply(const Dense& d, std::span<const double> x, std::size_t n) const {
  std::vector<double> y(n * d.out);
  for (std::size_t r = 0; r < n; ++r) {
    kernels::matvec<float, double>(d.w, d.out, d.in, x.subspan(r * d.in, d.in), d.b,
                                   std::span<double>(y).subspan(r * d.out, d.out));
  }
  return y;
}

void BertModel::layer_norm(const Norm& nrm, std::vector<double>& x, std::size_t rows) const {
  const std::size_t H = config_.hidden;
  for (std::size_t r = 0; r < rows; ++r) {
    double* v = x.data() + r * H;
    double mu = 0.0;
    for (std::size_t i = 0; i < H; ++i) mu += v[i];
    mu /= static_cast<double>(H);
    double var = 0.0;
    for (std::size_t i = 0; i < H; ++i) var += (v[i] - mu) * (v[i] - mu);
    var /= static_cast<double>(H);
    const double inv = 1.0 / std::sqrt(var + config_.layer_norm_eps);
    for (std::size_t i = 0; i < H; ++i) v[i] = (v[i] - mu) * inv * nrm.gamma[i] + nrm.beta[i];
  }
}

std::vector<std::vector<double>> BertModel::hidden_states(const std::vector<int>& ids, std::size_t up_to) const {
  if (up_to > config_.layers) {
    throw ConfigError("bert: layer " + std::to_string(up_to) + " requested but model has " +
                      std::to_string(config_.layers));
  }
  const std::size_t n = ids.size();
  const std::size_t H = config_.hidden;
  if (n > config_.max_positions) throw ShapeError("bert: sequence longer than max positions");
  std::vector<double> x(n * H);
  for (std::size_t t = 0; t < n; ++t) {
    const auto id = static_cast<std::size_t>(ids[t]);
    if (id >= config_.vocab_size) throw ShapeError("bert: token id out of range");
    for (std::size_t i = 0; i < H; ++i) {
      x[t * H + i] = static_cast<double>(word_emb_[id * H + i]) + static_cast<double>(pos_emb_[t * H + i]) +
                     static_cast<double>(type_emb_[i]);
    }
  }
  layer_norm(emb_norm_, x, n);

  const std::size_t heads = config_.heads;
  const std::size_t dh = H / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<std::vector<double>> states;
  for (std::size_t l = 0; l < up_to; ++l) {
    const Block& b = blocks_[l];
    const auto q = apply(b.query, x, n);
    const auto k = apply(b.key, x, n);
    const auto v = apply(b.value, x, n);
    std::vector<double> ctx(n * H, 0.0);
    std::vector<double> scores(n);
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (std::size_t d = 0; d < dh; ++d) s += q[i * H + h * dh + d] * k[j * H + h * dh + d];
          scores[j] = s * inv_sqrt;
          mx = std::max(mx, scores[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          z += scores[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double a = scores[j] / z;
          for (std::size_t d = 0; d < dh; ++d) ctx[i * H + h * dh + d] += a * v[j * H + h * dh + d];
        }
      }
    }
    auto attn = apply(b.attn_out, ctx, n);
    for (std::size_t i = 0; i < attn.size(); ++i) attn[i] += x[i];
    layer_norm(b.attn_norm, attn, n);
    auto inter = apply(b.inter, attn, n);
    for (auto& u : inter) u = 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0)));
    auto out = apply(b.out, inter, n);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += attn[i];
    layer_norm(b.out_norm, out, n);
    x = std::move(out);
    states.push_back(x);
  }
  return states;
}

// ---------------------------------------------------------------- embedders

BertEmbedder::BertEmbedder(EmbedderConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& dir = config_.model_dir;
  model_ = std::make_shared<const BertModel>(BertModel::load(dir));
  tokenizer_ = std::make_shared<const WordPieceTokenizer>(WordPieceTokenizer::load(dir / "vocab.txt"));
  fingerprint_ = sha256_hex(read_text(dir / "config.json") + read_text(dir / "vocab.txt") +
                            std::to_string(fs::file_size(dir / "weights.t2ma")));
  if (model_->config().hidden != config_.per_layer_width) {
    spdlog::info("embedder: per-layer width set to model hidden size {}", model_->config().hidden);
    config_.per_layer_width = model_->config().hidden;
  }
}

BertEmbedder::BertEmbedder(EmbedderConfig config, std::shared_ptr<const BertModel> model,
                           std::shared_ptr<const WordPieceTokenizer> tokenizer, std::string model_fingerprint)
    : config_(std::move(config)),
      model_(std::move(model)),
      tokenizer_(std::move(tokenizer)),
      fingerprint_(std::move(model_fingerprint)) {
  config_.validate();
  if (model_->config().hidden != config_.per_layer_width) {
    throw ConfigError("embedder: per-layer width " + std::to_string(config_.per_layer_width) +
                      " does not match model hidden size " + std::to_string(model_->config().hidden));
  }
}

std::string BertEmbedder::config_hash() const { return sha256_hex(describe().dump()); }

nlohmann::json BertEmbedder::describe() const {
  return {{"kind", "bert"},
          {"layers", config_.selected_layers},
          {"per_layer_width", config_.per_layer_width},
          {"width", width()},
          {"pooling", to_string(config_.pooling)},
          {"max_words", config_.max_words},
          {"model", fingerprint_}};
}

BertEmbedder::PieceStates BertEmbedder::piece_states(std::string_view sentence) const {
  PieceStates ps;
  ps.words = split_words(sentence);
  if (ps.words.empty()) throw ConfigError("embed_sentence: empty sentence");
  if (ps.words.size() > config_.max_words) {
    spdlog::warn("sentence has {} words; truncating to {}", ps.words.size(), config_.max_words);
    ps.words.resize(config_.max_words);
  }
  std::vector<int> ids{tokenizer_->cls_id()};
  for (std::size_t w = 0; w < ps.words.size(); ++w) {
    for (int id : tokenizer_->word_pieces(ps.words[w])) {
      ids.push_back(id);
      ps.word_of.push_back(w);
    }
  }
  const std::size_t max_pieces = model_->config().max_positions - 2;
  if (ps.word_of.size() > max_pieces) {
    spdlog::warn("sentence has {} word pieces; truncating to {}", ps.word_of.size(), max_pieces);
    ids.resize(max_pieces + 1);
    ps.word_of.resize(max_pieces);
    ps.words.resize(ps.word_of.back() + 1);
  }
  ids.push_back(tokenizer_->sep_id());

  std::size_t deepest = 0;
  for (int l : config_.selected_layers) deepest = std::max(deepest, static_cast<std::size_t>(l));
  const auto states = model_->hidden_states(ids, deepest);
  const std::size_t H = model_->config().hidden;
  for (std::size_t k = 0; k < ps.word_of.size(); ++k) {
    std::vector<double> v;
    v.reserve(width());
    for (int l : config_.selected_layers) {
      const auto& layer = states[static_cast<std::size_t>(l) - 1];
      // piece k sits at position k + 1, after [CLS]
      v.insert(v.end(), layer.begin() + static_cast<std::ptrdiff_t>((k + 1) * H),
               layer.begin() + static_cast<std::ptrdiff_t>((k + 2) * H));
    }
    ps.pieces.push_back(std::move(v));
  }
  return ps;
}

WordEmbeddingSequence BertEmbedder::embed(std::string_view sentence) const {
  const auto ps = piece_states(sentence);
  WordEmbeddingSequence out;
  out.width = width();
  if (config_.pooling == SubwordPooling::wordpiece) {
    for (std::size_t k = 0; k < ps.pieces.size(); ++k) {
      out.words.push_back(ps.words[ps.word_of[k]]);
      out.vectors.insert(out.vectors.end(), ps.pieces[k].begin(), ps.pieces[k].end());
    }
    return out;
  }
  for (std::size_t w = 0; w < ps.words.size(); ++w) {
    std::vector<double> acc(out.width, 0.0);
    std::size_t count = 0;
    for (std::size_t k = 0; k < ps.pieces.size(); ++k) {
      if (ps.word_of[k] != w) continue;
      if (config_.pooling == SubwordPooling::first && count > 0) break;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += ps.pieces[k][i];
      ++count;
    }
    if (count == 0) continue;  // word produced no pieces (control characters only)
    for (auto& a : acc) a /= static_cast<double>(count);
    out.words.push_back(ps.words[w]);
    out.vectors.insert(out.vectors.end(), acc.begin(), acc.end());
  }
  return out;
}

StaticEmbedder::StaticEmbedder(std::unordered_map<std::string, std::vector<double>> table, std::size_t width,
                               std::string fingerprint, std::size_t max_words)
    : table_(std::move(table)),
      width_(width),
      fingerprint_(std::move(fingerprint)),
      max_words_(max_words),
      oov_(width, 0.0) {
  for (const auto& [word, vec] : table_) {
    if (vec.size() != width_) throw FormatError("static embeddings: row '" + word + "' has wrong width");
  }
}

StaticEmbedder StaticEmbedder::load(const fs::path& table, std::size_t max_words) {
  if (!fs::exists(table)) throw ResourceError("static embedding table '" + table.string() + "' not found");
  std::ifstream in(table);
  if (!in) throw ResourceError("cannot open static embedding table '" + table.string() + "'");
  std::unordered_map<std::string, std::vector<double>> rows;
  std::size_t width = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> vec;
    double v;
    while (ls >> v) vec.push_back(v);
    if (first && vec.size() == 1) {  // "<count> <dim>" header
      first = false;
      continue;
    }
    first = false;
    if (width == 0) width = vec.size();
    if (vec.size() != width) throw FormatError("static embeddings: inconsistent row width for '" + word + "'");
    rows.emplace(std::move(word), std::move(vec));
  }
  if (width == 0) throw FormatError("static embeddings: empty table '" + table.string() + "'");
  return StaticEmbedder(std::move(rows), width, sha256_file(table), max_words);
}

std::string StaticEmbedder::config_hash() const { return sha256_hex(describe().dump()); }

nlohmann::json StaticEmbedder::describe() const {
  return {{"kind", "static"}, {"width", width_}, {"max_words", max_words_}, {"oov", "zero"}, {"table", fingerprint_}};
}

WordEmbeddingSequence StaticEmbedder::embed(std::string_view sentence) const {
  auto words = split_words(sentence);
  if (words.empty()) throw ConfigError("embed_sentence_static: empty sentence");
  if (words.size() > max_words_) {
    spdlog::warn("sentence has {} words; truncating to {}", words.size(), max_words_);
    words.resize(max_words_);
  }
  WordEmbeddingSequence out;
  out.width = width_;
  for (const auto& w : words) {
    std::size_t b = 0;
    std::size_t e = w.size();
    while (b < e && is_ascii_punct(static_cast<unsigned char>(w[b]))) ++b;
    while (e > b && is_ascii_punct(static_cast<unsigned char>(w[e - 1]))) --e;
    const std::string key = b < e ? w.substr(b, e - b) : w;
    auto it = table_.find(key);
    const auto& vec = it == table_.end() ? oov_ : it->second;
    out.words.push_back(w);
    out.vectors.insert(out.vectors.end(), vec.begin(), vec.end());
  }
  return out;
}

// ---------------------------------------------------------------- cache

namespace {

// Entries are stored as float32 on disk; rounding on insert keeps in-memory
// and reloaded caches identical.
WordEmbeddingSequence rounded(WordEmbeddingSequence emb) {
  for (auto& v : emb.vectors) v = static_cast<double>(static_cast<float>(v));
  return emb;
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::string kind, std::string config_hash, std::size_t width)
    : kind_(std::move(kind)), config_hash_(std::move(config_hash)), width_(width) {}

std::string EmbeddingCache::file_name(const SentenceEmbedder& embedder) {
  return "embeddings-" + embedder.kind() + "-" + embedder.config_hash().substr(0, 16) + ".t2ma";
}

bool EmbeddingCache::contains(std::string_view sentence) const {
  return entries_.contains(sha256_hex(sentence));
}

const WordEmbeddingSequence& EmbeddingCache::get(std::string_view sentence) const {
  auto it = entries_.find(sha256_hex(sentence));
  if (it == entries_.end()) {
    throw ResourceError("embedding cache has no entry for sentence '" + std::string(sentence) + "'");
  }
  return it->second;
}

const WordEmbeddingSequence& EmbeddingCache::get_or_compute(std::string_view sentence,
                                                            const SentenceEmbedder& embedder) {
  const auto key = sha256_hex(sentence);
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  return entries_.emplace(key, rounded(embedder.embed(sentence))).first->second;
}

void EmbeddingCache::put(std::string_view sentence, WordEmbeddingSequence emb) {
  if (emb.width != width_) throw ShapeError("embedding cache: width mismatch");
  entries_[sha256_hex(sentence)] = rounded(std::move(emb));
}

void EmbeddingCache::save(const fs::path& path) const {
  Archive ar;
  nlohmann::json keys = nlohmann::json::array();
  std::vector<float> data;
  std::size_t offset = 0;
  for (const auto& [key, emb] : entries_) {
    keys.push_back({{"key", key}, {"words", emb.words}, {"offset", offset}});
    for (double v : emb.vectors) data.push_back(static_cast<float>(v));
    offset += emb.length();
  }
  ar.meta = {{"format", "t2m-embeddings"},
             {"kind", kind_},
             {"config_hash", config_hash_},
             {"width", width_},
             {"entries", keys}};
  ar.put("vectors", std::span<const float>(data), {offset, width_});
  ar.save(path);
}

EmbeddingCache EmbeddingCache::load(const fs::path& path) {
  const Archive ar = Archive::load(path);
  if (ar.meta.value("format", "") != "t2m-embeddings") {
    throw FormatError("'" + path.string() + "' is not an embedding cache");
  }
  EmbeddingCache cache(ar.meta.at("kind").get<std::string>(), ar.meta.at("config_hash").get<std::string>(),
                       ar.meta.at("width").get<std::size_t>());
  const auto data = ar.get_f64("vectors");
  for (const auto& e : ar.meta.at("entries")) {
    WordEmbeddingSequence emb;
    emb.width = cache.width_;
    emb.words = e.at("words").get<std::vector<std::string>>();
    const auto off = e.at("offset").get<std::size_t>() * cache.width_;
    emb.vectors.assign(data.begin() + static_cast<std::ptrdiff_t>(off),
                       data.begin() + static_cast<std::ptrdiff_t>(off + emb.words.size() * cache.width_));
    cache.entries_.emplace(e.at("key").get<std::string>(), std::move(emb));
  }
  return cache;
}

}  // namespace t2m
