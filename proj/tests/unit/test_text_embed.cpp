#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "t2m/archive.hpp"
#include "t2m/error.hpp"
#include "t2m/text_embed.hpp"

using namespace t2m;
using namespace t2m::testing;
namespace fs = std::filesystem;

namespace {

// Direct transcription of the BERT encoder, used as an oracle.
class NaiveBert {
 public:
  NaiveBert(const fs::path& dir, const BertConfig& cfg) : cfg_(cfg), ar_(Archive::load(dir / "weights.t2ma")) {}

  // Hidden states after every block; result[l] is block l+1.
  std::vector<std::vector<std::vector<double>>> run(const std::vector<int>& ids) const {
    const std::size_t n = ids.size(), H = cfg_.hidden;
    const auto we = ar_.get_f64("embeddings.word_embeddings.weight");
    const auto pe = ar_.get_f64("embeddings.position_embeddings.weight");
    const auto te = ar_.get_f64("embeddings.token_type_embeddings.weight");
    std::vector<std::vector<double>> x(n, std::vector<double>(H));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t h = 0; h < H; ++h) {
        x[i][h] = we[static_cast<std::size_t>(ids[i]) * H + h] + pe[i * H + h] + te[h];
      }
      norm(x[i], "embeddings.LayerNorm");
    }
    std::vector<std::vector<std::vector<double>>> out;
    const std::size_t heads = cfg_.heads, d = H / heads;
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      const std::string p = "encoder.layer." + std::to_string(l) + ".";
      std::vector<std::vector<double>> q(n), k(n), v(n);
      for (std::size_t i = 0; i < n; ++i) {
        q[i] = dense(x[i], p + "attention.self.query");
        k[i] = dense(x[i], p + "attention.self.key");
        v[i] = dense(x[i], p + "attention.self.value");
      }
      std::vector<std::vector<double>> ctx(n, std::vector<double>(H, 0.0));
      for (std::size_t hd = 0; hd < heads; ++hd) {
        for (std::size_t i = 0; i < n; ++i) {
          std::vector<double> s(n);
          double mx = -1e300;
          for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += q[i][hd * d + c] * k[j][hd * d + c];
            s[j] = dot / std::sqrt(static_cast<double>(d));
            mx = std::max(mx, s[j]);
          }
          double z = 0.0;
          for (auto& e : s) z += (e = std::exp(e - mx));
          for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t c = 0; c < d; ++c) ctx[i][hd * d + c] += s[j] / z * v[j][hd * d + c];
          }
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        auto a = dense(ctx[i], p + "attention.output.dense");
        for (std::size_t h = 0; h < H; ++h) a[h] += x[i][h];
        norm(a, p + "attention.output.LayerNorm");
        auto f = dense(a, p + "intermediate.dense");
        for (auto& u : f) u = 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0)));
        auto o = dense(f, p + "output.dense");
        for (std::size_t h = 0; h < H; ++h) o[h] += a[h];
        norm(o, p + "output.LayerNorm");
        x[i] = o;
      }
      out.push_back(x);
    }
    return out;
  }

 private:
  std::vector<double> dense(const std::vector<double>& in, const std::string& name) const {
    const auto w = ar_.get_f64(name + ".weight");
    const auto b = ar_.get_f64(name + ".bias");
    std::vector<double> out(b.size());
    for (std::size_t o = 0; o < out.size(); ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < in.size(); ++i) s += w[o * in.size() + i] * in[i];
      out[o] = s;
    }
    return out;
  }
  void norm(std::vector<double>& x, const std::string& name) const {
    const auto g = ar_.get_f64(name + ".weight");
    const auto b = ar_.get_f64(name + ".bias");
    double mean = 0.0, var = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - mean) / std::sqrt(var + cfg_.layer_norm_eps) * g[i] + b[i];
  }

  BertConfig cfg_;
  Archive ar_;
};

struct TinyBert {
  fs::path dir = temp_dir("bert");
  TinyBert() { write_random_bert(dir, tiny_bert_config(), 3); }
  ~TinyBert() { fs::remove_all(dir); }
  BertEmbedder embedder(std::vector<int> layers = {1, 2, 3, 4}, SubwordPooling pooling = SubwordPooling::mean,
                        std::size_t max_words = 64) const {
    EmbedderConfig c;
    c.model_dir = dir;
    c.selected_layers = std::move(layers);
    c.per_layer_width = 16;
    c.pooling = pooling;
    c.max_words = max_words;
    return BertEmbedder(c);
  }
};

std::vector<double> row_of(const WordEmbeddingSequence& e, std::size_t w) {
  const auto r = e.row(w);
  return {r.begin(), r.end()};
}

class CountingEmbedder : public SentenceEmbedder {
 public:
  mutable int calls = 0;
  WordEmbeddingSequence embed(std::string_view sentence) const override {
    ++calls;
    WordEmbeddingSequence e;
    e.width = 2;
    for (const auto& w : split_words(sentence)) {
      e.words.push_back(w);
      e.vectors.push_back(static_cast<double>(w.size()) + 0.1);
      e.vectors.push_back(-1.0 / 3.0);
    }
    return e;
  }
  std::size_t width() const override { return 2; }
  std::string kind() const override { return "count"; }
  std::string config_hash() const override { return "0123456789abcdef0123"; }
  nlohmann::json describe() const override { return {{"kind", "count"}}; }
};

}  // namespace

TEST_CASE("basic tokenization and wordpiece") {
  const WordPieceTokenizer tok(fixture_vocab());
  CHECK(tok.basic_tokenize("A person, walks!  ") == std::vector<std::string>{"A", "person", ",", "walks", "!"});
  CHECK(tok.basic_tokenize("tab\tsep\x01x") == std::vector<std::string>{"tab", "sepx"});
  CHECK(tok.wordpiece("walking") == std::vector<int>{tok.id("walking")});
  CHECK(tok.wordpiece("waveing") == std::vector<int>{tok.id("wa"), tok.id("##ve"), tok.id("##ing")});
  CHECK(tok.wordpiece("zzz") == std::vector<int>{tok.unk_id()});
  // Cased vocabulary: "Walks" is not "walks".
  CHECK(tok.wordpiece("Walks") == std::vector<int>{tok.unk_id()});
  CHECK(tok.word_pieces("walks.") == std::vector<int>{tok.id("walks"), tok.id(".")});
  CHECK(tok.piece(tok.cls_id()) == "[CLS]");
  CHECK_THROWS_AS(WordPieceTokenizer(std::vector<std::string>{"a"}), FormatError);
  CHECK(split_words("  a  person\twalks \n") == std::vector<std::string>{"a", "person", "walks"});
}

TEST_CASE("encoder matches the naive oracle and layers count from 1") {
  TinyBert tb;
  const BertModel model = BertModel::load(tb.dir);
  const NaiveBert naive(tb.dir, tiny_bert_config());
  const WordPieceTokenizer tok = WordPieceTokenizer::load(tb.dir / "vocab.txt");
  std::vector<int> ids{tok.cls_id(), tok.id("a"), tok.id("person"), tok.id("walks"), tok.sep_id()};
  const auto got = model.hidden_states(ids, 4);
  const auto want = naive.run(ids);
  REQUIRE(got.size() == 4);
  for (std::size_t l = 0; l < 4; ++l) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t h = 0; h < 16; ++h) CHECK(std::abs(got[l][i * 16 + h] - want[l][i][h]) < 1e-9);
    }
  }
  CHECK_THROWS_AS(model.hidden_states(ids, 5), ConfigError);
  CHECK_THROWS_AS(model.hidden_states(std::vector<int>(70, 1), 1), ShapeError);

  // Layer 1 of the embedder is the first block's output.
  const auto emb = tb.embedder({1});
  const auto e = emb.embed("a person walks");
  for (std::size_t h = 0; h < 16; ++h) CHECK(std::abs(e.row(1)[h] - want[0][2][h]) < 1e-9);
}

TEST_CASE("word vectors concatenate the selected layers") {
  TinyBert tb;
  const auto emb = tb.embedder({4, 2});
  const auto e = emb.embed("a person walks");
  CHECK(e.length() == 3);
  CHECK(e.width == 32);
  CHECK(emb.width() == 32);
  const auto single4 = tb.embedder({4}).embed("a person walks");
  const auto single2 = tb.embedder({2}).embed("a person walks");
  for (std::size_t w = 0; w < 3; ++w) {
    for (std::size_t h = 0; h < 16; ++h) {
      CHECK(e.row(w)[h] == single4.row(w)[h]);
      CHECK(e.row(w)[16 + h] == single2.row(w)[h]);
    }
  }
}

TEST_CASE("subword pooling") {
  TinyBert tb;
  const auto mean = tb.embedder();
  const auto ps = mean.piece_states("someone waveing left");
  REQUIRE(ps.pieces.size() == 5);
  CHECK(ps.word_of == std::vector<std::size_t>{0, 1, 1, 1, 2});
  const auto e = mean.embed("someone waveing left");
  REQUIRE(e.length() == 3);
  for (std::size_t i = 0; i < e.width; ++i) {
    const double m = (ps.pieces[1][i] + ps.pieces[2][i] + ps.pieces[3][i]) / 3.0;
    CHECK(std::abs(e.row(1)[i] - m) < 1e-12);
    // A single-piece word is its piece.
    CHECK(e.row(0)[i] == ps.pieces[0][i]);
  }
  const auto first = tb.embedder({1, 2, 3, 4}, SubwordPooling::first).embed("someone waveing left");
  CHECK(row_of(first, 1) == ps.pieces[1]);
  const auto pieces = tb.embedder({1, 2, 3, 4}, SubwordPooling::wordpiece).embed("someone waveing left");
  CHECK(pieces.length() == 5);
  CHECK(pieces.words[2] == "waveing");
  CHECK(row_of(pieces, 3) == ps.pieces[3]);
  CHECK(parse_pooling("mean") == SubwordPooling::mean);
  CHECK_THROWS_AS(parse_pooling("max"), ConfigError);
}

TEST_CASE("embeddings are deterministic and contextual") {
  TinyBert tb;
  const auto emb = tb.embedder();
  const auto a = emb.embed("a man walks to the bank");
  const auto b = emb.embed("a man walks to the bank");
  CHECK(a.vectors == b.vectors);
  const auto c = emb.embed("the bank of the river");
  CHECK(row_of(a, 5) != row_of(c, 1));
  // Word order changes the vectors.
  const auto d = emb.embed("walks man a");
  CHECK(row_of(d, 0) != row_of(a, 2));
  CHECK(emb.config_hash() == tb.embedder().config_hash());
  CHECK(emb.config_hash() != tb.embedder({1, 2}).config_hash());
  CHECK(emb.config_hash() != tb.embedder({1, 2, 3, 4}, SubwordPooling::first).config_hash());
}

TEST_CASE("long sentences are truncated and missing weights are reported") {
  TinyBert tb;
  const auto e = tb.embedder({1}, SubwordPooling::mean, 3).embed("a person walks forward and turns left");
  CHECK(e.length() == 3);
  CHECK_THROWS_AS(tb.embedder().embed("   "), ConfigError);
  EmbedderConfig c;
  c.model_dir = tb.dir / "missing";
  CHECK_THROWS_AS(BertEmbedder{c}, ResourceError);
  EmbedderConfig bad;
  bad.selected_layers = {0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("static table lookup") {
  const auto dir = temp_dir("static");
  write_static_vectors(dir / "vec.txt", 5, 4);
  const auto emb = StaticEmbedder::load(dir / "vec.txt", 4);
  CHECK(emb.width() == 5);
  std::ifstream in(dir / "vec.txt");
  std::string line;
  std::getline(in, line);
  std::vector<double> walks;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string w;
    ls >> w;
    if (w != "walks") continue;
    double v = 0;
    while (ls >> v) walks.push_back(v);
  }
  const auto e = emb.embed("walks walks zzzqqq walks.");
  CHECK(e.length() == 4);
  CHECK(row_of(e, 0) == walks);
  CHECK(row_of(e, 1) == walks);
  CHECK(row_of(e, 3) == walks);
  CHECK(row_of(e, 2) == emb.oov_vector());
  for (double v : emb.oov_vector()) CHECK(v == 0.0);
  CHECK(emb.embed("a b c d e f").length() == 4);
  CHECK_THROWS_AS(StaticEmbedder::load(dir / "none.txt"), ResourceError);
  fs::remove_all(dir);
}

TEST_CASE("embedding cache") {
  const auto dir = temp_dir("emb-cache");
  CountingEmbedder emb;
  EmbeddingCache cache(emb.kind(), emb.config_hash(), 2);
  const auto& first = cache.get_or_compute("a person walks", emb);
  CHECK(first.length() == 3);
  cache.get_or_compute("a person walks", emb);
  CHECK(emb.calls == 1);
  CHECK(cache.contains("a person walks"));
  CHECK_FALSE(cache.contains("a person runs"));
  CHECK_THROWS_AS(cache.get("a person runs"), ResourceError);
  WordEmbeddingSequence wrong;
  wrong.width = 3;
  CHECK_THROWS_AS(cache.put("x", wrong), ShapeError);
  cache.put("someone jogs", emb.embed("someone jogs"));
  const auto path = dir / EmbeddingCache::file_name(emb);
  CHECK(path.filename().string() == "embeddings-count-0123456789abcdef.t2ma");
  cache.save(path);
  const auto back = EmbeddingCache::load(path);
  CHECK(back.size() == 2);
  CHECK(back.kind() == "count");
  CHECK(back.config_hash() == emb.config_hash());
  CHECK(back.get("a person walks").vectors == cache.get("a person walks").vectors);
  CHECK(back.get("someone jogs").words == std::vector<std::string>{"someone", "jogs"});
  fs::remove_all(dir);
}
