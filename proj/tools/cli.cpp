#include "cli.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "t2m/archive.hpp"
#include "t2m/error.hpp"
#include "t2m/hashing.hpp"
#include "t2m/kit_ingest.hpp"
#include "t2m/metrics.hpp"
#include "t2m/motion_io.hpp"
#include "t2m/motion_repr.hpp"
#include "t2m/plots.hpp"
#include "t2m/text_embed.hpp"
#include "t2m/training.hpp"

namespace fs = std::filesystem;

namespace t2m::cli {

namespace {

/// Raised for semantically invalid input that CLI11 cannot check.
class UsageError : public Error {
 public:
  using Error::Error;
};

class NoDataError : public Error {
 public:
  using Error::Error;
};

struct EmbedOptions {
  std::string bert_dir;
  std::string static_vectors;
  std::string pooling = "mean";
  std::vector<int> layers{12, 13, 14, 15};
};

struct PreprocessOptions {
  std::string corpus;
  std::string out;
  std::uint64_t seed = 0;
  std::string unit = "motion";
  std::vector<double> ratios{0.6, 0.2, 0.2};
  bool permissive = false;
  double fps = 100.0;
};

struct TrainOptions {
  std::string cache;
  std::string run_dir;
  std::string ablation = "full";
  std::size_t limit = 0;
  bool resume = false;
  TrainConfig train;
  std::string disc_source = "both";
  ModelDims dims;
  double phase_split = 0.5;
  EmbedOptions embed;
};

struct EvaluateOptions {
  std::string checkpoint;
  std::string cache;
  std::string split = "test";
  std::string out;
  bool ground_truth = false;
  std::string cee = "elementwise";
  std::string see = "mn";
  std::size_t limit = 0;
  EmbedOptions embed;
};

struct GenerateOptions {
  std::string checkpoint;
  std::string sentence;
  std::size_t frames = 96;
  std::string initial_pose;
  std::string out;
  std::string bvh;
  std::string plot;
  EmbedOptions embed;
};

void add_embed_options(CLI::App* cmd, EmbedOptions& o) {
  cmd->add_option("--bert-dir", o.bert_dir, "BERT weights directory (default: $T2M_BERT_DIR)");
  cmd->add_option("--static-vectors", o.static_vectors, "word2vec text table for the static embedder");
  cmd->add_option("--pooling", o.pooling, "subword pooling")->check(CLI::IsMember({"mean", "first", "wordpiece"}));
  cmd->add_option("--layers", o.layers, "BERT blocks to concatenate")->delimiter(',');
}

std::unique_ptr<SentenceEmbedder> make_embedder(const std::string& kind, const EmbedOptions& o) {
  if (kind == "static") {
    if (o.static_vectors.empty()) throw ResourceError("static embedder needs --static-vectors");
    return std::make_unique<StaticEmbedder>(StaticEmbedder::load(o.static_vectors));
  }
  std::string dir = o.bert_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("T2M_BERT_DIR")) dir = env;
  }
  if (dir.empty()) throw ResourceError("BERT weights directory not set: pass --bert-dir or set T2M_BERT_DIR");
  EmbedderConfig cfg;
  cfg.model_dir = dir;
  cfg.pooling = parse_pooling(o.pooling);
  cfg.selected_layers = o.layers;
  return std::make_unique<BertEmbedder>(cfg);
}

EmbeddingCache open_embedding_cache(const fs::path& cache_dir, const SentenceEmbedder& e) {
  const fs::path path = cache_dir / EmbeddingCache::file_name(e);
  if (fs::exists(path)) {
    auto c = EmbeddingCache::load(path);
    if (c.config_hash() == e.config_hash() && c.width() == e.width()) return c;
    spdlog::warn("ignoring stale embedding cache {}", path.string());
  }
  return EmbeddingCache(e.kind(), e.config_hash(), e.width());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { atomic_write_text(path, j.dump(2) + "\n"); }

const char* kSplits[] = {"train", "val", "test"};

// ---------------------------------------------------------------- preprocess

nlohmann::json split_json(const SplitConfig& s) {
  return {{"ratios", s.ratios}, {"seed", s.seed},
          {"unit", s.unit == SplitUnit::by_motion ? "motion" : "annotation"}};
}

bool cache_up_to_date(const fs::path& out, const nlohmann::json& expected) {
  const fs::path mpath = out / "manifest.json";
  if (!fs::exists(mpath)) return false;
  nlohmann::json m;
  try {
    m = read_json(mpath);
  } catch (const Error&) {
    return false;
  }
  for (const char* key : {"preprocessing_version", "corpus_checksum", "skeleton_checksum", "split", "target_fps"}) {
    if (!m.contains(key) || m.at(key) != expected.at(key)) return false;
  }
  if (!m.contains("files")) return false;
  for (const auto& [name, sha] : m.at("files").items()) {
    if (!fs::exists(out / name) || sha256_file(out / name) != sha.get<std::string>()) return false;
  }
  return true;
}

int cmd_preprocess(const PreprocessOptions& o) {
  const fs::path corpus(o.corpus);
  const fs::path out(o.out);
  if (!fs::is_directory(corpus)) throw ResourceError("corpus directory not found: " + corpus.string());
  const Skeleton& skel = Skeleton::kit21();
  SplitConfig sc;
  if (o.ratios.size() != 3) throw UsageError("--ratios needs three values");
  sc.ratios = {o.ratios[0], o.ratios[1], o.ratios[2]};
  sc.seed = o.seed;
  sc.unit = o.unit == "annotation" ? SplitUnit::by_annotation : SplitUnit::by_motion;
  sc.validate();

  nlohmann::json manifest = {{"format", "t2m-cache"},
                             {"preprocessing_version", kPreprocessingVersion},
                             {"corpus_checksum", corpus_checksum(corpus)},
                             {"skeleton_checksum", skel.checksum()},
                             {"split", split_json(sc)},
                             {"target_fps", kTargetFps}};
  if (cache_up_to_date(out, manifest)) {
    std::cout << "cache " << out.string() << " is up to date\n";
    return kOk;
  }

  LoadOptions lo;
  lo.permissive = o.permissive;
  lo.default_fps = o.fps;
  const Corpus c = load_corpus(corpus, skel, lo);
  if (c.motions.empty()) throw NoDataError("no motions found in " + corpus.string());
  const SampleSet set = make_samples(c, skel);
  if (set.samples.empty()) throw NoDataError("no annotated motions in " + corpus.string());
  const Splits splits = split(set.samples, sc);
  if (splits.train.empty()) throw NoDataError("training split is empty");
  const NormalizationStats norm = fit_normalization(splits.train);

  fs::create_directories(out);
  const std::vector<Sample>* parts[] = {&splits.train, &splits.val, &splits.test};
  nlohmann::json files = nlohmann::json::object();
  nlohmann::json counts = nlohmann::json::object();
  for (int k = 0; k < 3; ++k) {
    const std::string name = std::string(kSplits[k]) + ".t2ma";
    write_split_cache(out / name, *parts[k]);
    files[name] = sha256_file(out / name);
    counts[kSplits[k]] = parts[k]->size();
  }
  write_json(out / "normalization.json", norm.to_json());
  files["normalization.json"] = sha256_file(out / "normalization.json");

  manifest["motions"] = c.motions.size();
  manifest["annotations"] = c.annotation_count();
  manifest["samples"] = counts;
  manifest["unannotated"] = c.unannotated;
  manifest["failed"] = c.failed;
  manifest["dropped"] = set.dropped;
  manifest["warnings"] = c.warnings;
  manifest["clamped_channels"] = norm.clamped;
  manifest["files"] = files;
  write_json(out / "manifest.json", manifest);
  std::cout << "preprocessed " << c.motions.size() << " motions / " << c.annotation_count() << " annotations -> "
            << counts.dump() << " samples in " << out.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------- cache

struct CacheData {
  nlohmann::json manifest;
  NormalizationStats norm;
};

CacheData open_cache(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) {
    throw ResourceError("no dataset cache in " + dir.string() + "; run 't2m preprocess' first");
  }
  CacheData d;
  d.manifest = read_json(dir / "manifest.json");
  d.norm = NormalizationStats::from_json(read_json(dir / "normalization.json"));
  return d;
}

std::vector<Sample> read_split(const fs::path& dir, const std::string& name, std::size_t limit) {
  auto s = read_split_cache(dir / (name + ".t2ma"));
  if (limit > 0 && s.size() > limit) s.resize(limit);
  return s;
}

std::vector<TrainingExample> embed_examples(const std::vector<Sample>& samples, const NormalizationStats& norm,
                                            const fs::path& cache_dir, const SentenceEmbedder& embedder) {
  EmbeddingCache cache = open_embedding_cache(cache_dir, embedder);
  const std::size_t before = cache.size();
  auto ex = make_examples(samples, norm, cache, embedder);
  if (cache.size() != before) cache.save(cache_dir / EmbeddingCache::file_name(embedder));
  return ex;
}

void write_report(const fs::path& dir, const EvalReport& r) {
  fs::create_directories(dir);
  write_json(dir / "report.json", r.to_json());
  atomic_write_text(dir / "report.txt", r.table());
  std::vector<std::string> labels;
  std::vector<double> ape, ave;
  for (const auto& row : r.rows) {
    labels.push_back(row.label);
    ape.push_back(row.ape);
    ave.push_back(row.ave);
  }
  labels.push_back("Mean w/o trajectory");
  ape.push_back(r.ape_mean_without_trajectory);
  ave.push_back(r.ave_mean_without_trajectory);
  labels.push_back("Mean");
  ape.push_back(r.ape_mean);
  ave.push_back(r.ave_mean);
  atomic_write_text(dir / "ape.svg", bar_chart_svg("Average Position Error", labels, {{"APE", ape}}, "mm"));
  atomic_write_text(dir / "ave.svg", bar_chart_svg("Average Variance Error", labels, {{"AVE", ave}}, "mm^2"));
  atomic_write_text(dir / "embedding.svg",
                    bar_chart_svg("Embedding errors", {"CEE", "SEE"}, {{"value", {r.cee, r.see}}}, "error"));
}

// ---------------------------------------------------------------------- train

int cmd_train(TrainOptions o, const std::string& config_snapshot) {
  const fs::path cache_dir(o.cache);
  const fs::path run_dir(o.run_dir);
  const CacheData cache = open_cache(cache_dir);
  const Skeleton& skel = Skeleton::kit21();
  if (cache.manifest.value("skeleton_checksum", "") != skel.checksum()) {
    throw FormatError("cache was built for a different skeleton definition");
  }

  AblationConfig abl;
  abl.variant = parse_variant(o.ablation);
  abl.phase_split = o.phase_split;
  abl.validate();
  o.train.disc_source = parse_disc_source(o.disc_source);
  o.train.validate();

  const auto train_samples = read_split(cache_dir, "train", o.limit);
  const auto val_samples = read_split(cache_dir, "val", o.limit);
  const auto test_samples = read_split(cache_dir, "test", o.limit);
  if (train_samples.empty()) throw NoDataError("training split is empty");

  const auto embedder = make_embedder(abl.variant == Variant::no_bert ? "static" : "bert", o.embed);
  ModelDims dims = abl.apply(o.dims);
  if (abl.variant == Variant::no_bert && embedder->width() != abl.static_width) {
    throw ConfigError("static vectors have width " + std::to_string(embedder->width()) + ", expected " +
                      std::to_string(abl.static_width));
  }
  dims.embed_width = embedder->width();
  dims.validate();

  const auto train_set = embed_examples(train_samples, cache.norm, cache_dir, *embedder);
  const auto val_set = embed_examples(val_samples, cache.norm, cache_dir, *embedder);

  fs::create_directories(run_dir);
  atomic_write_text(run_dir / "config.toml", config_snapshot);
  write_json(run_dir / "config.json", {{"train", o.train.to_json()},
                                       {"ablation", abl.to_json()},
                                       {"dims", dims.to_json()},
                                       {"embedder", embedder->describe()},
                                       {"cache", cache_dir.string()},
                                       {"corpus_checksum", cache.manifest.value("corpus_checksum", "")},
                                       {"limit", o.limit}});

  MotionModel model(dims, skel, o.train.seed);
  CheckpointMeta meta;
  meta.dims = dims;
  meta.architecture = model.architecture();
  meta.embedder_kind = embedder->kind();
  meta.embedder_hash = embedder->config_hash();
  meta.skeleton_checksum = skel.checksum();
  meta.normalization = cache.norm;
  meta.train = o.train;
  meta.ablation = abl;

  RunOptions ro;
  ro.run_dir = run_dir;
  ro.resume = o.resume;
  const TrainSummary summary = train(model, train_set, val_set, meta, ro);
  std::cout << "trained " << summary.epochs.size() << " epoch(s); checkpoints in " << run_dir.string() << "\n";

  if (!test_samples.empty() && fs::exists(summary.best_checkpoint)) {
    const auto best = load_checkpoint(summary.best_checkpoint, skel);
    const auto test_set = embed_examples(test_samples, cache.norm, cache_dir, *embedder);
    const auto ev = evaluate(*best.model, test_set, cache.norm, skel);
    write_report(run_dir / "eval-test", ev.report);
    std::cout << ev.report.table();
  }
  return kOk;
}

// ------------------------------------------------------------------- evaluate

int cmd_evaluate(const EvaluateOptions& o) {
  const Skeleton& skel = Skeleton::kit21();
  const fs::path cache_dir(o.cache);
  const auto ck = load_checkpoint(o.checkpoint, skel);
  const CacheData cache = open_cache(cache_dir);
  if (cache.norm.to_json() != ck.meta.normalization.to_json()) {
    throw CheckpointError("checkpoint normalization statistics differ from the cache in " + cache_dir.string());
  }
  const auto samples = read_split(cache_dir, o.split, o.limit);
  if (samples.empty()) throw NoDataError("split '" + o.split + "' is empty");

  std::vector<TrainingExample> examples;
  if (o.ground_truth) {
    for (const auto& s : samples) {
      TrainingExample ex;
      ex.frames = ck.meta.normalization.apply(*s.motion);
      ex.motion_id = s.motion_id;
      ex.sentence = s.sentence;
      examples.push_back(std::move(ex));
    }
  } else {
    const auto embedder = make_embedder(ck.meta.embedder_kind, o.embed);
    if (embedder->config_hash() != ck.meta.embedder_hash) {
      throw CheckpointError("embedder configuration differs from the one recorded in the checkpoint");
    }
    examples = embed_examples(samples, ck.meta.normalization, cache_dir, *embedder);
  }
  MetricOptions mo;
  mo.cee = o.cee == "euclidean" ? CeeReading::euclidean : CeeReading::elementwise;
  mo.see = o.see == "m2n" ? SeeScale::m2n : SeeScale::mn;
  const auto ev = evaluate(*ck.model, examples, ck.meta.normalization, skel, mo, o.ground_truth);
  const fs::path out = o.out.empty() ? fs::path(o.checkpoint).parent_path() / ("eval-" + o.split) : fs::path(o.out);
  write_report(out, ev.report);
  std::cout << ev.report.table();
  return kOk;
}

// ------------------------------------------------------------------- generate

int cmd_generate(const GenerateOptions& o) {
  const std::string sentence = normalize_sentence(o.sentence);
  if (sentence.empty()) throw UsageError("sentence is empty");
  if (o.frames == 0) throw UsageError("--frames must be at least 1");
  const Skeleton& skel = Skeleton::kit21();
  const auto ck = load_checkpoint(o.checkpoint, skel);
  const auto embedder = make_embedder(ck.meta.embedder_kind, o.embed);
  if (embedder->config_hash() != ck.meta.embedder_hash) {
    throw CheckpointError("embedder configuration differs from the one recorded in the checkpoint");
  }
  const auto words = embedder->embed(sentence);
  if (words.length() == 0) throw UsageError("sentence has no words");

  const ModelDims& d = ck.meta.dims;
  const auto& norm = ck.meta.normalization;
  // The training-set mean pose is the zero vector in normalized space.
  std::vector<double> initial(d.channels(), 0.0);
  if (!o.initial_pose.empty()) {
    const MotionFile f = read_motion_file(o.initial_pose);
    if (f.motion.joints != d.joints || f.motion.traj_dims != d.traj_dims || f.motion.length() == 0) {
      throw ShapeError("initial pose file does not match the model's joints and trajectory channels");
    }
    MotionSequence first = MotionSequence::from_channels(f.motion.channels(0), d.joints, d.traj_dims, f.motion.fps);
    initial = norm.apply(first);
  }
  const LatentPair z = ck.model->encode_sentence(words);
  const auto gen = ck.model->decode(z, initial, o.frames);
  const MotionSequence motion = norm.invert(gen, d.joints, d.traj_dims, kTargetFps);
  write_motion_file(o.out, motion, skel.joint_names());
  if (!o.bvh.empty()) export_bvh(o.bvh, motion, skel);
  if (!o.plot.empty()) atomic_write_text(o.plot, trajectory_svg(to_global(motion, skel), skel, sentence));
  std::cout << "wrote " << o.frames << " frames to " << o.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------- embed

struct EmbedCommandOptions {
  std::string sentence;
  std::string kind = "bert";
  EmbedOptions embed;
};

int cmd_embed(const EmbedCommandOptions& o) {
  const std::string sentence = normalize_sentence(o.sentence);
  if (sentence.empty()) throw UsageError("sentence is empty");
  const auto embedder = make_embedder(o.kind, o.embed);
  const auto seq = embedder->embed(sentence);
  nlohmann::json out = {{"words", seq.words}, {"width", seq.width}, {"vectors", nlohmann::json::array()}};
  for (std::size_t w = 0; w < seq.length(); ++w) {
    const auto r = seq.row(w);
    out["vectors"].push_back(std::vector<double>(r.begin(), r.end()));
  }
  std::cout << out.dump() << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"t2m: hierarchical two-stream text-to-motion generation"};
  app.set_config("--config", "", "TOML or INI configuration file");
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  PreprocessOptions pp;
  auto* pre = app.add_subcommand("preprocess", "build the dataset cache from a corpus directory");
  pre->add_option("--corpus", pp.corpus, "corpus directory")->required();
  pre->add_option("--out", pp.out, "cache directory")->required();
  pre->add_option("--seed", pp.seed, "split seed");
  pre->add_option("--split-unit", pp.unit, "split by motion id or by annotation")
      ->check(CLI::IsMember({"motion", "annotation"}));
  pre->add_option("--ratios", pp.ratios, "train,val,test ratios")->delimiter(',');
  pre->add_flag("--permissive", pp.permissive, "skip unreadable motions instead of failing");
  pre->add_option("--default-fps", pp.fps, "source frame rate when a motion has no meta file");

  TrainOptions tr;
  auto* trn = app.add_subcommand("train", "train a model on a dataset cache");
  trn->add_option("--cache", tr.cache, "dataset cache directory")->required();
  trn->add_option("--run-dir", tr.run_dir, "output run directory")->required();
  trn->add_option("--ablation", tr.ablation, "full, jt, 2st, lo or bert")
      ->check(CLI::IsMember({"full", "jt", "2st", "lo", "bert", "no_joint_training", "no_two_stream",
                             "no_extra_losses", "no_bert"}));
  trn->add_option("--epochs", tr.train.epochs);
  trn->add_option("--batch-size", tr.train.batch_size);
  trn->add_option("--lr", tr.train.learning_rate, "initial learning rate");
  trn->add_option("--lr-decay", tr.train.lr_decay, "per-epoch learning-rate factor");
  trn->add_option("--clip-norm", tr.train.clip_norm, "global gradient-norm clip (0 disables)");
  trn->add_option("--seed", tr.train.seed);
  trn->add_option("--lambda-m", tr.train.weights.m);
  trn->add_option("--lambda-v", tr.train.weights.v);
  trn->add_option("--lambda-e", tr.train.weights.e);
  trn->add_option("--lambda-g", tr.train.weights.g);
  trn->add_flag("--mv-on-pose-branch", tr.train.mv_on_pose_branch, "apply L_M and L_V to the pose branch too");
  trn->add_option("--disc-source", tr.disc_source, "motions judged by the discriminator")
      ->check(CLI::IsMember({"both", "sentence", "pose"}));
  trn->add_option("--phase-split", tr.phase_split, "phase-1 fraction of the two-phase schedule");
  trn->add_option("--part-width", tr.dims.part_width);
  trn->add_option("--pair-width", tr.dims.pair_width);
  trn->add_option("--latent-width", tr.dims.latent_width, "per-stream latent width");
  trn->add_option("--disc-channels", tr.dims.disc_channels);
  trn->add_option("--limit", tr.limit, "use at most N samples per split");
  trn->add_flag("--resume", tr.resume, "continue from checkpoint_last.t2ma in the run directory");
  add_embed_options(trn, tr.embed);

  EvaluateOptions ev;
  auto* eva = app.add_subcommand("evaluate", "score a checkpoint on a split");
  eva->add_option("--checkpoint", ev.checkpoint)->required();
  eva->add_option("--cache", ev.cache, "dataset cache directory")->required();
  eva->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test"}));
  eva->add_option("--out", ev.out, "report directory");
  eva->add_flag("--ground-truth", ev.ground_truth, "score the ground truth against itself");
  eva->add_option("--cee", ev.cee)->check(CLI::IsMember({"elementwise", "euclidean"}));
  eva->add_option("--see", ev.see)->check(CLI::IsMember({"mn", "m2n"}));
  eva->add_option("--limit", ev.limit);
  add_embed_options(eva, ev.embed);

  GenerateOptions gn;
  auto* gen = app.add_subcommand("generate", "generate a motion from a sentence");
  gen->add_option("--checkpoint", gn.checkpoint)->required();
  gen->add_option("--sentence", gn.sentence)->required();
  gen->add_option("--frames", gn.frames, "number of frames (12.5 fps)");
  gen->add_option("--initial-pose", gn.initial_pose, "motion file whose first frame starts the sequence");
  gen->add_option("--out", gn.out, "output motion file")->required();
  gen->add_option("--bvh", gn.bvh, "also write a BVH file");
  gen->add_option("--plot", gn.plot, "also write a trajectory plot (SVG)");
  add_embed_options(gen, gn.embed);

  EmbedCommandOptions em;
  auto* emb = app.add_subcommand("embed", "print the word vectors of a sentence as JSON");
  emb->add_option("--sentence", em.sentence)->required();
  emb->add_option("--kind", em.kind)->check(CLI::IsMember({"bert", "static"}));
  add_embed_options(emb, em.embed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*pre) return cmd_preprocess(pp);
    if (*trn) return cmd_train(tr, app.config_to_str(true, false));
    if (*eva) return cmd_evaluate(ev);
    if (*gen) return cmd_generate(gn);
    if (*emb) return cmd_embed(em);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kUsage;
  } catch (const NoDataError& e) {
    std::cerr << "no data: " << e.what() << "\n";
    return kNoData;
  } catch (const IngestError& e) {
    std::cerr << "ingest error: " << e.what() << "\n";
    for (const auto& id : e.ids()) std::cerr << "  " << id << "\n";
    return kIngest;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint mismatch: " << e.what() << "\n";
    return kCheckpoint;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kUsage;
}

}  // namespace t2m::cli
