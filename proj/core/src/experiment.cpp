#include "posim/experiment.hpp"

#include "posim/binio.hpp"
#include "posim/checkpoint.hpp"
#include "posim/corpus_io.hpp"
#include "posim/errors.hpp"
#include "posim/fusion.hpp"
#include "posim/rng.hpp"
#include "posim/similarity.hpp"
#include "posim/stream_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace posim {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

namespace {

json train_to_json(const TrainConfig& t) {
  // rng_seed is derived per model from the experiment seed, never stored here
  json j;
  j["learning_rate"] = t.learning_rate;
  j["batch_size"] = t.batch_size;
  j["max_epochs"] = t.max_epochs;
  j["early_stop_patience"] = t.early_stop_patience;
  j["l2_penalty"] = t.l2_penalty;
  return j;
}

TrainConfig train_from_json(const json& j, TrainConfig base) {
  base.learning_rate = j.value("learning_rate", base.learning_rate);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.max_epochs = j.value("max_epochs", base.max_epochs);
  base.early_stop_patience = j.value("early_stop_patience", base.early_stop_patience);
  base.l2_penalty = j.value("l2_penalty", base.l2_penalty);
  return base;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

}  // namespace

std::string ExperimentConfig::canonical_text() const {
  json j;
  j["format_version"] = 1;
  j["seed"] = seed;
  json family;
  family["names"] = names;
  family["phoneme_counts"] = phoneme_counts;
  family["overlaps"] = overlaps;
  family["drift"] = drift;
  family["feature_dim"] = feature_dim;
  family["biphones_per_language"] = biphones_per_language;
  family["mean_segment_frames"] = mean_segment_frames;
  family["phoneme_spread"] = phoneme_spread;
  family["biphone_jitter"] = biphone_jitter;
  family["stddev_min"] = stddev_min;
  family["stddev_max"] = stddev_max;
  j["family"] = std::move(family);
  json corpus;
  corpus["train_frames"] = train_frames;
  corpus["val_frames"] = val_frames;
  corpus["test_frames"] = test_frames;
  corpus["mean_utterance_segments"] = mean_utterance_segments;
  j["corpus"] = std::move(corpus);
  json tying;
  tying["fraction"] = tying_fraction;
  tying["min_solo_frames"] = min_solo_frames;
  j["tying"] = std::move(tying);
  json am;
  am["hidden_dims"] = am_hidden_dims;
  am["activation"] = am_activation;
  am["train"] = train_to_json(am_train);
  j["am"] = std::move(am);
  json mapping;
  mapping["hidden_factor"] = map_hidden_factor;
  mapping["activation"] = map_activation;
  mapping["train_frame_cap"] = map_train_frame_cap;
  mapping["train"] = train_to_json(map_train);
  j["mapping"] = std::move(mapping);
  json fusion;
  fusion["grid_step"] = fusion_grid_step;
  j["fusion"] = std::move(fusion);
  json probe;
  probe["top_n"] = probe_top_n;
  probe["top_k"] = probe_top_k;
  j["probe"] = std::move(probe);
  return j.dump(2) + "\n";
}

std::string ExperimentConfig::hash() const { return to_hex(fnv1a64(canonical_text())); }

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: unparseable JSON (") + e.what() + ")");
  }
  ExperimentConfig cfg;
  try {
    if (j.value("format_version", 1) != 1)
      throw ConfigError("config: unsupported format_version");
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("family")) {
      const json& f = j["family"];
      cfg.names = f.value("names", cfg.names);
      cfg.phoneme_counts = f.value("phoneme_counts", cfg.phoneme_counts);
      cfg.overlaps = f.value("overlaps", cfg.overlaps);
      cfg.drift = f.value("drift", cfg.drift);
      cfg.feature_dim = f.value("feature_dim", cfg.feature_dim);
      cfg.biphones_per_language = f.value("biphones_per_language", cfg.biphones_per_language);
      cfg.mean_segment_frames = f.value("mean_segment_frames", cfg.mean_segment_frames);
      cfg.phoneme_spread = f.value("phoneme_spread", cfg.phoneme_spread);
      cfg.biphone_jitter = f.value("biphone_jitter", cfg.biphone_jitter);
      cfg.stddev_min = f.value("stddev_min", cfg.stddev_min);
      cfg.stddev_max = f.value("stddev_max", cfg.stddev_max);
    }
    if (j.contains("corpus")) {
      const json& c = j["corpus"];
      cfg.train_frames = c.value("train_frames", cfg.train_frames);
      cfg.val_frames = c.value("val_frames", cfg.val_frames);
      cfg.test_frames = c.value("test_frames", cfg.test_frames);
      cfg.mean_utterance_segments = c.value("mean_utterance_segments", cfg.mean_utterance_segments);
    }
    if (j.contains("tying")) {
      cfg.tying_fraction = j["tying"].value("fraction", cfg.tying_fraction);
      cfg.min_solo_frames = j["tying"].value("min_solo_frames", cfg.min_solo_frames);
    }
    if (j.contains("am")) {
      cfg.am_hidden_dims = j["am"].value("hidden_dims", cfg.am_hidden_dims);
      cfg.am_activation = j["am"].value("activation", cfg.am_activation);
      if (j["am"].contains("train")) cfg.am_train = train_from_json(j["am"]["train"], cfg.am_train);
    }
    if (j.contains("mapping")) {
      cfg.map_hidden_factor = j["mapping"].value("hidden_factor", cfg.map_hidden_factor);
      cfg.map_activation = j["mapping"].value("activation", cfg.map_activation);
      cfg.map_train_frame_cap = j["mapping"].value("train_frame_cap", cfg.map_train_frame_cap);
      if (j["mapping"].contains("train"))
        cfg.map_train = train_from_json(j["mapping"]["train"], cfg.map_train);
    }
    if (j.contains("fusion")) cfg.fusion_grid_step = j["fusion"].value("grid_step", cfg.fusion_grid_step);
    if (j.contains("probe")) {
      cfg.probe_top_n = j["probe"].value("top_n", cfg.probe_top_n);
      cfg.probe_top_k = j["probe"].value("top_k", cfg.probe_top_k);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad field (") + e.what() + ")");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

void ExperimentConfig::save(const fs::path& path) const {
  write_text_if_changed(path, canonical_text());
}

void ExperimentConfig::validate() const {
  const int n = language_count();
  if (n < 1) throw ConfigError("config: no languages");
  std::set<std::string> unique(names.begin(), names.end());
  if (static_cast<int>(unique.size()) != n) throw ConfigError("config: duplicate language names");
  for (const auto& name : names) {
    if (name.empty() || name == "pooled")
      throw ConfigError("config: invalid language name '" + name + "'");
  }
  if (static_cast<int>(phoneme_counts.size()) != n)
    throw ConfigError("config: phoneme_counts length mismatch");
  if (static_cast<int>(drift.size()) != n) throw ConfigError("config: drift length mismatch");
  if (static_cast<int>(overlaps.size()) != n)
    throw ConfigError("config: overlaps must be languages x languages");
  for (const auto& row : overlaps)
    if (static_cast<int>(row.size()) != n)
      throw ConfigError("config: overlaps must be languages x languages");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double o = overlaps[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (o < 0.0 || o > 1.0) throw ConfigError("config: overlap fractions must lie in [0, 1]");
      if (std::abs(o - overlaps[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) > 1e-12)
        throw ConfigError("config: overlap matrix must be symmetric");
    }
  for (double eps : drift)
    if (eps < 0.0) throw ConfigError("config: drift must be non-negative");
  if (train_frames < 1 || val_frames < 1 || test_frames < 1)
    throw ConfigError("config: corpus sizes must be positive");
  if (tying_fraction <= 0.0 || tying_fraction > 1.0)
    throw ConfigError("config: tying fraction must lie in (0, 1]");
  if (min_solo_frames < 0) throw ConfigError("config: min_solo_frames must be >= 0");
  if (probe_top_n < 1 || probe_top_k < 1) throw ConfigError("config: probe sizes must be positive");
  try {
    activation_from_string(am_activation);
    activation_from_string(map_activation);
    validate_train_config(am_train);
    validate_train_config(map_train);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(fusion_grid_step > 0.0) || fusion_grid_step > 0.5)
    throw ConfigError("config: fusion grid_step must lie in (0, 0.5]");
  family_config();  // structural checks happen in make_language_family
}

FamilyConfig ExperimentConfig::family_config() const {
  FamilyConfig family;
  family.names = names;
  family.phoneme_counts = phoneme_counts;
  family.overlap.resize(language_count(), language_count());
  for (int i = 0; i < language_count(); ++i)
    for (int j = 0; j < language_count(); ++j)
      family.overlap(i, j) = overlaps[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  family.drift = drift;
  family.feature_dim = feature_dim;
  family.biphones_per_language = biphones_per_language;
  family.mean_segment_frames = mean_segment_frames;
  family.phoneme_spread = phoneme_spread;
  family.biphone_jitter = biphone_jitter;
  family.stddev_min = stddev_min;
  family.stddev_max = stddev_max;
  family.seed = derive_seed(seed, "family");
  return family;
}

ExperimentConfig ExperimentConfig::standard() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::smoke() {
  ExperimentConfig cfg;
  cfg.seed = 7070;
  cfg.names = {"A", "B", "C"};
  cfg.phoneme_counts = {8, 8, 8};
  cfg.overlaps = {{1.0, 0.5, 0.5}, {0.5, 1.0, 0.75}, {0.5, 0.75, 1.0}};
  cfg.drift = {0.4, 0.4, 0.4};
  cfg.feature_dim = 8;
  cfg.biphones_per_language = 30;
  cfg.train_frames = 4000;
  cfg.val_frames = 700;
  cfg.test_frames = 900;
  cfg.am_hidden_dims = {32};
  cfg.am_train.max_epochs = 8;
  cfg.am_train.early_stop_patience = 8;
  cfg.am_train.batch_size = 128;
  cfg.map_train.max_epochs = 8;
  cfg.map_train.early_stop_patience = 8;
  cfg.map_train.batch_size = 128;
  cfg.map_train_frame_cap = 4000;
  cfg.fusion_grid_step = 0.25;
  cfg.probe_top_n = 8;
  cfg.probe_top_k = 5;
  return cfg;
}

// ---------------------------------------------------------------------------
// paths
// ---------------------------------------------------------------------------

fs::path ArtifactPaths::language(const std::string& name) const {
  return family_dir() / (name + ".lang.json");
}
fs::path ArtifactPaths::corpus(const std::string& name, const std::string& role) const {
  return family_dir() / (name + "." + role);
}
fs::path ArtifactPaths::am_stem(const std::string& name) const {
  return models_dir() / ("am_" + name);
}
fs::path ArtifactPaths::tying(const std::string& name) const {
  return models_dir() / ("am_" + name + ".tying.json");
}
fs::path ArtifactPaths::pooled_inventory() const {
  return models_dir() / "am_pooled.inventory.json";
}
fs::path ArtifactPaths::map_stem(const std::string& source, const std::string& target) const {
  return maps_dir() / ("map_" + source + "_to_" + target);
}
fs::path ArtifactPaths::stream(const std::string& target, const std::string& role,
                               const std::string& kind) const {
  return streams_dir() / (target + "." + role + "." + kind + ".pmps");
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

namespace {

void log_write(std::ostream& log, const fs::path& path, bool existed, bool rewrote) {
  if (!existed)
    log << "  wrote " << path.string() << "\n";
  else if (rewrote)
    log << "  checksum mismatch, rewrote " << path.string() << "\n";
}

// Deterministic parallel map: runs fn(i) for i in [0, count) on up to `jobs`
// threads; exceptions surface in index order.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs < 1) jobs = 1;
  if (jobs == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  const int workers = std::min<int>(jobs, static_cast<int>(count));
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint32_t count_attested(const std::vector<std::uint32_t>& labels) {
  std::set<std::uint32_t> seen(labels.begin(), labels.end());
  return static_cast<std::uint32_t>(seen.size());
}

int tying_target(double fraction, std::uint32_t attested) {
  int target = static_cast<int>(std::lround(fraction * static_cast<double>(attested)));
  target = std::max(1, std::min<int>(target, static_cast<int>(attested)));
  return target;
}

FrameCorpus head(const FrameCorpus& corpus, std::size_t frames) {
  if (frames >= corpus.frame_count()) return corpus;
  FrameCorpus out;
  out.language = corpus.language;
  out.features = corpus.features.topRows(static_cast<Eigen::Index>(frames));
  out.labels.assign(corpus.labels.begin(),
                    corpus.labels.begin() + static_cast<std::ptrdiff_t>(frames));
  for (std::uint32_t u : corpus.utterance_starts)
    if (u < frames) out.utterance_starts.push_back(u);
  return out;
}

void save_tying(const TiedStateInventory& tying, const fs::path& path,
                const std::string& config_hash) {
  json j;
  j["format_version"] = 1;
  j["language"] = tying.language;
  j["config_hash"] = config_hash;
  j["clusters"] = tying.clusters;
  write_text_if_changed(path, j.dump(2) + "\n");
}

TiedStateInventory load_tying(const fs::path& path, const std::string& expected_hash) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("missing artifact: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MissingArtifact(path.string() + ": unparseable (" + e.what() + ")");
  }
  if (j.value("config_hash", "") != expected_hash)
    throw MissingArtifact(path.string() + ": config hash mismatch (stale artifact)");
  TiedStateInventory tying;
  tying.language = j.at("language").get<std::string>();
  tying.clusters = j.at("clusters").get<std::vector<std::vector<int>>>();
  tying.validate();
  return tying;
}

struct CsvTable {
  std::string text;

  explicit CsvTable(const std::string& config_hash, std::uint64_t seed,
                    const std::vector<std::pair<std::string, std::string>>& notes = {}) {
    text = "# config_hash=" + config_hash + "\n# seed=" + std::to_string(seed) + "\n";
    for (const auto& [k, v] : notes) text += "# " + k + "=" + v + "\n";
  }
  void header(const std::vector<std::string>& cols) { row(cols); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text += ',';
      text += cells[i];
    }
    text += '\n';
  }
  void comment(const std::string& line) { text += "# " + line + "\n"; }
};

struct StageContext {
  const ExperimentConfig& cfg;
  const ArtifactPaths& paths;
  std::string hash;

  StageContext(const ExperimentConfig& c, const ArtifactPaths& p)
      : cfg(c), paths(p), hash(c.hash()) {
    cfg.validate();
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// artifact loading
// ---------------------------------------------------------------------------

LoadedFamily load_family(const ExperimentConfig& cfg, const ArtifactPaths& paths) {
  const std::string hash = cfg.hash();
  LoadedFamily family;
  for (const auto& name : cfg.names) {
    std::map<std::string, std::string> extra;
    family.langs.push_back(load_language(paths.language(name), &extra));
    if (extra["config_hash"] != hash)
      throw MissingArtifact(paths.language(name).string() +
                            ": config hash mismatch (stale artifact)");
    for (const std::string role : {"train", "val", "test"}) {
      std::map<std::string, std::string> corpus_extra;
      FrameCorpus corpus = load_corpus(paths.corpus(name, role), &corpus_extra);
      if (corpus_extra["config_hash"] != hash)
        throw MissingArtifact(paths.corpus(name, role).string() +
                              ": config hash mismatch (stale artifact)");
      if (role == "train")
        family.train.push_back(std::move(corpus));
      else if (role == "val")
        family.val.push_back(std::move(corpus));
      else
        family.test.push_back(std::move(corpus));
    }
  }
  return family;
}

AcousticModel load_acoustic_model(const ArtifactPaths& paths, const std::string& name,
                                  const std::string& expected_hash) {
  CheckpointMeta meta;
  AcousticModel model;
  model.net = load_checkpoint(paths.am_stem(name), &meta);
  if (meta.extra["config_hash"] != expected_hash)
    throw MissingArtifact(paths.am_stem(name).string() +
                          ".meta: config hash mismatch (stale artifact)");
  model.language = meta.extra.at("language");
  model.train_seed = meta.seed;
  model.data_fingerprint = std::stoull(meta.extra.at("data_fingerprint"), nullptr, 16);
  model.val_frame_error = std::stod(meta.extra.at("val_frame_error"));
  model.val_loss = std::stod(meta.extra.at("val_loss"));
  model.tying = load_tying(paths.tying(name), expected_hash);
  model.validate();
  return model;
}

MappingNetwork load_mapping(const ArtifactPaths& paths, const std::string& source,
                            const std::string& target, const std::string& expected_hash) {
  CheckpointMeta meta;
  MappingNetwork mapnet;
  mapnet.net = load_checkpoint(paths.map_stem(source, target), &meta);
  if (meta.extra["config_hash"] != expected_hash)
    throw MissingArtifact(paths.map_stem(source, target).string() +
                          ".meta: config hash mismatch (stale artifact)");
  mapnet.source_model = meta.extra.at("source_model");
  mapnet.target_model = meta.extra.at("target_model");
  mapnet.train_seed = meta.seed;
  mapnet.train_frames = std::stoull(meta.extra.at("train_frames"));
  mapnet.final_val_kl = std::stod(meta.extra.at("final_val_kl"));
  return mapnet;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

void run_generate(const ExperimentConfig& cfg, const ArtifactPaths& paths, std::ostream& log) {
  StageContext ctx(cfg, paths);
  fs::create_directories(paths.family_dir());

  log << "[generate] config hash " << ctx.hash << "\n";
  {
    const bool existed = fs::exists(paths.config_copy());
    const bool rewrote = write_text_if_changed(paths.config_copy(), cfg.canonical_text());
    log_write(log, paths.config_copy(), existed, existed && rewrote);
  }

  const std::vector<LanguageSpec> langs = make_language_family(cfg.family_config());
  const std::size_t total = cfg.train_frames + cfg.val_frames + cfg.test_frames;
  const double t = static_cast<double>(total);
  const std::vector<double> fractions = {cfg.train_frames / t, cfg.val_frames / t,
                                         cfg.test_frames / t};

  for (std::size_t i = 0; i < langs.size(); ++i) {
    const auto& lang = langs[i];
    {
      const fs::path path = paths.language(lang.name);
      const bool existed = fs::exists(path);
      const bool rewrote = save_language(lang, path, {{"config_hash", ctx.hash}});
      log_write(log, path, existed, existed && rewrote);
    }
    FrameCorpus whole = sample_corpus(lang, total, derive_seed(cfg.seed, "corpus", i),
                                      cfg.mean_utterance_segments);
    auto splits = split_corpus(whole, fractions, derive_seed(cfg.seed, "split", i));
    const char* roles[] = {"train", "val", "test"};
    for (std::size_t s = 0; s < 3; ++s) {
      const fs::path stem = paths.corpus(lang.name, roles[s]);
      const fs::path blob = fs::path(stem.string() + ".pmfc");
      const bool existed = fs::exists(blob);
      const bool rewrote = save_corpus(splits[s], stem,
                                       {{"config_hash", ctx.hash}, {"role", roles[s]}});
      log_write(log, blob, existed, existed && rewrote);
      log << "  " << lang.name << "." << roles[s] << ": " << splits[s].frame_count()
          << " frames, " << splits[s].utterance_count() << " utterances\n";
    }
  }
}

// ---------------------------------------------------------------------------
// train-am
// ---------------------------------------------------------------------------

void run_train_am(const ExperimentConfig& cfg, const ArtifactPaths& paths, int jobs,
                  std::ostream& log) {
  StageContext ctx(cfg, paths);
  LoadedFamily family = load_family(cfg, paths);
  fs::create_directories(paths.models_dir());

  AmConfig am;
  am.hidden_dims = cfg.am_hidden_dims;
  am.activation = activation_from_string(cfg.am_activation);
  am.train = cfg.am_train;

  const std::size_t n = family.langs.size();
  std::vector<AcousticModel> models(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto& lang = family.langs[i];
    const std::uint32_t attested = count_attested(family.train[i].labels);
    TiedStateInventory tying =
        tie_states(family.train[i], lang, tying_target(cfg.tying_fraction, attested),
                   cfg.min_solo_frames);
    AmConfig local = am;
    local.train.rng_seed = derive_seed(cfg.seed, "am", i);
    models[i] = train_acoustic_model(family.train[i], family.val[i], lang, tying, local);
  });

  for (std::size_t i = 0; i < n; ++i) {
    const AcousticModel& model = models[i];
    CheckpointMeta meta;
    meta.seed = model.train_seed;
    meta.extra["language"] = model.language;
    meta.extra["config_hash"] = ctx.hash;
    meta.extra["data_fingerprint"] = to_hex(model.data_fingerprint);
    meta.extra["class_count"] = std::to_string(model.tying.class_count());
    meta.extra["val_frame_error"] = fmt(model.val_frame_error);
    meta.extra["val_loss"] = fmt(model.val_loss);
    save_checkpoint(model.net, paths.am_stem(model.language), meta);
    save_tying(model.tying, paths.tying(model.language), ctx.hash);
    log << "[train-am] " << model.language << ": " << model.tying.class_count()
        << " classes, val error " << fmt(model.val_frame_error * 100.0) << "%\n";
  }

  if (n >= 2) {
    std::vector<const FrameCorpus*> train_ptrs, val_ptrs;
    for (std::size_t i = 0; i < n; ++i) {
      train_ptrs.push_back(&family.train[i]);
      val_ptrs.push_back(&family.val[i]);
    }
    // Union attested count drives the pooled class target.
    PooledInventory inventory = make_pooled_inventory(family.langs);
    std::set<std::uint32_t> attested_union;
    for (std::size_t i = 0; i < n; ++i) {
      const auto translation = inventory.translation_for(family.langs[i]);
      for (std::uint32_t l : family.train[i].labels) attested_union.insert(translation[l]);
    }
    AmConfig pooled_cfg = am;
    pooled_cfg.train.rng_seed = derive_seed(cfg.seed, "am.pooled");
    PooledModel pooled = train_pooled_model(
        train_ptrs, val_ptrs, family.langs,
        tying_target(cfg.tying_fraction, static_cast<std::uint32_t>(attested_union.size())),
        cfg.min_solo_frames, pooled_cfg);

    CheckpointMeta meta;
    meta.seed = pooled.model.train_seed;
    meta.extra["language"] = "pooled";
    meta.extra["config_hash"] = ctx.hash;
    meta.extra["data_fingerprint"] = to_hex(pooled.model.data_fingerprint);
    meta.extra["class_count"] = std::to_string(pooled.model.tying.class_count());
    meta.extra["val_frame_error"] = fmt(pooled.model.val_frame_error);
    meta.extra["val_loss"] = fmt(pooled.model.val_loss);
    save_checkpoint(pooled.model.net, paths.am_stem("pooled"), meta);
    save_tying(pooled.model.tying, paths.tying("pooled"), ctx.hash);
    json inv;
    inv["format_version"] = 1;
    inv["config_hash"] = ctx.hash;
    json pairs = json::array();
    for (const auto& [l, c] : pooled.inventory.biphones) pairs.push_back({l, c});
    inv["biphones"] = std::move(pairs);
    write_text_if_changed(paths.pooled_inventory(), inv.dump(2) + "\n");
    log << "[train-am] pooled: " << pooled.model.tying.class_count()
        << " classes over " << pooled.inventory.biphone_count() << " union biphones, val error "
        << fmt(pooled.model.val_frame_error * 100.0) << "%\n";
  }
}

// ---------------------------------------------------------------------------
// train-map
// ---------------------------------------------------------------------------

namespace {

PooledInventory load_pooled_inventory(const ArtifactPaths& paths,
                                      const std::string& expected_hash) {
  std::ifstream in(paths.pooled_inventory());
  if (!in) throw MissingArtifact("missing artifact: " + paths.pooled_inventory().string());
  json j;
  in >> j;
  if (j.value("config_hash", "") != expected_hash)
    throw MissingArtifact(paths.pooled_inventory().string() + ": config hash mismatch");
  PooledInventory inv;
  for (const auto& pair : j.at("biphones"))
    inv.biphones.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  return inv;
}

struct OrderedPair {
  std::size_t target;
  std::size_t source;
};

std::vector<OrderedPair> ordered_pairs(std::size_t n) {
  std::vector<OrderedPair> pairs;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s < n; ++s)
      if (s != t) pairs.push_back({t, s});
  return pairs;
}

}  // namespace

void run_train_map(const ExperimentConfig& cfg, const ArtifactPaths& paths, int jobs,
                   std::ostream& log) {
  StageContext ctx(cfg, paths);
  LoadedFamily family = load_family(cfg, paths);
  fs::create_directories(paths.maps_dir());

  const std::size_t n = family.langs.size();
  std::vector<AcousticModel> models(n);
  for (std::size_t i = 0; i < n; ++i)
    models[i] = load_acoustic_model(paths, cfg.names[i], ctx.hash);

  MapConfig map_cfg;
  map_cfg.hidden_factor = cfg.map_hidden_factor;
  map_cfg.activation = activation_from_string(cfg.map_activation);
  map_cfg.train = cfg.map_train;

  const auto pairs = ordered_pairs(n);
  std::vector<MappingNetwork> nets(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const auto [t, s] = pairs[p];
    const FrameCorpus capped = head(family.train[t], cfg.map_train_frame_cap);
    PosteriorPairs train_pairs = build_training_pairs(posteriors(models[s], capped),
                                                      posteriors(models[t], capped));
    PosteriorPairs val_pairs = build_training_pairs(posteriors(models[s], family.val[t]),
                                                    posteriors(models[t], family.val[t]));
    MapConfig local = map_cfg;
    local.train.rng_seed = derive_seed(cfg.seed, "map", p);
    nets[p] = train_mapping(train_pairs, val_pairs, local);
  });

  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [t, s] = pairs[p];
    const MappingNetwork& net = nets[p];
    CheckpointMeta meta;
    meta.seed = net.train_seed;
    meta.extra["config_hash"] = ctx.hash;
    meta.extra["source_model"] = net.source_model;
    meta.extra["target_model"] = net.target_model;
    meta.extra["source_checkpoint"] = to_hex(checkpoint_fingerprint(models[s].net));
    meta.extra["target_checkpoint"] = to_hex(checkpoint_fingerprint(models[t].net));
    meta.extra["train_frames"] = std::to_string(net.train_frames);
    meta.extra["final_val_kl"] = fmt(net.final_val_kl);
    save_checkpoint(net.net, paths.map_stem(cfg.names[s], cfg.names[t]), meta);
    log << "[train-map] " << cfg.names[s] << " -> " << cfg.names[t] << ": val KL "
        << fmt(net.final_val_kl) << " (" << net.train_frames << " frames)\n";
  }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

namespace {

struct PairAnalysis {
  SimilarityReport report;
  std::vector<PosteriorgramRow> posteriorgram;
  double mean_probe_entropy_low_n = 0.0;
  int probe_n = 0;
};

void write_pair_csv(const fs::path& path, const SimilarityReport& report,
                    const std::string& hash, std::uint64_t seed) {
  CsvTable csv(hash, seed, {{"target", report.target_language},
                            {"source", report.source_language}});
  csv.header({"subset", "frames", "pct_correct_samc", "mean_kl", "mean_kl_samc",
              "mean_entropy", "mean_entropy_samc"});
  for (const auto& row : report.rows)
    csv.row({row.name, std::to_string(row.frames), fmt_opt(row.pct_correct_samc),
             fmt_opt(row.mean_kl), fmt_opt(row.mean_kl_samc), fmt_opt(row.mean_entropy),
             fmt_opt(row.mean_entropy_samc)});
  csv.row({"ALL", std::to_string(report.total_frames), "", fmt(report.overall_kl), "",
           fmt(report.overall_entropy), ""});
  write_text_if_changed(path, csv.text);
}

json pair_json(const SimilarityReport& report, const std::string& hash, std::uint64_t seed) {
  json j;
  j["config_hash"] = hash;
  j["seed"] = seed;
  j["target"] = report.target_language;
  j["source"] = report.source_language;
  j["overall_mean_kl"] = report.overall_kl;
  j["overall_mean_entropy"] = report.overall_entropy;
  j["total_frames"] = report.total_frames;
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r;
    r["subset"] = row.name;
    r["frames"] = row.frames;
    auto set = [&r](const char* key, const std::optional<double>& v) {
      if (v)
        r[key] = *v;
      else
        r[key] = nullptr;
    };
    set("pct_correct_samc", row.pct_correct_samc);
    set("mean_kl", row.mean_kl);
    set("mean_kl_samc", row.mean_kl_samc);
    set("mean_entropy", row.mean_entropy);
    set("mean_entropy_samc", row.mean_entropy_samc);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

void write_probe_csv(const fs::path& path, const std::vector<PosteriorgramRow>& rows,
                     int top_k, const std::string& target, const std::string& source,
                     const std::string& hash, std::uint64_t seed) {
  CsvTable csv(hash, seed, {{"target", target},
                      {"source", source},
                      {"rows", std::to_string(rows.size())},
                      {"top_k", std::to_string(top_k)}});
  std::vector<std::string> header = {"rank", "source_class", "entropy"};
  for (int k = 1; k <= top_k; ++k) {
    header.push_back("class_" + std::to_string(k));
    header.push_back("prob_" + std::to_string(k));
  }
  csv.header(header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> cells = {std::to_string(i + 1),
                                      std::to_string(rows[i].source_class),
                                      fmt(rows[i].entropy)};
    for (const auto& [cls, prob] : rows[i].top) {
      cells.push_back(std::to_string(cls));
      cells.push_back(fmt(prob));
    }
    csv.row(cells);
  }
  write_text_if_changed(path, csv.text);
}

}  // namespace

void run_analyze(const ExperimentConfig& cfg, const ArtifactPaths& paths, int jobs,
                 std::ostream& log) {
  StageContext ctx(cfg, paths);
  LoadedFamily family = load_family(cfg, paths);
  fs::create_directories(paths.streams_dir());
  fs::create_directories(paths.analysis_dir());

  const std::size_t n = family.langs.size();
  std::vector<AcousticModel> models(n);
  for (std::size_t i = 0; i < n; ++i)
    models[i] = load_acoustic_model(paths, cfg.names[i], ctx.hash);

  // Table 1 analog: phoneme share percentages.
  {
    const Mat table = overlap_table(family.langs);
    CsvTable csv(ctx.hash, cfg.seed);
    std::vector<std::string> header = {"shared_with"};
    for (const auto& name : cfg.names) header.push_back(name);
    csv.header(header);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> cells = {cfg.names[i]};
      for (std::size_t j = 0; j < n; ++j)
        cells.push_back(fmt(table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      csv.row(cells);
    }
    write_text_if_changed(paths.analysis_dir() / "table1_overlap.csv", csv.text);
    json j;
    j["config_hash"] = ctx.hash;
    j["seed"] = cfg.seed;
    j["languages"] = cfg.names;
    json values = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      json row = json::array();
      for (std::size_t j2 = 0; j2 < n; ++j2)
        row.push_back(table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j2)));
      values.push_back(std::move(row));
    }
    j["shares_pct"] = std::move(values);
    write_text_if_changed(paths.analysis_dir() / "table1_overlap.json", j.dump(2) + "\n");
  }

  // Target-side streams (shared across that target's pairs).
  std::vector<PosteriorStream> target_test(n), target_val(n);
  parallel_for(n, jobs, [&](std::size_t t) {
    target_test[t] = posteriors(models[t], family.test[t]);
    target_val[t] = posteriors(models[t], family.val[t]);
  });
  for (std::size_t t = 0; t < n; ++t) {
    save_stream(target_test[t], paths.stream(cfg.names[t], "test", "target"));
    save_stream(target_val[t], paths.stream(cfg.names[t], "val", "target"));
  }

  const auto pairs = ordered_pairs(n);
  std::vector<PairAnalysis> analyses(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const auto [t, s] = pairs[p];
    MappingNetwork mapnet = load_mapping(paths, cfg.names[s], cfg.names[t], ctx.hash);

    PosteriorStream source_test = posteriors(models[s], family.test[t]);
    PosteriorStream mapped_test = map_stream(mapnet, source_test);
    PosteriorStream source_val = posteriors(models[s], family.val[t]);
    PosteriorStream mapped_val = map_stream(mapnet, source_val);
    save_stream(source_test, paths.stream(cfg.names[t], "test", "source_" + cfg.names[s]));
    save_stream(mapped_test, paths.stream(cfg.names[t], "test", "mapped_" + cfg.names[s]));
    save_stream(mapped_val, paths.stream(cfg.names[t], "val", "mapped_" + cfg.names[s]));

    BiphoneSubsetPartition partition =
        partition_biphones(family.langs[t], family.langs[s],
                           models[s].tying.attested_biphones(), models[t].tying);
    const std::vector<int> class_map =
        samc_class_map(family.langs[t], partition, family.langs[s], models[s].tying);
    const std::vector<std::uint8_t> samc =
        samc_correct(source_test, partition, family.test[t].labels, class_map);

    PairAnalysis& out = analyses[p];
    out.report = subset_report(target_test[t], mapped_test, partition,
                               family.test[t].labels, cfg.names[s], &samc);

    const auto probe = probe_one_hot(mapnet);
    out.probe_n = std::min(cfg.probe_top_n, mapnet.source_dim());
    const int top_k = std::min(cfg.probe_top_k, mapnet.target_dim());
    out.posteriorgram = top_n_posteriorgram(probe, out.probe_n, top_k);
    out.mean_probe_entropy_low_n = mean_low_entropy(probe, out.probe_n);
  });

  std::vector<SimilarityReport> reports;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [t, s] = pairs[p];
    const PairAnalysis& a = analyses[p];
    const std::string stem = "pair_" + cfg.names[t] + "_from_" + cfg.names[s];
    write_pair_csv(paths.analysis_dir() / (stem + ".csv"), a.report, ctx.hash, cfg.seed);
    json j = pair_json(a.report, ctx.hash, cfg.seed);
    j["mean_probe_entropy_low_n"] = a.mean_probe_entropy_low_n;
    j["probe_n"] = a.probe_n;
    write_text_if_changed(paths.analysis_dir() / (stem + ".json"), j.dump(2) + "\n");
    write_probe_csv(paths.analysis_dir() / ("probe_" + cfg.names[t] + "_from_" +
                                            cfg.names[s] + ".csv"),
                    a.posteriorgram, a.posteriorgram.empty() ? 0 : static_cast<int>(a.posteriorgram.front().top.size()),
                    cfg.names[t], cfg.names[s], ctx.hash, cfg.seed);
    reports.push_back(a.report);
    log << "[analyze] " << cfg.names[t] << " <- " << cfg.names[s] << ": D_X "
        << fmt(a.report.overall_kl) << ", SS frames "
        << a.report.row("SS")->frames << "\n";
  }

  // Identity-mapped diagonal: computed, not assumed.
  std::vector<double> diagonal(n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    diagonal[t] = mean_kl(target_test[t].posteriors, target_test[t].posteriors);

  SimilarityMatrix matrix = similarity_matrix(cfg.names, reports);
  for (std::size_t t = 0; t < n; ++t)
    matrix.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) = diagonal[t];
  {
    CsvTable csv(ctx.hash, cfg.seed, {{"rows", "target"}, {"cols", "source"}});
    std::vector<std::string> header = {"target"};
    for (const auto& name : cfg.names) header.push_back(name);
    csv.header(header);
    for (std::size_t t = 0; t < n; ++t) {
      std::vector<std::string> cells = {cfg.names[t]};
      for (std::size_t s = 0; s < n; ++s)
        cells.push_back(fmt(matrix.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s))));
      csv.row(cells);
    }
    write_text_if_changed(paths.analysis_dir() / "table5_similarity_matrix.csv", csv.text);
    json j;
    j["config_hash"] = ctx.hash;
    j["seed"] = cfg.seed;
    j["languages"] = cfg.names;
    json values = json::array();
    for (std::size_t t = 0; t < n; ++t) {
      json row = json::array();
      for (std::size_t s = 0; s < n; ++s)
        row.push_back(matrix.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)));
      values.push_back(std::move(row));
    }
    j["mean_kl"] = std::move(values);
    write_text_if_changed(paths.analysis_dir() / "table5_similarity_matrix.json",
                          j.dump(2) + "\n");
  }

  // Pooled-vs-monolingual baseline and the per-shared-phoneme degradation.
  if (n >= 2) {
    AcousticModel pooled_model = load_acoustic_model(paths, "pooled", ctx.hash);
    PooledInventory inventory = load_pooled_inventory(paths, ctx.hash);
    const std::vector<std::string> shared = shared_symbols_all(family.langs);

    CsvTable baseline(ctx.hash, cfg.seed);
    baseline.header({"language", "mono_classes", "pooled_classes", "mono_val_error_pct",
                     "mono_test_error_pct", "pooled_test_error_pct"});
    json jb;
    jb["config_hash"] = ctx.hash;
    jb["seed"] = cfg.seed;
    json jb_rows = json::array();
    for (std::size_t t = 0; t < n; ++t) {
      PosteriorStream pooled_stream = posteriors(pooled_model, family.test[t]);
      const auto translation = inventory.translation_for(family.langs[t]);

      const FrameErrorReport mono_err = frame_error(target_test[t], models[t].tying);
      const FrameErrorReport pooled_err =
          frame_error(pooled_stream, pooled_model.tying, &translation);
      baseline.row({cfg.names[t], std::to_string(models[t].tying.class_count()),
                    std::to_string(pooled_model.tying.class_count()),
                    fmt(models[t].val_frame_error * 100.0),
                    fmt(mono_err.lenient_error * 100.0),
                    fmt(pooled_err.lenient_error * 100.0)});
      json jb_row;
      jb_row["language"] = cfg.names[t];
      jb_row["mono_classes"] = models[t].tying.class_count();
      jb_row["pooled_classes"] = pooled_model.tying.class_count();
      jb_row["mono_val_error_pct"] = models[t].val_frame_error * 100.0;
      jb_row["mono_test_error_pct"] = mono_err.lenient_error * 100.0;
      jb_row["pooled_test_error_pct"] = pooled_err.lenient_error * 100.0;
      jb_rows.push_back(std::move(jb_row));

      auto mono_by_phoneme = per_center_phoneme_error(
          target_test[t], models[t].tying, nullptr, family.test[t].labels, family.langs[t]);
      auto pooled_by_phoneme = per_center_phoneme_error(
          pooled_stream, pooled_model.tying, &translation, family.test[t].labels,
          family.langs[t]);
      PerClassDeltaReport delta = per_class_error_delta(mono_by_phoneme, pooled_by_phoneme, shared);

      CsvTable csv(ctx.hash, cfg.seed, {{"language", cfg.names[t]}});
      csv.header({"phoneme", "frames", "mono_error_pct", "pooled_error_pct",
                  "delta_points", "relative_improvement_pct"});
      for (const auto& row : delta.rows)
        csv.row({row.phoneme, std::to_string(row.frames), fmt(row.mono_error * 100.0),
                 fmt(row.pooled_error * 100.0), fmt(row.delta_points),
                 fmt(row.relative_improvement)});
      if (!delta.excluded.empty()) {
        std::string excluded;
        for (const auto& p : delta.excluded)
          excluded += (excluded.empty() ? "" : ";") + p;
        csv.comment("excluded=" + excluded);
      }
      write_text_if_changed(paths.analysis_dir() / ("degradation_" + cfg.names[t] + ".csv"),
                            csv.text);
    }
    write_text_if_changed(paths.analysis_dir() / "baseline.csv", baseline.text);
    jb["rows"] = std::move(jb_rows);
    write_text_if_changed(paths.analysis_dir() / "baseline.json", jb.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// fuse
// ---------------------------------------------------------------------------

void run_fuse(const ExperimentConfig& cfg, const ArtifactPaths& paths, std::ostream& log) {
  StageContext ctx(cfg, paths);
  fs::create_directories(paths.fusion_dir());
  const std::size_t n = cfg.names.size();
  if (n < 2) throw ConfigError("fuse: needs at least 2 languages");

  CsvTable table6(ctx.hash, cfg.seed);
  table6.header({"language", "sources", "mono_error_pct", "fused_error_pct",
                 "relative_improvement_pct", "val_mono_error_pct", "val_fused_error_pct",
                 "w_target", "w_sources"});
  json j6;
  j6["config_hash"] = ctx.hash;
  j6["seed"] = cfg.seed;
  json rows6 = json::array();

  for (std::size_t t = 0; t < n; ++t) {
    const TiedStateInventory tying = load_tying(paths.tying(cfg.names[t]), ctx.hash);
    PosteriorStream val_target = load_stream(paths.stream(cfg.names[t], "val", "target"));
    PosteriorStream test_target = load_stream(paths.stream(cfg.names[t], "test", "target"));

    std::vector<std::string> sources;
    std::vector<PosteriorStream> val_mapped, test_mapped;
    for (std::size_t s = 0; s < n; ++s) {
      if (s == t) continue;
      sources.push_back(cfg.names[s]);
      val_mapped.push_back(load_stream(paths.stream(cfg.names[t], "val", "mapped_" + cfg.names[s])));
      test_mapped.push_back(load_stream(paths.stream(cfg.names[t], "test", "mapped_" + cfg.names[s])));
    }
    std::vector<const PosteriorStream*> val_ptrs, test_ptrs;
    for (const auto& s : val_mapped) val_ptrs.push_back(&s);
    for (const auto& s : test_mapped) test_ptrs.push_back(&s);

    WeightSearchResult search = search_weights(val_target, val_ptrs, tying, cfg.fusion_grid_step);

    {
      CsvTable trace(ctx.hash, cfg.seed, {{"language", cfg.names[t]}});
      std::vector<std::string> header = {"w_target"};
      for (const auto& s : sources) header.push_back("w_" + s);
      header.push_back("val_error_pct");
      trace.header(header);
      for (const auto& point : search.trace) {
        std::vector<std::string> cells = {fmt(point.config.target_weight)};
        for (double w : point.config.source_weights) cells.push_back(fmt(w));
        cells.push_back(fmt(point.val_error * 100.0));
        trace.row(cells);
      }
      write_text_if_changed(paths.fusion_dir() / ("trace_" + cfg.names[t] + ".csv"),
                            trace.text);
    }

    const double val_mono = frame_error(val_target, tying).tied_error;
    const double test_mono = frame_error(test_target, tying).tied_error;
    const PosteriorStream fused_test = fuse_stream(test_target, test_ptrs, search.best);
    const double test_fused = frame_error(fused_test, tying).tied_error;
    const double rel_improvement =
        test_mono > 0.0 ? (test_mono - test_fused) / test_mono * 100.0
                        : std::numeric_limits<double>::quiet_NaN();

    std::string source_list, weight_list;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      source_list += (s ? ";" : "") + sources[s];
      weight_list += (s ? ";" : "") + fmt(search.best.source_weights[s]);
    }
    table6.row({cfg.names[t], source_list, fmt(test_mono * 100.0), fmt(test_fused * 100.0),
                fmt(rel_improvement), fmt(val_mono * 100.0),
                fmt(search.best_val_error * 100.0), fmt(search.best.target_weight),
                weight_list});

    json row;
    row["language"] = cfg.names[t];
    row["sources"] = sources;
    row["mono_error_pct"] = test_mono * 100.0;
    row["fused_error_pct"] = test_fused * 100.0;
    if (std::isnan(rel_improvement))
      row["relative_improvement_pct"] = nullptr;
    else
      row["relative_improvement_pct"] = rel_improvement;
    row["val_mono_error_pct"] = val_mono * 100.0;
    row["val_fused_error_pct"] = search.best_val_error * 100.0;
    row["w_target"] = search.best.target_weight;
    row["w_sources"] = search.best.source_weights;
    rows6.push_back(std::move(row));

    log << "[fuse] " << cfg.names[t] << ": mono " << fmt(test_mono * 100.0)
        << "% -> fused " << fmt(test_fused * 100.0) << "% (w_T "
        << fmt(search.best.target_weight) << ")\n";
  }

  write_text_if_changed(paths.fusion_dir() / "table6_fusion.csv", table6.text);
  j6["rows"] = std::move(rows6);
  write_text_if_changed(paths.fusion_dir() / "table6_fusion.json", j6.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void run_report(const ExperimentConfig& cfg, const ArtifactPaths& paths, std::ostream& log) {
  StageContext ctx(cfg, paths);
  fs::create_directories(paths.report_dir());

  std::vector<fs::path> files;
  for (const fs::path& dir : {paths.analysis_dir(), paths.fusion_dir()}) {
    if (!fs::exists(dir))
      throw MissingArtifact("missing artifact: " + dir.string() + " (run analyze/fuse first)");
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  json index;
  index["config_hash"] = ctx.hash;
  index["seed"] = cfg.seed;
  json listed = json::array();
  for (const auto& file : files) {
    const fs::path dest = paths.report_dir() / file.filename();
    write_file_if_changed(dest, read_file_bytes(file));
    listed.push_back(file.filename().string());
  }
  index["files"] = std::move(listed);
  write_text_if_changed(paths.report_dir() / "index.json", index.dump(2) + "\n");
  log << "[report] bundled " << files.size() << " tables into " << paths.report_dir().string()
      << "\n";
}

}  // namespace posim
