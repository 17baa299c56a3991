#pragma once

#include "posim/acoustic.hpp"
#include "posim/mapping.hpp"
#include "posim/synthlang.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace posim {

// The declarative description of one full experiment: synthetic family,
// corpus sizes, tying, model/training hyperparameters and analysis knobs.
// Serializes to a canonical JSON text whose hash fingerprints every artifact
// the pipeline writes.
struct ExperimentConfig {
  std::uint64_t seed = 20260101;

  // family
  std::vector<std::string> names = {"L0", "L1", "L2"};
  std::vector<int> phoneme_counts = {30, 30, 30};
  std::vector<std::vector<double>> overlaps = {{1.0, 0.70, 0.70},
                                               {0.70, 1.0, 0.85},
                                               {0.70, 0.85, 1.0}};
  std::vector<double> drift = {0.5, 0.5, 0.5};
  int feature_dim = 24;
  int biphones_per_language = 300;
  int mean_segment_frames = 5;
  double phoneme_spread = 1.0;
  double biphone_jitter = 0.15;
  double stddev_min = 0.4;
  double stddev_max = 0.7;

  // corpus
  std::size_t train_frames = 60000;
  std::size_t val_frames = 2000;
  std::size_t test_frames = 4000;
  int mean_utterance_segments = 20;

  // tying
  double tying_fraction = 0.6;
  int min_solo_frames = 50;

  // acoustic model training
  std::vector<int> am_hidden_dims = {128};
  std::string am_activation = "tanh";
  TrainConfig am_train{0.25, 256, 24, 4, 0, 0.0};

  // mapping network training
  double map_hidden_factor = 2.0;
  std::string map_activation = "tanh";
  std::size_t map_train_frame_cap = 30000;
  TrainConfig map_train{0.25, 256, 14, 3, 0, 0.0};

  // fusion + probing
  double fusion_grid_step = 0.1;
  int probe_top_n = 100;
  int probe_top_k = 10;

  int language_count() const { return static_cast<int>(names.size()); }

  // Canonical text form (sorted keys, full field set) and its hash.
  std::string canonical_text() const;
  std::string hash() const;

  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void validate() const;  // throws ConfigError
  FamilyConfig family_config() const;

  // The frozen synthetic family driving the qualitative claims.
  static ExperimentConfig standard();
  // Minutes-scale variant for smoke tests and format checks.
  static ExperimentConfig smoke();
};

// Filesystem layout of one experiment's artifacts.
struct ArtifactPaths {
  std::filesystem::path root;

  std::filesystem::path config_copy() const { return root / "config.json"; }
  std::filesystem::path family_dir() const { return root / "family"; }
  std::filesystem::path models_dir() const { return root / "models"; }
  std::filesystem::path maps_dir() const { return root / "maps"; }
  std::filesystem::path streams_dir() const { return root / "streams"; }
  std::filesystem::path analysis_dir() const { return root / "analysis"; }
  std::filesystem::path fusion_dir() const { return root / "fusion"; }
  std::filesystem::path report_dir() const { return root / "report"; }

  std::filesystem::path language(const std::string& name) const;
  std::filesystem::path corpus(const std::string& name, const std::string& role) const;
  std::filesystem::path am_stem(const std::string& name) const;
  std::filesystem::path tying(const std::string& name) const;
  std::filesystem::path pooled_inventory() const;
  std::filesystem::path map_stem(const std::string& source, const std::string& target) const;
  std::filesystem::path stream(const std::string& target, const std::string& role,
                               const std::string& kind) const;
};

// Pipeline stages. Each stage reads the previous stage's artifacts from disk,
// refuses inputs whose config hash differs, and writes deterministically
// (reruns leave byte-identical trees). `jobs` bounds worker threads for
// per-language/per-pair work; results merge in a fixed order.
void run_generate(const ExperimentConfig& cfg, const ArtifactPaths& paths, std::ostream& log);
void run_train_am(const ExperimentConfig& cfg, const ArtifactPaths& paths, int jobs, std::ostream& log);
void run_train_map(const ExperimentConfig& cfg, const ArtifactPaths& paths, int jobs, std::ostream& log);
void run_analyze(const ExperimentConfig& cfg, const ArtifactPaths& paths, int jobs, std::ostream& log);
void run_fuse(const ExperimentConfig& cfg, const ArtifactPaths& paths, std::ostream& log);
void run_report(const ExperimentConfig& cfg, const ArtifactPaths& paths, std::ostream& log);

// Loaded views of persisted artifacts, shared by analyze/fuse and tests.
struct LoadedFamily {
  std::vector<LanguageSpec> langs;
  std::vector<FrameCorpus> train, val, test;
};
LoadedFamily load_family(const ExperimentConfig& cfg, const ArtifactPaths& paths);

AcousticModel load_acoustic_model(const ArtifactPaths& paths, const std::string& name,
                                  const std::string& expected_hash);
MappingNetwork load_mapping(const ArtifactPaths& paths, const std::string& source,
                            const std::string& target, const std::string& expected_hash);

}  // namespace posim
