#pragma once

#include "posim/net.hpp"
#include "posim/stream.hpp"
#include "posim/synthlang.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace posim {

// Partition of the training-attested biphones into tied-state classes.
// Singleton clusters are the "restricted" ones.
struct TiedStateInventory {
  std::string language;
  std::vector<std::vector<int>> clusters;  // sorted biphone indices per class

  int class_count() const { return static_cast<int>(clusters.size()); }
  bool restricted(int cls) const { return clusters[static_cast<std::size_t>(cls)].size() == 1; }
  // Class of a biphone, or nullopt when the biphone was unattested.
  std::optional<int> class_of(int biphone) const;
  std::vector<int> attested_biphones() const;

  void validate() const;

 private:
  mutable std::vector<int> class_lookup_;  // built lazily, -1 = unattested
  void build_lookup() const;
};

// Agglomerative average-linkage merging of biphones by the Euclidean distance
// between their training feature means, down to target_class_count clusters.
// Biphones with at least min_solo_frames frames resist merging while any
// other merge is possible, so frequent biphones survive as restricted
// singletons. Ties break on the lowest biphone index.
TiedStateInventory tie_states(const Mat& features, const std::vector<std::uint32_t>& labels,
                              int biphone_count, int target_class_count,
                              int min_solo_frames, const std::string& language);
TiedStateInventory tie_states(const FrameCorpus& corpus, const LanguageSpec& lang,
                              int target_class_count, int min_solo_frames = 50);

struct AmConfig {
  std::vector<int> hidden_dims = {128};
  Activation activation = Activation::kTanh;
  TrainConfig train;
};

struct AcousticModel {
  std::string language;
  TiedStateInventory tying;
  NetworkParams net;  // input = feature dim, output = tying.class_count()
  std::uint64_t train_seed = 0;
  std::uint64_t data_fingerprint = 0;  // training corpus fingerprint
  double val_frame_error = 0.0;        // tied-class error on the validation split
  double val_loss = 0.0;

  void validate() const;
};

// Trains a softmax frame classifier against one-hot tied-class targets.
AcousticModel train_acoustic_model(const FrameCorpus& train, const FrameCorpus& val,
                                   const LanguageSpec& lang,
                                   const TiedStateInventory& tying, const AmConfig& cfg);

// Per-frame forward pass over a corpus. Reference labels translate to the
// model's tied classes when the corpus language matches the model language
// (unattested biphones become kNoClass); otherwise raw biphone labels are
// retained for cross-lingual analysis.
PosteriorStream posteriors(const AcousticModel& model, const FrameCorpus& corpus);

// Union biphone inventory over several languages. Shared phoneme symbols
// unify biphones; symbols unique to one language keep it distinguishable.
struct PooledInventory {
  std::vector<std::pair<std::string, std::string>> biphones;  // sorted by symbols

  int biphone_count() const { return static_cast<int>(biphones.size()); }
  std::optional<int> index_of(const std::string& left, const std::string& center) const;
  // local biphone index -> union index for one member language
  std::vector<std::uint32_t> translation_for(const LanguageSpec& lang) const;
};

PooledInventory make_pooled_inventory(const std::vector<LanguageSpec>& langs);

struct PooledModel {
  PooledInventory inventory;
  AcousticModel model;  // language = "pooled"; classes over union biphone ids
};

// Concatenates the corpora (labels translated to union ids), ties states over
// the pooled data and trains one classifier.
PooledModel train_pooled_model(const std::vector<const FrameCorpus*>& train,
                               const std::vector<const FrameCorpus*>& val,
                               const std::vector<LanguageSpec>& langs,
                               int target_class_count, int min_solo_frames,
                               const AmConfig& cfg);

// Error of one classifier on frames grouped by the center phoneme of the true
// biphone. `translation` maps corpus-local biphone ids into the tying's
// biphone space (identity when null). Returns center symbol -> (error, frames).
std::map<std::string, std::pair<double, std::size_t>> per_center_phoneme_error(
    const PosteriorStream& stream, const TiedStateInventory& tying,
    const std::vector<std::uint32_t>* translation,
    const std::vector<std::uint32_t>& biphone_labels, const LanguageSpec& lang);

struct PhonemeDelta {
  std::string phoneme;
  std::size_t frames = 0;
  double mono_error = 0.0;
  double pooled_error = 0.0;
  double delta_points = 0.0;         // (pooled - mono) in percentage points
  double relative_improvement = 0.0; // (mono - pooled) / mono * 100; NaN if mono = 0
};

struct PerClassDeltaReport {
  std::vector<PhonemeDelta> rows;
  std::vector<std::string> excluded;  // phonemes with zero test frames
};

// Frame-level analog of a per-shared-phoneme error comparison between a
// monolingual and a pooled model on one test corpus.
PerClassDeltaReport per_class_error_delta(
    const std::map<std::string, std::pair<double, std::size_t>>& mono_errors,
    const std::map<std::string, std::pair<double, std::size_t>>& pooled_errors,
    const std::vector<std::string>& shared_phonemes);

}  // namespace posim
