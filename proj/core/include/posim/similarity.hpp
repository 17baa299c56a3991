#pragma once

#include "posim/acoustic.hpp"
#include "posim/stream.hpp"
#include "posim/synthlang.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace posim {

enum class SubsetTag : std::uint8_t { kSharedSeen, kSharedUnseen, kUnshared };

// Per-biphone subset tags of the target inventory relative to one source
// language, plus per-biphone restricted flags from the target tying.
struct BiphoneSubsetPartition {
  std::vector<SubsetTag> tags;       // one per target biphone
  std::vector<bool> restricted;     // true when the biphone sits alone in its cluster

  std::size_t size() const { return tags.size(); }
  std::size_t count(SubsetTag tag, bool restricted_only = false) const;
};

// Tags each target biphone (l, c): unshared when l or c lies outside the
// source phoneme set; otherwise shared-seen when the symbol pair is attested
// in the source training data, else shared-unseen.
BiphoneSubsetPartition partition_biphones(const LanguageSpec& target_lang,
                                          const LanguageSpec& source_lang,
                                          const std::vector<int>& source_train_attested,
                                          const TiedStateInventory& target_tying);

// For each shared-seen target biphone, the source-model tied class whose
// cluster holds that biphone in the source tying; -1 elsewhere.
std::vector<int> samc_class_map(const LanguageSpec& target_lang,
                                const BiphoneSubsetPartition& partition,
                                const LanguageSpec& source_lang,
                                const TiedStateInventory& source_tying);

// Per-frame source-acoustic-model-class correctness: argmax of the source
// posterior equals the mapped source class of the frame's true biphone.
// Entries are meaningful only where the frame's biphone is shared-seen.
std::vector<std::uint8_t> samc_correct(const PosteriorStream& source_stream,
                                       const BiphoneSubsetPartition& partition,
                                       const std::vector<std::uint32_t>& alignment,
                                       const std::vector<int>& cross_class_map);

struct SubsetRow {
  std::string name;  // SS, RSS, SU, RSU, U, RU
  std::size_t frames = 0;
  std::optional<double> mean_kl;
  std::optional<double> mean_entropy;       // of the mapped posterior
  std::optional<double> pct_correct_samc;   // SS/RSS rows only
  std::optional<double> mean_kl_samc;       // over SAMC-correct frames
  std::optional<double> mean_entropy_samc;
};

struct SimilarityReport {
  std::string target_language;
  std::string source_language;
  std::vector<SubsetRow> rows;  // SS, RSS, SU, RSU, U, RU in this order
  double overall_kl = 0.0;      // D_X over the whole observation set
  double overall_entropy = 0.0; // mean mapped entropy over all frames
  std::size_t total_frames = 0;

  const SubsetRow* row(const std::string& name) const;
};

// Groups test frames by the subset tag of their true biphone and aggregates
// KL(target || mapped), mapped entropy and SAMC statistics per row. Restricted
// rows use only frames whose biphone is restricted. Conditional cells stay
// empty over empty frame sets. source_name labels the report (the mapped
// stream itself lives in target class space).
SimilarityReport subset_report(const PosteriorStream& target_stream,
                               const PosteriorStream& mapped_stream,
                               const BiphoneSubsetPartition& partition,
                               const std::vector<std::uint32_t>& alignment,
                               const std::string& source_name,
                               const std::vector<std::uint8_t>* samc = nullptr);

struct SimilarityMatrix {
  std::vector<std::string> languages;
  Mat values;  // rows = target, cols = source; diagonal 0

  double at(const std::string& target, const std::string& source) const;
};

// Assembles the mean-KL matrix from per-pair reports. The diagonal is zero
// (identity mapping). A missing ordered pair raises an error naming it.
SimilarityMatrix similarity_matrix(const std::vector<std::string>& languages,
                                   const std::vector<SimilarityReport>& reports);

// Percent phoneme shares: cell (i, j) = |P_i ∩ P_j| / |P_j| * 100.
Mat overlap_table(const std::vector<LanguageSpec>& langs);

}  // namespace posim
