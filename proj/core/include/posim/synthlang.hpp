#pragma once

#include "posim/prob.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace posim {

// A context-dependent unit (left-context phoneme, center phoneme), stored as
// indices into the owning language's phoneme list.
struct Biphone {
  int left = 0;
  int center = 0;
  friend bool operator==(const Biphone&, const Biphone&) = default;
};

// A synthetic language: phoneme inventory, biphone inventory and one diagonal
// Gaussian emission model per biphone. Phoneme symbols are the cross-lingual
// identity: two languages share a phoneme iff they carry the same symbol.
struct LanguageSpec {
  std::string name;
  std::vector<std::string> phonemes;
  std::vector<Biphone> biphones;
  Mat emission_means;      // biphones x D
  Mat emission_stddevs;    // biphones x D, strictly positive
  Vec biphone_frequencies; // sums to 1 over biphones
  int mean_segment_frames = 5;

  int feature_dim() const { return static_cast<int>(emission_means.cols()); }
  int biphone_count() const { return static_cast<int>(biphones.size()); }

  std::optional<int> phoneme_index(const std::string& symbol) const;
  const std::string& left_symbol(int biphone_idx) const;
  const std::string& center_symbol(int biphone_idx) const;
  std::pair<std::string, std::string> biphone_symbols(int biphone_idx) const;
  // Index of the biphone with the given symbols, if present.
  std::optional<int> biphone_index(const std::string& left,
                                   const std::string& center) const;

  void validate() const;
};

struct FamilyConfig {
  std::vector<std::string> names;     // one per language; defaults to L0..Ln
  std::vector<int> phoneme_counts;    // one per language
  Mat overlap;                        // pairwise target overlap fractions, symmetric
  std::vector<double> drift;          // per-language acoustic drift epsilon >= 0
  int feature_dim = 24;
  int biphones_per_language = 300;
  int mean_segment_frames = 5;
  double phoneme_spread = 1.0;        // scale of phoneme base means
  double biphone_jitter = 0.15;       // per-biphone offset from composed means
  double stddev_min = 0.4;            // emission stddev range per dimension
  double stddev_max = 0.7;
  std::uint64_t seed = 0;

  int language_count() const { return static_cast<int>(phoneme_counts.size()); }
};

// Builds languages whose pairwise phoneme overlaps realize cfg.overlap within
// one phoneme. Shared phonemes have identical base emission means across
// languages; each language perturbs them with Gaussian noise of scale
// drift[i]. Biphone inventories, jitter and frequencies are derived from the
// phoneme content, so languages with identical inventories are identical as
// generators.
std::vector<LanguageSpec> make_language_family(const FamilyConfig& cfg);

// Time-ordered labeled frames sampled from a language.
struct FrameCorpus {
  std::string language;
  Mat features;                             // T x D
  std::vector<std::uint32_t> labels;        // biphone index per frame
  std::vector<std::uint32_t> utterance_starts;  // first entry 0, strictly increasing

  std::size_t frame_count() const { return static_cast<std::size_t>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  std::size_t utterance_count() const { return utterance_starts.size(); }
  // [begin, end) frame range of one utterance.
  std::pair<std::uint32_t, std::uint32_t> utterance_range(std::size_t u) const;

  void validate(const LanguageSpec* lang = nullptr) const;
};

// Draws biphone segments by frequency, geometric segment lengths, i.i.d.
// Gaussian features; labels are exact. Deterministic given the seed.
FrameCorpus sample_corpus(const LanguageSpec& lang, std::size_t frames,
                          std::uint64_t seed, int mean_utterance_segments = 20);

// Utterance-level split; no utterance straddles two parts and the parts
// jointly restore the corpus. Fractions must be positive and sum to 1.
std::vector<FrameCorpus> split_corpus(const FrameCorpus& corpus,
                                      const std::vector<double>& fractions,
                                      std::uint64_t seed);

// |P_i ∩ P_j| as symbol sets.
int shared_phoneme_count(const LanguageSpec& a, const LanguageSpec& b);

// Symbols present in every language of the family.
std::vector<std::string> shared_symbols_all(const std::vector<LanguageSpec>& langs);

}  // namespace posim
