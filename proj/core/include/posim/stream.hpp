#pragma once

#include "posim/prob.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace posim {

// Label written for frames whose reference unit has no class in the model's
// space (e.g. a biphone unattested at training time). Never a valid argmax.
inline constexpr std::uint32_t kNoClass = 0xffffffffu;

enum class LabelSpace : std::uint32_t { kTiedClass = 0, kBiphone = 1 };

// Time-ordered posteriors from one model over one corpus, with reference
// labels. Rows are floored probability vectors (see floor_normalize).
struct PosteriorStream {
  Mat posteriors;  // T x K
  std::vector<std::uint32_t> labels;
  LabelSpace label_space = LabelSpace::kTiedClass;
  std::string model_language;   // owner of the K classes
  std::string corpus_language;  // language of the observations
  std::uint64_t corpus_fingerprint = 0;

  std::size_t frame_count() const { return static_cast<std::size_t>(posteriors.rows()); }
  int class_count() const { return static_cast<int>(posteriors.cols()); }

  void validate() const;
};

}  // namespace posim
