#pragma once

#include "posim/acoustic.hpp"
#include "posim/stream.hpp"

#include <vector>

namespace posim {

// Convex-combination weights: target model first, then one weight per source.
struct FusionConfig {
  double target_weight = 1.0;
  std::vector<double> source_weights;

  void validate() const;  // weights in [0, 1], summing to 1 within 1e-9
};

// p_F = w_T * target + sum_i w_i * mapped_i. Exact convex combination, so the
// result is a valid probability vector.
Vec fuse_frame(const Eigen::Ref<const Vec>& target_p, const std::vector<Vec>& mapped_ps,
               const FusionConfig& cfg);

// Per-frame fusion over frame-aligned streams (same corpus fingerprint);
// labels carry over from the target stream.
PosteriorStream fuse_stream(const PosteriorStream& target,
                            const std::vector<const PosteriorStream*>& mapped,
                            const FusionConfig& cfg);

struct FrameErrorReport {
  double tied_error = 0.0;      // argmax class != reference class
  double lenient_error = 0.0;   // argmax cluster does not contain the reference biphone
  std::size_t frames = 0;
  std::size_t unmapped_frames = 0;  // reference units without a class in this tying
};

// Frame error rates of a stream against a tying. For biphone-labeled streams,
// `translation` lifts corpus-local biphone ids into the tying's biphone space
// (identity when null). Argmax ties resolve to the lowest class index.
FrameErrorReport frame_error(const PosteriorStream& stream,
                             const TiedStateInventory& tying,
                             const std::vector<std::uint32_t>* translation = nullptr);

struct WeightSearchPoint {
  FusionConfig config;
  double val_error = 0.0;
};

struct WeightSearchResult {
  FusionConfig best;
  double best_val_error = 0.0;
  std::vector<WeightSearchPoint> trace;  // full grid in enumeration order
};

// Exhaustive search over the weight simplex at the given resolution,
// minimizing tied-class frame error on the validation streams. Ties prefer a
// larger target weight, then lexicographically smaller source weights.
WeightSearchResult search_weights(const PosteriorStream& target_val,
                                  const std::vector<const PosteriorStream*>& mapped_val,
                                  const TiedStateInventory& tying, double grid_step);

}  // namespace posim
