#include "posim/fusion.hpp"

#include "posim/prob.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace posim {

void FusionConfig::validate() const {
  double sum = target_weight;
  if (target_weight < 0.0 || target_weight > 1.0)
    throw std::invalid_argument("fusion target weight outside [0, 1]");
  for (double w : source_weights) {
    if (w < 0.0 || w > 1.0)
      throw std::invalid_argument("fusion source weight outside [0, 1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("fusion weights sum to " + std::to_string(sum));
}

Vec fuse_frame(const Eigen::Ref<const Vec>& target_p, const std::vector<Vec>& mapped_ps,
               const FusionConfig& cfg) {
  cfg.validate();
  if (mapped_ps.size() != cfg.source_weights.size())
    throw std::invalid_argument("fuse_frame: weight count != 1 + source count");
  Vec fused = cfg.target_weight * target_p;
  for (std::size_t i = 0; i < mapped_ps.size(); ++i) {
    if (mapped_ps[i].size() != target_p.size())
      throw std::invalid_argument("fuse_frame: dimension mismatch");
    fused += cfg.source_weights[i] * mapped_ps[i];
  }
  return fused;
}

PosteriorStream fuse_stream(const PosteriorStream& target,
                            const std::vector<const PosteriorStream*>& mapped,
                            const FusionConfig& cfg) {
  cfg.validate();
  if (mapped.size() != cfg.source_weights.size())
    throw std::invalid_argument("fuse_stream: weight count != 1 + source count");
  for (const auto* m : mapped) {
    if (m->corpus_fingerprint != target.corpus_fingerprint)
      throw std::invalid_argument("fuse_stream: streams from different corpora");
    if (m->frame_count() != target.frame_count() ||
        m->class_count() != target.class_count())
      throw std::invalid_argument("fuse_stream: streams are not frame-aligned");
  }

  PosteriorStream fused = target;
  fused.posteriors *= cfg.target_weight;
  for (std::size_t i = 0; i < mapped.size(); ++i)
    fused.posteriors += cfg.source_weights[i] * mapped[i]->posteriors;
  return fused;
}

FrameErrorReport frame_error(const PosteriorStream& stream,
                             const TiedStateInventory& tying,
                             const std::vector<std::uint32_t>* translation) {
  if (stream.frame_count() == 0) throw std::invalid_argument("frame_error: empty stream");
  if (stream.class_count() != tying.class_count())
    throw std::invalid_argument("frame_error: stream classes != tying classes");

  FrameErrorReport report;
  report.frames = stream.frame_count();
  std::size_t tied_wrong = 0, lenient_wrong = 0;
  for (std::size_t t = 0; t < stream.frame_count(); ++t) {
    const Eigen::Index pred =
        argmax_lowest(stream.posteriors.row(static_cast<Eigen::Index>(t)).transpose());
    const std::uint32_t label = stream.labels[t];
    if (stream.label_space == LabelSpace::kTiedClass) {
      // Cluster containment coincides with class equality in the model's own
      // label space.
      const bool wrong = label == kNoClass || static_cast<std::uint32_t>(pred) != label;
      if (label == kNoClass) ++report.unmapped_frames;
      tied_wrong += wrong;
      lenient_wrong += wrong;
    } else {
      std::uint32_t biphone = label;
      if (translation) {
        if (label >= translation->size())
          throw std::invalid_argument("frame_error: label outside translation table");
        biphone = (*translation)[label];
      }
      std::optional<int> cls;
      if (biphone != kNoClass) cls = tying.class_of(static_cast<int>(biphone));
      if (!cls) {
        ++report.unmapped_frames;
        ++tied_wrong;
        ++lenient_wrong;
        continue;
      }
      if (static_cast<int>(pred) != *cls) ++tied_wrong;
      // Independent route: membership scan of the predicted cluster.
      const auto& members = tying.clusters[static_cast<std::size_t>(pred)];
      bool contains = false;
      for (int m : members)
        if (m == static_cast<int>(biphone)) {
          contains = true;
          break;
        }
      if (!contains) ++lenient_wrong;
    }
  }
  report.tied_error = static_cast<double>(tied_wrong) / static_cast<double>(report.frames);
  report.lenient_error =
      static_cast<double>(lenient_wrong) / static_cast<double>(report.frames);
  return report;
}

namespace {

void enumerate_simplex(int slots, int remaining, std::vector<int>& counts,
                       std::vector<std::vector<int>>& out) {
  if (slots == 1) {
    counts.push_back(remaining);
    out.push_back(counts);
    counts.pop_back();
    return;
  }
  // Target weight first and descending, so earlier grid points carry larger
  // w_T; the tie-break falls out of enumeration order.
  for (int c = remaining; c >= 0; --c) {
    counts.push_back(c);
    enumerate_simplex(slots - 1, remaining - c, counts, out);
    counts.pop_back();
  }
}

}  // namespace

WeightSearchResult search_weights(const PosteriorStream& target_val,
                                  const std::vector<const PosteriorStream*>& mapped_val,
                                  const TiedStateInventory& tying, double grid_step) {
  if (target_val.frame_count() == 0)
    throw std::invalid_argument("search_weights: empty validation stream");
  if (!(grid_step > 0.0) || grid_step > 0.5)
    throw std::invalid_argument("search_weights: grid_step must lie in (0, 0.5]");
  const int steps = static_cast<int>(std::lround(1.0 / grid_step));
  if (std::abs(steps * grid_step - 1.0) > 1e-9)
    throw std::invalid_argument("search_weights: grid_step must divide 1");

  const int slots = 1 + static_cast<int>(mapped_val.size());
  std::vector<std::vector<int>> grid;
  std::vector<int> scratch;
  enumerate_simplex(slots, steps, scratch, grid);

  WeightSearchResult result;
  result.best_val_error = std::numeric_limits<double>::infinity();
  for (const auto& counts : grid) {
    FusionConfig cfg;
    cfg.target_weight = counts[0] * grid_step;
    for (int i = 1; i < slots; ++i)
      cfg.source_weights.push_back(counts[static_cast<std::size_t>(i)] * grid_step);
    const PosteriorStream fused = fuse_stream(target_val, mapped_val, cfg);
    const double err = frame_error(fused, tying).tied_error;
    result.trace.push_back({cfg, err});
    if (err < result.best_val_error) {
      result.best_val_error = err;
      result.best = cfg;
    }
  }
  return result;
}

}  // namespace posim
