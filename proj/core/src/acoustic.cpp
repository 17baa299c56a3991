#include "posim/acoustic.hpp"

#include "posim/corpus_io.hpp"
#include "posim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace posim {

std::optional<int> TiedStateInventory::class_of(int biphone) const {
  build_lookup();
  if (biphone < 0 || biphone >= static_cast<int>(class_lookup_.size())) return std::nullopt;
  const int cls = class_lookup_[static_cast<std::size_t>(biphone)];
  return cls < 0 ? std::nullopt : std::optional<int>(cls);
}

std::vector<int> TiedStateInventory::attested_biphones() const {
  std::vector<int> all;
  for (const auto& c : clusters) all.insert(all.end(), c.begin(), c.end());
  std::sort(all.begin(), all.end());
  return all;
}

void TiedStateInventory::build_lookup() const {
  if (!class_lookup_.empty()) return;
  int max_biphone = -1;
  for (const auto& c : clusters)
    for (int b : c) max_biphone = std::max(max_biphone, b);
  class_lookup_.assign(static_cast<std::size_t>(max_biphone + 1), -1);
  for (std::size_t cls = 0; cls < clusters.size(); ++cls)
    for (int b : clusters[cls]) class_lookup_[static_cast<std::size_t>(b)] = static_cast<int>(cls);
}

void TiedStateInventory::validate() const {
  if (clusters.empty()) throw std::invalid_argument("tying has no clusters");
  std::set<int> seen;
  for (const auto& c : clusters) {
    if (c.empty()) throw std::invalid_argument("tying contains an empty cluster");
    for (int b : c)
      if (!seen.insert(b).second)
        throw std::invalid_argument("biphone " + std::to_string(b) +
                                    " appears in two clusters");
  }
}

TiedStateInventory tie_states(const Mat& features, const std::vector<std::uint32_t>& labels,
                              int biphone_count, int target_class_count,
                              int min_solo_frames, const std::string& language) {
  if (target_class_count < 1)
    throw std::invalid_argument("tie_states: target_class_count must be >= 1");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw std::invalid_argument("tie_states: features/labels length mismatch");

  // Per-biphone frame counts and feature means over the training data.
  std::vector<std::size_t> counts(static_cast<std::size_t>(biphone_count), 0);
  Mat sums = Mat::Zero(biphone_count, features.cols());
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    const std::uint32_t b = labels[static_cast<std::size_t>(t)];
    if (b >= static_cast<std::uint32_t>(biphone_count))
      throw std::invalid_argument("tie_states: label outside biphone inventory");
    ++counts[b];
    sums.row(b) += features.row(t);
  }

  std::vector<int> attested;
  for (int b = 0; b < biphone_count; ++b)
    if (counts[static_cast<std::size_t>(b)] > 0) attested.push_back(b);
  const int n = static_cast<int>(attested.size());
  if (n == 0) throw std::invalid_argument("tie_states: no attested biphones");
  if (target_class_count > n)
    throw std::invalid_argument("tie_states: target_class_count exceeds attested biphones");

  Mat means(n, features.cols());
  for (int i = 0; i < n; ++i)
    means.row(i) = sums.row(attested[static_cast<std::size_t>(i)]) /
                   static_cast<double>(counts[static_cast<std::size_t>(attested[static_cast<std::size_t>(i)])]);

  // Active clusters; average linkage maintained with the Lance-Williams
  // update d(A+B, X) = (|A| d(A,X) + |B| d(B,X)) / (|A| + |B|).
  struct Cluster {
    std::vector<int> members;  // indices into `attested`
    int size = 0;
    bool alive = true;
    bool protected_solo = false;
    int lowest_biphone = 0;
  };
  std::vector<Cluster> clusters(static_cast<std::size_t>(n));
  Mat dist(n, n);
  for (int i = 0; i < n; ++i) {
    clusters[static_cast<std::size_t>(i)].members = {i};
    clusters[static_cast<std::size_t>(i)].size = 1;
    clusters[static_cast<std::size_t>(i)].protected_solo =
        counts[static_cast<std::size_t>(attested[static_cast<std::size_t>(i)])] >=
        static_cast<std::size_t>(min_solo_frames);
    clusters[static_cast<std::size_t>(i)].lowest_biphone = attested[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j)
      dist(i, j) = (means.row(i) - means.row(j)).norm();
  }

  int active = n;
  while (active > target_class_count) {
    int unprotected = 0;
    for (const auto& c : clusters)
      if (c.alive && !c.protected_solo) ++unprotected;
    const bool protection_lifted = unprotected < 2;

    int best_a = -1, best_b = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const auto& ci = clusters[static_cast<std::size_t>(i)];
      if (!ci.alive || (!protection_lifted && ci.protected_solo)) continue;
      for (int j = i + 1; j < n; ++j) {
        const auto& cj = clusters[static_cast<std::size_t>(j)];
        if (!cj.alive || (!protection_lifted && cj.protected_solo)) continue;
        const double d = dist(i, j);
        if (d < best_d) {
          best_d = d;
          best_a = i;
          best_b = j;
        } else if (d == best_d && best_a >= 0) {
          const auto key = std::minmax(ci.lowest_biphone, cj.lowest_biphone);
          const auto best_key = std::minmax(clusters[static_cast<std::size_t>(best_a)].lowest_biphone,
                                            clusters[static_cast<std::size_t>(best_b)].lowest_biphone);
          if (key < best_key) {
            best_a = i;
            best_b = j;
          }
        }
      }
    }
    if (best_a < 0) break;  // nothing mergeable

    Cluster& a = clusters[static_cast<std::size_t>(best_a)];
    Cluster& b = clusters[static_cast<std::size_t>(best_b)];
    for (int x = 0; x < n; ++x) {
      if (!clusters[static_cast<std::size_t>(x)].alive || x == best_a || x == best_b) continue;
      const double merged = (a.size * dist(best_a, x) + b.size * dist(best_b, x)) /
                            static_cast<double>(a.size + b.size);
      dist(best_a, x) = merged;
      dist(x, best_a) = merged;
    }
    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    a.size += b.size;
    a.protected_solo = false;  // merged clusters are fair game
    a.lowest_biphone = std::min(a.lowest_biphone, b.lowest_biphone);
    b.alive = false;
    --active;
  }

  TiedStateInventory tying;
  tying.language = language;
  for (const auto& c : clusters) {
    if (!c.alive) continue;
    std::vector<int> members;
    members.reserve(c.members.size());
    for (int i : c.members) members.push_back(attested[static_cast<std::size_t>(i)]);
    std::sort(members.begin(), members.end());
    tying.clusters.push_back(std::move(members));
  }
  std::sort(tying.clusters.begin(), tying.clusters.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
  tying.validate();
  return tying;
}

TiedStateInventory tie_states(const FrameCorpus& corpus, const LanguageSpec& lang,
                              int target_class_count, int min_solo_frames) {
  corpus.validate(&lang);
  return tie_states(corpus.features, corpus.labels, lang.biphone_count(),
                    target_class_count, min_solo_frames, lang.name);
}

void AcousticModel::validate() const {
  tying.validate();
  validate_network(net);
  if (net.output_dim() != tying.class_count())
    throw std::invalid_argument("acoustic model output dim != tied class count");
}

namespace {

Mat one_hot_targets(const std::vector<std::uint32_t>& labels,
                    const TiedStateInventory& tying) {
  Mat t = Mat::Zero(static_cast<Eigen::Index>(labels.size()), tying.class_count());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto cls = tying.class_of(static_cast<int>(labels[i]));
    if (!cls)
      throw std::invalid_argument("frame labeled with unattested biphone " +
                                  std::to_string(labels[i]));
    t(static_cast<Eigen::Index>(i), *cls) = 1.0;
  }
  return t;
}

// Keeps unattested-biphone frames out of the training targets.
void drop_unattested(const FrameCorpus& corpus, const TiedStateInventory& tying,
                     Mat& features, std::vector<std::uint32_t>& kept_labels) {
  std::vector<Eigen::Index> keep;
  keep.reserve(corpus.frame_count());
  for (std::size_t t = 0; t < corpus.frame_count(); ++t)
    if (tying.class_of(static_cast<int>(corpus.labels[t])))
      keep.push_back(static_cast<Eigen::Index>(t));
  features.resize(static_cast<Eigen::Index>(keep.size()), corpus.features.cols());
  kept_labels.resize(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) = corpus.features.row(keep[i]);
    kept_labels[i] = corpus.labels[static_cast<std::size_t>(keep[i])];
  }
}

double tied_class_error(const Mat& posts, const Mat& targets) {
  std::size_t wrong = 0;
  for (Eigen::Index t = 0; t < posts.rows(); ++t) {
    const Eigen::Index pred = argmax_lowest(posts.row(t).transpose());
    if (targets(t, pred) != 1.0) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(posts.rows());
}

Mat forward_chunked(const NetworkParams& net, const Mat& inputs) {
  constexpr Eigen::Index kChunk = 8192;
  Mat out(inputs.rows(), net.output_dim());
  for (Eigen::Index start = 0; start < inputs.rows(); start += kChunk) {
    const Eigen::Index rows = std::min(kChunk, inputs.rows() - start);
    out.middleRows(start, rows) = forward_batch(net, inputs.middleRows(start, rows));
  }
  return out;
}

}  // namespace

AcousticModel train_acoustic_model(const FrameCorpus& train_corpus,
                                   const FrameCorpus& val_corpus,
                                   const LanguageSpec& lang,
                                   const TiedStateInventory& tying, const AmConfig& cfg) {
  train_corpus.validate(&lang);
  val_corpus.validate(&lang);
  if (train_corpus.language != tying.language)
    throw std::invalid_argument("training corpus language " + train_corpus.language +
                                " does not match tying language " + tying.language);

  const Mat train_targets = one_hot_targets(train_corpus.labels, tying);

  // Validation frames whose biphone was never attested in training cannot be
  // scored against a class; drop them from the early-stopping signal.
  Mat val_features;
  std::vector<std::uint32_t> val_labels;
  drop_unattested(val_corpus, tying, val_features, val_labels);
  if (val_features.rows() == 0)
    throw std::invalid_argument("validation corpus shares no attested biphones");
  const Mat val_targets = one_hot_targets(val_labels, tying);

  std::vector<int> dims;
  dims.push_back(lang.feature_dim());
  for (int h : cfg.hidden_dims) dims.push_back(h);
  dims.push_back(tying.class_count());

  NetworkParams net = init_network(dims, cfg.activation, cfg.train.rng_seed);
  TrainResult result =
      train(std::move(net), train_corpus.features, train_targets, val_features,
            val_targets, cfg.train);

  AcousticModel model;
  model.language = lang.name;
  model.tying = tying;
  model.net = std::move(result.net);
  model.train_seed = cfg.train.rng_seed;
  model.data_fingerprint = corpus_fingerprint(train_corpus);
  model.val_loss = result.best_val_loss;
  model.val_frame_error =
      tied_class_error(forward_chunked(model.net, val_features), val_targets);
  model.validate();
  return model;
}

PosteriorStream posteriors(const AcousticModel& model, const FrameCorpus& corpus) {
  model.validate();
  corpus.validate();
  if (corpus.feature_dim() != model.net.input_dim())
    throw std::invalid_argument("posteriors: corpus feature dim " +
                                std::to_string(corpus.feature_dim()) +
                                " != model input dim " +
                                std::to_string(model.net.input_dim()));

  PosteriorStream stream;
  stream.posteriors = forward_chunked(model.net, corpus.features);
  stream.model_language = model.language;
  stream.corpus_language = corpus.language;
  stream.corpus_fingerprint = corpus_fingerprint(corpus);
  stream.labels.resize(corpus.frame_count());
  if (corpus.language == model.language) {
    stream.label_space = LabelSpace::kTiedClass;
    for (std::size_t t = 0; t < corpus.frame_count(); ++t) {
      const auto cls = model.tying.class_of(static_cast<int>(corpus.labels[t]));
      stream.labels[t] = cls ? static_cast<std::uint32_t>(*cls) : kNoClass;
    }
  } else {
    stream.label_space = LabelSpace::kBiphone;
    stream.labels = corpus.labels;
  }
  return stream;
}

std::optional<int> PooledInventory::index_of(const std::string& left,
                                             const std::string& center) const {
  const auto it = std::lower_bound(biphones.begin(), biphones.end(),
                                   std::pair(left, center));
  if (it == biphones.end() || *it != std::pair(left, center)) return std::nullopt;
  return static_cast<int>(it - biphones.begin());
}

std::vector<std::uint32_t> PooledInventory::translation_for(const LanguageSpec& lang) const {
  std::vector<std::uint32_t> map(static_cast<std::size_t>(lang.biphone_count()), kNoClass);
  for (int b = 0; b < lang.biphone_count(); ++b) {
    const auto [l, c] = lang.biphone_symbols(b);
    const auto idx = index_of(l, c);
    if (idx) map[static_cast<std::size_t>(b)] = static_cast<std::uint32_t>(*idx);
  }
  return map;
}

PooledInventory make_pooled_inventory(const std::vector<LanguageSpec>& langs) {
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& lang : langs)
    for (int b = 0; b < lang.biphone_count(); ++b) pairs.insert(lang.biphone_symbols(b));
  PooledInventory inv;
  inv.biphones.assign(pairs.begin(), pairs.end());
  return inv;
}

PooledModel train_pooled_model(const std::vector<const FrameCorpus*>& train_corpora,
                               const std::vector<const FrameCorpus*>& val_corpora,
                               const std::vector<LanguageSpec>& langs,
                               int target_class_count, int min_solo_frames,
                               const AmConfig& cfg) {
  if (train_corpora.size() != langs.size() || val_corpora.size() != langs.size())
    throw std::invalid_argument("train_pooled_model: corpora/languages mismatch");
  if (langs.size() < 2)
    throw std::invalid_argument("train_pooled_model: need at least 2 corpora");

  PooledModel pooled;
  pooled.inventory = make_pooled_inventory(langs);

  // Concatenate corpora with labels lifted into the union inventory. The
  // synthetic "pooled" corpus keeps per-source utterance boundaries.
  FrameCorpus mixed_train, mixed_val;
  mixed_train.language = "pooled";
  mixed_val.language = "pooled";
  auto append = [&](FrameCorpus& dst, const FrameCorpus& src, const LanguageSpec& lang) {
    src.validate(&lang);
    const auto translation = pooled.inventory.translation_for(lang);
    const Eigen::Index offset = dst.features.rows();
    dst.features.conservativeResize(offset + src.features.rows(),
                                    src.features.cols());
    dst.features.bottomRows(src.features.rows()) = src.features;
    for (std::size_t t = 0; t < src.frame_count(); ++t)
      dst.labels.push_back(translation[src.labels[t]]);
    for (std::uint32_t u : src.utterance_starts)
      dst.utterance_starts.push_back(static_cast<std::uint32_t>(offset) + u);
  };
  for (std::size_t i = 0; i < langs.size(); ++i) {
    append(mixed_train, *train_corpora[i], langs[i]);
    append(mixed_val, *val_corpora[i], langs[i]);
  }

  TiedStateInventory tying =
      tie_states(mixed_train.features, mixed_train.labels,
                 pooled.inventory.biphone_count(), target_class_count,
                 min_solo_frames, "pooled");

  const Mat train_targets = [&] {
    Mat t = Mat::Zero(static_cast<Eigen::Index>(mixed_train.labels.size()),
                      tying.class_count());
    for (std::size_t i = 0; i < mixed_train.labels.size(); ++i)
      t(static_cast<Eigen::Index>(i), *tying.class_of(static_cast<int>(mixed_train.labels[i]))) = 1.0;
    return t;
  }();

  Mat val_features;
  std::vector<std::uint32_t> val_labels;
  drop_unattested(mixed_val, tying, val_features, val_labels);
  if (val_features.rows() == 0)
    throw std::invalid_argument("pooled validation shares no attested biphones");
  Mat val_targets = Mat::Zero(val_features.rows(), tying.class_count());
  for (std::size_t i = 0; i < val_labels.size(); ++i)
    val_targets(static_cast<Eigen::Index>(i), *tying.class_of(static_cast<int>(val_labels[i]))) = 1.0;

  std::vector<int> dims;
  dims.push_back(static_cast<int>(mixed_train.features.cols()));
  for (int h : cfg.hidden_dims) dims.push_back(h);
  dims.push_back(tying.class_count());

  NetworkParams net = init_network(dims, cfg.activation, cfg.train.rng_seed);
  TrainResult result = train(std::move(net), mixed_train.features, train_targets,
                             val_features, val_targets, cfg.train);

  pooled.model.language = "pooled";
  pooled.model.tying = std::move(tying);
  pooled.model.net = std::move(result.net);
  pooled.model.train_seed = cfg.train.rng_seed;
  pooled.model.data_fingerprint = corpus_fingerprint(mixed_train);
  pooled.model.val_loss = result.best_val_loss;
  pooled.model.val_frame_error =
      tied_class_error(forward_chunked(pooled.model.net, val_features), val_targets);
  pooled.model.validate();
  return pooled;
}

std::map<std::string, std::pair<double, std::size_t>> per_center_phoneme_error(
    const PosteriorStream& stream, const TiedStateInventory& tying,
    const std::vector<std::uint32_t>* translation,
    const std::vector<std::uint32_t>& biphone_labels, const LanguageSpec& lang) {
  if (stream.frame_count() != biphone_labels.size())
    throw std::invalid_argument("per_center_phoneme_error: label/stream length mismatch");

  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // wrong, total
  for (std::size_t t = 0; t < biphone_labels.size(); ++t) {
    const std::uint32_t local = biphone_labels[t];
    const std::string& center = lang.center_symbol(static_cast<int>(local));
    std::uint32_t mapped = local;
    if (translation) mapped = (*translation)[local];

    bool correct = false;
    if (mapped != kNoClass) {
      const auto cls = tying.class_of(static_cast<int>(mapped));
      if (cls) {
        const Eigen::Index pred =
            argmax_lowest(stream.posteriors.row(static_cast<Eigen::Index>(t)).transpose());
        correct = static_cast<int>(pred) == *cls;
      }
    }
    auto& [wrong, total] = tally[center];
    ++total;
    if (!correct) ++wrong;
  }

  std::map<std::string, std::pair<double, std::size_t>> out;
  for (const auto& [center, wt] : tally)
    out[center] = {static_cast<double>(wt.first) / static_cast<double>(wt.second),
                   wt.second};
  return out;
}

PerClassDeltaReport per_class_error_delta(
    const std::map<std::string, std::pair<double, std::size_t>>& mono_errors,
    const std::map<std::string, std::pair<double, std::size_t>>& pooled_errors,
    const std::vector<std::string>& shared_phonemes) {
  PerClassDeltaReport report;
  for (const auto& phoneme : shared_phonemes) {
    const auto mono = mono_errors.find(phoneme);
    const auto pooled = pooled_errors.find(phoneme);
    if (mono == mono_errors.end() || pooled == pooled_errors.end()) {
      report.excluded.push_back(phoneme);
      continue;
    }
    PhonemeDelta row;
    row.phoneme = phoneme;
    row.frames = mono->second.second;
    row.mono_error = mono->second.first;
    row.pooled_error = pooled->second.first;
    row.delta_points = (row.pooled_error - row.mono_error) * 100.0;
    row.relative_improvement =
        row.mono_error > 0.0
            ? (row.mono_error - row.pooled_error) / row.mono_error * 100.0
            : std::numeric_limits<double>::quiet_NaN();
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace posim
