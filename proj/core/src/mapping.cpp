#include "posim/mapping.hpp"

#include "posim/prob.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace posim {

PosteriorPairs build_training_pairs(const PosteriorStream& source,
                                    const PosteriorStream& target) {
  if (source.corpus_fingerprint != target.corpus_fingerprint)
    throw std::invalid_argument(
        "build_training_pairs: streams come from different corpora (fingerprints " +
        std::to_string(source.corpus_fingerprint) + " vs " +
        std::to_string(target.corpus_fingerprint) + ")");
  if (source.frame_count() != target.frame_count())
    throw std::invalid_argument("build_training_pairs: frame count mismatch");
  PosteriorPairs pairs;
  pairs.inputs = source.posteriors;
  pairs.targets = target.posteriors;
  pairs.source_model = source.model_language;
  pairs.target_model = target.model_language;
  pairs.corpus_fingerprint = source.corpus_fingerprint;
  return pairs;
}

MappingNetwork train_mapping(const PosteriorPairs& pairs, const PosteriorPairs& val,
                             const MapConfig& cfg) {
  if (pairs.pair_count() == 0) throw std::invalid_argument("train_mapping: no pairs");
  if (val.inputs.cols() != pairs.inputs.cols() ||
      val.targets.cols() != pairs.targets.cols())
    throw std::invalid_argument("train_mapping: val dimensions disagree");

  const int d_s = static_cast<int>(pairs.inputs.cols());
  const int d_a = static_cast<int>(pairs.targets.cols());
  const int hidden =
      std::max(2, static_cast<int>(std::lround(cfg.hidden_factor * std::max(d_s, d_a))));

  NetworkParams net = init_network({d_s, hidden, d_a}, cfg.activation, cfg.train.rng_seed);
  TrainResult result =
      train(std::move(net), pairs.inputs, pairs.targets, val.inputs, val.targets, cfg.train);

  MappingNetwork mapnet;
  mapnet.source_model = pairs.source_model;
  mapnet.target_model = pairs.target_model;
  mapnet.net = std::move(result.net);
  mapnet.train_seed = cfg.train.rng_seed;
  mapnet.train_frames = pairs.pair_count();
  mapnet.final_val_kl = result.best_val_loss;
  return mapnet;
}

PosteriorStream map_stream(const MappingNetwork& mapnet, const PosteriorStream& source) {
  if (source.class_count() != mapnet.source_dim())
    throw std::invalid_argument("map_stream: stream dim " +
                                std::to_string(source.class_count()) +
                                " != mapping input dim " +
                                std::to_string(mapnet.source_dim()));
  PosteriorStream mapped;
  mapped.posteriors = forward_batch(mapnet.net, source.posteriors);
  mapped.labels = source.labels;
  mapped.label_space = source.label_space;
  mapped.model_language = mapnet.target_model;
  mapped.corpus_language = source.corpus_language;
  mapped.corpus_fingerprint = source.corpus_fingerprint;
  return mapped;
}

std::vector<ProbeRow> probe_one_hot(const MappingNetwork& mapnet) {
  std::vector<ProbeRow> rows;
  rows.reserve(static_cast<std::size_t>(mapnet.source_dim()));
  Vec one_hot = Vec::Zero(mapnet.source_dim());
  for (int k = 0; k < mapnet.source_dim(); ++k) {
    one_hot[k] = 1.0;
    ProbeRow row;
    row.source_class = k;
    row.mapped = forward(mapnet.net, one_hot);
    row.entropy = entropy(row.mapped);
    rows.push_back(std::move(row));
    one_hot[k] = 0.0;
  }
  return rows;
}

std::vector<PosteriorgramRow> top_n_posteriorgram(const std::vector<ProbeRow>& probe,
                                                  int n, int top_k) {
  const int d_s = static_cast<int>(probe.size());
  if (n < 1 || n > d_s)
    throw std::invalid_argument("top_n_posteriorgram: n out of range");
  const int d_a = d_s > 0 ? static_cast<int>(probe.front().mapped.size()) : 0;
  if (top_k < 1 || top_k > d_a)
    throw std::invalid_argument("top_n_posteriorgram: top_k out of range");

  std::vector<int> order(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return probe[static_cast<std::size_t>(a)].entropy <
           probe[static_cast<std::size_t>(b)].entropy;
  });

  std::vector<PosteriorgramRow> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const ProbeRow& src = probe[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    PosteriorgramRow row;
    row.source_class = src.source_class;
    row.entropy = src.entropy;
    std::vector<int> classes(static_cast<std::size_t>(d_a));
    for (int c = 0; c < d_a; ++c) classes[static_cast<std::size_t>(c)] = c;
    std::stable_sort(classes.begin(), classes.end(), [&](int a, int b) {
      return src.mapped[a] > src.mapped[b];
    });
    for (int c = 0; c < top_k; ++c)
      row.top.emplace_back(classes[static_cast<std::size_t>(c)],
                           src.mapped[classes[static_cast<std::size_t>(c)]]);
    out.push_back(std::move(row));
  }
  return out;
}

double mean_low_entropy(const std::vector<ProbeRow>& probe, int n) {
  std::vector<double> entropies;
  entropies.reserve(probe.size());
  for (const auto& row : probe) entropies.push_back(row.entropy);
  std::sort(entropies.begin(), entropies.end());
  if (n < 1 || n > static_cast<int>(entropies.size()))
    throw std::invalid_argument("mean_low_entropy: n out of range");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += entropies[static_cast<std::size_t>(i)];
  return acc / static_cast<double>(n);
}

}  // namespace posim
