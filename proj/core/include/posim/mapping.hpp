#pragma once

#include "posim/net.hpp"
#include "posim/stream.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace posim {

// Regression network translating source-model posteriors (dim d_S) into the
// target model's class space (dim d_A).
struct MappingNetwork {
  std::string source_model;  // language name of the source acoustic model
  std::string target_model;
  NetworkParams net;  // input d_S, output d_A
  std::uint64_t train_seed = 0;
  std::size_t train_frames = 0;
  double final_val_kl = 0.0;

  int source_dim() const { return net.input_dim(); }
  int target_dim() const { return net.output_dim(); }
};

// Frame-aligned (source posterior, target posterior) pairs from two streams
// computed over the same corpus.
struct PosteriorPairs {
  Mat inputs;   // T x d_S
  Mat targets;  // T x d_A
  std::string source_model;
  std::string target_model;
  std::uint64_t corpus_fingerprint = 0;

  std::size_t pair_count() const { return static_cast<std::size_t>(inputs.rows()); }
};

// Pairs frames positionally. Streams from different corpora never pair: the
// corpus fingerprints must match.
PosteriorPairs build_training_pairs(const PosteriorStream& source,
                                    const PosteriorStream& target);

struct MapConfig {
  // Hidden width = hidden_factor * max(d_S, d_A), one hidden layer.
  double hidden_factor = 2.0;
  Activation activation = Activation::kTanh;
  TrainConfig train;
};

// Minimizes mean KL(target || mapped) over the pairs.
MappingNetwork train_mapping(const PosteriorPairs& pairs, const PosteriorPairs& val,
                             const MapConfig& cfg);

// Per-frame forward pass into target class space; labels carry through.
PosteriorStream map_stream(const MappingNetwork& mapnet, const PosteriorStream& source);

struct ProbeRow {
  int source_class = 0;
  Vec mapped;  // full distribution over target classes
  double entropy = 0.0;
};

// Feeds each one-hot source vector through the network, in class order.
std::vector<ProbeRow> probe_one_hot(const MappingNetwork& mapnet);

struct PosteriorgramRow {
  int source_class = 0;
  double entropy = 0.0;
  std::vector<std::pair<int, double>> top;  // (target class, prob), descending
};

// The n source classes with lowest probe entropy, ascending, each with its
// top_k mapped-class probabilities.
std::vector<PosteriorgramRow> top_n_posteriorgram(const std::vector<ProbeRow>& probe,
                                                  int n, int top_k);

// Mean probe entropy over the n lowest-entropy source classes.
double mean_low_entropy(const std::vector<ProbeRow>& probe, int n);

}  // namespace posim
