#include "posim/synthlang.hpp"

#include "posim/errors.hpp"
#include "posim/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

namespace posim {

std::optional<int> LanguageSpec::phoneme_index(const std::string& symbol) const {
  for (std::size_t i = 0; i < phonemes.size(); ++i)
    if (phonemes[i] == symbol) return static_cast<int>(i);
  return std::nullopt;
}

const std::string& LanguageSpec::left_symbol(int biphone_idx) const {
  return phonemes[static_cast<std::size_t>(biphones[static_cast<std::size_t>(biphone_idx)].left)];
}

const std::string& LanguageSpec::center_symbol(int biphone_idx) const {
  return phonemes[static_cast<std::size_t>(biphones[static_cast<std::size_t>(biphone_idx)].center)];
}

std::pair<std::string, std::string> LanguageSpec::biphone_symbols(int biphone_idx) const {
  return {left_symbol(biphone_idx), center_symbol(biphone_idx)};
}

std::optional<int> LanguageSpec::biphone_index(const std::string& left,
                                               const std::string& center) const {
  for (int i = 0; i < biphone_count(); ++i)
    if (left_symbol(i) == left && center_symbol(i) == center) return i;
  return std::nullopt;
}

void LanguageSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("language name empty");
  std::set<std::string> seen;
  for (const auto& p : phonemes) {
    if (p.empty()) throw std::invalid_argument("empty phoneme symbol");
    if (!seen.insert(p).second)
      throw std::invalid_argument("duplicate phoneme symbol " + p);
  }
  const int n = static_cast<int>(phonemes.size());
  for (const auto& b : biphones)
    if (b.left < 0 || b.left >= n || b.center < 0 || b.center >= n)
      throw std::invalid_argument("biphone references phoneme outside inventory");
  if (emission_means.rows() != biphone_count() ||
      emission_stddevs.rows() != biphone_count())
    throw std::invalid_argument("emission tables disagree with biphone count");
  if ((emission_stddevs.array() <= 0.0).any())
    throw std::invalid_argument("emission stddevs must be strictly positive");
  if (biphone_frequencies.size() != biphone_count() ||
      !is_prob_vector(biphone_frequencies))
    throw std::invalid_argument("biphone_frequencies is not a distribution");
  if (mean_segment_frames < 1)
    throw std::invalid_argument("mean_segment_frames must be positive");
}

namespace {

std::string symbol_name(int global_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "ph%03d", global_index);
  return buf;
}

std::uint64_t symbol_set_fingerprint(std::vector<std::string> symbols) {
  std::sort(symbols.begin(), symbols.end());
  std::string joined;
  for (const auto& s : symbols) {
    joined += s;
    joined += '\n';
  }
  return fnv1a64(joined);
}

std::uint64_t pair_key(const std::string& left, const std::string& center) {
  return fnv1a64(left + "|" + center);
}

Vec base_mean_for_symbol(const std::string& symbol, const FamilyConfig& cfg) {
  Rng rng = Rng::for_purpose(cfg.seed, "phoneme.base", fnv1a64(symbol));
  Vec m(cfg.feature_dim);
  for (int d = 0; d < cfg.feature_dim; ++d) m[d] = cfg.phoneme_spread * rng.normal();
  return m;
}

}  // namespace

std::vector<LanguageSpec> make_language_family(const FamilyConfig& cfg) {
  const int num_langs = cfg.language_count();
  if (num_langs < 1) throw ConfigError("family needs at least one language");
  if (cfg.feature_dim < 1) throw ConfigError("feature_dim must be positive");
  if (cfg.biphones_per_language < 1) throw ConfigError("biphones_per_language must be positive");
  if (cfg.stddev_min <= 0.0 || cfg.stddev_max < cfg.stddev_min)
    throw ConfigError("invalid emission stddev range");
  if (!cfg.names.empty() && static_cast<int>(cfg.names.size()) != num_langs)
    throw ConfigError("names/phoneme_counts length mismatch");
  if (static_cast<int>(cfg.drift.size()) != num_langs)
    throw ConfigError("drift must list one epsilon per language");
  for (double eps : cfg.drift)
    if (eps < 0.0) throw ConfigError("drift must be non-negative");
  for (int count : cfg.phoneme_counts)
    if (count < 1) throw ConfigError("phoneme count must be positive");
  if (cfg.overlap.rows() != num_langs || cfg.overlap.cols() != num_langs)
    throw ConfigError("overlap matrix must be languages x languages");
  for (int i = 0; i < num_langs; ++i)
    for (int j = 0; j < num_langs; ++j) {
      const double o = cfg.overlap(i, j);
      if (o < 0.0 || o > 1.0)
        throw ConfigError("overlap fractions must lie in [0, 1]");
      if (std::abs(o - cfg.overlap(j, i)) > 1e-12)
        throw ConfigError("overlap matrix must be symmetric");
    }

  // Requested shared-symbol count per pair, relative to the smaller inventory.
  std::vector<std::vector<int>> shared(num_langs, std::vector<int>(num_langs, 0));
  int family_core = std::numeric_limits<int>::max();
  for (int i = 0; i < num_langs; ++i)
    for (int j = i + 1; j < num_langs; ++j) {
      const int smaller = std::min(cfg.phoneme_counts[i], cfg.phoneme_counts[j]);
      shared[i][j] = shared[j][i] =
          static_cast<int>(std::lround(cfg.overlap(i, j) * smaller));
      family_core = std::min(family_core, shared[i][j]);
    }
  if (num_langs < 2) family_core = 0;

  // Symbols shared by the whole family first, then per-pair extras, then
  // language-unique fill. Realizes |P_i ∩ P_j| = shared[i][j] exactly.
  int next_symbol = 0;
  std::vector<std::vector<std::string>> inventories(num_langs);
  for (int s = 0; s < family_core; ++s) {
    const std::string sym = symbol_name(next_symbol++);
    for (auto& inv : inventories) inv.push_back(sym);
  }
  for (int i = 0; i < num_langs; ++i)
    for (int j = i + 1; j < num_langs; ++j)
      for (int s = family_core; s < shared[i][j]; ++s) {
        const std::string sym = symbol_name(next_symbol++);
        inventories[i].push_back(sym);
        inventories[j].push_back(sym);
      }
  for (int i = 0; i < num_langs; ++i) {
    if (static_cast<int>(inventories[i].size()) > cfg.phoneme_counts[i])
      throw ConfigError("unsatisfiable overlap constraints for language " +
                        std::to_string(i) + ": pairwise shares exceed inventory size");
    while (static_cast<int>(inventories[i].size()) < cfg.phoneme_counts[i])
      inventories[i].push_back(symbol_name(next_symbol++));
  }

  std::vector<LanguageSpec> langs(static_cast<std::size_t>(num_langs));
  for (int i = 0; i < num_langs; ++i) {
    LanguageSpec& lang = langs[static_cast<std::size_t>(i)];
    lang.name = cfg.names.empty() ? "L" + std::to_string(i) : cfg.names[static_cast<std::size_t>(i)];
    lang.phonemes = inventories[static_cast<std::size_t>(i)];
    lang.mean_segment_frames = cfg.mean_segment_frames;
    const std::uint64_t content = symbol_set_fingerprint(lang.phonemes);

    // Per-language realization of each phoneme: base mean plus drift noise.
    const int pcount = static_cast<int>(lang.phonemes.size());
    Mat realized(pcount, cfg.feature_dim);
    const double eps = cfg.drift[static_cast<std::size_t>(i)];
    for (int p = 0; p < pcount; ++p) {
      Vec m = base_mean_for_symbol(lang.phonemes[static_cast<std::size_t>(p)], cfg);
      if (eps > 0.0) {
        Rng drift_rng = Rng::for_purpose(
            cfg.seed, "phoneme.drift",
            fnv1a64(lang.phonemes[static_cast<std::size_t>(p)]) ^
                (static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL));
        for (int d = 0; d < cfg.feature_dim; ++d) m[d] += eps * drift_rng.normal();
      }
      realized.row(p) = m.transpose();
    }

    // Biphone inventory: a uniform subset of attested phoneme pairs, drawn
    // from the phoneme content so identical inventories pick identical pairs.
    std::vector<std::string> sorted = lang.phonemes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<int, int>> candidates;  // indices into `sorted`
    candidates.reserve(static_cast<std::size_t>(pcount) * pcount);
    for (int l = 0; l < pcount; ++l)
      for (int c = 0; c < pcount; ++c) candidates.emplace_back(l, c);
    const int want = std::min<int>(cfg.biphones_per_language,
                                   static_cast<int>(candidates.size()));
    Rng pick_rng = Rng::for_purpose(cfg.seed, "biphone.pick", content);
    for (int k = 0; k < want; ++k) {
      const std::size_t j =
          static_cast<std::size_t>(k) +
          static_cast<std::size_t>(pick_rng.below(candidates.size() - static_cast<std::size_t>(k)));
      std::swap(candidates[static_cast<std::size_t>(k)], candidates[j]);
    }
    candidates.resize(static_cast<std::size_t>(want));
    std::sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
      return std::pair(sorted[static_cast<std::size_t>(a.first)], sorted[static_cast<std::size_t>(a.second)]) <
             std::pair(sorted[static_cast<std::size_t>(b.first)], sorted[static_cast<std::size_t>(b.second)]);
    });

    lang.biphones.reserve(candidates.size());
    for (const auto& [ls, cs] : candidates) {
      const int l = *lang.phoneme_index(sorted[static_cast<std::size_t>(ls)]);
      const int c = *lang.phoneme_index(sorted[static_cast<std::size_t>(cs)]);
      lang.biphones.push_back(Biphone{l, c});
    }

    const int bcount = lang.biphone_count();
    lang.emission_means.resize(bcount, cfg.feature_dim);
    lang.emission_stddevs.resize(bcount, cfg.feature_dim);
    for (int b = 0; b < bcount; ++b) {
      const auto [lsym, csym] = lang.biphone_symbols(b);
      Rng bp_rng = Rng::for_purpose(cfg.seed, "biphone.emission", pair_key(lsym, csym));
      for (int d = 0; d < cfg.feature_dim; ++d) {
        const double jitter = cfg.biphone_jitter * bp_rng.normal();
        lang.emission_means(b, d) = 0.7 * realized(lang.biphones[static_cast<std::size_t>(b)].center, d) +
                                    0.3 * realized(lang.biphones[static_cast<std::size_t>(b)].left, d) +
                                    jitter;
        lang.emission_stddevs(b, d) = bp_rng.uniform(cfg.stddev_min, cfg.stddev_max);
      }
    }

    Rng freq_rng = Rng::for_purpose(cfg.seed, "biphone.frequencies", content);
    Vec freq(bcount);
    for (int b = 0; b < bcount; ++b) freq[b] = -std::log(freq_rng.uniform01_open_low());
    lang.biphone_frequencies = freq / freq.sum();

    lang.validate();
  }
  return langs;
}

std::pair<std::uint32_t, std::uint32_t> FrameCorpus::utterance_range(std::size_t u) const {
  const std::uint32_t begin = utterance_starts[u];
  const std::uint32_t end = u + 1 < utterance_starts.size()
                                ? utterance_starts[u + 1]
                                : static_cast<std::uint32_t>(frame_count());
  return {begin, end};
}

void FrameCorpus::validate(const LanguageSpec* lang) const {
  if (labels.size() != frame_count())
    throw std::invalid_argument("corpus features/labels length mismatch");
  if (utterance_starts.empty() || utterance_starts.front() != 0)
    throw std::invalid_argument("corpus utterance_starts must begin at 0");
  for (std::size_t u = 1; u < utterance_starts.size(); ++u)
    if (utterance_starts[u] <= utterance_starts[u - 1] ||
        utterance_starts[u] >= frame_count())
      throw std::invalid_argument("corpus utterance_starts not strictly increasing");
  if (lang) {
    if (lang->feature_dim() != feature_dim())
      throw std::invalid_argument("corpus feature dim disagrees with language");
    for (std::uint32_t l : labels)
      if (l >= static_cast<std::uint32_t>(lang->biphone_count()))
        throw std::invalid_argument("corpus label outside biphone inventory");
  }
}

FrameCorpus sample_corpus(const LanguageSpec& lang, std::size_t frames,
                          std::uint64_t seed, int mean_utterance_segments) {
  lang.validate();
  if (frames < 1) throw std::invalid_argument("sample_corpus: frame count must be >= 1");
  if (mean_utterance_segments < 1)
    throw std::invalid_argument("sample_corpus: mean_utterance_segments must be >= 1");

  Rng rng = Rng::for_purpose(seed, "corpus.sample", fnv1a64(lang.name));

  // Cumulative biphone frequencies for inversion sampling.
  std::vector<double> cdf(static_cast<std::size_t>(lang.biphone_count()));
  double acc = 0.0;
  for (int b = 0; b < lang.biphone_count(); ++b) {
    acc += lang.biphone_frequencies[b];
    cdf[static_cast<std::size_t>(b)] = acc;
  }

  FrameCorpus corpus;
  corpus.language = lang.name;
  corpus.features.resize(static_cast<Eigen::Index>(frames), lang.feature_dim());
  corpus.labels.resize(frames);

  std::size_t t = 0;
  while (t < frames) {
    corpus.utterance_starts.push_back(static_cast<std::uint32_t>(t));
    const std::uint64_t segments = rng.geometric_length(mean_utterance_segments);
    for (std::uint64_t s = 0; s < segments && t < frames; ++s) {
      const double u = rng.uniform01();
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      const int biphone = static_cast<int>(std::min<std::size_t>(
          static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
      const std::uint64_t seg_len = rng.geometric_length(lang.mean_segment_frames);
      for (std::uint64_t f = 0; f < seg_len && t < frames; ++f, ++t) {
        corpus.labels[t] = static_cast<std::uint32_t>(biphone);
        for (int d = 0; d < lang.feature_dim(); ++d)
          corpus.features(static_cast<Eigen::Index>(t), d) =
              lang.emission_means(biphone, d) +
              lang.emission_stddevs(biphone, d) * rng.normal();
      }
    }
  }
  corpus.validate(&lang);
  return corpus;
}

std::vector<FrameCorpus> split_corpus(const FrameCorpus& corpus,
                                      const std::vector<double>& fractions,
                                      std::uint64_t seed) {
  corpus.validate();
  if (fractions.empty()) throw std::invalid_argument("split_corpus: no fractions");
  double total = 0.0;
  for (double f : fractions) {
    if (f <= 0.0) throw std::invalid_argument("split_corpus: fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split_corpus: fractions must sum to 1");
  const std::size_t num_splits = fractions.size();
  const std::size_t num_utts = corpus.utterance_count();
  if (num_utts < num_splits)
    throw std::invalid_argument("split_corpus: fewer utterances than splits");

  std::vector<std::uint32_t> order(num_utts);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng = Rng::for_purpose(seed, "corpus.split", fnv1a64(corpus.language));
  rng.shuffle(order);

  std::vector<std::size_t> utt_frames(num_utts);
  for (std::size_t u = 0; u < num_utts; ++u) {
    const auto [begin, end] = corpus.utterance_range(u);
    utt_frames[u] = end - begin;
  }

  // Greedy fill in shuffled order; later splits are always left at least one
  // utterance each.
  std::vector<std::vector<std::uint32_t>> assigned(num_splits);
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < num_splits; ++k) {
    const std::size_t splits_after = num_splits - k - 1;
    const double target = fractions[k] * static_cast<double>(corpus.frame_count());
    std::size_t got = 0;
    while (cursor < num_utts - splits_after &&
           (assigned[k].empty() || (static_cast<double>(got) < target &&
                                    k + 1 != num_splits))) {
      const std::uint32_t u = order[cursor++];
      assigned[k].push_back(u);
      got += utt_frames[u];
    }
    if (k + 1 == num_splits) {
      while (cursor < num_utts) assigned[k].push_back(order[cursor++]);
    }
  }

  std::vector<FrameCorpus> out;
  out.reserve(num_splits);
  for (std::size_t k = 0; k < num_splits; ++k) {
    std::sort(assigned[k].begin(), assigned[k].end());
    FrameCorpus part;
    part.language = corpus.language;
    std::size_t frames = 0;
    for (std::uint32_t u : assigned[k]) frames += utt_frames[u];
    part.features.resize(static_cast<Eigen::Index>(frames), corpus.feature_dim());
    part.labels.resize(frames);
    std::size_t t = 0;
    for (std::uint32_t u : assigned[k]) {
      part.utterance_starts.push_back(static_cast<std::uint32_t>(t));
      const auto [begin, end] = corpus.utterance_range(u);
      for (std::uint32_t f = begin; f < end; ++f, ++t) {
        part.features.row(static_cast<Eigen::Index>(t)) = corpus.features.row(f);
        part.labels[t] = corpus.labels[f];
      }
    }
    part.validate();
    out.push_back(std::move(part));
  }
  return out;
}

int shared_phoneme_count(const LanguageSpec& a, const LanguageSpec& b) {
  std::set<std::string> sa(a.phonemes.begin(), a.phonemes.end());
  int n = 0;
  for (const auto& p : b.phonemes) n += sa.count(p) ? 1 : 0;
  return n;
}

std::vector<std::string> shared_symbols_all(const std::vector<LanguageSpec>& langs) {
  if (langs.empty()) return {};
  std::set<std::string> acc(langs[0].phonemes.begin(), langs[0].phonemes.end());
  for (std::size_t i = 1; i < langs.size(); ++i) {
    std::set<std::string> next;
    for (const auto& p : langs[i].phonemes)
      if (acc.count(p)) next.insert(p);
    acc = std::move(next);
  }
  return {acc.begin(), acc.end()};
}

}  // namespace posim
