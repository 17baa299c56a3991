#include "posim/similarity.hpp"

#include "posim/prob.hpp"

#include <set>
#include <stdexcept>

namespace posim {

std::size_t BiphoneSubsetPartition::count(SubsetTag tag, bool restricted_only) const {
  std::size_t n = 0;
  for (std::size_t b = 0; b < tags.size(); ++b)
    if (tags[b] == tag && (!restricted_only || restricted[b])) ++n;
  return n;
}

BiphoneSubsetPartition partition_biphones(const LanguageSpec& target_lang,
                                          const LanguageSpec& source_lang,
                                          const std::vector<int>& source_train_attested,
                                          const TiedStateInventory& target_tying) {
  std::set<std::string> source_phonemes(source_lang.phonemes.begin(),
                                        source_lang.phonemes.end());
  std::set<std::pair<std::string, std::string>> attested_pairs;
  for (int b : source_train_attested) {
    if (b < 0 || b >= source_lang.biphone_count())
      throw std::invalid_argument("partition_biphones: attested index outside source inventory");
    attested_pairs.insert(source_lang.biphone_symbols(b));
  }

  BiphoneSubsetPartition partition;
  partition.tags.resize(static_cast<std::size_t>(target_lang.biphone_count()));
  partition.restricted.resize(partition.tags.size(), false);
  for (int b = 0; b < target_lang.biphone_count(); ++b) {
    const auto [left, center] = target_lang.biphone_symbols(b);
    SubsetTag tag;
    if (!source_phonemes.count(left) || !source_phonemes.count(center))
      tag = SubsetTag::kUnshared;
    else if (attested_pairs.count({left, center}))
      tag = SubsetTag::kSharedSeen;
    else
      tag = SubsetTag::kSharedUnseen;
    partition.tags[static_cast<std::size_t>(b)] = tag;

    const auto cls = target_tying.class_of(b);
    partition.restricted[static_cast<std::size_t>(b)] =
        cls.has_value() && target_tying.restricted(*cls);
  }
  return partition;
}

std::vector<int> samc_class_map(const LanguageSpec& target_lang,
                                const BiphoneSubsetPartition& partition,
                                const LanguageSpec& source_lang,
                                const TiedStateInventory& source_tying) {
  std::vector<int> map(static_cast<std::size_t>(target_lang.biphone_count()), -1);
  for (int b = 0; b < target_lang.biphone_count(); ++b) {
    if (partition.tags[static_cast<std::size_t>(b)] != SubsetTag::kSharedSeen) continue;
    const auto [left, center] = target_lang.biphone_symbols(b);
    const auto src_b = source_lang.biphone_index(left, center);
    if (!src_b) continue;  // shared-seen implies presence, but stay defensive
    const auto cls = source_tying.class_of(*src_b);
    if (cls) map[static_cast<std::size_t>(b)] = *cls;
  }
  return map;
}

std::vector<std::uint8_t> samc_correct(const PosteriorStream& source_stream,
                                       const BiphoneSubsetPartition& partition,
                                       const std::vector<std::uint32_t>& alignment,
                                       const std::vector<int>& cross_class_map) {
  if (alignment.size() != source_stream.frame_count())
    throw std::invalid_argument("samc_correct: alignment/stream length mismatch");
  std::vector<std::uint8_t> correct(alignment.size(), 0);
  for (std::size_t t = 0; t < alignment.size(); ++t) {
    const std::uint32_t b = alignment[t];
    if (b >= partition.size()) throw std::invalid_argument("samc_correct: label outside partition");
    if (partition.tags[b] != SubsetTag::kSharedSeen) continue;
    const int cls = cross_class_map[b];
    if (cls < 0) continue;
    const Eigen::Index pred =
        argmax_lowest(source_stream.posteriors.row(static_cast<Eigen::Index>(t)).transpose());
    correct[t] = static_cast<int>(pred) == cls ? 1 : 0;
  }
  return correct;
}

const SubsetRow* SimilarityReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

namespace {

struct Accumulator {
  std::size_t frames = 0;
  double kl_sum = 0.0;
  double entropy_sum = 0.0;
  std::size_t samc_correct_frames = 0;
  double kl_samc_sum = 0.0;
  double entropy_samc_sum = 0.0;
  std::size_t samc_eligible = 0;
};

SubsetRow finish(const std::string& name, const Accumulator& acc, bool samc_row) {
  SubsetRow row;
  row.name = name;
  row.frames = acc.frames;
  if (acc.frames > 0) {
    row.mean_kl = acc.kl_sum / static_cast<double>(acc.frames);
    row.mean_entropy = acc.entropy_sum / static_cast<double>(acc.frames);
    if (samc_row && acc.samc_eligible > 0) {
      row.pct_correct_samc = 100.0 * static_cast<double>(acc.samc_correct_frames) /
                             static_cast<double>(acc.samc_eligible);
      if (acc.samc_correct_frames > 0) {
        row.mean_kl_samc = acc.kl_samc_sum / static_cast<double>(acc.samc_correct_frames);
        row.mean_entropy_samc =
            acc.entropy_samc_sum / static_cast<double>(acc.samc_correct_frames);
      }
    }
  }
  return row;
}

}  // namespace

SimilarityReport subset_report(const PosteriorStream& target_stream,
                               const PosteriorStream& mapped_stream,
                               const BiphoneSubsetPartition& partition,
                               const std::vector<std::uint32_t>& alignment,
                               const std::string& source_name,
                               const std::vector<std::uint8_t>* samc) {
  if (target_stream.frame_count() == 0)
    throw std::invalid_argument("subset_report: empty test stream");
  if (target_stream.frame_count() != mapped_stream.frame_count() ||
      target_stream.class_count() != mapped_stream.class_count())
    throw std::invalid_argument("subset_report: streams are not frame-aligned");
  if (target_stream.corpus_fingerprint != mapped_stream.corpus_fingerprint)
    throw std::invalid_argument("subset_report: streams from different corpora");
  if (alignment.size() != target_stream.frame_count())
    throw std::invalid_argument("subset_report: alignment length mismatch");
  if (samc && samc->size() != alignment.size())
    throw std::invalid_argument("subset_report: samc flag length mismatch");

  // Row layout: full subsets and their restricted refinements.
  Accumulator acc_ss, acc_rss, acc_su, acc_rsu, acc_u, acc_ru, acc_all;

  for (std::size_t t = 0; t < alignment.size(); ++t) {
    const std::uint32_t b = alignment[t];
    if (b >= partition.size())
      throw std::invalid_argument("subset_report: label outside partition");
    const double kl = kl_divergence(
        target_stream.posteriors.row(static_cast<Eigen::Index>(t)).transpose(),
        mapped_stream.posteriors.row(static_cast<Eigen::Index>(t)).transpose());
    const double ent =
        entropy(mapped_stream.posteriors.row(static_cast<Eigen::Index>(t)).transpose());
    const bool restricted = partition.restricted[b];
    const SubsetTag tag = partition.tags[b];
    const bool samc_ok = samc && (*samc)[t] != 0;

    auto feed = [&](Accumulator& acc, bool samc_eligible) {
      ++acc.frames;
      acc.kl_sum += kl;
      acc.entropy_sum += ent;
      if (samc_eligible && samc) {
        ++acc.samc_eligible;
        if (samc_ok) {
          ++acc.samc_correct_frames;
          acc.kl_samc_sum += kl;
          acc.entropy_samc_sum += ent;
        }
      }
    };

    feed(acc_all, false);
    switch (tag) {
      case SubsetTag::kSharedSeen:
        feed(acc_ss, true);
        if (restricted) feed(acc_rss, true);
        break;
      case SubsetTag::kSharedUnseen:
        feed(acc_su, false);
        if (restricted) feed(acc_rsu, false);
        break;
      case SubsetTag::kUnshared:
        feed(acc_u, false);
        if (restricted) feed(acc_ru, false);
        break;
    }
  }

  SimilarityReport report;
  report.target_language = target_stream.model_language;
  report.source_language = source_name;
  report.rows.push_back(finish("SS", acc_ss, true));
  report.rows.push_back(finish("RSS", acc_rss, true));
  report.rows.push_back(finish("SU", acc_su, false));
  report.rows.push_back(finish("RSU", acc_rsu, false));
  report.rows.push_back(finish("U", acc_u, false));
  report.rows.push_back(finish("RU", acc_ru, false));
  report.total_frames = acc_all.frames;
  report.overall_kl = acc_all.kl_sum / static_cast<double>(acc_all.frames);
  report.overall_entropy = acc_all.entropy_sum / static_cast<double>(acc_all.frames);
  return report;
}

double SimilarityMatrix::at(const std::string& target, const std::string& source) const {
  for (std::size_t i = 0; i < languages.size(); ++i)
    for (std::size_t j = 0; j < languages.size(); ++j)
      if (languages[i] == target && languages[j] == source)
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  throw std::invalid_argument("similarity matrix: unknown pair " + target + "<-" + source);
}

SimilarityMatrix similarity_matrix(const std::vector<std::string>& languages,
                                   const std::vector<SimilarityReport>& reports) {
  const int n = static_cast<int>(languages.size());
  SimilarityMatrix matrix;
  matrix.languages = languages;
  matrix.values = Mat::Zero(n, n);
  std::string missing;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // identity mapping, zero by convention
      const SimilarityReport* found = nullptr;
      for (const auto& r : reports)
        if (r.target_language == languages[static_cast<std::size_t>(i)] &&
            r.source_language == languages[static_cast<std::size_t>(j)])
          found = &r;
      if (!found) {
        missing += (missing.empty() ? "" : ", ") +
                   languages[static_cast<std::size_t>(i)] + "<-" +
                   languages[static_cast<std::size_t>(j)];
        continue;
      }
      matrix.values(i, j) = found->overall_kl;
    }
  }
  if (!missing.empty())
    throw std::invalid_argument("similarity_matrix: missing reports for " + missing);
  return matrix;
}

Mat overlap_table(const std::vector<LanguageSpec>& langs) {
  const int n = static_cast<int>(langs.size());
  Mat table(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        table(i, j) = 100.0;
        continue;
      }
      const int inter = shared_phoneme_count(langs[static_cast<std::size_t>(i)],
                                             langs[static_cast<std::size_t>(j)]);
      table(i, j) = 100.0 * static_cast<double>(inter) /
                    static_cast<double>(langs[static_cast<std::size_t>(j)].phonemes.size());
    }
  return table;
}

}  // namespace posim
