#include "posim/corpus_io.hpp"

#include "posim/binio.hpp"
#include "posim/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace posim {

using nlohmann::json;

namespace {

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("missing artifact: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MissingArtifact(path.string() + ": unparseable manifest (" + e.what() + ")");
  }
  return j;
}

}  // namespace

std::vector<char> corpus_blob(const FrameCorpus& corpus) {
  ByteWriter w;
  w.magic("PMFC");
  w.u32(kCorpusVersion);
  w.u32(static_cast<std::uint32_t>(corpus.frame_count()));
  w.u32(static_cast<std::uint32_t>(corpus.feature_dim()));
  for (Eigen::Index t = 0; t < corpus.features.rows(); ++t)
    for (Eigen::Index d = 0; d < corpus.features.cols(); ++d)
      w.f64(corpus.features(t, d));
  for (std::uint32_t l : corpus.labels) w.u32(l);
  w.u32(static_cast<std::uint32_t>(corpus.utterance_count()));
  for (std::uint32_t u : corpus.utterance_starts) w.u32(u);
  return w.bytes();
}

std::uint64_t corpus_fingerprint(const FrameCorpus& corpus) {
  const auto bytes = corpus_blob(corpus);
  return fnv1a64(std::string_view(bytes.data(), bytes.size()));
}

bool save_corpus(const FrameCorpus& corpus, const std::filesystem::path& stem,
                 const std::map<std::string, std::string>& extra) {
  corpus.validate();
  const auto blob = corpus_blob(corpus);

  json manifest;
  manifest["format_version"] = kCorpusVersion;
  manifest["language"] = corpus.language;
  manifest["frames"] = corpus.frame_count();
  manifest["feature_dim"] = corpus.feature_dim();
  manifest["utterances"] = corpus.utterance_count();
  manifest["fingerprint"] = to_hex(fnv1a64(std::string_view(blob.data(), blob.size())));
  for (const auto& [k, v] : extra) manifest[k] = v;

  auto manifest_path = stem;
  manifest_path += ".json";
  auto blob_path = stem;
  blob_path += ".pmfc";
  const bool a = write_text_if_changed(manifest_path, manifest.dump(2) + "\n");
  const bool b = write_file_if_changed(blob_path, blob);
  return a || b;
}

FrameCorpus load_corpus(const std::filesystem::path& stem,
                        std::map<std::string, std::string>* extra_out) {
  auto manifest_path = stem;
  manifest_path += ".json";
  auto blob_path = stem;
  blob_path += ".pmfc";

  const json manifest = load_json(manifest_path);
  if (manifest.at("format_version").get<std::uint32_t>() != kCorpusVersion)
    throw MissingArtifact(manifest_path.string() + ": unsupported format_version");

  ByteReader r(read_file_bytes(blob_path), blob_path.string());
  const std::uint64_t fp = r.fingerprint();
  r.expect_magic("PMFC");
  if (r.u32() != kCorpusVersion)
    throw MissingArtifact(blob_path.string() + ": unsupported blob version");

  FrameCorpus corpus;
  corpus.language = manifest.at("language").get<std::string>();
  const std::uint32_t frames = r.u32();
  const std::uint32_t dim = r.u32();
  corpus.features.resize(frames, dim);
  for (std::uint32_t t = 0; t < frames; ++t)
    for (std::uint32_t d = 0; d < dim; ++d) corpus.features(t, d) = r.f64();
  corpus.labels.resize(frames);
  for (std::uint32_t t = 0; t < frames; ++t) corpus.labels[t] = r.u32();
  const std::uint32_t utts = r.u32();
  corpus.utterance_starts.resize(utts);
  for (std::uint32_t u = 0; u < utts; ++u) corpus.utterance_starts[u] = r.u32();
  if (!r.exhausted()) throw MissingArtifact(blob_path.string() + ": trailing bytes");

  if (manifest.at("fingerprint").get<std::string>() != to_hex(fp))
    throw MissingArtifact(blob_path.string() + ": fingerprint mismatch with manifest");
  corpus.validate();

  if (extra_out) {
    for (const auto& [k, v] : manifest.items())
      if (v.is_string()) (*extra_out)[k] = v.get<std::string>();
  }
  return corpus;
}

bool save_language(const LanguageSpec& lang, const std::filesystem::path& path,
                   const std::map<std::string, std::string>& extra) {
  lang.validate();
  json j;
  j["format_version"] = 1;
  j["name"] = lang.name;
  j["mean_segment_frames"] = lang.mean_segment_frames;
  j["phonemes"] = lang.phonemes;
  json biphones = json::array();
  for (const auto& b : lang.biphones) biphones.push_back({b.left, b.center});
  j["biphones"] = std::move(biphones);
  json means = json::array(), stddevs = json::array();
  for (int b = 0; b < lang.biphone_count(); ++b) {
    json mrow = json::array(), srow = json::array();
    for (int d = 0; d < lang.feature_dim(); ++d) {
      mrow.push_back(lang.emission_means(b, d));
      srow.push_back(lang.emission_stddevs(b, d));
    }
    means.push_back(std::move(mrow));
    stddevs.push_back(std::move(srow));
  }
  j["emission_means"] = std::move(means);
  j["emission_stddevs"] = std::move(stddevs);
  json freq = json::array();
  for (int b = 0; b < lang.biphone_count(); ++b)
    freq.push_back(lang.biphone_frequencies[b]);
  j["biphone_frequencies"] = std::move(freq);
  for (const auto& [k, v] : extra) j[k] = v;
  return write_text_if_changed(path, j.dump(2) + "\n");
}

LanguageSpec load_language(const std::filesystem::path& path,
                           std::map<std::string, std::string>* extra_out) {
  const json j = load_json(path);
  if (j.at("format_version").get<int>() != 1)
    throw MissingArtifact(path.string() + ": unsupported format_version");

  LanguageSpec lang;
  lang.name = j.at("name").get<std::string>();
  lang.mean_segment_frames = j.at("mean_segment_frames").get<int>();
  lang.phonemes = j.at("phonemes").get<std::vector<std::string>>();
  for (const auto& b : j.at("biphones"))
    lang.biphones.push_back(Biphone{b.at(0).get<int>(), b.at(1).get<int>()});
  const auto& means = j.at("emission_means");
  const auto& stddevs = j.at("emission_stddevs");
  const int bcount = static_cast<int>(lang.biphones.size());
  const int dim = bcount > 0 ? static_cast<int>(means.at(0).size()) : 0;
  lang.emission_means.resize(bcount, dim);
  lang.emission_stddevs.resize(bcount, dim);
  for (int b = 0; b < bcount; ++b)
    for (int d = 0; d < dim; ++d) {
      lang.emission_means(b, d) = means.at(static_cast<std::size_t>(b)).at(static_cast<std::size_t>(d)).get<double>();
      lang.emission_stddevs(b, d) = stddevs.at(static_cast<std::size_t>(b)).at(static_cast<std::size_t>(d)).get<double>();
    }
  lang.biphone_frequencies.resize(bcount);
  for (int b = 0; b < bcount; ++b)
    lang.biphone_frequencies[b] = j.at("biphone_frequencies").at(static_cast<std::size_t>(b)).get<double>();
  lang.validate();

  if (extra_out) {
    for (const auto& [k, v] : j.items())
      if (v.is_string() && k != "name") (*extra_out)[k] = v.get<std::string>();
  }
  return lang;
}

}  // namespace posim
