#include "posim/stream_io.hpp"

#include "posim/binio.hpp"
#include "posim/errors.hpp"

namespace posim {

void PosteriorStream::validate() const {
  if (labels.size() != frame_count())
    throw std::invalid_argument("stream labels/posteriors length mismatch");
  for (Eigen::Index t = 0; t < posteriors.rows(); ++t)
    validate_prob_vector(posteriors.row(t).transpose(), "PosteriorStream");
}

std::vector<char> stream_blob(const PosteriorStream& stream) {
  ByteWriter w;
  w.magic("PMPS");
  w.u32(kStreamVersion);
  w.u32(static_cast<std::uint32_t>(stream.frame_count()));
  w.u32(static_cast<std::uint32_t>(stream.class_count()));
  for (Eigen::Index t = 0; t < stream.posteriors.rows(); ++t)
    for (Eigen::Index k = 0; k < stream.posteriors.cols(); ++k)
      w.f64(stream.posteriors(t, k));
  for (std::uint32_t l : stream.labels) w.u32(l);
  w.u32(static_cast<std::uint32_t>(stream.label_space));
  w.str(stream.model_language);
  w.str(stream.corpus_language);
  w.u64(stream.corpus_fingerprint);
  return w.bytes();
}

bool save_stream(const PosteriorStream& stream, const std::filesystem::path& path) {
  return write_file_if_changed(path, stream_blob(stream));
}

PosteriorStream load_stream(const std::filesystem::path& path) {
  ByteReader r(read_file_bytes(path), path.string());
  r.expect_magic("PMPS");
  if (r.u32() != kStreamVersion)
    throw MissingArtifact(path.string() + ": unsupported version");
  PosteriorStream s;
  const std::uint32_t frames = r.u32();
  const std::uint32_t classes = r.u32();
  s.posteriors.resize(frames, classes);
  for (std::uint32_t t = 0; t < frames; ++t)
    for (std::uint32_t k = 0; k < classes; ++k) s.posteriors(t, k) = r.f64();
  s.labels.resize(frames);
  for (std::uint32_t t = 0; t < frames; ++t) s.labels[t] = r.u32();
  const std::uint32_t tag = r.u32();
  if (tag > 1) throw MissingArtifact(path.string() + ": unknown label-space tag");
  s.label_space = static_cast<LabelSpace>(tag);
  s.model_language = r.str();
  s.corpus_language = r.str();
  s.corpus_fingerprint = r.u64();
  if (!r.exhausted()) throw MissingArtifact(path.string() + ": trailing bytes");
  return s;
}

}  // namespace posim
