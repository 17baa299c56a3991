#include "posim/checkpoint.hpp"

#include "posim/binio.hpp"
#include "posim/errors.hpp"
#include "posim/rng.hpp"

#include <fstream>
#include <sstream>

namespace posim {

namespace {

std::string dims_to_string(const std::vector<int>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(dims[i]);
  }
  return s;
}

std::vector<int> dims_from_string(const std::string& s) {
  std::vector<int> dims;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) dims.push_back(std::stoi(tok));
  return dims;
}

ByteWriter serialize_blob(const NetworkParams& net) {
  ByteWriter w;
  w.magic("PMNN");
  w.u32(kCheckpointVersion);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const Mat& m = net.weights[l];
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) w.f64(net.biases[l][i]);
  }
  return w;
}

}  // namespace

void save_checkpoint(const NetworkParams& net, const std::filesystem::path& stem,
                     const CheckpointMeta& meta) {
  validate_network(net);

  std::map<std::string, std::string> kv = meta.extra;
  kv["format_version"] = "1";
  kv["layer_dims"] = dims_to_string(net.layer_dims);
  kv["activation"] = to_string(net.hidden_activation);
  kv["seed"] = std::to_string(meta.seed);
  kv["rng"] = std::string(Rng::kAlgorithm);

  std::string manifest;
  for (const auto& [k, v] : kv) manifest += k + " = " + v + "\n";

  auto meta_path = stem;
  meta_path += ".meta";
  auto blob_path = stem;
  blob_path += ".pmnn";
  write_text_if_changed(meta_path, manifest);
  write_file_if_changed(blob_path, serialize_blob(net).bytes());
}

NetworkParams load_checkpoint(const std::filesystem::path& stem, CheckpointMeta* meta_out) {
  auto meta_path = stem;
  meta_path += ".meta";
  auto blob_path = stem;
  blob_path += ".pmnn";

  std::ifstream in(meta_path);
  if (!in) throw MissingArtifact("missing artifact: " + meta_path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto sep = line.find(" = ");
    if (sep == std::string::npos) continue;
    kv[line.substr(0, sep)] = line.substr(sep + 3);
  }
  if (kv["format_version"] != "1")
    throw MissingArtifact(meta_path.string() + ": unsupported format_version");

  NetworkParams net;
  net.layer_dims = dims_from_string(kv.at("layer_dims"));
  net.hidden_activation = activation_from_string(kv.at("activation"));

  ByteReader r(read_file_bytes(blob_path), blob_path.string());
  r.expect_magic("PMNN");
  if (r.u32() != kCheckpointVersion)
    throw MissingArtifact(blob_path.string() + ": unsupported blob version");
  for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
    Mat m(net.layer_dims[l + 1], net.layer_dims[l]);
    for (Eigen::Index row = 0; row < m.rows(); ++row)
      for (Eigen::Index col = 0; col < m.cols(); ++col) m(row, col) = r.f64();
    net.weights.push_back(std::move(m));
    Vec b(net.layer_dims[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = r.f64();
    net.biases.push_back(std::move(b));
  }
  if (!r.exhausted())
    throw MissingArtifact(blob_path.string() + ": trailing bytes");
  validate_network(net);

  if (meta_out) {
    meta_out->seed = std::stoull(kv.at("seed"));
    meta_out->extra = kv;
    for (const char* own : {"format_version", "layer_dims", "activation", "seed", "rng"})
      meta_out->extra.erase(own);
  }
  return net;
}

std::uint64_t checkpoint_fingerprint(const NetworkParams& net) {
  return serialize_blob(net).fingerprint();
}

}  // namespace posim
