#pragma once

#include "posim/net.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace posim {

// A checkpoint is two files sharing a stem: <stem>.meta (plain "key = value"
// text) and <stem>.pmnn (binary weights). The blob layout is:
//   "PMNN" | u32 version=1 | per layer: weight matrix row-major, bias vector
// with all floats little-endian f64. Round-trips are bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t seed = 0;
  // Extra key/value entries a caller wants carried with the model
  // (e.g. language, class count, config hash). Keys are written sorted.
  std::map<std::string, std::string> extra;
};

void save_checkpoint(const NetworkParams& net, const std::filesystem::path& stem,
                     const CheckpointMeta& meta);
NetworkParams load_checkpoint(const std::filesystem::path& stem,
                              CheckpointMeta* meta_out = nullptr);

// Fingerprint of the binary blob, used to link downstream artifacts to the
// exact trained parameters.
std::uint64_t checkpoint_fingerprint(const NetworkParams& net);

}  // namespace posim
