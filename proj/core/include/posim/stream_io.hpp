#pragma once

#include "posim/stream.hpp"

#include <filesystem>

namespace posim {

inline constexpr std::uint32_t kStreamVersion = 1;

// PMPS file: "PMPS" | u32 version | u32 T | u32 K | TxK f64 row-major
// | T u32 reference labels | u32 label-space tag | model language
// | corpus language | u64 corpus fingerprint. Strings are u32-length-prefixed.
// Round-trips are bit-exact.
std::vector<char> stream_blob(const PosteriorStream& stream);
bool save_stream(const PosteriorStream& stream, const std::filesystem::path& path);
PosteriorStream load_stream(const std::filesystem::path& path);

}  // namespace posim
