#pragma once

#include "posim/synthlang.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace posim {

inline constexpr std::uint32_t kCorpusVersion = 1;

// PMFC blob: "PMFC" | u32 version | u32 T | u32 D | TxD f64 row-major
// | T u32 labels | u32 utterance count | utterance start indices (u32).
std::vector<char> corpus_blob(const FrameCorpus& corpus);
std::uint64_t corpus_fingerprint(const FrameCorpus& corpus);

// Writes <stem>.json (manifest) and <stem>.pmfc (blob). Returns true if any
// file content changed on disk.
bool save_corpus(const FrameCorpus& corpus, const std::filesystem::path& stem,
                 const std::map<std::string, std::string>& extra = {});
FrameCorpus load_corpus(const std::filesystem::path& stem,
                        std::map<std::string, std::string>* extra_out = nullptr);

// Language spec round-trips through a versioned JSON manifest.
bool save_language(const LanguageSpec& lang, const std::filesystem::path& path,
                   const std::map<std::string, std::string>& extra = {});
LanguageSpec load_language(const std::filesystem::path& path,
                           std::map<std::string, std::string>* extra_out = nullptr);

}  // namespace posim
