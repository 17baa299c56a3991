#pragma once

#include "posim/rng.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace posim {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

// Append-only byte buffer used to build the binary artifact formats.
class ByteWriter {
 public:
  void magic(const char tag[4]) { bytes_.insert(bytes_.end(), tag, tag + 4); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  const std::vector<char>& bytes() const { return bytes_; }
  std::uint64_t fingerprint() const {
    return fnv1a64(std::string_view(bytes_.data(), bytes_.size()));
  }

 private:
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  void expect_magic(const char tag[4]);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  void f64_block(double* dst, std::size_t count);
  bool exhausted() const { return pos_ == bytes_.size(); }
  std::uint64_t fingerprint() const {
    return fnv1a64(std::string_view(bytes_.data(), bytes_.size()));
  }

 private:
  void take(void* dst, std::size_t n);
  std::vector<char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

void write_file_bytes(const std::filesystem::path& path, const std::vector<char>& bytes);
std::vector<char> read_file_bytes(const std::filesystem::path& path);

// Writes only when the target is missing or its content differs; returns true
// if the file was (re)written. Keeps reruns of the pipeline byte-stable.
bool write_file_if_changed(const std::filesystem::path& path,
                           const std::vector<char>& bytes);
bool write_text_if_changed(const std::filesystem::path& path, const std::string& text);

std::string to_hex(std::uint64_t v);

}  // namespace posim
