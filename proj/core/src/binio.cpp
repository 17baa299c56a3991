#include "posim/binio.hpp"

#include "posim/errors.hpp"

#include <cstdio>
#include <fstream>

namespace posim {

void ByteReader::take(void* dst, std::size_t n) {
  if (pos_ + n > bytes_.size())
    throw MissingArtifact(name_ + ": truncated (wanted " + std::to_string(n) +
                          " bytes at offset " + std::to_string(pos_) + ")");
  std::memcpy(dst, bytes_.data() + pos_, n);
  pos_ += n;
}

void ByteReader::expect_magic(const char tag[4]) {
  char got[4];
  take(got, 4);
  if (std::memcmp(got, tag, 4) != 0)
    throw MissingArtifact(name_ + ": bad magic, expected " + std::string(tag, 4));
}

std::uint32_t ByteReader::u32() {
  std::uint32_t v;
  take(&v, sizeof v);
  return v;
}

std::uint64_t ByteReader::u64() {
  std::uint64_t v;
  take(&v, sizeof v);
  return v;
}

double ByteReader::f64() {
  double v;
  take(&v, sizeof v);
  return v;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  std::string s(n, '\0');
  take(s.data(), n);
  return s;
}

void ByteReader::f64_block(double* dst, std::size_t count) {
  take(dst, count * sizeof(double));
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw MissingArtifact("missing artifact: " + path.string());
  const auto size = in.tellg();
  in.seekg(0);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  in.read(bytes.data(), size);
  if (!in) throw MissingArtifact("unreadable artifact: " + path.string());
  return bytes;
}

bool write_file_if_changed(const std::filesystem::path& path,
                           const std::vector<char>& bytes) {
  if (std::filesystem::exists(path)) {
    try {
      if (read_file_bytes(path) == bytes) return false;
    } catch (const std::exception&) {
      // fall through and rewrite
    }
  }
  write_file_bytes(path, bytes);
  return true;
}

bool write_text_if_changed(const std::filesystem::path& path, const std::string& text) {
  return write_file_if_changed(path, std::vector<char>(text.begin(), text.end()));
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace posim
