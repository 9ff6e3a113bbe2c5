#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "flynet/error.hpp"

namespace flynet::io {

/// Accumulates little-endian encoded values in memory.
class ByteWriter {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

  void u8(std::uint8_t v) { bytes_.push_back(v); }

  void u32(std::uint32_t v) { put(v, 4); }

  void u64(std::uint64_t v) { put(v, 8); }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes_.data()),
              static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
  }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> bytes_;
};

/// Sequential little-endian decoder over an in-memory buffer. Every read is
/// bounds checked and reports the source name on failure.
class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  static ByteReader load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path.string());
  }

  void expect_magic(std::string_view tag) {
    need(tag.size());
    if (std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) != 0)
      throw DataError(source_ + ": bad magic, expected '" + std::string(tag) + "'");
    pos_ += tag.size();
  }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }

  std::uint64_t u64() { return get(8); }

  float f32() { return std::bit_cast<float>(u32()); }

  double f64() { return std::bit_cast<double>(u64()); }

  bool at_end() const noexcept { return pos_ == bytes_.size(); }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  const std::string& source() const noexcept { return source_; }

  void expect_end() const {
    if (!at_end()) throw DataError(source_ + ": trailing bytes after payload");
  }

 private:
  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) throw DataError(source_ + ": truncated file");
  }

  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return v;
  }

  std::vector<std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a, used to stamp artifacts with the hash of their config.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace flynet::io
