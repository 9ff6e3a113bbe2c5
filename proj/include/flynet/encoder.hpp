#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "flynet/dataset.hpp"
#include "flynet/error.hpp"
#include "flynet/rng.hpp"

namespace flynet {

/// Sparse random projection + winner-take-all settings. The defaults give the
/// compact 2048 -> 64 code (10% sampling, 50% WTA).
struct EncoderConfig {
  std::size_t input_dim = Frame::kSize;
  std::size_t output_dim = 64;
  double sampling_ratio = 0.1;
  double wta_fraction = 0.5;
  std::uint64_t seed = 0;

  /// Inputs summed per output unit: round-half-up(ratio * m), at least 1.
  std::size_t fan_in() const {
    const auto f = static_cast<std::size_t>(std::floor(sampling_ratio * static_cast<double>(input_dim) + 0.5));
    return std::max<std::size_t>(1, f);
  }

  /// Number of winners: round-half-up(wta_fraction * n).
  std::size_t winners() const {
    return static_cast<std::size_t>(std::floor(wta_fraction * static_cast<double>(output_dim) + 0.5));
  }

  void validate() const {
    if (input_dim < 1) throw ConfigError("encoder.input_dim must be >= 1");
    if (output_dim < 1) throw ConfigError("encoder.output_dim must be >= 1");
    if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0))
      throw ConfigError("encoder.sampling_ratio must be in (0, 1]");
    if (!(wta_fraction > 0.0 && wta_fraction < 1.0))
      throw ConfigError("encoder.wta_fraction must be in (0, 1)");
    if (fan_in() > input_dim) throw ConfigError("encoder fan-in exceeds input dimension");
    const auto k = winners();
    if (k < 1 || k > output_dim) throw ConfigError("encoder.wta_fraction leaves no winners");
  }
};

/// Binary sparse connection matrix stored as one sorted index list per
/// output unit.
struct ProjectionMatrix {
  std::size_t input_dim = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint32_t>> rows;

  std::size_t output_dim() const noexcept { return rows.size(); }

  bool operator==(const ProjectionMatrix&) const = default;
};

/// Packed n-bit code; bit j lives in word j/64 at position j%64.
class BinaryDescriptor {
 public:
  BinaryDescriptor() = default;
  explicit BinaryDescriptor(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  /// From a string of '0'/'1' characters, index 0 first.
  static BinaryDescriptor from_string(const std::string& bits) {
    BinaryDescriptor d(bits.size());
    for (std::size_t j = 0; j < bits.size(); ++j) {
      if (bits[j] == '1') d.set(j);
      else if (bits[j] != '0') throw DataError("descriptor string must contain only 0/1");
    }
    return d;
  }

  std::size_t size() const noexcept { return n_; }

  bool test(std::size_t j) const { return (words_[j / 64] >> (j % 64)) & 1U; }

  void set(std::size_t j, bool value = true) {
    const std::uint64_t mask = std::uint64_t{1} << (j % 64);
    if (value) words_[j / 64] |= mask;
    else words_[j / 64] &= ~mask;
  }

  std::size_t popcount() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// Byte b of the little-endian packing (bit j -> byte j/8, bit j%8).
  std::uint8_t byte(std::size_t b) const noexcept {
    return static_cast<std::uint8_t>(words_[b / 8] >> (8 * (b % 8)));
  }

  void set_byte(std::size_t b, std::uint8_t value) noexcept {
    const unsigned shift = 8 * (b % 8);
    words_[b / 8] = (words_[b / 8] & ~(std::uint64_t{0xFF} << shift)) | (std::uint64_t{value} << shift);
  }

  std::size_t byte_count() const noexcept { return (n_ + 7) / 8; }

  std::string to_string() const {
    std::string s(n_, '0');
    for (std::size_t j = 0; j < n_; ++j)
      if (test(j)) s[j] = '1';
    return s;
  }

  bool operator==(const BinaryDescriptor&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Samples fan_in distinct inputs for every output unit. Row j uses its own
/// generator seeded from (seed, j), so rows can be built independently.
inline ProjectionMatrix build_projection(const EncoderConfig& cfg) {
  cfg.validate();
  const std::size_t m = cfg.input_dim;
  const std::size_t k = cfg.fan_in();
  ProjectionMatrix w{m, cfg.seed, {}};
  w.rows.reserve(cfg.output_dim);
  std::vector<std::uint32_t> pool(m);
  for (std::size_t j = 0; j < cfg.output_dim; ++j) {
    std::iota(pool.begin(), pool.end(), 0U);
    Rng rng(derive_seed(cfg.seed, j));
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k; ++i) {
      const auto pick = i + static_cast<std::size_t>(rng.below(m - i));
      std::swap(pool[i], pool[pick]);
    }
    std::vector<std::uint32_t> row(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(row.begin(), row.end());
    w.rows.push_back(std::move(row));
  }
  return w;
}

/// Raw projection activations y = Wx.
inline std::vector<double> project(const ProjectionMatrix& w, std::span<const double> x) {
  if (x.size() != w.input_dim)
    throw DataError("encoder input has " + std::to_string(x.size()) + " values, expected " +
                    std::to_string(w.input_dim));
  std::vector<double> y(w.rows.size(), 0.0);
  for (std::size_t j = 0; j < w.rows.size(); ++j) {
    double acc = 0.0;
    for (auto i : w.rows[j]) acc += x[i];
    y[j] = acc;
  }
  return y;
}

/// Sets the k largest activations to 1. Ties go to the larger value first,
/// then to the smaller index.
inline BinaryDescriptor winner_take_all(std::span<const double> y, std::size_t k) {
  std::vector<std::uint32_t> order(y.size());
  std::iota(order.begin(), order.end(), 0U);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) { return y[a] > y[b] || (y[a] == y[b] && a < b); });
  BinaryDescriptor d(y.size());
  for (std::size_t i = 0; i < k; ++i) d.set(order[i]);
  return d;
}

inline BinaryDescriptor encode(const ProjectionMatrix& w, std::span<const double> x, const EncoderConfig& cfg) {
  const auto k = cfg.winners();
  if (w.output_dim() != cfg.output_dim)
    throw ConfigError("projection has " + std::to_string(w.output_dim()) + " rows, config expects " +
                      std::to_string(cfg.output_dim));
  if (k < 1 || k > w.output_dim()) throw ConfigError("encoder.wta_fraction leaves no winners");
  const auto y = project(w, x);
  return winner_take_all(y, k);
}

inline BinaryDescriptor encode(const ProjectionMatrix& w, const Frame& f, const EncoderConfig& cfg) {
  return encode(w, std::span<const double>(f.pixels), cfg);
}

inline std::vector<BinaryDescriptor> encode_traverse(const ProjectionMatrix& w, const Traverse& t,
                                                     const EncoderConfig& cfg) {
  std::vector<BinaryDescriptor> out;
  out.reserve(t.frames.size());
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    try {
      out.push_back(encode(w, t.frames[i], cfg));
    } catch (const DataError& e) {
      throw DataError("frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

/// 1 - hamming(a, b) / n.
inline double hamming_similarity(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  if (a.size() != b.size())
    throw DataError("descriptor length mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  if (a.size() == 0) return 1.0;
  std::size_t diff = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) diff += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  return 1.0 - static_cast<double>(diff) / static_cast<double>(a.size());
}

}  // namespace flynet
