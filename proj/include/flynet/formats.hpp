#pragma once

// On-disk formats. All integers and floats are little-endian.
//
//   FNAD  descriptors   "FNAD" u32 version=1, u32 m, u32 n, u32 count, u64 seed,
//                       count * ceil(n/8) packed bytes (bit j -> byte j/8, bit j%8)
//   FNHD  head          "FNHD" u32 version=1, u32 R, u32 n, R*n f64 weights
//                       (row-major), R f64 bias
//   FNRN  rnn           "FNRN" u32 version=1, u32 R, u32 H, f64 blocks in order
//                       W_in (HxR), W_rec (HxH), b_rec (H), W_out (RxH), b_out (R),
//                       matrices row-major
//   DMAT  diff. matrix  text line "DMAT <R> <Q>\n" then R*Q f32 row-major

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flynet/binary_io.hpp"
#include "flynet/classifier.hpp"
#include "flynet/encoder.hpp"
#include "flynet/rnn.hpp"
#include "flynet/seqslam.hpp"

namespace flynet::io {

inline constexpr std::uint32_t kFormatVersion = 1;

struct DescriptorFile {
  std::uint32_t input_dim = 0;
  std::uint32_t code_bits = 0;
  std::uint64_t seed = 0;
  std::vector<BinaryDescriptor> descriptors;
};

inline ByteWriter encode_descriptors(const DescriptorFile& f) {
  ByteWriter w;
  w.magic("FNAD");
  w.u32(kFormatVersion);
  w.u32(f.input_dim);
  w.u32(f.code_bits);
  w.u32(static_cast<std::uint32_t>(f.descriptors.size()));
  w.u64(f.seed);
  for (const auto& d : f.descriptors) {
    if (d.size() != f.code_bits) throw DataError("descriptor width differs from file header");
    for (std::size_t b = 0; b < d.byte_count(); ++b) w.u8(d.byte(b));
  }
  return w;
}

inline void save_descriptors(const std::filesystem::path& path, const DescriptorFile& f) {
  encode_descriptors(f).save(path);
}

inline DescriptorFile load_descriptors(const std::filesystem::path& path) {
  auto r = ByteReader::load(path);
  r.expect_magic("FNAD");
  if (r.u32() != kFormatVersion) throw DataError(r.source() + ": unsupported FNAD version");
  DescriptorFile f;
  f.input_dim = r.u32();
  f.code_bits = r.u32();
  const std::uint32_t count = r.u32();
  f.seed = r.u64();
  const std::size_t stride = (std::size_t{f.code_bits} + 7) / 8;
  if (r.remaining() != stride * count) throw DataError(r.source() + ": size mismatch");
  f.descriptors.reserve(count);
  const unsigned tail = f.code_bits % 8;
  for (std::uint32_t i = 0; i < count; ++i) {
    BinaryDescriptor d(f.code_bits);
    for (std::size_t b = 0; b < stride; ++b) {
      const std::uint8_t v = r.u8();
      if (tail != 0 && b + 1 == stride && (v >> tail) != 0) throw DataError(r.source() + ": nonzero padding bits");
      d.set_byte(b, v);
    }
    f.descriptors.push_back(std::move(d));
  }
  r.expect_end();
  return f;
}

namespace detail {

inline void put_matrix(ByteWriter& w, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
}

inline void get_matrix(ByteReader& r, Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f64();
}

inline void put_vector(ByteWriter& w, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v(i));
}

inline void get_vector(ByteReader& r, Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.f64();
}

}  // namespace detail

inline void save_head(const std::filesystem::path& path, const DenseHead& head) {
  ByteWriter w;
  w.magic("FNHD");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(head.places()));
  w.u32(static_cast<std::uint32_t>(head.code_bits()));
  detail::put_matrix(w, head.weights);
  detail::put_vector(w, head.bias);
  w.save(path);
}

inline DenseHead load_head(const std::filesystem::path& path) {
  auto r = ByteReader::load(path);
  r.expect_magic("FNHD");
  if (r.u32() != kFormatVersion) throw DataError(r.source() + ": unsupported FNHD version");
  const std::uint32_t places = r.u32();
  const std::uint32_t bits = r.u32();
  if (r.remaining() != (std::size_t{places} * bits + places) * 8) throw DataError(r.source() + ": size mismatch");
  auto head = DenseHead::zeros(places, bits);
  detail::get_matrix(r, head.weights);
  detail::get_vector(r, head.bias);
  return head;
}

inline void save_rnn(const std::filesystem::path& path, const RnnModel& m) {
  ByteWriter w;
  w.magic("FNRN");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(m.places()));
  w.u32(static_cast<std::uint32_t>(m.hidden()));
  detail::put_matrix(w, m.w_in);
  detail::put_matrix(w, m.w_rec);
  detail::put_vector(w, m.b_rec);
  detail::put_matrix(w, m.w_out);
  detail::put_vector(w, m.b_out);
  w.save(path);
}

inline RnnModel load_rnn(const std::filesystem::path& path) {
  auto r = ByteReader::load(path);
  r.expect_magic("FNRN");
  if (r.u32() != kFormatVersion) throw DataError(r.source() + ": unsupported FNRN version");
  const std::size_t places = r.u32();
  const std::size_t hidden = r.u32();
  const std::size_t expected = (2 * places * hidden + hidden * hidden + hidden + places) * 8;
  if (r.remaining() != expected) throw DataError(r.source() + ": size mismatch");
  auto m = RnnModel::zeros(places, hidden);
  detail::get_matrix(r, m.w_in);
  detail::get_matrix(r, m.w_rec);
  detail::get_vector(r, m.b_rec);
  detail::get_matrix(r, m.w_out);
  detail::get_vector(r, m.b_out);
  return m;
}

inline void save_difference_matrix(const std::filesystem::path& path, const DifferenceMatrix& m) {
  ByteWriter w;
  w.raw("DMAT " + std::to_string(m.d.rows()) + " " + std::to_string(m.d.cols()) + "\n");
  for (Eigen::Index i = 0; i < m.d.rows(); ++i)
    for (Eigen::Index j = 0; j < m.d.cols(); ++j) w.f32(static_cast<float>(m.d(i, j)));
  w.save(path);
}

inline Eigen::MatrixXf load_difference_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string tag;
  long rows = -1, cols = -1;
  in >> tag >> rows >> cols;
  if (tag != "DMAT" || rows < 0 || cols < 0 || in.get() != '\n') throw DataError(path.string() + ": bad DMAT header");
  std::vector<std::uint8_t> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(std::move(rest), path.string());
  Eigen::MatrixXf m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = r.f32();
  r.expect_end();
  return m;
}

}  // namespace flynet::io
