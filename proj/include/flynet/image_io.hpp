#pragma once

// Image decoding for PNG (libpng), JPEG (libjpeg) and binary/ASCII PNM.
// Consumers must link PNG and JPEG; the `flynet` CMake target does this.

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <jpeglib.h>

#include "flynet/error.hpp"

namespace flynet {

/// Decoded 8-bit image, interleaved channels (1 = gray, 3 = RGB).
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> data;

  std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
    return data[(row * width + col) * channels + ch];
  }
};

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

inline Image decode_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw DataError("cannot decode image '" + path.string() + "': " + png.message);
  png.format = PNG_FORMAT_RGB;
  Image img;
  img.width = png.width;
  img.height = png.height;
  img.channels = 3;
  img.data.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.data.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw DataError("cannot decode image '" + path.string() + "': " + msg);
  }
  return img;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

extern "C" inline void flynet_jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Returns false and fills `message` on failure. No objects with destructors
// live across the setjmp boundary.
inline bool decode_jpeg_raw(std::FILE* file, Image& img, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = flynet_jpeg_error_exit;
  if (setjmp(err.jump)) {
    std::copy(std::begin(err.message), std::end(err.message), message);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  img.width = cinfo.output_width;
  img.height = cinfo.output_height;
  img.channels = 3;
  img.data.resize(img.width * img.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.data.data() + std::size_t{cinfo.output_scanline} * img.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

inline Image decode_jpeg(const std::filesystem::path& path) {
  std::FILE* file = std::fopen(path.c_str(), "rb");
  if (!file) throw DataError("cannot open image '" + path.string() + "'");
  Image img;
  char message[JMSG_LENGTH_MAX] = {};
  const bool ok = decode_jpeg_raw(file, img, message);
  std::fclose(file);
  if (!ok) throw DataError("cannot decode image '" + path.string() + "': " + message);
  return img;
}

inline Image decode_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image '" + path.string() + "'");
  const auto fail = [&](const std::string& why) {
    return DataError("cannot decode image '" + path.string() + "': " + why);
  };
  // Header tokens, skipping '#' comments.
  auto token = [&]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
      } else {
        tok.push_back(c);
      }
    }
    return tok;
  };
  const std::string kind = token();
  if (kind != "P2" && kind != "P5" && kind != "P3" && kind != "P6") throw fail("unsupported PNM type");
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(token());
    h = std::stol(token());
    maxval = std::stol(token());
  } catch (const std::exception&) {
    throw fail("malformed header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw fail("malformed header");
  Image img;
  img.width = static_cast<std::size_t>(w);
  img.height = static_cast<std::size_t>(h);
  img.channels = (kind == "P3" || kind == "P6") ? 3 : 1;
  const std::size_t count = img.width * img.height * img.channels;
  img.data.resize(count);
  const auto scale = [&](long v) {
    return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  };
  if (kind == "P5" || kind == "P6") {
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    std::vector<std::uint8_t> raw(count * bpp);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw fail("truncated pixel data");
    for (std::size_t i = 0; i < count; ++i) {
      const long v = bpp == 2 ? (long{raw[2 * i]} << 8) | raw[2 * i + 1] : long{raw[i]};
      img.data[i] = scale(v);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::string tok = token();
      if (tok.empty()) throw fail("truncated pixel data");
      img.data[i] = scale(std::clamp(std::stol(tok), 0L, maxval));
    }
  }
  return img;
}

}  // namespace detail

/// Decodes a PNG, JPEG or PNM file. Failures raise DataError naming the file.
inline Image decode_image(const std::filesystem::path& path) {
  const auto ext = detail::lower_extension(path);
  if (ext == ".png") return detail::decode_png(path);
  if (ext == ".jpg" || ext == ".jpeg") return detail::decode_jpeg(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return detail::decode_pnm(path);
  throw DataError("cannot decode image '" + path.string() + "': unsupported extension");
}

inline bool has_image_extension(const std::filesystem::path& path) {
  const auto ext = detail::lower_extension(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm" || ext == ".ppm" ||
         ext == ".pnm";
}

/// Writes an 8-bit binary PGM. `comment` (if non-empty) goes in the header.
inline void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      const std::vector<std::uint8_t>& gray, const std::string& comment = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "P5\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
}

}  // namespace flynet
