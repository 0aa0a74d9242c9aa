#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "roadscene/image.hpp"

namespace roadscene {
namespace {

bool host_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char b = 0;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

void write_pfm_raw(const std::filesystem::path& path, int h, int w, int channels, const std::vector<float>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << (channels == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n" << "-1.0\n";
  // PFM stores rows bottom-to-top.
  const std::size_t row_len = static_cast<std::size_t>(w) * channels;
  for (int r = h - 1; r >= 0; --r) {
    const float* src = rows.data() + static_cast<std::size_t>(r) * row_len;
    if (host_little_endian()) {
      out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(row_len * sizeof(float)));
    } else {
      for (std::size_t i = 0; i < row_len; ++i) {
        unsigned char b[4];
        std::memcpy(b, &src[i], 4);
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
        out.write(reinterpret_cast<const char*>(b), 4);
      }
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

std::vector<float> read_pfm_raw(const std::filesystem::path& path, int expected_channels, int& h, int& w) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string magic;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  const int channels = magic == "PF" ? 3 : (magic == "Pf" ? 1 : 0);
  if (channels == 0 || channels != expected_channels || w <= 0 || h <= 0)
    throw Error(ErrorCode::kIo, path.string() + " is not a " + std::to_string(expected_channels) + "-channel PFM");
  const bool file_little = scale < 0.0;
  const std::size_t row_len = static_cast<std::size_t>(w) * channels;
  std::vector<float> data(row_len * static_cast<std::size_t>(h));
  for (int r = h - 1; r >= 0; --r) {
    float* dst = data.data() + static_cast<std::size_t>(r) * row_len;
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(row_len * sizeof(float)));
    if (!in) throw Error(ErrorCode::kIo, "truncated PFM " + path.string());
    if (file_little != host_little_endian()) {
      for (std::size_t i = 0; i < row_len; ++i) {
        unsigned char b[4];
        std::memcpy(b, &dst[i], 4);
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
        std::memcpy(&dst[i], b, 4);
      }
    }
  }
  return data;
}

struct PngWriteContext {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteContext() { png_destroy_write_struct(&png, &info); }
};

struct PngReadContext {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadContext() { png_destroy_read_struct(&png, &info, nullptr); }
};

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw Error(ErrorCode::kIo, std::string("png: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* buffer = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  buffer->insert(buffer->end(), data, data + length);
}
void flush_nothing(png_structp) {}

std::vector<std::uint8_t> encode(int w, int h, int bit_depth, int color_type, const std::vector<std::uint8_t>& rows,
                                 std::size_t row_bytes) {
  PngWriteContext ctx;
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!ctx.png) throw Error(ErrorCode::kIo, "png_create_write_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  std::vector<std::uint8_t> buffer;
  png_set_write_fn(ctx.png, &buffer, append_bytes, flush_nothing);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  for (int r = 0; r < h; ++r)
    png_write_row(ctx.png, const_cast<png_bytep>(rows.data() + static_cast<std::size_t>(r) * row_bytes));
  png_write_end(ctx.png, nullptr);
  return buffer;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int channels = 0;
  std::vector<std::uint8_t> rows;
  std::size_t row_bytes = 0;
};

DecodedPng decode_png(const std::filesystem::path& path, bool expand_to_rgb) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!fp) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  PngReadContext ctx;
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!ctx.png) throw Error(ErrorCode::kIo, "png_create_read_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  png_init_io(ctx.png, fp.get());
  png_read_info(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  const int depth = png_get_bit_depth(ctx.png, ctx.info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (expand_to_rgb) {
    if (depth == 16) png_set_strip_16(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(ctx.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
  } else {
    if (color != PNG_COLOR_TYPE_GRAY) throw Error(ErrorCode::kIo, path.string() + " is not a grayscale label PNG");
    if (depth == 16 && host_little_endian()) png_set_swap(ctx.png);
  }
  png_read_update_info(ctx.png, ctx.info);
  DecodedPng out;
  out.width = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  out.height = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  out.bit_depth = png_get_bit_depth(ctx.png, ctx.info);
  out.channels = png_get_channels(ctx.png, ctx.info);
  out.row_bytes = png_get_rowbytes(ctx.png, ctx.info);
  out.rows.resize(out.row_bytes * static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r) png_read_row(ctx.png, out.rows.data() + static_cast<std::size_t>(r) * out.row_bytes, nullptr);
  png_read_end(ctx.png, nullptr);
  return out;
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<float> rows;
  rows.reserve(image.size() * 3);
  for (const Rgb& p : image.pixels())
    for (int c = 0; c < 3; ++c) rows.push_back(static_cast<float>(p[c]));
  write_pfm_raw(path, image.height(), image.width(), 3, rows);
}

void write_pfm(const std::filesystem::path& path, const ScalarImage& image) {
  std::vector<float> rows(image.pixels().begin(), image.pixels().end());
  write_pfm_raw(path, image.height(), image.width(), 1, rows);
}

RgbImage read_pfm_rgb(const std::filesystem::path& path) {
  int h = 0, w = 0;
  auto data = read_pfm_raw(path, 3, h, w);
  RgbImage out(h, w);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.pixels()[i] = Rgb(data[3 * i], data[3 * i + 1], data[3 * i + 2]);
  return out;
}

ScalarImage read_pfm_scalar(const std::filesystem::path& path) {
  int h = 0, w = 0;
  auto data = read_pfm_raw(path, 1, h, w);
  ScalarImage out(h, w);
  std::copy(data.begin(), data.end(), out.pixels().begin());
  return out;
}

std::vector<std::uint8_t> encode_png(const Rgb8Image& image) {
  if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty image");
  const std::size_t row_bytes = static_cast<std::size_t>(image.width()) * 3;
  std::vector<std::uint8_t> rows;
  rows.reserve(row_bytes * static_cast<std::size_t>(image.height()));
  for (const Rgb8& p : image.pixels()) {
    rows.push_back(p.r);
    rows.push_back(p.g);
    rows.push_back(p.b);
  }
  return encode(image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, rows, row_bytes);
}

void write_png(const std::filesystem::path& path, const Rgb8Image& image) { write_bytes(path, encode_png(image)); }

Rgb8Image read_png_rgb8(const std::filesystem::path& path) {
  DecodedPng d = decode_png(path, true);
  Rgb8Image out(d.height, d.width);
  for (int r = 0; r < d.height; ++r)
    for (int c = 0; c < d.width; ++c) {
      const std::uint8_t* px = d.rows.data() + static_cast<std::size_t>(r) * d.row_bytes + static_cast<std::size_t>(c) * 3;
      out(r, c) = {px[0], px[1], px[2]};
    }
  return out;
}

void write_label_png(const std::filesystem::path& path, const LabelImage& labels) {
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty label image");
  const std::size_t row_bytes = static_cast<std::size_t>(labels.width()) * 2;
  std::vector<std::uint8_t> rows;
  rows.reserve(row_bytes * static_cast<std::size_t>(labels.height()));
  for (std::uint16_t v : labels.pixels()) {
    rows.push_back(static_cast<std::uint8_t>(v >> 8));  // PNG is big-endian
    rows.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  write_bytes(path, encode(labels.width(), labels.height(), 16, PNG_COLOR_TYPE_GRAY, rows, row_bytes));
}

LabelImage read_label_png(const std::filesystem::path& path) {
  DecodedPng d = decode_png(path, false);
  LabelImage out(d.height, d.width);
  for (int r = 0; r < d.height; ++r) {
    const std::uint8_t* row = d.rows.data() + static_cast<std::size_t>(r) * d.row_bytes;
    for (int c = 0; c < d.width; ++c) {
      if (d.bit_depth == 16) {
        std::uint16_t v = 0;
        std::memcpy(&v, row + static_cast<std::size_t>(c) * 2, 2);
        out(r, c) = v;
      } else {
        out(r, c) = row[c];
      }
    }
  }
  return out;
}

}  // namespace roadscene
