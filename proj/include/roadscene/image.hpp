#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "roadscene/error.hpp"
#include "roadscene/math.hpp"

namespace roadscene {

// Row-major 2D grid; (row, col) indexing with row 0 at the top.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int height, int width, const T& fill = T{})
      : height_(height), width_(width), data_(static_cast<std::size_t>(checked(height, width)), fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(int h, int w) const { return h == height_ && w == width_; }
  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return other.height() == height_ && other.width() == width_;
  }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }
  T& at(int row, int col) {
    bounds(row, col);
    return data_[index(row, col)];
  }
  const T& at(int row, int col) const {
    bounds(row, col);
    return data_[index(row, col)];
  }

  std::vector<T>& pixels() { return data_; }
  const std::vector<T>& pixels() const { return data_; }

  bool operator==(const Image& other) const
    requires std::equality_comparable<T>
  {
    return height_ == other.height_ && width_ == other.width_ && data_ == other.data_;
  }

 private:
  static long checked(int h, int w) {
    if (h < 0 || w < 0) throw Error(ErrorCode::kInvalidArgument, "image dimensions must be non-negative");
    return static_cast<long>(h) * w;
  }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }
  void bounds(int row, int col) const {
    if (row < 0 || row >= height_ || col < 0 || col >= width_)
      throw Error(ErrorCode::kOutOfRange, "pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                                              ") outside " + std::to_string(height_) + "x" +
                                              std::to_string(width_) + " image");
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

using RgbImage = Image<Rgb>;
using ScalarImage = Image<double>;
using LabelImage = Image<std::uint16_t>;

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};
using Rgb8Image = Image<Rgb8>;

// Rgb arrays do not define a bool operator==, so compare explicitly.
inline bool images_equal(const RgbImage& a, const RgbImage& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if ((a.pixels()[i] != b.pixels()[i]).any()) return false;
  return true;
}

// --- file formats --------------------------------------------------------

// Portable float map. Three-channel "PF" for RGB, single-channel "Pf" for
// scalar grids (transmittance). Written little-endian, bottom-to-top rows.
void write_pfm(const std::filesystem::path& path, const RgbImage& image);
void write_pfm(const std::filesystem::path& path, const ScalarImage& image);
RgbImage read_pfm_rgb(const std::filesystem::path& path);
ScalarImage read_pfm_scalar(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Rgb8Image& image);
std::vector<std::uint8_t> encode_png(const Rgb8Image& image);
Rgb8Image read_png_rgb8(const std::filesystem::path& path);
// 16-bit grayscale label masks (8-bit grayscale also accepted).
void write_label_png(const std::filesystem::path& path, const LabelImage& labels);
LabelImage read_label_png(const std::filesystem::path& path);

}  // namespace roadscene
