#pragma once

#include <utility>

#include "roadscene/math.hpp"

namespace roadscene {

// Equirectangular convention shared by every lighting module:
//   row 0 is the zenith (+z), row h-1 the nadir; polar angle at a pixel
//   center is (row + 0.5) / h * pi.
//   col spans azimuth [0, 2pi) counter-clockwise from +x; azimuth at a pixel
//   center is (col + 0.5) / w * 2pi.

struct PixelIndex {
  int row = 0;
  int col = 0;
  bool operator==(const PixelIndex&) const = default;
};

// Unit direction through the center of pixel (row, col). Throws kOutOfRange.
Vec3 equirect_dir(int row, int col, int h, int w);

// Pixel containing `dir` (need not be normalized, must be non-zero).
PixelIndex equirect_pixel(const Vec3& dir, int h, int w);

// Continuous (row, col) coordinates of `dir`; pixel centers sit at +0.5.
std::pair<double, double> equirect_coords(const Vec3& dir, int h, int w);

// Solid angle subtended by a pixel of the given row.
double equirect_solid_angle(int row, int h, int w);

}  // namespace roadscene
