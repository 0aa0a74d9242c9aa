#include "roadscene/equirect.hpp"

#include <algorithm>
#include <string>

#include "roadscene/error.hpp"

namespace roadscene {

Vec3 equirect_dir(int row, int col, int h, int w) {
  if (h <= 0 || w <= 0 || row < 0 || row >= h || col < 0 || col >= w)
    throw Error(ErrorCode::kOutOfRange, "equirect pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                                            ") outside " + std::to_string(h) + "x" + std::to_string(w));
  const double theta = (row + 0.5) / h * kPi;
  const double phi = (col + 0.5) / w * 2.0 * kPi;
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

std::pair<double, double> equirect_coords(const Vec3& dir, int h, int w) {
  const double n = dir.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zero direction has no equirect pixel");
  const double theta = std::acos(std::clamp(dir.z() / n, -1.0, 1.0));
  double phi = std::atan2(dir.y(), dir.x());
  if (phi < 0.0) phi += 2.0 * kPi;
  return {theta / kPi * h, phi / (2.0 * kPi) * w};
}

PixelIndex equirect_pixel(const Vec3& dir, int h, int w) {
  if (h <= 0 || w <= 0) throw Error(ErrorCode::kOutOfRange, "equirect resolution must be positive");
  auto [r, c] = equirect_coords(dir, h, w);
  int row = std::clamp(static_cast<int>(std::floor(r)), 0, h - 1);
  int col = static_cast<int>(std::floor(c)) % w;
  if (col < 0) col += w;
  return {row, col};
}

double equirect_solid_angle(int row, int h, int w) {
  const double theta = (row + 0.5) / h * kPi;
  return (2.0 * kPi / w) * (kPi / h) * std::sin(theta);
}

}  // namespace roadscene
