#include "roadscene/environment_map.hpp"

#include <algorithm>
#include <cstring>

namespace roadscene {

Rgb EnvironmentMap::sample(const Vec3& dir) const {
  const int h = height();
  const int w = width();
  if (h == 0 || w == 0) throw Error(ErrorCode::kShapeMismatch, "cannot sample an empty environment map");
  auto [r, c] = equirect_coords(dir, h, w);
  const double rf = std::clamp(r - 0.5, 0.0, static_cast<double>(h - 1));
  const double cf = c - 0.5;
  const int r0 = static_cast<int>(std::floor(rf));
  const int r1 = std::min(r0 + 1, h - 1);
  const double tr = rf - r0;
  const int c0f = static_cast<int>(std::floor(cf));
  const double tc = cf - c0f;
  const int c0 = ((c0f % w) + w) % w;
  const int c1 = (c0 + 1) % w;
  const Rgb top = (1.0 - tc) * pixels(r0, c0) + tc * pixels(r0, c1);
  const Rgb bottom = (1.0 - tc) * pixels(r1, c0) + tc * pixels(r1, c1);
  return (1.0 - tr) * top + tr * bottom;
}

EnvironmentMap EnvironmentMap::resampled(int h, int w) const {
  if (pixels.same_shape(h, w)) return *this;
  EnvironmentMap out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.pixels(r, c) = sample(equirect_dir(r, c, h, w));
  return out;
}

bool EnvironmentMap::finite_nonnegative() const {
  for (const Rgb& p : pixels.pixels())
    if (!p.isFinite().all() || (p < 0.0).any()) return false;
  return true;
}

Vec3 EnvironmentMap::brightest_direction() const {
  int best_r = 0, best_c = 0;
  double best = -1.0;
  for (int r = 0; r < height(); ++r)
    for (int c = 0; c < width(); ++c) {
      const double v = pixels(r, c).sum();
      if (v > best) {
        best = v;
        best_r = r;
        best_c = c;
      }
    }
  return equirect_dir(best_r, best_c, height(), width());
}

std::uint64_t EnvironmentMap::checksum() const {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  const int dims[2] = {height(), width()};
  mix(dims, sizeof(dims));
  for (const Rgb& p : pixels.pixels()) {
    const double v[3] = {p[0], p[1], p[2]};
    mix(v, sizeof(v));
  }
  return hash;
}

}  // namespace roadscene
