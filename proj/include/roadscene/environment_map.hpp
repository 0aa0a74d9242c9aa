#pragma once

#include <filesystem>

#include "roadscene/equirect.hpp"
#include "roadscene/image.hpp"

namespace roadscene {

// Equirectangular HDR radiance map (see equirect.hpp for the convention).
struct EnvironmentMap {
  RgbImage pixels;

  EnvironmentMap() = default;
  explicit EnvironmentMap(RgbImage px) : pixels(std::move(px)) {}
  EnvironmentMap(int h, int w, const Rgb& fill = Rgb::Zero()) : pixels(h, w, fill) {}

  int height() const { return pixels.height(); }
  int width() const { return pixels.width(); }

  // Bilinear lookup; wraps in azimuth and clamps in polar angle.
  Rgb sample(const Vec3& dir) const;

  // Bilinear resampling to a new resolution.
  EnvironmentMap resampled(int h, int w) const;

  bool finite_nonnegative() const;

  // Direction of the brightest pixel (by channel sum).
  Vec3 brightest_direction() const;

  // FNV-1a over the raw pixel bytes; used to fingerprint maps in documents.
  std::uint64_t checksum() const;

  bool operator==(const EnvironmentMap& o) const { return images_equal(pixels, o.pixels); }
};

}  // namespace roadscene
