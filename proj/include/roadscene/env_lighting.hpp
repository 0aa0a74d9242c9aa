#pragma once

#include "roadscene/environment_map.hpp"
#include "roadscene/photometry.hpp"

namespace roadscene {

struct LightingProbe {
  Vec3 position = Vec3::Zero();
  EnvironmentMap surround;   // HDR radiance from the field, f = 1
  ScalarImage transmittance; // T_K per direction, in [0, 1]

  int height() const { return surround.height(); }
  int width() const { return surround.width(); }
};

// Renders one ray per equirect pixel center from `origin` (full sphere).
// Throws kInvalidArgument for h or w < 2.
LightingProbe capture_surround(const Vec3& origin, const RadianceField& field, const RaySampling& sampling, int h,
                               int w);

// I_env = I_surround + T_K * I_sky, with the sky bilinearly resampled to the
// probe resolution when needed.
EnvironmentMap blend_environment(const LightingProbe& probe, const EnvironmentMap& sky);

// albedo / pi * sum over the normal's hemisphere of L(d) max(0, d.n) dOmega.
Rgb shade_lambertian(const Vec3& normal, const Rgb& albedo, const EnvironmentMap& env);

// Irradiance (without the albedo / pi factor) for several normals at once.
std::vector<Rgb> irradiance(const std::vector<Vec3>& normals, const EnvironmentMap& env);

}  // namespace roadscene
