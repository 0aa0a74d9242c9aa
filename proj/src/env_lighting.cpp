#include "roadscene/env_lighting.hpp"

#include <algorithm>
#include <cmath>

#include "roadscene/error.hpp"

namespace roadscene {

LightingProbe capture_surround(const Vec3& origin, const RadianceField& field, const RaySampling& sampling, int h,
                               int w) {
  if (h < 2 || w < 2) throw Error(ErrorCode::kInvalidArgument, "probe resolution must be at least 2x2");
  LightingProbe probe;
  probe.position = origin;
  probe.surround = EnvironmentMap(h, w);
  probe.transmittance = ScalarImage(h, w, 1.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Ray ray{origin, equirect_dir(r, c, h, w)};
      const RenderResult res = render_ray_unit(ray, field, sampling);
      probe.surround.pixels(r, c) = res.hdr;
      probe.transmittance(r, c) = std::clamp(res.transmittance, 0.0, 1.0);
    }
  return probe;
}

EnvironmentMap blend_environment(const LightingProbe& probe, const EnvironmentMap& sky) {
  if (!probe.surround.pixels.same_shape(probe.transmittance))
    throw Error(ErrorCode::kShapeMismatch, "probe radiance and transmittance differ in shape");
  const EnvironmentMap resampled = sky.resampled(probe.height(), probe.width());
  if (!resampled.pixels.same_shape(probe.surround.pixels))
    throw Error(ErrorCode::kShapeMismatch, "sky could not be resampled to the probe resolution");
  EnvironmentMap out(probe.height(), probe.width());
  for (int r = 0; r < probe.height(); ++r)
    for (int c = 0; c < probe.width(); ++c)
      out.pixels(r, c) = probe.surround.pixels(r, c) + probe.transmittance(r, c) * resampled.pixels(r, c);
  return out;
}

std::vector<Rgb> irradiance(const std::vector<Vec3>& normals, const EnvironmentMap& env) {
  std::vector<Rgb> out(normals.size(), Rgb::Zero());
  const int h = env.height();
  const int w = env.width();
  for (int r = 0; r < h; ++r) {
    const double d_omega = equirect_solid_angle(r, h, w);
    for (int c = 0; c < w; ++c) {
      const Rgb& L = env.pixels(r, c);
      if ((L == 0.0).all()) continue;
      const Vec3 d = equirect_dir(r, c, h, w);
      for (std::size_t i = 0; i < normals.size(); ++i) {
        const double cosine = d.dot(normals[i]);
        if (cosine > 0.0) out[i] += L * (cosine * d_omega);
      }
    }
  }
  return out;
}

Rgb shade_lambertian(const Vec3& normal, const Rgb& albedo, const EnvironmentMap& env) {
  if (std::abs(normal.norm() - 1.0) > 1e-9) throw Error(ErrorCode::kInvalidArgument, "normal must be a unit vector");
  return albedo / kPi * irradiance({normal}, env).front();
}

}  // namespace roadscene
