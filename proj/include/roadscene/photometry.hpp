#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roadscene/camera_geometry.hpp"
#include "roadscene/image.hpp"
#include "roadscene/scene_model.hpp"

namespace roadscene {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const;
  Aabb padded(double pad) const;
  Aabb merged(const Aabb& o) const;
  // Parametric [t_enter, t_exit] of the ray inside the box, clipped to t >= 0.
  std::optional<std::pair<double, double>> intersect(const Ray& ray) const;
};

struct FieldSample {
  Rgb radiance = Rgb::Zero();  // HDR, >= 0
  double density = 0.0;        // 1/m, >= 0
  std::uint16_t label = 0;     // primitive responsible for the density (0 = stuff)
};

// Queryable (position, direction) -> (radiance, density) field.
class RadianceField {
 public:
  virtual ~RadianceField() = default;
  virtual FieldSample query(const Vec3& position, const Vec3& direction) const = 0;
  virtual Aabb bounds() const = 0;
};

class VacuumField final : public RadianceField {
 public:
  explicit VacuumField(Aabb bounds = {Vec3(-1, -1, -1), Vec3(1, 1, 1)}) : bounds_(bounds) {}
  FieldSample query(const Vec3&, const Vec3&) const override { return {}; }
  Aabb bounds() const override { return bounds_; }

 private:
  Aabb bounds_;
};

// Constant density / radiance inside `box`; the reported bounds are the box
// grown by `pad` so samples also land in empty space around the medium.
class HomogeneousBoxField final : public RadianceField {
 public:
  HomogeneousBoxField(Aabb box, double density, Rgb radiance, double pad = 0.0);
  FieldSample query(const Vec3& p, const Vec3& d) const override;
  Aabb bounds() const override { return bounds_; }

 private:
  Aabb box_;
  double density_;
  Rgb radiance_;
  Aabb bounds_;
};

struct FieldBox {
  Aabb box;
  double density = 0.0;
  Rgb radiance = Rgb::Zero();
  std::uint16_t label = 0;
};

// Union of homogeneous boxes. Overlaps add densities; radiance is the
// density-weighted mean. Covers the two-slab oracle and the scene background.
class CompositeBoxField final : public RadianceField {
 public:
  explicit CompositeBoxField(std::vector<FieldBox> boxes, double pad = 0.0);
  FieldSample query(const Vec3& p, const Vec3& d) const override;
  Aabb bounds() const override { return bounds_; }
  const std::vector<FieldBox>& boxes() const { return boxes_; }

 private:
  std::vector<FieldBox> boxes_;
  Aabb bounds_;
};

// Emissive sphere: density inside the radius, radiance falling off as
// 1 / (1 + r^2) from the center.
class RadialEmitterField final : public RadianceField {
 public:
  RadialEmitterField(Vec3 center, double radius, double density, Rgb radiance);
  FieldSample query(const Vec3& p, const Vec3& d) const override;
  Aabb bounds() const override;

 private:
  Vec3 center_;
  double radius_;
  double density_;
  Rgb radiance_;
};

// Scales the radiance of another field; density untouched.
class ScaledField final : public RadianceField {
 public:
  ScaledField(const RadianceField& base, double scale) : base_(base), scale_(scale) {}
  FieldSample query(const Vec3& p, const Vec3& d) const override;
  Aabb bounds() const override { return base_.bounds(); }

 private:
  const RadianceField& base_;
  double scale_;
};

struct RaySampling {
  int samples = 64;  // K
  double near = 0.0;
  double far = 1e9;
};

// f(dt) = 1 + epsilon (dt - mean) / std; exactly 1 when std = 0.
// Throws kInvalidArgument for dt <= 0.
double exposure_factor(double dt, const ExposureStats& stats);

struct QuadratureResult {
  Rgb radiance = Rgb::Zero();   // sum T_k alpha_k e_k
  double transmittance = 1.0;   // T_{K+1}
  double weight_sum = 0.0;      // sum T_k alpha_k
};

// Discrete volume-rendering quadrature over explicit samples.
QuadratureResult composite_samples(std::span<const double> densities, std::span<const double> deltas,
                                   std::span<const Rgb> radiance);

struct RenderResult {
  Rgb hdr = Rgb::Zero();        // f(dt) * sum T_k alpha_k e_k
  double transmittance = 1.0;   // T_K after the last sample
  double depth = std::numeric_limits<double>::infinity();  // opacity-weighted hit distance
  std::uint16_t label = 0;      // label with the largest accumulated weight
  double opacity = 0.0;         // 1 - transmittance
};

// Midpoint quadrature with K uniform intervals over the ray / bounds overlap.
// A ray that misses the bounds returns zero radiance and T_K = 1.
RenderResult render_ray(const Ray& ray, const RadianceField& field, const RaySampling& sampling, double dt,
                        const ExposureStats& stats);
// Same with f = 1 (no exposure normalization).
RenderResult render_ray_unit(const Ray& ray, const RadianceField& field, const RaySampling& sampling);

// sRGB transfer curve. Throws kInvalidArgument on negative (or NaN) input;
// values above 1 clip to 1.
double oetf(double x);
Rgb oetf(const Rgb& x);
// Throws kInvalidArgument outside [0, 1].
double inverse_oetf(double x);
Rgb inverse_oetf(const Rgb& x);

// 8-bit sRGB encoding of a linear HDR value.
Rgb8 encode_srgb8(const Rgb& linear);

// Mean over rays and channels of (OETF(rendered) - reference)^2. Throws
// kShapeMismatch on length mismatch.
double photometric_loss(std::span<const Rgb> rendered_hdr, std::span<const Rgb> reference_ldr);

struct SeamEntry {
  std::string camera_a;
  std::string camera_b;
  int samples = 0;
  double raw_ratio = 1.0;         // mean(I_b) / mean(I_a)
  double normalized_ratio = 1.0;  // same after dividing each by its f(dt)
  double expected_raw_ratio = 1.0;  // f(dt_b) / f(dt_a)
};

struct SeamReport {
  std::vector<SeamEntry> seams;
  std::vector<std::string> warnings;
};

// Renders the boundary columns of each camera that are also visible to
// another camera and compares their brightness. Throws kInvalidArgument when
// the rig has fewer than two cameras or no pair overlaps.
SeamReport seam_check(const CameraRig& rig, const RadianceField& field, const ExposureStats& stats,
                      const RaySampling& sampling = {});

}  // namespace roadscene
