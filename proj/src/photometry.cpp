#include "roadscene/photometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "roadscene/error.hpp"

namespace roadscene {

bool Aabb::contains(const Vec3& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Aabb Aabb::padded(double pad) const { return {min - Vec3::Constant(pad), max + Vec3::Constant(pad)}; }

Aabb Aabb::merged(const Aabb& o) const { return {min.cwiseMin(o.min), max.cwiseMax(o.max)}; }

std::optional<std::pair<double, double>> Aabb::intersect(const Ray& ray) const {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < min[a] || o > max[a]) return std::nullopt;
      continue;
    }
    double ta = (min[a] - o) / d;
    double tb = (max[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t1 < t0) return std::nullopt;
  }
  if (!(t1 > t0)) return std::nullopt;
  return std::make_pair(t0, t1);
}

HomogeneousBoxField::HomogeneousBoxField(Aabb box, double density, Rgb radiance, double pad)
    : box_(box), density_(density), radiance_(radiance), bounds_(box.padded(pad)) {
  if (density < 0.0 || (radiance < 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "field density and radiance must be nonnegative");
}

FieldSample HomogeneousBoxField::query(const Vec3& p, const Vec3&) const {
  if (!box_.contains(p)) return {};
  return {radiance_, density_, 0};
}

CompositeBoxField::CompositeBoxField(std::vector<FieldBox> boxes, double pad) : boxes_(std::move(boxes)) {
  if (boxes_.empty()) {
    bounds_ = Aabb{Vec3::Zero(), Vec3::Zero()}.padded(pad);
    return;
  }
  bounds_ = boxes_.front().box;
  for (const auto& b : boxes_) {
    if (b.density < 0.0 || (b.radiance < 0.0).any())
      throw Error(ErrorCode::kInvalidArgument, "field density and radiance must be nonnegative");
    bounds_ = bounds_.merged(b.box);
  }
  bounds_ = bounds_.padded(pad);
}

FieldSample CompositeBoxField::query(const Vec3& p, const Vec3&) const {
  FieldSample s;
  Rgb weighted = Rgb::Zero();
  double best = 0.0;
  for (const auto& b : boxes_) {
    if (b.density <= 0.0 || !b.box.contains(p)) continue;
    s.density += b.density;
    weighted += b.density * b.radiance;
    if (b.density > best) {
      best = b.density;
      s.label = b.label;
    }
  }
  if (s.density > 0.0) s.radiance = weighted / s.density;
  return s;
}

RadialEmitterField::RadialEmitterField(Vec3 center, double radius, double density, Rgb radiance)
    : center_(center), radius_(radius), density_(density), radiance_(radiance) {
  if (!(radius > 0.0) || density < 0.0 || (radiance < 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "invalid radial emitter parameters");
}

FieldSample RadialEmitterField::query(const Vec3& p, const Vec3&) const {
  const double r2 = (p - center_).squaredNorm();
  if (r2 > radius_ * radius_) return {};
  return {radiance_ / (1.0 + r2), density_, 0};
}

Aabb RadialEmitterField::bounds() const {
  return {center_ - Vec3::Constant(radius_), center_ + Vec3::Constant(radius_)};
}

FieldSample ScaledField::query(const Vec3& p, const Vec3& d) const {
  FieldSample s = base_.query(p, d);
  s.radiance *= scale_;
  return s;
}

double exposure_factor(double dt, const ExposureStats& stats) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "exposure time must be positive");
  if (stats.std == 0.0) return 1.0;
  return 1.0 + stats.epsilon * (dt - stats.mean) / stats.std;
}

QuadratureResult composite_samples(std::span<const double> densities, std::span<const double> deltas,
                                   std::span<const Rgb> radiance) {
  if (densities.size() != deltas.size() || densities.size() != radiance.size())
    throw Error(ErrorCode::kShapeMismatch, "sample arrays differ in length");
  QuadratureResult r;
  double t = 1.0;
  for (std::size_t k = 0; k < densities.size(); ++k) {
    const double alpha = -std::expm1(-densities[k] * deltas[k]);
    const double w = t * alpha;
    r.radiance += w * radiance[k];
    r.weight_sum += w;
    t *= 1.0 - alpha;
  }
  r.transmittance = t;
  return r;
}

namespace {

RenderResult march(const Ray& ray, const RadianceField& field, const RaySampling& sampling, double factor) {
  if (sampling.samples < 1) throw Error(ErrorCode::kInvalidArgument, "sample count must be >= 1");
  RenderResult out;
  auto hit = field.bounds().intersect(ray);
  if (!hit) return out;
  const double t0 = std::max(hit->first, sampling.near);
  const double t1 = std::min(hit->second, sampling.far);
  if (!(t1 > t0)) return out;

  const double delta = (t1 - t0) / sampling.samples;
  double trans = 1.0;
  double depth_acc = 0.0;
  Rgb acc = Rgb::Zero();
  std::map<std::uint16_t, double> label_weight;
  for (int k = 0; k < sampling.samples; ++k) {
    const double t = t0 + (k + 0.5) * delta;
    const FieldSample s = field.query(ray.at(t), ray.direction);
    if (s.density <= 0.0) continue;
    const double alpha = -std::expm1(-s.density * delta);
    const double w = trans * alpha;
    acc += w * s.radiance;
    depth_acc += w * t;
    label_weight[s.label] += w;
    trans *= 1.0 - alpha;
  }
  out.hdr = factor * acc;
  out.transmittance = trans;
  out.opacity = 1.0 - trans;
  if (out.opacity > 0.0) out.depth = depth_acc / out.opacity;
  double best = -1.0;
  for (const auto& [label, w] : label_weight)
    if (w > best) {
      best = w;
      out.label = label;
    }
  return out;
}

}  // namespace

RenderResult render_ray(const Ray& ray, const RadianceField& field, const RaySampling& sampling, double dt,
                        const ExposureStats& stats) {
  return march(ray, field, sampling, exposure_factor(dt, stats));
}

RenderResult render_ray_unit(const Ray& ray, const RadianceField& field, const RaySampling& sampling) {
  return march(ray, field, sampling, 1.0);
}

double oetf(double x) {
  if (!(x >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "OETF input must be nonnegative");
  if (x >= 1.0) return 1.0;
  if (x <= 0.0031308) return 12.92 * x;
  return 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

Rgb oetf(const Rgb& x) { return {oetf(x[0]), oetf(x[1]), oetf(x[2])}; }

double inverse_oetf(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "inverse OETF input must lie in [0, 1]");
  if (x <= 0.04045) return x / 12.92;
  return std::pow((x + 0.055) / 1.055, 2.4);
}

Rgb inverse_oetf(const Rgb& x) { return {inverse_oetf(x[0]), inverse_oetf(x[1]), inverse_oetf(x[2])}; }

Rgb8 encode_srgb8(const Rgb& linear) {
  auto q = [](double v) {
    const double e = oetf(std::max(0.0, v));
    return static_cast<std::uint8_t>(std::lround(e * 255.0));
  };
  return {q(linear[0]), q(linear[1]), q(linear[2])};
}

double photometric_loss(std::span<const Rgb> rendered_hdr, std::span<const Rgb> reference_ldr) {
  if (rendered_hdr.size() != reference_ldr.size())
    throw Error(ErrorCode::kShapeMismatch, "rendered and reference pixel sets differ in length");
  if (rendered_hdr.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < rendered_hdr.size(); ++i) {
    const Rgb d = oetf(rendered_hdr[i]) - reference_ldr[i];
    sum += (d * d).sum() / 3.0;
  }
  return sum / static_cast<double>(rendered_hdr.size());
}

namespace {

struct SeamSample {
  Ray ray_a;
  Ray ray_b;
};

std::vector<SeamSample> overlap_samples(const CameraModel& a, const CameraModel& b) {
  std::vector<SeamSample> out;
  const bool shared_center = (a.extrinsic.translation - b.extrinsic.translation).norm() < 1e-9;
  for (int col : {0, a.width - 1}) {
    for (int row = 0; row < a.height; ++row) {
      const Ray ra = pixel_ray(a, col + 0.5, row + 0.5);
      // Point far along the ray; for co-located cameras any depth gives the
      // same pixel in b.
      const Vec3 target = ra.at(shared_center ? 1.0 : 50.0);
      auto uv = project_point(b, target);
      if (!uv || uv->x() < 0.0 || uv->x() > b.width || uv->y() < 0.0 || uv->y() > b.height) continue;
      Ray rb = shared_center ? ra : pixel_ray(b, uv->x(), uv->y());
      out.push_back({ra, rb});
    }
  }
  return out;
}

double luminance(const Rgb& c) { return c.sum() / 3.0; }

}  // namespace

SeamReport seam_check(const CameraRig& rig, const RadianceField& field, const ExposureStats& stats,
                      const RaySampling& sampling) {
  if (rig.cameras.size() < 2) throw Error(ErrorCode::kInvalidArgument, "seam check needs at least two cameras");
  SeamReport report;
  for (std::size_t i = 0; i < rig.cameras.size(); ++i) {
    for (std::size_t j = i + 1; j < rig.cameras.size(); ++j) {
      const CameraModel& a = rig.cameras[i];
      const CameraModel& b = rig.cameras[j];
      auto samples = overlap_samples(a, b);
      if (samples.empty()) continue;
      const double fa = exposure_factor(a.exposure, stats);
      const double fb = exposure_factor(b.exposure, stats);
      // Exposure-free radiance per side; the raw ratio is the exposure gain
      // ratio times the radiance ratio.
      double norm_a = 0.0, norm_b = 0.0;
      for (const auto& s : samples) {
        norm_a += luminance(render_ray_unit(s.ray_a, field, sampling).hdr);
        norm_b += luminance(render_ray_unit(s.ray_b, field, sampling).hdr);
      }
      const double sum_a = fa * norm_a, sum_b = fb * norm_b;
      SeamEntry e;
      e.camera_a = a.id;
      e.camera_b = b.id;
      e.samples = static_cast<int>(samples.size());
      e.expected_raw_ratio = fb / fa;
      if (sum_a == 0.0 && sum_b == 0.0) {
        e.raw_ratio = 1.0;
        e.normalized_ratio = 1.0;
        report.warnings.push_back("seam " + a.id + "/" + b.id + ": zero radiance on both sides, ratios set to 1");
      } else {
        e.normalized_ratio = norm_b / norm_a;
        e.raw_ratio = (fb / fa) * e.normalized_ratio;
      }
      report.seams.push_back(e);
    }
  }
  if (report.seams.empty()) throw Error(ErrorCode::kInvalidArgument, "no overlapping camera pair in rig");
  return report;
}

}  // namespace roadscene
