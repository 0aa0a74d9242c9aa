#include "roadscene/skydome.hpp"

#include <cmath>
#include <random>

#include "roadscene/error.hpp"
#include "roadscene/photometry.hpp"

namespace roadscene {
namespace {

void require_unit(const Vec3& v, const char* what) {
  if (!is_finite(v) || std::abs(v.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be a unit vector");
}

Rgb log1p(const Rgb& x) { return {std::log1p(x[0]), std::log1p(x[1]), std::log1p(x[2])}; }

void require_same_shape(const RgbImage& a, const RgbImage& b, const char* what) {
  if (!a.same_shape(b))
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": " + std::to_string(a.height()) + "x" +
                                               std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                                               "x" + std::to_string(b.width()));
}

}  // namespace

nlohmann::json to_json(const SkyLatent& l) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) a.push_back(l.peak_direction[i]);
  for (int i = 0; i < 3; ++i) a.push_back(l.peak_intensity[i]);
  for (int i = 0; i < kSkyContentDim; ++i) a.push_back(l.content[i]);
  return a;
}

SkyLatent sky_latent_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3 + 3 + kSkyContentDim)
    throw Error(ErrorCode::kSchemaViolation, "sky latent must be an array of 70 numbers");
  for (const auto& v : j)
    if (!v.is_number()) throw Error(ErrorCode::kSchemaViolation, "sky latent entries must be numbers");
  SkyLatent l;
  for (int i = 0; i < 3; ++i) l.peak_direction[i] = j[i].get<double>();
  for (int i = 0; i < 3; ++i) l.peak_intensity[i] = j[3 + i].get<double>();
  for (int i = 0; i < kSkyContentDim; ++i) l.content[i] = j[6 + i].get<double>();
  require_unit(l.peak_direction, "peak direction");
  return l;
}

std::vector<float> SkyMaps::decoder_input() const {
  std::vector<float> out;
  out.reserve(dir.size() * 7);
  for (int r = 0; r < height(); ++r)
    for (int c = 0; c < width(); ++c) {
      out.push_back(static_cast<float>(dir(r, c)));
      for (int k = 0; k < 3; ++k) out.push_back(static_cast<float>(intensity(r, c)[k]));
      for (int k = 0; k < 3; ++k) out.push_back(static_cast<float>(encoding(r, c)[k]));
    }
  return out;
}

SkyMaps build_sky_maps(const SkyLatent& latent, int h, int w) {
  if (h < 2 || w < 2) throw Error(ErrorCode::kInvalidArgument, "sky map resolution must be at least 2x2");
  require_unit(latent.peak_direction, "peak direction");
  SkyMaps m{ScalarImage(h, w), RgbImage(h, w, Rgb::Zero()), Image<Vec3>(h, w, Vec3::Zero())};
  const Vec3& f = latent.peak_direction;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Vec3 u = equirect_dir(r, c, h, w);
      // For unit u, f: |u - f|^2 / 2 = 1 - u.f, so this is exp(s (u.f - 1))
      // without cancellation near the peak.
      const double value = std::exp(-kLobeSharpness * 0.5 * (u - f).squaredNorm());
      m.dir(r, c) = value;
      if (value > kPeakThreshold) m.intensity(r, c) = latent.peak_intensity;
      m.encoding(r, c) = u;
    }
  return m;
}

EnvironmentMap inject_peak_residual(const EnvironmentMap& decoded, const SkyMaps& maps) {
  if (!decoded.pixels.same_shape(maps.dir) || !decoded.pixels.same_shape(maps.intensity))
    throw Error(ErrorCode::kShapeMismatch, "decoded panorama and sky maps differ in shape");
  EnvironmentMap out = decoded;
  for (int r = 0; r < maps.height(); ++r)
    for (int c = 0; c < maps.width(); ++c) {
      const Rgb& mi = maps.intensity(r, c);
      if ((mi != 0.0).any()) out.pixels(r, c) = maps.dir(r, c) * mi;
    }
  return out;
}

SkyLatent fuse_latents(const std::vector<SkyLatent>& latents, const std::vector<Pose6D>& extrinsics) {
  if (latents.empty() || latents.size() != extrinsics.size())
    throw Error(ErrorCode::kInvalidArgument, "fuse_latents needs equal, non-empty latent and extrinsic lists");
  if (latents.size() == 1) return latents.front();

  const Mat3 to_front = extrinsics.front().rotation.transpose();
  const double n = static_cast<double>(latents.size());
  Vec3 dir_sum = Vec3::Zero();
  Rgb int_sum = Rgb::Zero();
  for (std::size_t i = 0; i < latents.size(); ++i) {
    require_unit(latents[i].peak_direction, "peak direction");
    dir_sum += to_front * extrinsics[i].rotation * latents[i].peak_direction;
    int_sum += latents[i].peak_intensity;
  }
  const Vec3 mean_dir = dir_sum / n;
  if (mean_dir.norm() < 1e-9)
    throw Error(ErrorCode::kDegenerate, "averaged peak direction vanishes", {{"norm", mean_dir.norm()}});

  SkyLatent out;
  out.peak_direction = mean_dir.normalized();
  out.peak_intensity = int_sum / n;

  const SkyContent& q = latents.front().content;
  const double scale = 1.0 / std::sqrt(static_cast<double>(kSkyContentDim));
  std::vector<double> logits(latents.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < latents.size(); ++i) {
    logits[i] = q.dot(latents[i].content) * scale;
    max_logit = std::max(max_logit, logits[i]);
  }
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    z += l;
  }
  out.content.setZero();
  for (std::size_t i = 0; i < latents.size(); ++i) out.content += (logits[i] / z) * latents[i].content;
  return out;
}

double stage1_total(double dir, double intensity, double hdr, double ldr) {
  return kStage1Weights[0] * dir + kStage1Weights[1] * intensity + kStage1Weights[2] * hdr + kStage1Weights[3] * ldr;
}

double stage2_total(double dir, double intensity, double hdr, double ldr, double content) {
  return kStage2Weights[0] * dir + kStage2Weights[1] * intensity + kStage2Weights[2] * hdr +
         kStage2Weights[3] * ldr + kStage2Weights[4] * content;
}

double direction_loss(const Vec3& pred, const Vec3& truth) {
  require_unit(pred, "predicted direction");
  require_unit(truth, "true direction");
  // atan2 form stays accurate for nearly parallel vectors.
  return std::atan2(pred.cross(truth).norm(), pred.dot(truth));
}

double intensity_loss(const Rgb& pred, const Rgb& truth) {
  if ((pred < 0.0).any() || (truth < 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "intensities must be nonnegative");
  return (log1p(pred) - log1p(truth)).square().sum();
}

double hdr_reconstruction_loss(const RgbImage& pred, const RgbImage& truth) {
  require_same_shape(pred, truth, "HDR reconstruction");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += (log1p(pred.pixels()[i]) - log1p(truth.pixels()[i])).square().sum();
  return sum / (3.0 * static_cast<double>(pred.size()));
}

double ldr_reconstruction_loss(const RgbImage& pred_hdr, const RgbImage& truth_ldr) {
  require_same_shape(pred_hdr, truth_ldr, "LDR reconstruction");
  if (pred_hdr.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_hdr.size(); ++i)
    sum += (truth_ldr.pixels()[i] - oetf(pred_hdr.pixels()[i])).abs().sum();
  return sum / (3.0 * static_cast<double>(pred_hdr.size()));
}

double content_loss(const SkyContent& pred, const SkyContent& truth) {
  return (pred - truth).cwiseAbs().sum() / kSkyContentDim;
}

Stage1Losses sky_losses_stage1(const SkyEstimate& pred, const SkyEstimate& truth) {
  Stage1Losses l;
  l.dir = direction_loss(pred.dir, truth.dir);
  l.intensity = intensity_loss(pred.intensity, truth.intensity);
  l.hdr = hdr_reconstruction_loss(pred.hdr, truth.hdr);
  l.ldr = ldr_reconstruction_loss(pred.hdr, truth.ldr);
  l.total = stage1_total(l.dir, l.intensity, l.hdr, l.ldr);
  return l;
}

Stage2Losses sky_losses_stage2(const SkyEstimate& pred, const SkyEstimate& truth) {
  Stage2Losses l;
  l.dir = direction_loss(pred.dir, truth.dir);
  l.intensity = intensity_loss(pred.intensity, truth.intensity);
  l.hdr = hdr_reconstruction_loss(pred.hdr, truth.hdr);
  l.ldr = ldr_reconstruction_loss(pred.hdr, truth.ldr);
  l.content = content_loss(pred.content, truth.content);
  l.total = stage2_total(l.dir, l.intensity, l.hdr, l.ldr, l.content);
  return l;
}

WhiteBalance draw_white_balance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.2, 1.3);
  WhiteBalance wb;
  wb.blue_gain = u(rng);
  wb.red_divisor = u(rng);
  return wb;
}

EnvironmentMap apply_white_balance(const EnvironmentMap& map, const WhiteBalance& wb) {
  EnvironmentMap out = map;
  for (Rgb& p : out.pixels.pixels()) {
    p[0] /= wb.red_divisor;
    p[2] *= wb.blue_gain;
  }
  return out;
}

EnvironmentMap white_balance_augment(const EnvironmentMap& map, std::uint64_t seed) {
  return apply_white_balance(map, draw_white_balance(seed));
}

}  // namespace roadscene
