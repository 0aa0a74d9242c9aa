#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadscene/environment_map.hpp"
#include "roadscene/pose.hpp"

namespace roadscene {

inline constexpr int kSkyContentDim = 64;
inline constexpr double kLobeSharpness = 100.0;
inline constexpr double kPeakThreshold = 0.9;

using SkyContent = Eigen::Matrix<double, kSkyContentDim, 1>;

struct SkyLatent {
  Vec3 peak_direction = Vec3::UnitZ();  // unit
  Rgb peak_intensity = Rgb::Zero();     // HDR, >= 0
  SkyContent content = SkyContent::Zero();

  bool operator==(const SkyLatent& o) const {
    return peak_direction == o.peak_direction && (peak_intensity == o.peak_intensity).all() && content == o.content;
  }
};

// Flat array of 3 + 3 + 64 numbers.
nlohmann::json to_json(const SkyLatent& l);
SkyLatent sky_latent_from_json(const nlohmann::json& j);

struct SkyMaps {
  ScalarImage dir;       // M_dir in (0, 1]
  RgbImage intensity;    // M_int
  Image<Vec3> encoding;  // M_pe, unit pixel directions

  int height() const { return dir.height(); }
  int width() const { return dir.width(); }
  // Channel concatenation [M_dir, M_int, M_pe] per pixel, row-major HWC.
  std::vector<float> decoder_input() const;
};

// Throws kInvalidArgument for h or w < 2 or a non-unit peak direction.
SkyMaps build_sky_maps(const SkyLatent& latent, int h, int w);

// Replaces decoded pixels with M_dir * M_int wherever M_int is nonzero.
// Throws kShapeMismatch when the shapes differ.
EnvironmentMap inject_peak_residual(const EnvironmentMap& decoded, const SkyMaps& maps);

// Index 0 must be the front camera. Directions are rotated into the front
// camera frame and averaged; intensities averaged; contents fused by
// softmax(q k^T / sqrt(64)) v with identity projections and q = front content.
// Throws kInvalidArgument on empty / unequal inputs, kDegenerate when the
// averaged direction vanishes.
SkyLatent fuse_latents(const std::vector<SkyLatent>& latents, const std::vector<Pose6D>& extrinsics);

struct SkyEstimate {
  Vec3 dir = Vec3::UnitZ();
  Rgb intensity = Rgb::Zero();
  RgbImage hdr;
  RgbImage ldr;
  SkyContent content = SkyContent::Zero();
};

struct Stage1Losses {
  double dir = 0.0;
  double intensity = 0.0;
  double hdr = 0.0;
  double ldr = 0.0;
  double total = 0.0;
};

struct Stage2Losses {
  double dir = 0.0;
  double intensity = 0.0;
  double hdr = 0.0;
  double ldr = 0.0;
  double content = 0.0;
  double total = 0.0;
};

inline constexpr std::array<double, 4> kStage1Weights = {1.0, 0.1, 2.0, 0.2};
inline constexpr std::array<double, 5> kStage2Weights = {0.5, 0.25, 0.005, 0.1, 0.2};

double stage1_total(double dir, double intensity, double hdr, double ldr);
double stage2_total(double dir, double intensity, double hdr, double ldr, double content);

// Angle between unit vectors (radians). Throws kInvalidArgument for non-unit input.
double direction_loss(const Vec3& pred, const Vec3& truth);
// ||log(1 + pred) - log(1 + truth)||^2.
double intensity_loss(const Rgb& pred, const Rgb& truth);
// Element mean of (log(1 + pred) - log(1 + truth))^2.
double hdr_reconstruction_loss(const RgbImage& pred, const RgbImage& truth);
// Element mean of |truth_ldr - OETF(pred_hdr)|.
double ldr_reconstruction_loss(const RgbImage& pred_hdr, const RgbImage& truth_ldr);
// Element mean of |pred - truth|.
double content_loss(const SkyContent& pred, const SkyContent& truth);

Stage1Losses sky_losses_stage1(const SkyEstimate& pred, const SkyEstimate& truth);
Stage2Losses sky_losses_stage2(const SkyEstimate& pred, const SkyEstimate& truth);

struct WhiteBalance {
  double blue_gain = 1.0;
  double red_divisor = 1.0;
};

// Two draws from Uniform[1.2, 1.3) on a seeded mt19937_64.
WhiteBalance draw_white_balance(std::uint64_t seed);
EnvironmentMap apply_white_balance(const EnvironmentMap& map, const WhiteBalance& wb);
EnvironmentMap white_balance_augment(const EnvironmentMap& map, std::uint64_t seed);

}  // namespace roadscene
