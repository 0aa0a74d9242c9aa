#pragma once

#include <vector>

#include "roadscene/compositor.hpp"
#include "roadscene/photometry.hpp"
#include "roadscene/scene_model.hpp"

// Frame synthesis for an edited scene. The background stands in for the
// trained radiance field: the scene's geometry boxes and original vehicles
// volume-rendered over a ground plane and the skydome. The foreground ray-casts
// the added vehicles, shades them from a per-vehicle lighting probe and casts
// their shadows toward the brightest sky direction.

namespace roadscene {

struct RenderSettings {
  int frames = 40;
  double fps = 10.0;
  int width = 160;
  int height = 96;
  int samples = 96;  // K per background ray
  int probe_height = 16;
  int probe_width = 32;
  int sparse_stride = 4;  // one depth sample every n-th row / column
};

struct BackgroundFrame {
  RgbImage hdr;  // linear, exposure factor applied
  LabelImage labels;
  std::vector<SparseDepth> sparse;
};

// Reference camera at time t: ego pose * view offset * rig extrinsic, with
// intrinsics scaled to the output resolution.
CameraModel render_camera(const SceneState& state, double t, const RenderSettings& settings);

// Vehicle footprint (length, width, height) and base color from attributes,
// with defaults 4.5 x 1.8 x 1.5 m and mid grey.
Vec3 vehicle_dimensions(const PlacedVehicle& v);
Rgb vehicle_color(const PlacedVehicle& v);

// The sky used for rendering: the scene's skydome or a default daylight sky.
EnvironmentMap render_sky(const SceneState& state);

std::vector<BackgroundFrame> render_background_frames(const SceneState& state, const RenderSettings& settings);
std::vector<ForegroundLayer> render_foreground_frames(const SceneState& state, const RenderSettings& settings);
std::vector<Rgb8Image> compose_frames(const std::vector<BackgroundFrame>& bg, const std::vector<ForegroundLayer>& fg);

std::vector<Rgb8Image> render_video(const SceneState& state, const RenderSettings& settings);

}  // namespace roadscene
