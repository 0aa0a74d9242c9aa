#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadscene/image.hpp"

namespace roadscene {

struct ForegroundLayer {
  RgbImage rgb;        // linear HDR
  ScalarImage alpha;   // [0, 1]
  ScalarImage depth;   // m, infinity where empty
  RgbImage shadow;     // [0, 1] per channel, 1 = unshadowed

  // Transparent layer: alpha 0, depth infinity, shadow 1.
  static ForegroundLayer empty(int h, int w);
  int height() const { return rgb.height(); }
  int width() const { return rgb.width(); }
};

struct SparseDepth {
  int row = 0;
  int col = 0;
  double depth = 0.0;  // m, > 0
};

struct BackgroundDepth {
  std::vector<SparseDepth> sparse;
  LabelImage masks;
  // Labels treated as unknown depth regardless of samples (ground / sky).
  std::set<std::uint16_t> stuff_labels = {0};
};

struct PatchDepths {
  std::map<std::uint16_t, double> depth;
  std::set<std::uint16_t> unknown;  // labels in the mask without any sample

  std::optional<double> lookup(std::uint16_t label) const;
};

// Mean sparse depth per mask label. Samples outside the mask are ignored.
PatchDepths patch_depths(const std::vector<SparseDepth>& sparse, const LabelImage& masks);

// Per pixel: b' = bg * shadow; if alpha > 0 and the foreground is nearer than
// the pixel's patch depth (unknown or stuff: foreground wins), out = alpha fg
// + (1 - alpha) b', else out = b'. Throws kShapeMismatch on size mismatch.
RgbImage composite(const ForegroundLayer& fg, const RgbImage& bg_rgb, const BackgroundDepth& bg_depth);

// 1D box blur of rgb and alpha along a screen-space velocity (pixels per
// frame); `taps` samples spread over the velocity vector.
void motion_blur(ForegroundLayer& layer, double vx, double vy, int taps);

struct VideoManifest {
  double fps = 10.0;
  int frame_count = 0;
  double duration = 0.0;  // s
  int width = 0;
  int height = 0;
  std::vector<std::string> files;

  nlohmann::json to_json() const;
};

// Validates the sequence and describes it. Throws kInvalidArgument for an
// empty list or non-positive fps, kShapeMismatch for size drift.
VideoManifest describe_video(const std::vector<Rgb8Image>& frames, double fps);

// Writes frame_0000.png ... and manifest.json into `dir`.
VideoManifest assemble_video(const std::vector<Rgb8Image>& frames, double fps, const std::filesystem::path& dir);

// Sparse depth CSV with header "u,v,depth" (u = column, v = row).
std::vector<SparseDepth> read_sparse_depth_csv(const std::filesystem::path& path);
void write_sparse_depth_csv(const std::filesystem::path& path, const std::vector<SparseDepth>& samples);

}  // namespace roadscene
