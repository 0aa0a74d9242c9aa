#include "roadscene/compositor.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "roadscene/error.hpp"

namespace roadscene {

ForegroundLayer ForegroundLayer::empty(int h, int w) {
  return {RgbImage(h, w, Rgb::Zero()), ScalarImage(h, w, 0.0),
          ScalarImage(h, w, std::numeric_limits<double>::infinity()), RgbImage(h, w, Rgb::Ones())};
}

std::optional<double> PatchDepths::lookup(std::uint16_t label) const {
  auto it = depth.find(label);
  if (it == depth.end()) return std::nullopt;
  return it->second;
}

PatchDepths patch_depths(const std::vector<SparseDepth>& sparse, const LabelImage& masks) {
  std::map<std::uint16_t, std::pair<double, int>> acc;
  for (const auto& s : sparse) {
    if (s.row < 0 || s.row >= masks.height() || s.col < 0 || s.col >= masks.width()) continue;
    if (!(s.depth > 0.0)) continue;
    auto& a = acc[masks(s.row, s.col)];
    a.first += s.depth;
    a.second += 1;
  }
  PatchDepths out;
  for (const auto& [label, a] : acc) out.depth[label] = a.first / a.second;
  for (std::uint16_t label : masks.pixels())
    if (!out.depth.count(label)) out.unknown.insert(label);
  return out;
}

RgbImage composite(const ForegroundLayer& fg, const RgbImage& bg_rgb, const BackgroundDepth& bg_depth) {
  const int h = bg_rgb.height();
  const int w = bg_rgb.width();
  if (!fg.rgb.same_shape(bg_rgb) || !fg.alpha.same_shape(bg_rgb) || !fg.depth.same_shape(bg_rgb) ||
      !fg.shadow.same_shape(bg_rgb) || !bg_depth.masks.same_shape(bg_rgb))
    throw Error(ErrorCode::kShapeMismatch, "foreground, background and mask sizes differ");
  const PatchDepths patches = patch_depths(bg_depth.sparse, bg_depth.masks);
  RgbImage out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Rgb b = bg_rgb(r, c) * fg.shadow(r, c);
      const double a = fg.alpha(r, c);
      bool fg_wins = false;
      if (a > 0.0) {
        const std::uint16_t label = bg_depth.masks(r, c);
        const auto pd = bg_depth.stuff_labels.count(label) ? std::nullopt : patches.lookup(label);
        fg_wins = !pd || fg.depth(r, c) < *pd;
      }
      out(r, c) = fg_wins ? Rgb(a * fg.rgb(r, c) + (1.0 - a) * b) : b;
    }
  return out;
}

void motion_blur(ForegroundLayer& layer, double vx, double vy, int taps) {
  if (taps <= 1 || (vx == 0.0 && vy == 0.0)) return;
  const int h = layer.height();
  const int w = layer.width();
  RgbImage premult(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) premult(r, c) = layer.rgb(r, c) * layer.alpha(r, c);
  RgbImage rgb_out(h, w, Rgb::Zero());
  ScalarImage alpha_out(h, w, 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      Rgb acc = Rgb::Zero();
      double a = 0.0;
      for (int k = 0; k < taps; ++k) {
        const double f = (k + 0.5) / taps - 0.5;
        const int rr = static_cast<int>(std::lround(r - f * vy));
        const int cc = static_cast<int>(std::lround(c - f * vx));
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        acc += premult(rr, cc);
        a += layer.alpha(rr, cc);
      }
      a /= taps;
      alpha_out(r, c) = a;
      rgb_out(r, c) = a > 0.0 ? Rgb(acc / taps / a) : Rgb(Rgb::Zero());
    }
  layer.rgb = std::move(rgb_out);
  layer.alpha = std::move(alpha_out);
}

nlohmann::json VideoManifest::to_json() const {
  return {{"fps", fps}, {"frame_count", frame_count}, {"duration", duration},
          {"width", width}, {"height", height}, {"files", files}};
}

VideoManifest describe_video(const std::vector<Rgb8Image>& frames, double fps) {
  if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, "video needs at least one frame");
  if (!(fps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fps must be positive");
  VideoManifest m;
  m.fps = fps;
  m.frame_count = static_cast<int>(frames.size());
  m.duration = m.frame_count / fps;
  m.height = frames.front().height();
  m.width = frames.front().width();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].same_shape(m.height, m.width))
      throw Error(ErrorCode::kShapeMismatch, "frame " + std::to_string(i) + " size differs from frame 0",
                  {{"frame", i}});
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.png", i);
    m.files.emplace_back(name);
  }
  return m;
}

VideoManifest assemble_video(const std::vector<Rgb8Image>& frames, double fps, const std::filesystem::path& dir) {
  VideoManifest m = describe_video(frames, fps);
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) write_png(dir / m.files[i], frames[i]);
  std::ofstream out(dir / "manifest.json");
  out << m.to_json().dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in " + dir.string());
  return m;
}

std::vector<SparseDepth> read_sparse_depth_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<SparseDepth> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line_no == 1 && line.rfind("u", 0) == 0)) continue;
    std::istringstream ss(line);
    SparseDepth s;
    char c1 = 0, c2 = 0;
    if (!(ss >> s.col >> c1 >> s.row >> c2 >> s.depth) || c1 != ',' || c2 != ',')
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": expected u,v,depth");
    out.push_back(s);
  }
  return out;
}

void write_sparse_depth_csv(const std::filesystem::path& path, const std::vector<SparseDepth>& samples) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "u,v,depth\n";
  out.precision(17);
  for (const auto& s : samples) out << s.col << "," << s.row << "," << s.depth << "\n";
}

}  // namespace roadscene
