#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadscene/math.hpp"

namespace roadscene {

inline constexpr const char* kPaintMaterial = "car_paint";
inline constexpr double kColorTolerance = 0.2;

struct AssetRecord {
  std::string id;
  std::string type;              // "Porsche", "police car", ...
  Rgb color = Rgb::Constant(0.5);  // base color, sRGB [0, 1]
  Vec3 dimensions = Vec3::Zero();  // length, width, height (m)
  bool origin_at_bottom_center = true;
  bool faces_plus_x = true;
  bool metric_units = true;
  std::string paint_material = kPaintMaterial;
  std::string path;  // mesh file, opaque to this library

  double length() const { return dimensions.x(); }
  bool operator==(const AssetRecord& o) const {
    return id == o.id && type == o.type && (color == o.color).all() && dimensions == o.dimensions &&
           origin_at_bottom_center == o.origin_at_bottom_center && faces_plus_x == o.faces_plus_x &&
           metric_units == o.metric_units && paint_material == o.paint_material && path == o.path;
  }
};

nlohmann::json to_json(const AssetRecord& a);
AssetRecord asset_record_from_json(const nlohmann::json& j);

struct NormalizedAsset {
  AssetRecord record;
  std::vector<std::string> notes;  // one per repaired flag
};

// Repairs the orientation / origin / unit / material flags. Throws
// kInvalidArgument when dimensions are missing and kPlausibility when the
// length falls outside [1, 25] m.
NormalizedAsset normalize_asset(const AssetRecord& record);

struct AssetRequest {
  std::optional<std::string> type;  // nullopt or a generic word ("car") = any
  std::optional<Rgb> color;
};

struct AssetMatch {
  AssetRecord record;
  bool needs_recolor = false;
  int score = 0;
};

// score = 2 * type match + 1 * (|color - requested| <= 0.2); ties go to the
// lexicographically smallest id. Throws kInvalidArgument on an empty bank.
AssetMatch match_asset(const AssetRequest& request, const std::vector<AssetRecord>& bank);

// Changes only the base color. Throws kMissingMaterial without a paint material.
AssetRecord recolor(const AssetRecord& record, const Rgb& color);

// True for words that name a vehicle without choosing a model.
bool is_generic_vehicle_type(std::string_view type);

class AssetBank {
 public:
  AssetBank() = default;
  explicit AssetBank(std::vector<AssetRecord> records);
  static AssetBank load(const std::filesystem::path& path);

  const std::vector<AssetRecord>& records() const { return records_; }
  const AssetRecord* find(std::string_view id) const;
  // Throws kInvalidArgument for unknown ids.
  const AssetRecord& at(std::string_view id) const;
  bool empty() const { return records_.empty(); }

 private:
  std::vector<AssetRecord> records_;
};

// CSS basic color keywords (plus "grey" and "orange").
std::optional<Rgb> color_from_name(std::string_view name);
const std::vector<std::string>& color_names();
std::string nearest_color_name(const Rgb& color);

}  // namespace roadscene
