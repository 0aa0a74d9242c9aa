#include "roadscene/asset_bank.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "roadscene/error.hpp"

namespace roadscene {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

struct NamedColor {
  const char* name;
  int r, g, b;
};

constexpr NamedColor kColors[] = {
    {"black", 0, 0, 0},         {"silver", 192, 192, 192}, {"gray", 128, 128, 128}, {"grey", 128, 128, 128},
    {"white", 255, 255, 255},   {"maroon", 128, 0, 0},     {"red", 255, 0, 0},      {"purple", 128, 0, 128},
    {"fuchsia", 255, 0, 255},   {"green", 0, 128, 0},      {"lime", 0, 255, 0},     {"olive", 128, 128, 0},
    {"yellow", 255, 255, 0},    {"navy", 0, 0, 128},       {"blue", 0, 0, 255},     {"teal", 0, 128, 128},
    {"aqua", 0, 255, 255},      {"orange", 255, 165, 0},
};

Rgb to_rgb(const NamedColor& c) { return Rgb(c.r, c.g, c.b) / 255.0; }

Rgb rgb_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
    throw Error(ErrorCode::kSchemaViolation, std::string(what) + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

nlohmann::json to_json(const AssetRecord& a) {
  return {
      {"id", a.id},
      {"type", a.type},
      {"color", {a.color[0], a.color[1], a.color[2]}},
      {"dimensions", {a.dimensions.x(), a.dimensions.y(), a.dimensions.z()}},
      {"origin_at_bottom_center", a.origin_at_bottom_center},
      {"faces_plus_x", a.faces_plus_x},
      {"metric_units", a.metric_units},
      {"paint_material", a.paint_material},
      {"path", a.path},
  };
}

AssetRecord asset_record_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
    throw Error(ErrorCode::kSchemaViolation, "asset record needs a string id");
  AssetRecord a;
  a.id = j["id"].get<std::string>();
  a.type = j.value("type", "");
  if (j.contains("color")) {
    const auto& c = j["color"];
    if (c.is_string()) {
      auto named = color_from_name(c.get<std::string>());
      if (!named) throw Error(ErrorCode::kSchemaViolation, "unknown color name '" + c.get<std::string>() + "'");
      a.color = *named;
    } else {
      a.color = rgb_from_json(c, "color");
    }
  }
  if (j.contains("dimensions")) {
    const Rgb d = rgb_from_json(j["dimensions"], "dimensions");
    a.dimensions = Vec3(d[0], d[1], d[2]);
  }
  a.origin_at_bottom_center = j.value("origin_at_bottom_center", true);
  a.faces_plus_x = j.value("faces_plus_x", true);
  a.metric_units = j.value("metric_units", true);
  a.paint_material = j.value("paint_material", std::string(kPaintMaterial));
  a.path = j.value("path", "");
  return a;
}

NormalizedAsset normalize_asset(const AssetRecord& record) {
  if (!record.dimensions.allFinite() || (record.dimensions.array() <= 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "asset '" + record.id + "' has no usable dimensions");
  if (record.length() < 1.0 || record.length() > 25.0)
    throw Error(ErrorCode::kPlausibility,
                "asset '" + record.id + "' length " + std::to_string(record.length()) +
                    " m is outside [1, 25] m; wrong units?",
                {{"id", record.id}, {"length", record.length()}});
  NormalizedAsset out{record, {}};
  AssetRecord& r = out.record;
  if (!r.metric_units) {
    r.metric_units = true;
    out.notes.push_back("dimensions confirmed in meters");
  }
  if (!r.origin_at_bottom_center) {
    r.origin_at_bottom_center = true;
    out.notes.push_back("origin moved to bottom center");
  }
  if (!r.faces_plus_x) {
    r.faces_plus_x = true;
    out.notes.push_back("rotated to face +x");
  }
  if (r.paint_material != kPaintMaterial) {
    r.paint_material = kPaintMaterial;
    out.notes.push_back("body material renamed to car_paint");
  }
  return out;
}

bool is_generic_vehicle_type(std::string_view type) {
  static const char* kGeneric[] = {"car", "cars", "vehicle", "vehicles", "auto", "automobile"};
  const std::string t = lower(type);
  return std::any_of(std::begin(kGeneric), std::end(kGeneric), [&](const char* g) { return t == g; });
}

AssetMatch match_asset(const AssetRequest& request, const std::vector<AssetRecord>& bank) {
  if (bank.empty()) throw Error(ErrorCode::kInvalidArgument, "asset bank is empty");
  const bool want_type = request.type && !request.type->empty() && !is_generic_vehicle_type(*request.type);
  const std::string type = want_type ? lower(*request.type) : "";
  const AssetRecord* best = nullptr;
  int best_score = -1;
  for (const auto& a : bank) {
    int score = 0;
    if (want_type && lower(a.type) == type) score += 2;
    if (request.color && (a.color - *request.color).matrix().norm() <= kColorTolerance) score += 1;
    if (score > best_score || (score == best_score && a.id < best->id)) {
      best = &a;
      best_score = score;
    }
  }
  AssetMatch m;
  m.record = *best;
  m.score = best_score;
  m.needs_recolor = request.color && (best->color - *request.color).matrix().norm() > kColorTolerance;
  return m;
}

AssetRecord recolor(const AssetRecord& record, const Rgb& color) {
  if (record.paint_material.empty())
    throw Error(ErrorCode::kMissingMaterial, "asset '" + record.id + "' has no paint material to recolor");
  AssetRecord out = record;
  out.color = color;
  return out;
}

AssetBank::AssetBank(std::vector<AssetRecord> records) : records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(), [](const AssetRecord& a, const AssetRecord& b) { return a.id < b.id; });
}

AssetBank AssetBank::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open asset bank " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, "asset bank " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kSchemaViolation, "asset bank must be a JSON array");
  std::vector<AssetRecord> records;
  for (const auto& item : j) records.push_back(normalize_asset(asset_record_from_json(item)).record);
  return AssetBank(std::move(records));
}

const AssetRecord* AssetBank::find(std::string_view id) const {
  for (const auto& r : records_)
    if (r.id == id) return &r;
  return nullptr;
}

const AssetRecord& AssetBank::at(std::string_view id) const {
  const AssetRecord* r = find(id);
  if (!r) throw Error(ErrorCode::kInvalidArgument, "unknown asset id '" + std::string(id) + "'");
  return *r;
}

std::optional<Rgb> color_from_name(std::string_view name) {
  const std::string n = lower(name);
  for (const auto& c : kColors)
    if (n == c.name) return to_rgb(c);
  return std::nullopt;
}

const std::vector<std::string>& color_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& c : kColors) v.emplace_back(c.name);
    return v;
  }();
  return names;
}

std::string nearest_color_name(const Rgb& color) {
  const NamedColor* best = &kColors[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& c : kColors) {
    const double d = (to_rgb(c) - color).matrix().squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = &c;
    }
  }
  return best->name;
}

}  // namespace roadscene
