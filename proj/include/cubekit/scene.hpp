#ifndef CUBEKIT_SCENE_HPP
#define CUBEKIT_SCENE_HPP

// Scene records, the JSONL scene schema, source adapters and the dataset
// operations that run before task generation: virtual-camera
// standardization, range filtering, caption enrichment, epoch sampling.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cubekit/codec.hpp"
#include "cubekit/error.hpp"
#include "cubekit/geometry.hpp"
#include "cubekit/pipeline.hpp"

namespace cubekit {

using nlohmann::json;

enum class Split { train, val, test };

inline std::string_view split_name(Split s) noexcept {
  switch (s) {
  case Split::train: return "train";
  case Split::val: return "val";
  case Split::test: return "test";
  }
  return "train";
}

inline Split split_from_name(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw DatasetError("unknown split '" + std::string(s) + "'");
}

struct ObjectRecord {
  std::string id;
  std::string category;
  std::vector<std::string> attributes;
  std::optional<std::string> caption;
  std::optional<Box2D> box2d;
  std::optional<Box3D> box3d;
  std::optional<Point2D> point2d;
  bool orientation_sensitive = false;

  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

struct SceneRecord {
  std::string image_ref;
  CameraIntrinsics intrinsics;
  std::vector<ObjectRecord> objects;
  std::string source;
  Split split = Split::train;
  bool virtual_camera = false;
  // Stage-1 sources that contribute only their 2D boxes.
  bool stage1_2d_only = false;
  bool flip_allowed = true;

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

/// True when text mentions left or right as a whole word.
inline bool mentions_orientation(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::string_view word : {"left", "right"}) {
    std::size_t pos = 0;
    while ((pos = lower.find(word, pos)) != std::string::npos) {
      const bool start = pos == 0 || !std::isalpha(static_cast<unsigned char>(lower[pos - 1]));
      const std::size_t after = pos + word.size();
      const bool stop =
          after >= lower.size() || !std::isalpha(static_cast<unsigned char>(lower[after]));
      if (start && stop) return true;
      pos = after;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Validation

inline void validate(const CameraIntrinsics& cam) {
  if (!cam.valid()) throw DatasetError("invalid camera intrinsics");
}

inline void validate(const ObjectRecord& o) {
  if (!o.box2d && !o.box3d && !o.point2d)
    throw DatasetError("object '" + o.id + "' has no box2d, box3d or point2d");
  if (o.box2d && !o.box2d->valid())
    throw DatasetError("object '" + o.id + "' box2d corners out of order");
  if (o.box3d && !o.box3d->valid())
    throw DatasetError("object '" + o.id + "' box3d needs positive w, h, l and z");
  if (o.point2d && !(std::isfinite(o.point2d->x) && std::isfinite(o.point2d->y)))
    throw DatasetError("object '" + o.id + "' point2d not finite");
}

inline void validate(const SceneRecord& s) {
  validate(s.intrinsics);
  std::set<std::string> ids;
  for (const auto& o : s.objects) {
    if (!ids.insert(o.id).second)
      throw DatasetError("duplicate object id '" + o.id + "'");
    validate(o);
  }
}

// ---------------------------------------------------------------------------
// JSON schema

namespace detail {

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw DatasetError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw DatasetError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

template <std::size_t N>
std::array<double, N> number_array(const json& v, const char* key) {
  if (!v.is_array() || v.size() != N)
    throw DatasetError(std::string("field '") + key + "' must be an array of " +
                       std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number())
      throw DatasetError(std::string("field '") + key + "' must hold numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

inline std::string string_field(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw DatasetError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

} // namespace detail

inline json to_json(const CameraIntrinsics& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx},
          {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

inline CameraIntrinsics intrinsics_from_json(const json& j) {
  return {detail::number(j, "fx"),    detail::number(j, "fy"),
          detail::number(j, "cx"),    detail::number(j, "cy"),
          detail::number(j, "width"), detail::number(j, "height")};
}

inline json to_json(const Box2D& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }
inline json to_json(const Point2D& p) { return json::array({p.x, p.y}); }

inline json to_json(const Box3D& b) {
  return {{"xh", b.xh}, {"yh", b.yh}, {"z", b.z},   {"w", b.w},  {"h", b.h},
          {"l", b.l},   {"r1", b.r1}, {"r2", b.r2}, {"r3", b.r3}};
}

inline Box2D box2d_from_json(const json& j) {
  const auto a = detail::number_array<4>(j, "box2d");
  return {a[0], a[1], a[2], a[3]};
}

inline Point2D point2d_from_json(const json& j) {
  const auto a = detail::number_array<2>(j, "point2d");
  return {a[0], a[1]};
}

/// Angles are wrapped into [0, 2pi); r2 and r3 default to zero.
inline Box3D box3d_from_json(const json& j) {
  Box3D b;
  b.xh = detail::number(j, "xh");
  b.yh = detail::number(j, "yh");
  b.z = detail::number(j, "z");
  b.w = detail::number(j, "w");
  b.h = detail::number(j, "h");
  b.l = detail::number(j, "l");
  b.r1 = wrap_angle(detail::number(j, "r1"));
  b.r2 = j.contains("r2") ? wrap_angle(detail::number(j, "r2")) : 0.0;
  b.r3 = j.contains("r3") ? wrap_angle(detail::number(j, "r3")) : 0.0;
  return b;
}

inline json to_json(const ObjectRecord& o) {
  json j = {{"id", o.id},
            {"category", o.category},
            {"attributes", o.attributes},
            {"orientation_sensitive", o.orientation_sensitive}};
  if (o.caption) j["caption"] = *o.caption;
  if (o.box2d) j["box2d"] = to_json(*o.box2d);
  if (o.box3d) j["box3d"] = to_json(*o.box3d);
  if (o.point2d) j["point2d"] = to_json(*o.point2d);
  return j;
}

inline std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (!v.is_array()) throw DatasetError(std::string("field '") + key + "' must be an array");
  for (const auto& s : v) {
    if (!s.is_string()) throw DatasetError(std::string("field '") + key + "' must hold strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

inline ObjectRecord object_from_json(const json& j) {
  ObjectRecord o;
  const json& id = detail::require(j, "id");
  o.id = id.is_string() ? id.get<std::string>() : id.dump();
  o.category = j.contains("category") ? detail::string_field(j, "category") : "";
  o.attributes = string_list(j, "attributes");
  if (j.contains("caption") && !j.at("caption").is_null())
    o.caption = detail::string_field(j, "caption");
  if (j.contains("box2d")) o.box2d = box2d_from_json(j.at("box2d"));
  if (j.contains("box3d")) o.box3d = box3d_from_json(j.at("box3d"));
  if (j.contains("point2d")) o.point2d = point2d_from_json(j.at("point2d"));
  if (j.contains("orientation_sensitive")) {
    if (!j.at("orientation_sensitive").is_boolean())
      throw DatasetError("field 'orientation_sensitive' must be a boolean");
    o.orientation_sensitive = j.at("orientation_sensitive").get<bool>();
  } else {
    o.orientation_sensitive = o.caption && mentions_orientation(*o.caption);
  }
  return o;
}

inline json to_json(const SceneRecord& s) {
  json objects = json::array();
  for (const auto& o : s.objects) objects.push_back(to_json(o));
  return {{"image", s.image_ref},
          {"intrinsics", to_json(s.intrinsics)},
          {"objects", std::move(objects)},
          {"source", s.source},
          {"split", split_name(s.split)},
          {"virtual_camera", s.virtual_camera},
          {"stage1_2d_only", s.stage1_2d_only},
          {"flip_allowed", s.flip_allowed}};
}

inline SceneRecord scene_from_json(const json& j) {
  SceneRecord s;
  s.image_ref = detail::string_field(j, "image");
  s.intrinsics = intrinsics_from_json(detail::require(j, "intrinsics"));
  s.source = j.contains("source") ? detail::string_field(j, "source") : "";
  s.split = j.contains("split") ? split_from_name(detail::string_field(j, "split")) : Split::train;
  s.virtual_camera = j.value("virtual_camera", false);
  s.stage1_2d_only = j.value("stage1_2d_only", false);
  s.flip_allowed = j.value("flip_allowed", true);
  const json& objects = detail::require(j, "objects");
  if (!objects.is_array()) throw DatasetError("field 'objects' must be an array");
  for (const auto& o : objects) s.objects.push_back(object_from_json(o));
  validate(s);
  return s;
}

// ---------------------------------------------------------------------------
// Source adapters
//
//   native    the scene schema above, one scene per line
//   coco2d    {image, width, height, annotations: [{id, category, bbox:[x,y,w,h],
//             caption?, attributes?}]}; intrinsics default to f = 512 at the
//             image center
//   camera3d  {image, intrinsics, objects: [{id, category, center:[X,Y,Z],
//             size:[w,h,l], rotation:[yaw,pitch,roll], box2d?, caption?,
//             attributes?}]} with metric camera-frame centers

enum class Adapter { native, coco2d, camera3d };

inline Adapter adapter_from_name(std::string_view name) {
  if (name == "native") return Adapter::native;
  if (name == "coco2d") return Adapter::coco2d;
  if (name == "camera3d") return Adapter::camera3d;
  throw ConfigError("unknown source adapter '" + std::string(name) + "'");
}

namespace detail {

inline void copy_text_fields(const json& src, ObjectRecord& o) {
  const json& id = require(src, "id");
  o.id = id.is_string() ? id.get<std::string>() : id.dump();
  o.category = string_field(src, "category");
  o.attributes = string_list(src, "attributes");
  if (src.contains("caption") && !src.at("caption").is_null())
    o.caption = string_field(src, "caption");
  o.orientation_sensitive = o.caption && mentions_orientation(*o.caption);
}

inline SceneRecord from_coco2d(const json& j) {
  SceneRecord s;
  s.image_ref = string_field(j, "image");
  const double w = number(j, "width");
  const double h = number(j, "height");
  s.intrinsics = {512.0, 512.0, w / 2, h / 2, w, h};
  s.source = j.value("source", std::string("coco2d"));
  s.split = j.contains("split") ? split_from_name(string_field(j, "split")) : Split::train;
  for (const auto& a : require(j, "annotations")) {
    ObjectRecord o;
    copy_text_fields(a, o);
    const auto bb = number_array<4>(require(a, "bbox"), "bbox");
    o.box2d = Box2D{bb[0], bb[1], bb[0] + bb[2], bb[1] + bb[3]};
    s.objects.push_back(std::move(o));
  }
  validate(s);
  return s;
}

inline SceneRecord from_camera3d(const json& j) {
  SceneRecord s;
  s.image_ref = string_field(j, "image");
  s.intrinsics = intrinsics_from_json(require(j, "intrinsics"));
  validate(s.intrinsics);
  s.source = j.value("source", std::string("camera3d"));
  s.split = j.contains("split") ? split_from_name(string_field(j, "split")) : Split::train;
  for (const auto& a : require(j, "objects")) {
    ObjectRecord o;
    copy_text_fields(a, o);
    const auto c = number_array<3>(require(a, "center"), "center");
    const auto sz = number_array<3>(require(a, "size"), "size");
    std::array<double, 3> rot{0, 0, 0};
    if (a.contains("rotation")) rot = number_array<3>(a.at("rotation"), "rotation");
    if (!(c[2] > 0)) throw DatasetError("object '" + o.id + "' center behind camera");
    const Point3D p = to_projected({c[0], c[1], c[2]}, s.intrinsics);
    o.box3d = Box3D{p.xh,           p.yh,           p.z,
                    sz[0],          sz[1],          sz[2],
                    wrap_angle(rot[0]), wrap_angle(rot[1]), wrap_angle(rot[2])};
    if (a.contains("box2d")) o.box2d = box2d_from_json(a.at("box2d"));
    s.objects.push_back(std::move(o));
  }
  validate(s);
  return s;
}

} // namespace detail

inline SceneRecord scene_from_adapter(const json& j, Adapter adapter) {
  switch (adapter) {
  case Adapter::native: return scene_from_json(j);
  case Adapter::coco2d: return detail::from_coco2d(j);
  case Adapter::camera3d: return detail::from_camera3d(j);
  }
  throw ConfigError("unreachable adapter");
}

struct IngestIssue {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  std::vector<SceneRecord> scenes;
  std::vector<IngestIssue> errors;
  bool ok() const noexcept { return errors.empty(); }
};

/// One scene per non-blank line. Bad lines are reported, never dropped
/// silently; good lines still come through.
inline IngestResult ingest(std::istream& in, Adapter adapter) {
  IngestResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); }))
      continue;
    try {
      result.scenes.push_back(scene_from_adapter(json::parse(line), adapter));
    } catch (const json::exception& e) {
      result.errors.push_back({lineno, IngestError(lineno, e.what()).what()});
    } catch (const Error& e) {
      result.errors.push_back({lineno, IngestError(lineno, e.what()).what()});
    }
  }
  return result;
}

inline IngestResult ingest(const std::filesystem::path& path, Adapter adapter) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  return ingest(in, adapter);
}

inline std::string scene_jsonl_line(const SceneRecord& s) { return to_json(s).dump(); }

// ---------------------------------------------------------------------------
// Standardization and filtering

inline SceneRecord standardize_scene(const SceneRecord& s, double f_virtual,
                                     ImageSize target) {
  SceneRecord out = s;
  const double sx = target.width / s.intrinsics.width;
  const double sy = target.height / s.intrinsics.height;
  out.intrinsics = virtual_intrinsics(s.intrinsics, f_virtual, target);
  for (auto& o : out.objects) {
    try {
      if (o.box3d) o.box3d = to_virtual_camera(*o.box3d, s.intrinsics, f_virtual, target).box;
    } catch (const Error& e) {
      throw DomainError("object '" + o.id + "': " + e.what());
    }
    if (o.box2d) o.box2d = Box2D{o.box2d->x1 * sx, o.box2d->y1 * sy, o.box2d->x2 * sx,
                                 o.box2d->y2 * sy};
    if (o.point2d) o.point2d = Point2D{o.point2d->x * sx, o.point2d->y * sy};
  }
  out.virtual_camera = true;
  return out;
}

struct FilterResult {
  SceneRecord scene;
  std::size_t removed = 0;
  std::map<std::string, std::size_t> removed_by_field; // first failing field
};

/// Drops objects with any serialized value outside the profile's ranges.
inline FilterResult filter_objects(const SceneRecord& s, const CodecProfile& profile) {
  FilterResult r;
  r.scene = s;
  r.scene.objects.clear();
  for (const auto& o : s.objects) {
    std::optional<std::string> bad;
    if (o.box3d) bad = first_out_of_range(Label{*o.box3d}, profile);
    if (!bad && o.box2d) bad = first_out_of_range(Label{*o.box2d}, profile);
    if (!bad && o.point2d) bad = first_out_of_range(Label{*o.point2d}, profile);
    if (bad) {
      ++r.removed;
      ++r.removed_by_field[(o.box3d ? "box3d." : "") + *bad];
    } else {
      r.scene.objects.push_back(o);
    }
  }
  return r;
}

inline SceneRecord horizontal_flip(const SceneRecord& s) {
  SceneRecord out = s;
  const double width = s.intrinsics.width;
  out.intrinsics = flip(s.intrinsics);
  for (auto& o : out.objects) {
    if (o.box2d) o.box2d = flip(*o.box2d, width);
    if (o.box3d) o.box3d = flip(*o.box3d, width);
    if (o.point2d) o.point2d = flip(*o.point2d, width);
  }
  return out;
}

/// "a walking pedestrian": article, attributes in input order, category.
inline std::string enrich_caption(const ObjectRecord& o) {
  std::string phrase;
  for (const auto& a : o.attributes) {
    if (a.empty()) continue;
    std::string lower = a;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    phrase += lower;
    phrase += ' ';
  }
  phrase += o.category;
  if (phrase.empty()) return "an object";
  const char first = static_cast<char>(std::tolower(static_cast<unsigned char>(phrase.front())));
  const bool vowel = std::string_view("aeiou").find(first) != std::string_view::npos;
  return (vowel ? "an " : "a ") + phrase;
}

/// The caption a task refers to: the annotated one, else the enriched
/// category phrase. Empty when neither exists.
inline std::optional<std::string> object_caption(const ObjectRecord& o) {
  if (o.caption && !o.caption->empty()) return o.caption;
  if (!o.category.empty()) return enrich_caption(o);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Manifest and epoch sampling

/// Non-negative rational sampling multiple.
struct Multiple {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Multiple parse(std::string_view text) {
    auto to_int = [&](std::string_view s) -> std::int64_t {
      std::int64_t v = 0;
      if (s.empty()) throw ConfigError("bad multiple '" + std::string(text) + "'");
      for (char c : s) {
        if (c < '0' || c > '9') throw ConfigError("bad multiple '" + std::string(text) + "'");
        v = v * 10 + (c - '0');
      }
      return v;
    };
    Multiple m;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      m.num = to_int(text.substr(0, slash));
      m.den = to_int(text.substr(slash + 1));
    } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
      const auto frac = text.substr(dot + 1);
      m.den = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) m.den *= 10;
      m.num = to_int(text.substr(0, dot).empty() ? "0" : text.substr(0, dot)) * m.den +
              (frac.empty() ? 0 : to_int(frac));
    } else {
      m.num = to_int(text);
    }
    if (m.den == 0 || m.den > 1'000'000'000)
      throw ConfigError("bad multiple '" + std::string(text) + "'");
    return m;
  }

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Multiple&, const Multiple&) = default;
};

struct ManifestEntry {
  std::string name;
  std::filesystem::path path;
  Adapter adapter = Adapter::native;
  Multiple stage1;
  Multiple stage2{1, 1};
  bool has_3d = false;
  bool flip_allowed = true;
  bool use_2d_only = false;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

/// INI-style manifest:
///
///   [source nuscenes]
///   path = nuscenes.jsonl
///   adapter = camera3d
///   stage1 = 1
///   stage2 = 2
///   has_3d = true
///   use_2d_only = true
///
/// Relative paths resolve against `base_dir`. '#' and ';' start comments.
inline DatasetManifest parse_manifest(std::istream& in,
                                      const std::filesystem::path& base_dir = {}) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto boolean = [](const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("manifest key '" + key + "' expects a boolean, got '" + v + "'");
  };
  DatasetManifest m;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw.substr(0, raw.find_first_of("#;")));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.rfind("[source ", 0) != 0)
        throw ConfigError("manifest line " + std::to_string(lineno) +
                          ": expected '[source <name>]'");
      ManifestEntry e;
      e.name = trim(line.substr(8, line.size() - 9));
      if (e.name.empty()) throw ConfigError("manifest line " + std::to_string(lineno) +
                                            ": empty source name");
      m.entries.push_back(std::move(e));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || m.entries.empty())
      throw ConfigError("manifest line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    ManifestEntry& e = m.entries.back();
    if (key == "path") {
      e.path = std::filesystem::path(value);
      if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
    } else if (key == "adapter") {
      e.adapter = adapter_from_name(value);
    } else if (key == "stage1") {
      e.stage1 = Multiple::parse(value);
    } else if (key == "stage2") {
      e.stage2 = Multiple::parse(value);
    } else if (key == "has_3d") {
      e.has_3d = boolean(key, value);
    } else if (key == "flip_allowed") {
      e.flip_allowed = boolean(key, value);
    } else if (key == "use_2d_only") {
      e.use_2d_only = boolean(key, value);
    } else {
      throw ConfigError("manifest line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  for (const auto& e : m.entries)
    if (e.path.empty()) throw ConfigError("manifest source '" + e.name + "' has no path");
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.parent_path());
}

struct SampleRef {
  std::string source;
  std::size_t index = 0;
  friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

/// floor(multiple) full passes over each source plus a fresh random subset
/// of floor(frac(multiple) * N) distinct scenes; the whole list shuffled.
/// `sizes[i]` is the scene count of manifest entry i.
inline std::vector<SampleRef> epoch_sample(const DatasetManifest& manifest,
                                           const std::vector<std::size_t>& sizes, int stage,
                                           std::uint64_t seed) {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  if (sizes.size() != manifest.entries.size())
    throw ConfigError("epoch_sample: one size per manifest entry required");
  std::vector<SampleRef> out;
  for (std::size_t e = 0; e < manifest.entries.size(); ++e) {
    const auto& entry = manifest.entries[e];
    const Multiple m = stage == 1 ? entry.stage1 : entry.stage2;
    const std::size_t n = sizes[e];
    const auto whole = static_cast<std::size_t>(m.num / m.den);
    for (std::size_t c = 0; c < whole; ++c)
      for (std::size_t i = 0; i < n; ++i) out.push_back({entry.name, i});
    // r * n / den without overflow; den <= 1e9 so r * (n % den) fits
    const auto r = static_cast<std::uint64_t>(m.num % m.den);
    const auto den = static_cast<std::uint64_t>(m.den);
    const auto rem = static_cast<std::size_t>(r * (n / den) + r * (n % den) / den);
    if (rem == 0) continue;
    Rng rng(derive_seed(seed, entry.name + "#stage" + std::to_string(stage)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // partial Fisher-Yates: the first `rem` slots become the subset
    for (std::size_t i = 0; i < rem; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
      std::swap(idx[i], idx[j]);
    }
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(rem));
    for (std::size_t i = 0; i < rem; ++i) out.push_back({entry.name, idx[i]});
  }
  Rng rng(derive_seed(seed, "epoch#stage" + std::to_string(stage)));
  shuffle(out, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct DatasetStats {
  std::size_t images = 0;
  std::size_t objects = 0;
  std::map<std::string, std::size_t> per_category;
  std::size_t with_box2d = 0;
  std::size_t with_box3d = 0;
  std::size_t with_point2d = 0;
  std::size_t with_caption = 0;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

inline DatasetStats stats(const std::vector<SceneRecord>& scenes) {
  DatasetStats st;
  for (const auto& s : scenes) {
    ++st.images;
    for (const auto& o : s.objects) {
      ++st.objects;
      ++st.per_category[o.category];
      st.with_box2d += o.box2d.has_value();
      st.with_box3d += o.box3d.has_value();
      st.with_point2d += o.point2d.has_value();
      st.with_caption += o.caption.has_value();
    }
  }
  return st;
}

inline json to_json(const DatasetStats& st) {
  return {{"images", st.images},          {"objects", st.objects},
          {"per_category", st.per_category}, {"with_box2d", st.with_box2d},
          {"with_box3d", st.with_box3d},  {"with_point2d", st.with_point2d},
          {"with_caption", st.with_caption}};
}

} // namespace cubekit

#endif // CUBEKIT_SCENE_HPP
