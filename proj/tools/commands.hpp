#ifndef CUBEKIT_TOOLS_COMMANDS_HPP
#define CUBEKIT_TOOLS_COMMANDS_HPP

// Batch commands behind the cubekit binary. Each returns a process exit
// code: 0 success, 1 data errors (reported on `err`), 2 usage errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cubekit/cubekit.hpp"

namespace cubekit::tools {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

inline ImageSize parse_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ConfigError("size must look like WxH, got '" + text + "'");
  try {
    const double w = std::stod(text.substr(0, x));
    const double h = std::stod(text.substr(x + 1));
    if (!(w > 0) || !(h > 0)) throw ConfigError("size must be positive");
    return {w, h};
  } catch (const std::logic_error&) {
    throw ConfigError("size must look like WxH, got '" + text + "'");
  }
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  return lines;
}

} // namespace detail

// ---------------------------------------------------------------------------
// standardize

struct StandardizeOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::optional<std::filesystem::path> stats_out;
  double f_virtual = 512.0;
  ImageSize size{672, 672};
  std::string profile = "pretrain";
  std::uint64_t seed = 0;
  int stage = 0; // 1 or 2 writes an epoch sample next to the output
  std::optional<std::filesystem::path> epoch_out;
  unsigned workers = 1;
};

/// Ingest every manifest source, move it to the virtual camera, drop objects
/// the codec cannot represent and scenes left empty, write scene JSONL.
inline int cmd_standardize(const StandardizeOptions& opt, std::ostream& err) {
  const DatasetManifest manifest = load_manifest(opt.manifest);
  const CodecProfile profile = CodecProfile::named(opt.profile, opt.size);

  std::size_t input_scenes = 0, ingest_errors = 0, removed_objects = 0, dropped_scenes = 0;
  std::map<std::string, std::size_t> removed_by_field;
  std::vector<SceneRecord> kept;
  std::vector<std::size_t> per_source;

  for (const auto& entry : manifest.entries) {
    IngestResult ingested = ingest(entry.path, entry.adapter);
    for (const auto& e : ingested.errors) err << entry.name << ": " << e.message << "\n";
    ingest_errors += ingested.errors.size();
    input_scenes += ingested.scenes.size();
    for (auto& s : ingested.scenes) {
      s.source = entry.name;
      s.stage1_2d_only = entry.use_2d_only;
      s.flip_allowed = entry.flip_allowed;
    }
    struct Outcome {
      std::optional<FilterResult> result;
      std::string error;
    };
    auto outcomes = parallel_map(
        ingested.scenes,
        [&](const SceneRecord& s) {
          Outcome o;
          try {
            o.result = filter_objects(standardize_scene(s, opt.f_virtual, opt.size), profile);
          } catch (const Error& e) {
            o.error = s.image_ref + ": " + e.what();
          }
          return o;
        },
        opt.workers);
    std::size_t count = 0;
    for (auto& o : outcomes) {
      if (!o.result) {
        err << entry.name << ": " << o.error << "\n";
        ++ingest_errors;
        continue;
      }
      removed_objects += o.result->removed;
      for (const auto& [field, n] : o.result->removed_by_field) removed_by_field[field] += n;
      if (o.result->scene.objects.empty()) {
        ++dropped_scenes;
        continue;
      }
      kept.push_back(std::move(o.result->scene));
      ++count;
    }
    per_source.push_back(count);
  }

  {
    auto out = detail::open_out(opt.out);
    for (const auto& s : kept) out << scene_jsonl_line(s) << "\n";
  }

  nlohmann::json report = {{"input_scenes", input_scenes},
                           {"output_scenes", kept.size()},
                           {"dropped_scenes", dropped_scenes},
                           {"removed_objects", removed_objects},
                           {"removed_by_field", removed_by_field},
                           {"errors", ingest_errors},
                           {"profile", opt.profile},
                           {"dataset", to_json(stats(kept))}};
  nlohmann::json fields = nlohmann::json::array();
  nlohmann::json ranges = nlohmann::json::object();
  for (Field f : profile.box3d_fields) {
    fields.push_back(field_name(f));
    double lo = 0, hi = 0;
    bool any = false;
    for (const auto& s : kept)
      for (const auto& o : s.objects)
        if (o.box3d) {
          const double v = cubekit::detail::box3d_value(*o.box3d, f);
          lo = any ? std::min(lo, v) : v;
          hi = any ? std::max(hi, v) : v;
          any = true;
        }
    if (any) ranges[std::string(field_name(f))] = {lo, hi};
  }
  report["serialized_fields"] = fields;
  report["box3d_ranges"] = ranges;

  if (opt.stage == 1 || opt.stage == 2) {
    const auto sample = epoch_sample(manifest, per_source, opt.stage, opt.seed);
    const auto path = opt.epoch_out.value_or(opt.out.string() + ".epoch.jsonl");
    auto out = detail::open_out(path);
    for (const auto& r : sample)
      out << nlohmann::json{{"source", r.source}, {"index", r.index}}.dump() << "\n";
    report["epoch_samples"] = sample.size();
  }

  if (opt.stats_out) {
    auto out = detail::open_out(*opt.stats_out);
    out << report.dump(2) << "\n";
  } else {
    err << report.dump(2) << "\n";
  }
  return ingest_errors == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------
// convgen

struct ConvgenOptions {
  std::filesystem::path scenes;
  std::filesystem::path out;
  std::size_t n_max = 30;
  bool vcot = false;
  std::string specialist = "none"; // none | gt | file=<candidate JSONL>
  double specialist_prob = 1.0;
  double flip_prob = 0.5;
  int stage = 2;
  std::string profile = "pretrain";
  std::optional<std::filesystem::path> templates;
  std::uint64_t seed = 0;
  std::size_t top_k = 30;
  unsigned workers = 1;
};

/// {scene_ref, boxes: [{box3d: {...}, confidence?}]} per line.
inline std::map<std::string, std::vector<Candidate>>
read_candidates(const std::filesystem::path& path) {
  std::map<std::string, std::vector<Candidate>> out;
  std::size_t lineno = 0;
  for (const auto& line : detail::read_lines(path)) {
    ++lineno;
    try {
      const auto j = nlohmann::json::parse(line);
      auto& list = out[j.at("scene_ref").get<std::string>()];
      for (const auto& b : j.at("boxes")) {
        Candidate c{box3d_from_json(b.at("box3d")), std::nullopt};
        if (b.contains("confidence") && !b.at("confidence").is_null())
          c.confidence = b.at("confidence").get<double>();
        list.push_back(c);
      }
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("candidates line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

/// Conversation for one scene; a pure function of (scene, index, options).
inline Conversation generate_conversation(const SceneRecord& scene, std::size_t index,
                                          const ConvgenOptions& opt, const TemplateBank& bank,
                                          const std::map<std::string, std::vector<Candidate>>* candidates) {
  const std::uint64_t seed = derive_seed(opt.seed, scene.image_ref + "#" + std::to_string(index));
  Rng rng(seed);
  const CodecProfile profile =
      CodecProfile::named(opt.profile, {scene.intrinsics.width, scene.intrinsics.height});
  const SceneRecord s = maybe_flip(scene, rng, opt.flip_prob);
  std::optional<Turn> system;
  if (opt.specialist == "gt") {
    if (bernoulli(rng, opt.specialist_prob))
      system = build_specialist_prompt(gt_candidates(s, rng), profile, opt.top_k);
  } else if (candidates) {
    const auto it = candidates->find(scene.image_ref);
    system = build_specialist_prompt(it == candidates->end() ? std::vector<Candidate>{} : it->second,
                                     profile, opt.top_k);
  }
  ConversationOptions copt;
  copt.n_max = opt.n_max;
  copt.stage = opt.stage;
  copt.vcot = opt.vcot;
  Conversation conv = build_conversation(s, copt, profile, bank, rng);
  if (system) conv.turns.insert(conv.turns.begin(), *system);
  conv.seed = seed;
  return conv;
}

inline int cmd_convgen(const ConvgenOptions& opt, std::ostream& err) {
  const TemplateBank bank = [&] {
    if (!opt.templates) return TemplateBank::builtin();
    std::ifstream in(*opt.templates);
    if (!in) throw ConfigError("cannot open templates '" + opt.templates->string() + "'");
    return TemplateBank::parse(in);
  }();
  std::optional<std::map<std::string, std::vector<Candidate>>> candidates;
  if (opt.specialist != "none" && opt.specialist != "gt") {
    const std::string_view spec = opt.specialist;
    candidates = read_candidates(std::string(spec.starts_with("file=") ? spec.substr(5) : spec));
  }

  IngestResult ingested = ingest(opt.scenes, Adapter::native);
  for (const auto& e : ingested.errors) err << e.message << "\n";

  std::vector<std::size_t> idx(ingested.scenes.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  struct Outcome {
    std::optional<Conversation> conv;
    std::string error;
  };
  const auto outcomes = parallel_map(
      idx,
      [&](std::size_t i) {
        Outcome o;
        try {
          o.conv = generate_conversation(ingested.scenes[i], i, opt, bank,
                                         candidates ? &*candidates : nullptr);
        } catch (const Error& e) {
          o.error = ingested.scenes[i].image_ref + ": " + e.what();
        }
        return o;
      },
      opt.workers);

  std::size_t failures = ingested.errors.size();
  auto out = detail::open_out(opt.out);
  for (const auto& o : outcomes) {
    if (!o.conv) {
      err << o.error << "\n";
      ++failures;
      continue;
    }
    out << to_json(*o.conv).dump() << "\n";
  }
  return failures == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------
// associate

struct AssociateOptions {
  std::filesystem::path labels2d; // {scene_ref, boxes: [[x1,y1,x2,y2], ...]}
  std::filesystem::path boxes3d;  // {scene_ref, intrinsics, boxes: [box3d, ...]}
  std::filesystem::path out;
  double threshold = kAssociationThreshold;
};

inline int cmd_associate(const AssociateOptions& opt, std::ostream& err) {
  struct Scene3D {
    CameraIntrinsics cam;
    std::vector<Box3D> boxes;
  };
  std::map<std::string, Scene3D> scenes3d;
  std::size_t lineno = 0;
  for (const auto& line : detail::read_lines(opt.boxes3d)) {
    ++lineno;
    try {
      const auto j = nlohmann::json::parse(line);
      Scene3D s{intrinsics_from_json(j.at("intrinsics")), {}};
      for (const auto& b : j.at("boxes")) s.boxes.push_back(box3d_from_json(b));
      scenes3d[j.at("scene_ref").get<std::string>()] = std::move(s);
    } catch (const std::exception& e) {
      throw DatasetError("boxes3d line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::size_t failures = 0;
  auto out = detail::open_out(opt.out);
  lineno = 0;
  for (const auto& line : detail::read_lines(opt.labels2d)) {
    ++lineno;
    std::string ref;
    std::vector<Box2D> labels;
    try {
      const auto j = nlohmann::json::parse(line);
      ref = j.at("scene_ref").get<std::string>();
      for (const auto& b : j.at("boxes")) labels.push_back(box2d_from_json(b));
    } catch (const std::exception& e) {
      err << "labels2d line " << lineno << ": " << e.what() << "\n";
      ++failures;
      continue;
    }
    const auto it = scenes3d.find(ref);
    if (it == scenes3d.end()) {
      err << "labels2d line " << lineno << ": no 3D boxes for scene '" << ref << "'\n";
      ++failures;
      continue;
    }
    out << to_json(associate(labels, it->second.boxes, it->second.cam, opt.threshold), ref).dump()
        << "\n";
  }
  return failures == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::filesystem::path preds;
  std::filesystem::path gts;
  std::vector<std::string> metrics{"ap2d", "bev", "3d"};
  std::optional<std::filesystem::path> profile_a;
  std::optional<std::filesystem::path> profile_b;
  bool indoor = false;
  std::string codec_profile = "finetune";
  ImageSize size{672, 672};
  double f_virtual = 512.0;
  std::optional<std::filesystem::path> out;
};

inline EvalConfig make_eval_config(const EvalOptions& opt) {
  EvalConfig cfg;
  cfg.profile = CodecProfile::named(opt.codec_profile, opt.size);
  cfg.camera = {opt.f_virtual, opt.f_virtual, opt.size.width / 2, opt.size.height / 2,
                opt.size.width, opt.size.height};
  cfg.ap2d = cfg.bev = cfg.box3d = false;
  for (const auto& m : opt.metrics) {
    if (m == "ap2d") cfg.ap2d = true;
    else if (m == "bev") cfg.bev = true;
    else if (m == "3d") cfg.box3d = true;
    else if (m == "indoor") cfg.indoor = true;
    else throw ConfigError("unknown metric '" + m + "'");
  }
  cfg.indoor = cfg.indoor || opt.indoor;
  if (opt.profile_a) cfg.profile_a = load_threshold_profile(*opt.profile_a);
  if (opt.profile_b) cfg.profile_b = load_threshold_profile(*opt.profile_b);
  return cfg;
}

inline int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  EvalConfig cfg;
  try {
    cfg = make_eval_config(opt);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  const EvalReport report = evaluate_run(opt.preds, opt.gts, cfg);
  if (opt.out) {
    auto f = detail::open_out(*opt.out);
    f << report_text(report);
  } else {
    out << report_text(report);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// render / parse

/// Label JSON: {"kind": "box3d", "value": {...}} with the scene schema's
/// geometry encodings, or {"kind": "caption", "value": "text"}.
inline Label label_from_json(const nlohmann::json& j) {
  const auto kind = kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw DatasetError("unknown label kind '" + j.at("kind").get<std::string>() + "'");
  const auto& v = j.at("value");
  switch (*kind) {
  case LabelKind::point2d: return point2d_from_json(v);
  case LabelKind::box2d: return box2d_from_json(v);
  case LabelKind::point3d: {
    const auto a = cubekit::detail::number_array<3>(v, "point3d");
    return Point3D{a[0], a[1], a[2]};
  }
  case LabelKind::box3d: return box3d_from_json(v);
  case LabelKind::depth: return Depth{v.get<double>()};
  case LabelKind::caption: return Caption{v.get<std::string>()};
  }
  throw DatasetError("unreachable label kind");
}

inline nlohmann::json label_to_json(const Label& label) {
  nlohmann::json value = std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Point3D>) return nlohmann::json::array({v.xh, v.yh, v.z});
        else if constexpr (std::is_same_v<T, Depth>) return v.z;
        else if constexpr (std::is_same_v<T, Caption>) return v.text;
        else return to_json(v);
      },
      label);
  return {{"kind", kind_name(kind_of(label))}, {"value", std::move(value)}};
}

/// Label JSON lines in, token strings out; errors are reported per line.
inline int cmd_render(std::istream& in, std::ostream& out, std::ostream& err,
                      const CodecProfile& profile) {
  std::string line;
  std::size_t lineno = 0, failures = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out << render_label(label_from_json(nlohmann::json::parse(line)), profile) << "\n";
    } catch (const std::exception& e) {
      err << "line " << lineno << ": " << e.what() << "\n";
      out << "\n";
      ++failures;
    }
  }
  return failures == 0 ? kExitOk : kExitData;
}

/// Token strings in, label JSON out. Failures emit {"error", "kind", "offset"?}.
inline int cmd_parse(std::istream& in, std::ostream& out, LabelKind kind,
                     const CodecProfile& profile) {
  std::string line;
  std::size_t failures = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      out << label_to_json(parse_label(line, kind, profile)).dump() << "\n";
    } catch (const ParseError& e) {
      out << nlohmann::json{{"error", "parse"}, {"offset", e.offset()}, {"message", e.what()}}.dump()
          << "\n";
      ++failures;
    } catch (const Error& e) {
      out << nlohmann::json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
      ++failures;
    }
  }
  return failures == 0 ? kExitOk : kExitData;
}

} // namespace cubekit::tools

#endif // CUBEKIT_TOOLS_COMMANDS_HPP
