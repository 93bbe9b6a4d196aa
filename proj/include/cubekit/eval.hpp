#ifndef CUBEKIT_EVAL_HPP
#define CUBEKIT_EVAL_HPP

// Grounding evaluation. "AP" here is top-1 accuracy at an IoU threshold:
// each sample has one referred target and one predicted box, and a sample
// counts when IoU > threshold (strict). Unparseable predictions are misses.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cubekit/codec.hpp"
#include "cubekit/error.hpp"
#include "cubekit/geometry.hpp"
#include "cubekit/iou.hpp"
#include "cubekit/scene.hpp"

namespace cubekit {

enum class IouKind { box2d, bev, box3d };

struct PredictionRecord {
  std::string sample_id;
  std::string text;
  std::vector<ExtractedLabel> labels;
  std::optional<double> confidence;

  bool parse_failed() const noexcept { return labels.empty(); }
};

inline PredictionRecord make_prediction(std::string id, std::string text,
                                        const CodecProfile& profile,
                                        std::optional<double> confidence = std::nullopt) {
  PredictionRecord p{std::move(id), std::move(text), {}, confidence};
  p.labels = extract_labels(p.text, profile);
  return p;
}

struct GtObject {
  std::optional<Box2D> box2d;
  std::optional<Box3D> box3d;
};

struct GtRecord {
  std::string sample_id;
  std::string category;
  GtObject target;
  // Other objects the same prompt refers to (indoor max-IoU rule).
  std::vector<GtObject> extra;
  std::optional<CameraIntrinsics> intrinsics;
};

/// Per-category IoU thresholds with a fallback.
struct ThresholdProfile {
  std::string name;
  double default_threshold = 0.5;
  std::map<std::string, double> thresholds;
  // Where the profile came from; echoed into reports.
  std::string source;

  double threshold_for(const std::string& category) const {
    const auto it = thresholds.find(category);
    return it == thresholds.end() ? default_threshold : it->second;
  }

  static ThresholdProfile uniform(double t, std::string name = "uniform") {
    ThresholdProfile p{std::move(name), t, {}, "inline"};
    p.validate();
    return p;
  }

  void validate() const {
    auto ok = [](double t) { return t > 0 && t <= 1; };
    if (!ok(default_threshold))
      throw ConfigError("threshold profile '" + name + "': default outside (0, 1]");
    for (const auto& [cat, t] : thresholds)
      if (!ok(t)) throw ConfigError("threshold profile '" + name + "': '" + cat + "' outside (0, 1]");
  }
};

/// {"name": "A", "default": 0.5, "thresholds": {"car": 0.5, ...}}
inline ThresholdProfile threshold_profile_from_json(const nlohmann::json& j,
                                                    std::string source = "inline") {
  ThresholdProfile p;
  try {
    p.name = j.at("name").get<std::string>();
    p.default_threshold = j.at("default").get<double>();
    if (j.contains("thresholds"))
      for (const auto& [cat, t] : j.at("thresholds").items()) p.thresholds[cat] = t.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("threshold profile: ") + e.what());
  }
  p.source = std::move(source);
  p.validate();
  return p;
}

inline ThresholdProfile load_threshold_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open threshold profile '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("threshold profile '" + path.string() + "': " + e.what());
  }
  return threshold_profile_from_json(j, path.string());
}

/// Stand-in per-category tables. They are not the published values; reports
/// carry the source tag so numbers made with them are never mistaken.
inline ThresholdProfile placeholder_profile_a() {
  return {"A", 0.25, {}, "builtin:placeholder-A"};
}
inline ThresholdProfile placeholder_profile_b() {
  return {"B", 0.5, {}, "builtin:placeholder-B"};
}

// ---------------------------------------------------------------------------
// Per-sample IoU

/// Predicted 2D box: the last box2d in the text, else the last 3D box projected.
inline std::optional<Box2D> predicted_box2d(const PredictionRecord& p, const CameraIntrinsics& cam) {
  for (auto it = p.labels.rbegin(); it != p.labels.rend(); ++it)
    if (const auto* b = std::get_if<Box2D>(&it->label)) return *b;
  for (auto it = p.labels.rbegin(); it != p.labels.rend(); ++it)
    if (const auto* b = std::get_if<Box3D>(&it->label)) {
      try {
        return project_box3d_to_box2d(*b, cam, true);
      } catch (const Error&) {
        return std::nullopt;
      }
    }
  return std::nullopt;
}

/// Predicted 3D box: the last one in the text (a chained answer ends with it).
inline std::optional<Box3D> predicted_box3d(const PredictionRecord& p) {
  for (auto it = p.labels.rbegin(); it != p.labels.rend(); ++it)
    if (const auto* b = std::get_if<Box3D>(&it->label)) return *b;
  return std::nullopt;
}

inline std::optional<double> sample_iou(const PredictionRecord& p, const GtObject& gt,
                                        IouKind kind, const CameraIntrinsics& cam) {
  try {
    if (kind == IouKind::box2d) {
      std::optional<Box2D> target = gt.box2d;
      if (!target && gt.box3d) target = project_box3d_to_box2d(*gt.box3d, cam, true);
      const auto pred = predicted_box2d(p, cam);
      if (!target || !pred) return std::nullopt;
      return iou_2d(*pred, *target);
    }
    const auto pred = predicted_box3d(p);
    if (!gt.box3d || !pred || !pred->valid()) return std::nullopt;
    return kind == IouKind::bev ? bev_iou(*pred, *gt.box3d, cam) : iou_3d(*pred, *gt.box3d, cam);
  } catch (const Error&) {
    return std::nullopt;
  }
}

namespace detail {

inline std::map<std::string, const GtRecord*> index_gts(const std::vector<GtRecord>& gts) {
  std::map<std::string, const GtRecord*> by_id;
  for (const auto& g : gts)
    if (!by_id.emplace(g.sample_id, &g).second)
      throw DatasetError("duplicate ground-truth sample id '" + g.sample_id + "'");
  return by_id;
}

inline const GtRecord& gt_for(const std::map<std::string, const GtRecord*>& by_id,
                              const std::string& id) {
  const auto it = by_id.find(id);
  if (it == by_id.end()) throw DatasetError("no ground truth for sample '" + id + "'");
  return *it->second;
}

} // namespace detail

/// Percent of IoUs strictly above their threshold; nullopt counts as a miss.
inline double accuracy(const std::vector<std::optional<double>>& ious,
                       const std::vector<double>& thresholds) {
  if (ious.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ious.size(); ++i) hits += ious[i] && *ious[i] > thresholds[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ious.size());
}

inline std::vector<std::optional<double>> sample_ious(const std::vector<PredictionRecord>& preds,
                                                      const std::vector<GtRecord>& gts,
                                                      IouKind kind,
                                                      const CameraIntrinsics& default_cam) {
  const auto by_id = detail::index_gts(gts);
  std::vector<std::optional<double>> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    const GtRecord& g = detail::gt_for(by_id, p.sample_id);
    out.push_back(sample_iou(p, g.target, kind, g.intrinsics.value_or(default_cam)));
  }
  return out;
}

inline double grounding_accuracy(const std::vector<PredictionRecord>& preds,
                                 const std::vector<GtRecord>& gts, IouKind kind,
                                 double threshold, const CameraIntrinsics& default_cam) {
  const auto ious = sample_ious(preds, gts, kind, default_cam);
  return accuracy(ious, std::vector<double>(ious.size(), threshold));
}

/// Accuracy with each sample's threshold looked up by its target category.
inline double ap_profile(const std::vector<PredictionRecord>& preds,
                         const std::vector<GtRecord>& gts, IouKind kind,
                         const ThresholdProfile& profile, const CameraIntrinsics& default_cam) {
  const auto by_id = detail::index_gts(gts);
  const auto ious = sample_ious(preds, gts, kind, default_cam);
  std::vector<double> thresholds;
  thresholds.reserve(preds.size());
  for (const auto& p : preds)
    thresholds.push_back(profile.threshold_for(detail::gt_for(by_id, p.sample_id).category));
  return accuracy(ious, thresholds);
}

inline const std::vector<double>& default_indoor_taus() {
  static const std::vector<double> taus{0.15, 0.25, 0.5};
  return taus;
}

struct IndoorResult {
  std::vector<double> precision; // percent, one per tau
  double mean = 0.0;
};

/// Per sample the best 3D IoU over every object the prompt refers to, then
/// precision at each tau, averaged.
inline IndoorResult indoor_map(const std::vector<PredictionRecord>& preds,
                               const std::vector<GtRecord>& gts,
                               const std::vector<double>& taus, const CameraIntrinsics& default_cam) {
  const auto by_id = detail::index_gts(gts);
  std::vector<std::optional<double>> best;
  best.reserve(preds.size());
  for (const auto& p : preds) {
    const GtRecord& g = detail::gt_for(by_id, p.sample_id);
    const CameraIntrinsics cam = g.intrinsics.value_or(default_cam);
    std::vector<const GtObject*> set;
    if (g.target.box3d) set.push_back(&g.target);
    for (const auto& e : g.extra)
      if (e.box3d) set.push_back(&e);
    if (set.empty()) throw DatasetError("sample '" + g.sample_id + "' has no 3D ground truth");
    std::optional<double> m;
    for (const GtObject* o : set)
      if (auto v = sample_iou(p, *o, IouKind::box3d, cam)) m = std::max(m.value_or(0.0), *v);
    best.push_back(m);
  }
  IndoorResult r;
  for (double tau : taus) r.precision.push_back(accuracy(best, std::vector<double>(best.size(), tau)));
  if (!taus.empty()) {
    for (double v : r.precision) r.mean += v;
    r.mean /= static_cast<double>(taus.size());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Files and runs

inline GtObject gt_object_from_json(const nlohmann::json& j) {
  GtObject o;
  if (j.contains("box2d")) o.box2d = box2d_from_json(j.at("box2d"));
  if (j.contains("box3d")) o.box3d = box3d_from_json(j.at("box3d"));
  return o;
}

inline GtRecord gt_from_json(const nlohmann::json& j) {
  GtRecord g;
  g.sample_id = detail::string_field(j, "sample_id");
  g.category = j.value("category", std::string());
  g.target = gt_object_from_json(j);
  if (!g.target.box2d && !g.target.box3d)
    throw DatasetError("sample '" + g.sample_id + "' has neither box2d nor box3d");
  if (j.contains("extra"))
    for (const auto& e : j.at("extra")) g.extra.push_back(gt_object_from_json(e));
  if (j.contains("intrinsics")) g.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  return g;
}

inline nlohmann::json to_json(const GtRecord& g) {
  nlohmann::json j = {{"sample_id", g.sample_id}, {"category", g.category}};
  if (g.target.box2d) j["box2d"] = to_json(*g.target.box2d);
  if (g.target.box3d) j["box3d"] = to_json(*g.target.box3d);
  if (!g.extra.empty()) {
    nlohmann::json extra = nlohmann::json::array();
    for (const auto& e : g.extra) {
      nlohmann::json o = nlohmann::json::object();
      if (e.box2d) o["box2d"] = to_json(*e.box2d);
      if (e.box3d) o["box3d"] = to_json(*e.box3d);
      extra.push_back(std::move(o));
    }
    j["extra"] = std::move(extra);
  }
  if (g.intrinsics) j["intrinsics"] = to_json(*g.intrinsics);
  return j;
}

namespace detail {

template <typename Fn>
auto read_jsonl(std::istream& in, const char* what, Fn parse) {
  std::vector<decltype(parse(nlohmann::json{}))> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(std::string(what) + " line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw DatasetError(std::string(what) + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

} // namespace detail

inline std::vector<GtRecord> read_gts(std::istream& in) {
  return detail::read_jsonl(in, "ground truth", gt_from_json);
}

inline std::vector<PredictionRecord> read_predictions(std::istream& in,
                                                      const CodecProfile& profile) {
  return detail::read_jsonl(in, "predictions", [&](const nlohmann::json& j) {
    std::optional<double> conf;
    if (j.contains("confidence") && !j.at("confidence").is_null())
      conf = j.at("confidence").get<double>();
    return make_prediction(detail::string_field(j, "sample_id"), detail::string_field(j, "text"),
                           profile, conf);
  });
}

struct EvalConfig {
  CodecProfile profile = CodecProfile::finetune({672, 672});
  CameraIntrinsics camera{512, 512, 336, 336, 672, 672};
  bool ap2d = true;
  bool bev = true;
  bool box3d = true;
  bool indoor = false;
  double ap2d_threshold = 0.5;
  ThresholdProfile profile_a = placeholder_profile_a();
  ThresholdProfile profile_b = placeholder_profile_b();
  std::vector<double> indoor_taus = default_indoor_taus();
};

struct EvalReport {
  std::map<std::string, double> metrics;
  std::size_t samples = 0;
  std::size_t parse_failures = 0;
  std::vector<std::string> parse_failure_ids;
  std::map<std::string, std::string> profiles;
  std::string codec_profile;
};

inline std::string threshold_key(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

/// Canonical key order (objects sort by key), so reports diff cleanly.
inline nlohmann::json to_json(const EvalReport& r) {
  return {{"metrics", r.metrics},
          {"samples", r.samples},
          {"parse_failures", r.parse_failures},
          {"parse_failure_ids", r.parse_failure_ids},
          {"threshold_profiles", r.profiles},
          {"codec_profile", r.codec_profile}};
}

inline std::string report_text(const EvalReport& r) { return to_json(r).dump(2) + "\n"; }

/// Every prediction needs a ground truth and vice versa.
inline void check_alignment(const std::vector<PredictionRecord>& preds,
                            const std::vector<GtRecord>& gts) {
  std::set<std::string> pred_ids, gt_ids;
  std::vector<std::string> problems;
  for (const auto& p : preds)
    if (!pred_ids.insert(p.sample_id).second) problems.push_back("duplicate prediction " + p.sample_id);
  for (const auto& g : gts)
    if (!gt_ids.insert(g.sample_id).second) problems.push_back("duplicate ground truth " + g.sample_id);
  for (const auto& id : pred_ids)
    if (!gt_ids.contains(id)) problems.push_back("prediction without ground truth " + id);
  for (const auto& id : gt_ids)
    if (!pred_ids.contains(id)) problems.push_back("ground truth without prediction " + id);
  if (problems.empty()) return;
  std::string msg = "sample ids do not align (" + std::to_string(problems.size()) + " problems):";
  for (std::size_t i = 0; i < problems.size() && i < 20; ++i) msg += "\n  " + problems[i];
  if (problems.size() > 20) msg += "\n  ...";
  throw AlignmentError(msg);
}

inline EvalReport evaluate(const std::vector<PredictionRecord>& preds,
                           const std::vector<GtRecord>& gts, const EvalConfig& cfg) {
  check_alignment(preds, gts);
  EvalReport r;
  r.samples = preds.size();
  r.codec_profile = std::string(mode_name(cfg.profile.mode));
  for (const auto& p : preds)
    if (p.parse_failed()) {
      ++r.parse_failures;
      r.parse_failure_ids.push_back(p.sample_id);
    }
  std::sort(r.parse_failure_ids.begin(), r.parse_failure_ids.end());
  if (cfg.ap2d)
    r.metrics["AP2D_" + threshold_key(cfg.ap2d_threshold)] =
        grounding_accuracy(preds, gts, IouKind::box2d, cfg.ap2d_threshold, cfg.camera);
  if (cfg.bev || cfg.box3d) {
    r.profiles[cfg.profile_a.name] = cfg.profile_a.source;
    r.profiles[cfg.profile_b.name] = cfg.profile_b.source;
  }
  if (cfg.bev) {
    r.metrics["AP_BEV_" + cfg.profile_a.name] = ap_profile(preds, gts, IouKind::bev, cfg.profile_a, cfg.camera);
    r.metrics["AP_BEV_" + cfg.profile_b.name] = ap_profile(preds, gts, IouKind::bev, cfg.profile_b, cfg.camera);
  }
  if (cfg.box3d) {
    r.metrics["AP_3D_" + cfg.profile_a.name] = ap_profile(preds, gts, IouKind::box3d, cfg.profile_a, cfg.camera);
    r.metrics["AP_3D_" + cfg.profile_b.name] = ap_profile(preds, gts, IouKind::box3d, cfg.profile_b, cfg.camera);
  }
  if (cfg.indoor) {
    const IndoorResult ir = indoor_map(preds, gts, cfg.indoor_taus, cfg.camera);
    r.metrics["indoor_mAP"] = ir.mean;
    for (std::size_t i = 0; i < cfg.indoor_taus.size(); ++i)
      r.metrics["indoor_P_" + threshold_key(cfg.indoor_taus[i])] = ir.precision[i];
  }
  return r;
}

inline EvalReport evaluate_run(std::istream& preds, std::istream& gts, const EvalConfig& cfg) {
  return evaluate(read_predictions(preds, cfg.profile), read_gts(gts), cfg);
}

inline EvalReport evaluate_run(const std::filesystem::path& preds,
                               const std::filesystem::path& gts, const EvalConfig& cfg) {
  std::ifstream pin(preds), gin(gts);
  if (!pin) throw ConfigError("cannot open predictions '" + preds.string() + "'");
  if (!gin) throw ConfigError("cannot open ground truth '" + gts.string() + "'");
  return evaluate_run(pin, gin, cfg);
}

} // namespace cubekit

#endif // CUBEKIT_EVAL_HPP
