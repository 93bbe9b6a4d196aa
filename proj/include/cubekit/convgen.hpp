#ifndef CUBEKIT_CONVGEN_HPP
#define CUBEKIT_CONVGEN_HPP

// Multi-turn conversation generation from scene records.
//
// Each object is decomposed into the properties it can answer for (caption,
// 2D point and box, depth, 3D point and box). Question/answer pairs over
// those properties are drawn round-robin across a shuffled object list.
// Optional extras: a 2D-then-3D chain for caption->box3d questions, a system
// turn listing candidate 3D boxes, random horizontal flips.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cubekit/codec.hpp"
#include "cubekit/default_templates.hpp"
#include "cubekit/error.hpp"
#include "cubekit/geometry.hpp"
#include "cubekit/pipeline.hpp"
#include "cubekit/scene.hpp"

namespace cubekit {

enum class PropertyKind { point2d, box2d, caption, depth, point3d, box3d };

inline constexpr std::array<PropertyKind, 5> kQuestionKinds{
    PropertyKind::point2d, PropertyKind::box2d, PropertyKind::caption, PropertyKind::point3d,
    PropertyKind::box3d};
inline constexpr std::array<PropertyKind, 6> kAnswerKinds{
    PropertyKind::point2d, PropertyKind::box2d, PropertyKind::caption,
    PropertyKind::depth,   PropertyKind::point3d, PropertyKind::box3d};

inline std::string_view property_name(PropertyKind k) noexcept {
  static constexpr std::array<std::string_view, 6> kNames{"point2d", "box2d",   "caption",
                                                          "depth",   "point3d", "box3d"};
  return kNames[static_cast<std::size_t>(k)];
}

inline std::optional<PropertyKind> property_from_name(std::string_view s) noexcept {
  for (PropertyKind k : kAnswerKinds)
    if (property_name(k) == s) return k;
  return std::nullopt;
}

struct TaskPair {
  PropertyKind question;
  PropertyKind answer;
  friend bool operator==(const TaskPair&, const TaskPair&) = default;
  friend auto operator<=>(const TaskPair&, const TaskPair&) = default;
};

inline std::string pair_name(TaskPair p) {
  return std::string(property_name(p.question)) + "->" + std::string(property_name(p.answer));
}

// ---------------------------------------------------------------------------
// Templates

struct Template {
  std::string id;
  TaskPair pair;
  std::string pattern;
};

inline std::string_view placeholder_for(PropertyKind question) noexcept {
  return question == PropertyKind::caption ? "<caption>" : "<label>";
}

class TemplateBank {
public:
  TemplateBank() = default;

  /// Tab separated `id  question->answer  pattern`, '#' comments.
  static TemplateBank parse(std::istream& in) {
    TemplateBank bank;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos)
        throw ConfigError("template line " + std::to_string(lineno) +
                          ": expected id<TAB>pair<TAB>pattern");
      Template t;
      t.id = line.substr(0, t1);
      const std::string pair = line.substr(t1 + 1, t2 - t1 - 1);
      t.pattern = line.substr(t2 + 1);
      const auto arrow = pair.find("->");
      const auto q = arrow == std::string::npos ? std::nullopt
                                                : property_from_name(pair.substr(0, arrow));
      const auto a = arrow == std::string::npos ? std::nullopt
                                                : property_from_name(pair.substr(arrow + 2));
      if (!q || !a || *q == PropertyKind::depth)
        throw ConfigError("template line " + std::to_string(lineno) + ": bad pair '" + pair + "'");
      t.pair = {*q, *a};
      bank.add(std::move(t));
    }
    return bank;
  }

  static TemplateBank parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
  }

  static const TemplateBank& builtin() {
    static const TemplateBank bank = parse(kDefaultTemplates);
    return bank;
  }

  /// Placeholder must appear exactly once.
  void add(Template t) {
    const std::string_view ph = placeholder_for(t.pair.question);
    const auto first = t.pattern.find(ph);
    if (first == std::string::npos || t.pattern.find(ph, first + 1) != std::string::npos)
      throw ConfigError("template '" + t.id + "' must contain " + std::string(ph) +
                        " exactly once");
    by_pair_[t.pair].push_back(std::move(t));
  }

  const std::vector<Template>& for_pair(TaskPair p) const {
    const auto it = by_pair_.find(p);
    if (it == by_pair_.end() || it->second.empty())
      throw ConfigError("no template for pair " + pair_name(p));
    return it->second;
  }

  bool has(TaskPair p) const { return by_pair_.contains(p); }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [pair, list] : by_pair_) n += list.size();
    return n;
  }

private:
  std::map<TaskPair, std::vector<Template>> by_pair_;
};

// ---------------------------------------------------------------------------
// Conversations

enum class Role { system, user, assistant };

inline std::string_view role_name(Role r) noexcept {
  switch (r) {
  case Role::system: return "system";
  case Role::user: return "user";
  case Role::assistant: return "assistant";
  }
  return "user";
}

inline Role role_from_name(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw DatasetError("unknown role '" + std::string(s) + "'");
}

struct Turn {
  Role role = Role::user;
  std::string text;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::vector<Turn> turns;
  std::string scene_ref;
  std::uint64_t seed = 0;
  friend bool operator==(const Conversation&, const Conversation&) = default;

  std::size_t qa_pairs() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(turns.begin(), turns.end(),
                      [](const Turn& t) { return t.role == Role::assistant; }));
  }
};

inline nlohmann::json to_json(const Conversation& c) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : c.turns) turns.push_back({{"role", role_name(t.role)}, {"text", t.text}});
  return {{"scene_ref", c.scene_ref}, {"seed", c.seed}, {"turns", std::move(turns)}};
}

inline Conversation conversation_from_json(const nlohmann::json& j) {
  Conversation c;
  c.scene_ref = j.at("scene_ref").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("turns"))
    c.turns.push_back({role_from_name(t.at("role").get<std::string>()),
                       t.at("text").get<std::string>()});
  return c;
}

/// Optional leading system turn, then strictly alternating user/assistant.
inline bool well_formed(const Conversation& c) {
  const std::size_t start = !c.turns.empty() && c.turns.front().role == Role::system ? 1 : 0;
  if ((c.turns.size() - start) % 2 != 0) return false;
  for (std::size_t i = start; i < c.turns.size(); ++i)
    if (c.turns[i].role != ((i - start) % 2 == 0 ? Role::user : Role::assistant)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Task decomposition

/// Everything one object can be asked about or answer with.
struct ObjectProperties {
  std::optional<std::string> caption;
  std::optional<Point2D> point2d;
  std::optional<Box2D> box2d;
  std::optional<double> depth;
  std::optional<Point3D> point3d;
  std::optional<Box3D> box3d;

  bool has(PropertyKind k) const noexcept {
    switch (k) {
    case PropertyKind::point2d: return point2d.has_value();
    case PropertyKind::box2d: return box2d.has_value();
    case PropertyKind::caption: return caption.has_value();
    case PropertyKind::depth: return depth.has_value();
    case PropertyKind::point3d: return point3d.has_value();
    case PropertyKind::box3d: return box3d.has_value();
    }
    return false;
  }
};

/// Decomposes an object's annotations. With `allow_3d` false the 3D box only
/// contributes its projected 2D box.
inline ObjectProperties resolve_properties(const ObjectRecord& o, const CameraIntrinsics& cam,
                                           bool allow_3d) {
  ObjectProperties p;
  p.caption = object_caption(o);
  p.box2d = o.box2d;
  if (!p.box2d && o.box3d) {
    try {
      p.box2d = project_box3d_to_box2d(*o.box3d, cam, true);
      if (p.box2d->area() <= 0) p.box2d.reset();
    } catch (const BehindCameraError&) {
    }
  }
  if (allow_3d && o.box3d) {
    p.box3d = o.box3d;
    p.point3d = o.box3d->center();
    p.depth = o.box3d->z;
  }
  if (o.point2d)
    p.point2d = o.point2d;
  else if (p.box3d)
    p.point2d = Point2D{p.box3d->xh, p.box3d->yh};
  else if (p.box2d)
    p.point2d = p.box2d->center();
  return p;
}

/// True when the answer is read straight off the question's own tokens.
inline bool answer_contained(TaskPair t) noexcept {
  using K = PropertyKind;
  if (t.question == K::box3d)
    return t.answer == K::point2d || t.answer == K::point3d || t.answer == K::depth;
  if (t.question == K::point3d) return t.answer == K::point2d || t.answer == K::depth;
  return false;
}

inline std::vector<TaskPair> enumerate_tasks(const ObjectProperties& p) {
  std::vector<TaskPair> out;
  for (PropertyKind q : kQuestionKinds) {
    if (!p.has(q)) continue;
    for (PropertyKind a : kAnswerKinds) {
      if (a == q || !p.has(a)) continue;
      if (answer_contained({q, a})) continue;
      out.push_back({q, a});
    }
  }
  return out;
}

inline std::vector<TaskPair> enumerate_tasks(const ObjectRecord& o, const CameraIntrinsics& cam,
                                             bool allow_3d) {
  return enumerate_tasks(resolve_properties(o, cam, allow_3d));
}

/// Stage-1 sources flagged 2D-only never produce 3D answers.
inline bool allows_3d(const SceneRecord& s, int stage) noexcept {
  return !(stage == 1 && s.stage1_2d_only);
}

namespace detail {

inline std::string render_property(const ObjectProperties& p, PropertyKind k,
                                   const CodecProfile& profile) {
  switch (k) {
  case PropertyKind::caption: return *p.caption;
  case PropertyKind::point2d: return render_label(*p.point2d, profile);
  case PropertyKind::box2d: return render_label(*p.box2d, profile);
  case PropertyKind::depth: return render_label(Depth{*p.depth}, profile);
  case PropertyKind::point3d: return render_label(*p.point3d, profile);
  case PropertyKind::box3d: return render_label(*p.box3d, profile);
  }
  return {};
}

inline std::string fill(const std::string& pattern, std::string_view placeholder,
                        const std::string& value) {
  std::string out = pattern;
  const auto pos = out.find(placeholder);
  out.replace(pos, placeholder.size(), value);
  return out;
}

} // namespace detail

struct QA {
  std::string question;
  std::string answer;
  friend bool operator==(const QA&, const QA&) = default;
};

/// Uniformly picks a template for the pair and renders both sides.
inline QA build_qa(const ObjectProperties& p, TaskPair pair, const TemplateBank& bank,
                   const CodecProfile& profile, Rng& rng) {
  if (!p.has(pair.question) || !p.has(pair.answer))
    throw NotApplicableError("object lacks " + pair_name(pair));
  const auto& list = bank.for_pair(pair);
  const Template& t = list[static_cast<std::size_t>(uniform_index(rng, list.size()))];
  return {detail::fill(t.pattern, placeholder_for(pair.question),
                       detail::render_property(p, pair.question, profile)),
          detail::render_property(p, pair.answer, profile)};
}

/// caption->box2d then caption->box3d for one object, 2D answer first.
inline std::vector<Turn> build_vcot(const ObjectProperties& p, const TemplateBank& bank,
                                    const CodecProfile& profile, Rng& rng) {
  if (!p.box3d) throw NotApplicableError("visual chain needs a 3D box");
  if (!p.box2d) throw NotApplicableError("visual chain needs a 2D box");
  if (!p.caption) throw NotApplicableError("visual chain needs a caption");
  const QA first = build_qa(p, {PropertyKind::caption, PropertyKind::box2d}, bank, profile, rng);
  const QA second = build_qa(p, {PropertyKind::caption, PropertyKind::box3d}, bank, profile, rng);
  return {{Role::user, first.question},
          {Role::assistant, first.answer},
          {Role::user, second.question},
          {Role::assistant, second.answer}};
}

inline std::vector<Turn> build_vcot(const ObjectRecord& o, const CameraIntrinsics& cam,
                                    const TemplateBank& bank, const CodecProfile& profile,
                                    Rng& rng) {
  return build_vcot(resolve_properties(o, cam, true), bank, profile, rng);
}

// ---------------------------------------------------------------------------
// Specialist prompts

inline constexpr std::string_view kSpecialistHeader =
    "Here is the list of 3D bounding boxes of all objects around the camera:";

struct Candidate {
  Box3D box;
  std::optional<double> confidence;
};

/// Header sentence then up to `top_k` rendered boxes, one per line. Sorted by
/// descending confidence only when every candidate carries one. Candidates
/// the profile cannot render are skipped.
inline Turn build_specialist_prompt(std::vector<Candidate> candidates,
                                    const CodecProfile& profile, std::size_t top_k = 30) {
  std::erase_if(candidates, [&](const Candidate& c) {
    return !c.box.valid() || first_out_of_range(Label{c.box}, profile).has_value();
  });
  const bool scored =
      !candidates.empty() && std::all_of(candidates.begin(), candidates.end(),
                                         [](const Candidate& c) { return c.confidence.has_value(); });
  if (scored)
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      return *a.confidence > *b.confidence;
    });
  std::string text(kSpecialistHeader);
  for (std::size_t i = 0; i < candidates.size() && i < top_k; ++i) {
    text += '\n';
    text += render_label(candidates[i].box, profile);
  }
  return {Role::system, std::move(text)};
}

// ---------------------------------------------------------------------------
// Indoor location cues

enum class SizeClass { small, medium, large };

/// max(w, h, l) <= 0.5 m small, <= 2 m medium, otherwise large.
inline SizeClass size_class(const Box3D& b) noexcept {
  const double m = std::max({b.w, b.h, b.l});
  if (m <= 0.5) return SizeClass::small;
  if (m <= 2.0) return SizeClass::medium;
  return SizeClass::large;
}

inline double band_min_distance(SizeClass c) noexcept {
  switch (c) {
  case SizeClass::small: return 1.0;
  case SizeClass::medium: return 4.0;
  case SizeClass::large: return 10.0;
  }
  return 10.0;
}

/// "<class> close to camera" under 0.8 m; else a left/right/center cue when
/// the projected center sits in that 20% band and the object is at least
/// 1/4/10 m away for its size class; else the bare class name.
inline std::string indoor_location_prompt(const ObjectRecord& o, const CameraIntrinsics& cam) {
  if (!o.box3d) throw NotApplicableError("indoor location prompt needs a 3D box");
  const Box3D& b = *o.box3d;
  if (b.z < 0.8) return o.category + " close to camera";
  if (b.z < band_min_distance(size_class(b))) return o.category;
  const double u = b.xh / cam.width;
  if (u < 0.2) return o.category + " on the left";
  if (u > 0.8) return o.category + " on the right";
  if (u >= 0.4 && u <= 0.6) return o.category + " at the center";
  return o.category;
}

// ---------------------------------------------------------------------------
// Scene-level generation

/// Flips with probability p unless the source forbids it or some object's
/// text is orientation-specific. Always consumes one draw from rng.
inline SceneRecord maybe_flip(const SceneRecord& s, Rng& rng, double p = 0.5) {
  const double u = uniform_unit(rng);
  const bool eligible = s.flip_allowed && std::none_of(s.objects.begin(), s.objects.end(),
                                     [](const ObjectRecord& o) { return o.orientation_sensitive; });
  return eligible && u < p ? horizontal_flip(s) : s;
}

struct ConversationOptions {
  std::size_t n_max = 30;
  int stage = 2;
  // Expand drawn caption->box3d pairs into the 2D-then-3D chain.
  bool vcot = false;
};

/// Up to n_max QA pairs drawn without replacement from the (object, task)
/// pool: objects shuffled, then one random remaining task per object per
/// round until the budget or the pool runs out.
inline Conversation build_conversation(const SceneRecord& s, const ConversationOptions& opt,
                                       const CodecProfile& profile, const TemplateBank& bank,
                                       Rng& rng) {
  Conversation conv;
  conv.scene_ref = s.image_ref;
  const bool allow_3d = allows_3d(s, opt.stage);

  std::vector<std::size_t> order(s.objects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);

  struct Pool {
    ObjectProperties props;
    std::vector<TaskPair> tasks;
  };
  std::vector<Pool> pools;
  for (std::size_t i : order) {
    Pool pool{resolve_properties(s.objects[i], s.intrinsics, allow_3d), {}};
    pool.tasks = enumerate_tasks(pool.props);
    if (!pool.tasks.empty()) pools.push_back(std::move(pool));
  }

  std::size_t pairs = 0;
  bool progress = true;
  while (pairs < opt.n_max && progress) {
    progress = false;
    for (auto& pool : pools) {
      if (pairs >= opt.n_max) break;
      if (pool.tasks.empty()) continue;
      progress = true;
      const auto k = static_cast<std::size_t>(uniform_index(rng, pool.tasks.size()));
      const TaskPair task = pool.tasks[k];
      pool.tasks.erase(pool.tasks.begin() + static_cast<std::ptrdiff_t>(k));
      const bool chain = opt.vcot && task == TaskPair{PropertyKind::caption, PropertyKind::box3d};
      if (chain) {
        // a chain that cannot be completed is dropped, never emitted 3D-first
        if (!pool.props.box2d || pairs + 2 > opt.n_max) continue;
        for (auto& t : build_vcot(pool.props, bank, profile, rng)) conv.turns.push_back(std::move(t));
        pairs += 2;
      } else {
        QA qa = build_qa(pool.props, task, bank, profile, rng);
        conv.turns.push_back({Role::user, std::move(qa.question)});
        conv.turns.push_back({Role::assistant, std::move(qa.answer)});
        ++pairs;
      }
    }
  }
  return conv;
}

/// Ground-truth boxes of a scene as unscored candidates, order shuffled.
inline std::vector<Candidate> gt_candidates(const SceneRecord& s, Rng& rng) {
  std::vector<Candidate> out;
  for (const auto& o : s.objects)
    if (o.box3d) out.push_back({*o.box3d, std::nullopt});
  shuffle(out, rng);
  return out;
}

} // namespace cubekit

#endif // CUBEKIT_CONVGEN_HPP
