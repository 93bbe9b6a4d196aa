#ifndef CUBEKIT_CODEC_HPP
#define CUBEKIT_CODEC_HPP

// Label <-> token text codec.
//
// Every serialized value is quantized to one of 1000 bins and rendered as a
// zero-padded three digit group. Labels render as bracketed, comma separated
// groups in a fixed field order:
//
//   point2d  [x, y]
//   box2d    [x1, y1, x2, y2]
//   point3d  [x, y, z]
//   box3d    [x, y, z, w, h, l, r1, r2, r3]   (finetune: up to r1)
//   depth    [z]
//
// Grammar (bit-exact, see docs/token_grammar.md):
//
//   label = { ws } group { ws } ;
//   group = "[" bin { "," bin } "]" ;
//   bin   = digit digit digit ;

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "cubekit/error.hpp"
#include "cubekit/geometry.hpp"

namespace cubekit {

inline constexpr int kBins = 1000;
inline constexpr int kMaxBin = kBins - 1;

enum class Scale { linear, log };

struct QuantSpec {
  double min = 0.0;
  double max = 1.0;
  Scale scale = Scale::linear;
  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

enum class Field { xh, yh, z, w, h, l, r1, r2, r3 };

inline constexpr std::array<Field, 9> kAllFields{Field::xh, Field::yh, Field::z,
                                                 Field::w,  Field::h,  Field::l,
                                                 Field::r1, Field::r2, Field::r3};

inline std::string_view field_name(Field f) noexcept {
  static constexpr std::array<std::string_view, 9> kNames{"xh", "yh", "z",  "w", "h",
                                                          "l",  "r1", "r2", "r3"};
  return kNames[static_cast<std::size_t>(f)];
}

enum class Mode { pretrain, finetune };

inline std::string_view mode_name(Mode m) noexcept {
  return m == Mode::pretrain ? "pretrain" : "finetune";
}

/// Per-field quantization for one training stage and image size.
struct CodecProfile {
  Mode mode = Mode::pretrain;
  ImageSize image;
  std::array<QuantSpec, 9> specs{};
  std::vector<Field> box3d_fields;

  const QuantSpec& spec(Field f) const noexcept {
    return specs[static_cast<std::size_t>(f)];
  }
  std::size_t box3d_arity() const noexcept { return box3d_fields.size(); }

  /// Log-depth in [-4, 5], sizes in [0, 15] m, all three angles.
  static CodecProfile pretrain(ImageSize image) {
    CodecProfile p;
    p.mode = Mode::pretrain;
    p.image = image;
    fill_common(p);
    p.specs[idx(Field::z)] = {-4.0, 5.0, Scale::log};
    p.box3d_fields.assign(kAllFields.begin(), kAllFields.end());
    return p;
  }

  /// Metric depth in [0, 140] m and yaw only.
  static CodecProfile finetune(ImageSize image) {
    CodecProfile p;
    p.mode = Mode::finetune;
    p.image = image;
    fill_common(p);
    p.specs[idx(Field::z)] = {0.0, 140.0, Scale::linear};
    p.box3d_fields.assign(kAllFields.begin(), kAllFields.begin() + 7);
    return p;
  }

  static CodecProfile named(std::string_view name, ImageSize image) {
    if (name == "pretrain") return pretrain(image);
    if (name == "finetune") return finetune(image);
    throw ConfigError("unknown codec profile '" + std::string(name) + "'");
  }

private:
  static constexpr std::size_t idx(Field f) { return static_cast<std::size_t>(f); }

  static void fill_common(CodecProfile& p) {
    if (!(p.image.width > 0) || !(p.image.height > 0))
      throw DomainError("codec profile: image size must be positive");
    p.specs[idx(Field::xh)] = {0.0, p.image.width, Scale::linear};
    p.specs[idx(Field::yh)] = {0.0, p.image.height, Scale::linear};
    for (Field f : {Field::w, Field::h, Field::l}) p.specs[idx(f)] = {0.0, 15.0, Scale::linear};
    for (Field f : {Field::r1, Field::r2, Field::r3})
      p.specs[idx(f)] = {0.0, kTwoPi, Scale::linear};
  }
};

// ---------------------------------------------------------------------------
// Scalar quantization

inline double to_domain(double value, const QuantSpec& spec) noexcept {
  return spec.scale == Scale::log ? std::log(value) : value;
}

inline bool in_range(double value, const QuantSpec& spec) noexcept {
  if (!std::isfinite(value)) return false;
  if (spec.scale == Scale::log && !(value > 0)) return false;
  const double t = to_domain(value, spec);
  return t >= spec.min && t <= spec.max;
}

/// Round-half-up to the nearest of the 1000 bin centers.
inline int quantize(double value, const QuantSpec& spec,
                    std::string_view field = "value") {
  if (!in_range(value, spec))
    throw RangeError(std::string(field),
                     "field '" + std::string(field) + "' value " + std::to_string(value) +
                         " outside [" + std::to_string(spec.min) + ", " +
                         std::to_string(spec.max) + "]" +
                         (spec.scale == Scale::log ? " (log domain)" : ""));
  const double t = to_domain(value, spec);
  const double k = std::floor(kMaxBin * (t - spec.min) / (spec.max - spec.min) + 0.5);
  return static_cast<int>(std::clamp(k, 0.0, static_cast<double>(kMaxBin)));
}

inline double dequantize(int bin, const QuantSpec& spec) {
  if (bin < 0 || bin > kMaxBin)
    throw RangeError("bin", "bin " + std::to_string(bin) + " outside 0..999");
  const double t = spec.min + (static_cast<double>(bin) / kMaxBin) * (spec.max - spec.min);
  return spec.scale == Scale::log ? std::exp(t) : t;
}

/// Half of one bin in the field's (possibly log) domain.
inline double half_bin(const QuantSpec& spec) noexcept {
  return (spec.max - spec.min) / kMaxBin / 2;
}

// ---------------------------------------------------------------------------
// Labels

struct Depth {
  double z = 0.0;
  friend bool operator==(const Depth&, const Depth&) = default;
};

struct Caption {
  std::string text;
  friend bool operator==(const Caption&, const Caption&) = default;
};

using Label = std::variant<Point2D, Box2D, Point3D, Box3D, Depth, Caption>;

/// Same order as the Label alternatives.
enum class LabelKind { point2d, box2d, point3d, box3d, depth, caption };

inline LabelKind kind_of(const Label& l) noexcept {
  return static_cast<LabelKind>(l.index());
}

inline std::string_view kind_name(LabelKind k) noexcept {
  static constexpr std::array<std::string_view, 6> kNames{"point2d", "box2d", "point3d",
                                                          "box3d",   "depth", "caption"};
  return kNames[static_cast<std::size_t>(k)];
}

inline std::optional<LabelKind> kind_from_name(std::string_view name) noexcept {
  for (int i = 0; i < 6; ++i)
    if (kind_name(static_cast<LabelKind>(i)) == name) return static_cast<LabelKind>(i);
  return std::nullopt;
}

/// Number of token groups for a kind; 0 for captions.
inline std::size_t arity(LabelKind k, const CodecProfile& profile) noexcept {
  switch (k) {
  case LabelKind::point2d: return 2;
  case LabelKind::box2d: return 4;
  case LabelKind::point3d: return 3;
  case LabelKind::box3d: return profile.box3d_arity();
  case LabelKind::depth: return 1;
  case LabelKind::caption: return 0;
  }
  return 0;
}

namespace detail {

struct FieldValue {
  Field field;
  double value;
  std::string_view name;
};

inline double box3d_value(const Box3D& b, Field f) noexcept {
  switch (f) {
  case Field::xh: return b.xh;
  case Field::yh: return b.yh;
  case Field::z: return b.z;
  case Field::w: return b.w;
  case Field::h: return b.h;
  case Field::l: return b.l;
  case Field::r1: return b.r1;
  case Field::r2: return b.r2;
  case Field::r3: return b.r3;
  }
  return 0.0;
}

inline void set_box3d_value(Box3D& b, Field f, double v) noexcept {
  switch (f) {
  case Field::xh: b.xh = v; break;
  case Field::yh: b.yh = v; break;
  case Field::z: b.z = v; break;
  case Field::w: b.w = v; break;
  case Field::h: b.h = v; break;
  case Field::l: b.l = v; break;
  case Field::r1: b.r1 = v; break;
  case Field::r2: b.r2 = v; break;
  case Field::r3: b.r3 = v; break;
  }
}

/// The serialized (field, value) sequence of a geometric label.
inline std::vector<FieldValue> serialized_fields(const Label& label,
                                                 const CodecProfile& profile) {
  std::vector<FieldValue> out;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Point2D>) {
          out = {{Field::xh, v.x, "x"}, {Field::yh, v.y, "y"}};
        } else if constexpr (std::is_same_v<T, Box2D>) {
          out = {{Field::xh, v.x1, "x1"},
                 {Field::yh, v.y1, "y1"},
                 {Field::xh, v.x2, "x2"},
                 {Field::yh, v.y2, "y2"}};
        } else if constexpr (std::is_same_v<T, Point3D>) {
          out = {{Field::xh, v.xh, "xh"}, {Field::yh, v.yh, "yh"}, {Field::z, v.z, "z"}};
        } else if constexpr (std::is_same_v<T, Box3D>) {
          for (Field f : profile.box3d_fields)
            out.push_back({f, box3d_value(v, f), field_name(f)});
        } else if constexpr (std::is_same_v<T, Depth>) {
          out = {{Field::z, v.z, "z"}};
        }
      },
      label);
  return out;
}

} // namespace detail

/// Name of the first serialized field outside its range, if any.
inline std::optional<std::string> first_out_of_range(const Label& label,
                                                     const CodecProfile& profile) {
  for (const auto& fv : detail::serialized_fields(label, profile))
    if (!in_range(fv.value, profile.spec(fv.field))) return std::string(fv.name);
  return std::nullopt;
}

/// Bin indices in serialization order. Captions have none.
inline std::vector<int> quantize_label(const Label& label, const CodecProfile& profile) {
  std::vector<int> bins;
  for (const auto& fv : detail::serialized_fields(label, profile))
    bins.push_back(quantize(fv.value, profile.spec(fv.field), fv.name));
  return bins;
}

inline std::string render_bins(const std::vector<int>& bins) {
  std::string out;
  out.reserve(bins.size() * 4 + 1);
  out.push_back('[');
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i] < 0 || bins[i] > kMaxBin)
      throw RangeError("bin", "bin " + std::to_string(bins[i]) + " outside 0..999");
    if (i) out.push_back(',');
    out.push_back(static_cast<char>('0' + bins[i] / 100));
    out.push_back(static_cast<char>('0' + bins[i] / 10 % 10));
    out.push_back(static_cast<char>('0' + bins[i] % 10));
  }
  out.push_back(']');
  return out;
}

inline std::string render_label(const Label& label, const CodecProfile& profile) {
  if (const auto* cap = std::get_if<Caption>(&label)) return cap->text;
  return render_bins(quantize_label(label, profile));
}

namespace detail {

inline bool is_ws(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}
inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

/// Parses one bracketed group starting exactly at text[pos] == '['.
/// On success returns the bins and sets `end` one past ']'. On failure
/// returns nullopt and sets `error_at`.
inline std::optional<std::vector<int>> scan_group(std::string_view text, std::size_t pos,
                                                  std::size_t& end, std::size_t& error_at,
                                                  std::string& why) {
  if (pos >= text.size() || text[pos] != '[') {
    error_at = pos;
    why = "expected '['";
    return std::nullopt;
  }
  std::vector<int> bins;
  std::size_t i = pos + 1;
  while (true) {
    for (int d = 0; d < 3; ++d) {
      if (i + d >= text.size() || !is_digit(text[i + d])) {
        error_at = i + d;
        why = "expected a three digit group";
        return std::nullopt;
      }
    }
    bins.push_back((text[i] - '0') * 100 + (text[i + 1] - '0') * 10 + (text[i + 2] - '0'));
    i += 3;
    if (i >= text.size()) {
      error_at = i;
      why = "unterminated group, expected ',' or ']'";
      return std::nullopt;
    }
    if (text[i] == ']') {
      end = i + 1;
      return bins;
    }
    if (text[i] != ',') {
      error_at = i;
      why = "expected ',' or ']'";
      return std::nullopt;
    }
    ++i;
  }
}

} // namespace detail

/// Strict grammar parse of a whole string into bin indices.
inline std::vector<int> parse_bins(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && detail::is_ws(text[i])) ++i;
  std::size_t end = 0, error_at = 0;
  std::string why;
  auto bins = detail::scan_group(text, i, end, error_at, why);
  if (!bins) throw ParseError(error_at, why);
  for (std::size_t j = end; j < text.size(); ++j)
    if (!detail::is_ws(text[j])) throw ParseError(j, "trailing characters after ']'");
  return *bins;
}

/// Builds a label of `kind` from bins, dequantizing each field.
inline Label label_from_bins(const std::vector<int>& bins, LabelKind kind,
                             const CodecProfile& profile) {
  const std::size_t want = arity(kind, profile);
  if (kind == LabelKind::caption) throw ConfigError("captions carry no bins");
  if (bins.size() != want) throw ArityError(want, bins.size());
  auto dq = [&](std::size_t i, Field f) { return dequantize(bins[i], profile.spec(f)); };
  switch (kind) {
  case LabelKind::point2d: return Point2D{dq(0, Field::xh), dq(1, Field::yh)};
  case LabelKind::box2d:
    return Box2D{dq(0, Field::xh), dq(1, Field::yh), dq(2, Field::xh), dq(3, Field::yh)};
  case LabelKind::point3d: return Point3D{dq(0, Field::xh), dq(1, Field::yh), dq(2, Field::z)};
  case LabelKind::box3d: {
    Box3D b;
    for (std::size_t i = 0; i < profile.box3d_fields.size(); ++i)
      detail::set_box3d_value(b, profile.box3d_fields[i], dq(i, profile.box3d_fields[i]));
    return b;
  }
  case LabelKind::depth: return Depth{dq(0, Field::z)};
  case LabelKind::caption: break;
  }
  throw ConfigError("unreachable label kind");
}

inline Label parse_label(std::string_view text, LabelKind expect,
                         const CodecProfile& profile) {
  if (expect == LabelKind::caption) {
    std::size_t b = 0, e = text.size();
    while (b < e && detail::is_ws(text[b])) ++b;
    while (e > b && detail::is_ws(text[e - 1])) --e;
    return Caption{std::string(text.substr(b, e - b))};
  }
  return label_from_bins(parse_bins(text), expect, profile);
}

struct ExtractedLabel {
  std::size_t begin = 0; // byte offset of '['
  std::size_t end = 0;   // one past ']'
  LabelKind kind = LabelKind::point2d;
  Label label;
};

/// Arity to kind: 1 depth, 2 point2d, 3 point3d, 4 box2d, and the profile's
/// box3d arity. Any other arity is not a label under this profile.
inline std::optional<LabelKind> kind_for_arity(std::size_t n, const CodecProfile& profile) {
  if (n == profile.box3d_arity()) return LabelKind::box3d;
  switch (n) {
  case 1: return LabelKind::depth;
  case 2: return LabelKind::point2d;
  case 3: return LabelKind::point3d;
  case 4: return LabelKind::box2d;
  default: return std::nullopt;
  }
}

/// All well-formed bracketed groups in free text, left to right.
inline std::vector<ExtractedLabel> extract_labels(std::string_view text,
                                                  const CodecProfile& profile) {
  std::vector<ExtractedLabel> out;
  std::size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string_view::npos) {
    std::size_t end = 0, error_at = 0;
    std::string why;
    auto bins = detail::scan_group(text, pos, end, error_at, why);
    if (!bins) {
      ++pos;
      continue;
    }
    if (auto kind = kind_for_arity(bins->size(), profile)) {
      out.push_back({pos, end, *kind, label_from_bins(*bins, *kind, profile)});
    }
    pos = end;
  }
  return out;
}

} // namespace cubekit

#endif // CUBEKIT_CODEC_HPP
