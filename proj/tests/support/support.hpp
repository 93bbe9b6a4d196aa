#ifndef CUBEKIT_TESTS_SUPPORT_HPP
#define CUBEKIT_TESTS_SUPPORT_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "json.hpp"

#include "cubekit/cubekit.hpp"

namespace cubekit::test {

inline std::filesystem::path source_dir() { return CUBEKIT_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& rel) {
  return source_dir() / "tests" / "fixtures" / rel;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline nlohmann::json load_json(const std::filesystem::path& p) {
  return nlohmann::json::parse(slurp(p));
}

inline CameraIntrinsics virtual_cam(double w = 672, double h = 672) {
  return {512, 512, w / 2, h / 2, w, h};
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// A box fully in front of a 672x672 virtual camera.
inline Box3D random_box(std::mt19937_64& rng, bool tilt) {
  Box3D b;
  b.xh = uniform(rng, 150, 520);
  b.yh = uniform(rng, 200, 480);
  b.z = uniform(rng, 6, 40);
  b.w = uniform(rng, 0.5, 3);
  b.h = uniform(rng, 0.5, 3);
  b.l = uniform(rng, 0.5, 5);
  b.r1 = uniform(rng, 0, kTwoPi);
  b.r2 = tilt ? uniform(rng, 0, 0.6) : 0.0;
  b.r3 = tilt ? uniform(rng, 0, 0.6) : 0.0;
  return b;
}

/// A second box overlapping `a` by a random amount.
inline Box3D jitter(std::mt19937_64& rng, const Box3D& a, bool tilt) {
  std::normal_distribution<double> n(0.0, 1.0);
  Box3D b = a;
  b.xh += 15 * n(rng);
  b.yh += 15 * n(rng);
  b.z += 0.8 * n(rng);
  b.w = std::max(0.3, b.w * uniform(rng, 0.7, 1.3));
  b.h = std::max(0.3, b.h * uniform(rng, 0.7, 1.3));
  b.l = std::max(0.3, b.l * uniform(rng, 0.7, 1.3));
  b.r1 = wrap_angle(b.r1 + 0.4 * n(rng));
  if (tilt) {
    b.r2 = wrap_angle(b.r2 + 0.2 * n(rng));
    b.r3 = wrap_angle(b.r3 + 0.2 * n(rng));
  }
  return b;
}

inline Box3D box_from(const nlohmann::json& j) { return box3d_from_json(j); }

/// A standardized scene on the 672x672 virtual camera with a random mix of
/// annotations per object. Every value renders under the pretrain profile.
inline SceneRecord random_scene(std::mt19937_64& rng, std::size_t objects, std::size_t index = 0) {
  static const char* kCategories[] = {"car", "pedestrian", "chair", "lamp", "truck", "umbrella"};
  static const char* kAttributes[] = {"red", "parked", "wooden", "old", "walking"};
  SceneRecord s;
  s.image_ref = "synthetic/" + std::to_string(index) + ".jpg";
  s.intrinsics = virtual_cam();
  s.virtual_camera = true;
  for (std::size_t i = 0; i < objects; ++i) {
    ObjectRecord o;
    o.id = std::to_string(i);
    o.category = kCategories[rng() % 6];
    if (rng() % 2) o.attributes.push_back(kAttributes[rng() % 5]);
    const auto shape = rng() % 4;
    if (shape != 3) {
      o.box3d = random_box(rng, rng() % 2 == 0);
      if (rng() % 2) o.box2d = project_box3d_to_box2d(*o.box3d, s.intrinsics, true);
    } else {
      const double x = uniform(rng, 0, 500), y = uniform(rng, 0, 500);
      o.box2d = Box2D{x, y, x + uniform(rng, 5, 170), y + uniform(rng, 5, 170)};
    }
    if (rng() % 5 == 0) o.point2d = Point2D{uniform(rng, 0, 672), uniform(rng, 0, 672)};
    if (rng() % 3 == 0) o.caption = "the " + o.category + (rng() % 4 == 0 ? " on the left" : " near the wall");
    o.orientation_sensitive = o.caption && mentions_orientation(*o.caption);
    s.objects.push_back(std::move(o));
  }
  return s;
}

} // namespace cubekit::test

#endif // CUBEKIT_TESTS_SUPPORT_HPP
