#ifndef CUBEKIT_ASSOC_HPP
#define CUBEKIT_ASSOC_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "cubekit/geometry.hpp"
#include "cubekit/iou.hpp"

namespace cubekit {

inline constexpr double kAssociationThreshold = 0.35;

struct Match {
  std::size_t label = 0;
  std::size_t box = 0;
  double iou = 0.0;
  friend bool operator==(const Match&, const Match&) = default;
};

struct SkippedBox {
  std::size_t box = 0;
  std::string reason;
};

struct Association {
  std::vector<Match> pairs;
  std::vector<SkippedBox> skipped;
};

/// Pairs labeled 2D boxes with projected 3D boxes. Candidates are taken in
/// descending IoU (ties by label then box index), each side used at most once,
/// and only IoU strictly above `threshold` is kept. Boxes with a corner
/// behind the camera are skipped and reported.
inline Association associate(const std::vector<Box2D>& labels, const std::vector<Box3D>& boxes,
                             const CameraIntrinsics& cam,
                             double threshold = kAssociationThreshold) {
  Association out;
  std::vector<std::optional<Box2D>> projected(boxes.size());
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    try {
      projected[j] = project_box3d_to_box2d(boxes[j], cam, false);
    } catch (const BehindCameraError&) {
      out.skipped.push_back({j, "behind_camera"});
    } catch (const DomainError&) {
      out.skipped.push_back({j, "invalid_box"});
    }
  }
  std::vector<Match> candidates;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (!projected[j]) continue;
      const double v = iou_2d(labels[i], *projected[j]);
      if (v > threshold) candidates.push_back({i, j, v});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
    return std::tie(b.iou, a.label, a.box) < std::tie(a.iou, b.label, b.box);
  });
  std::vector<bool> label_used(labels.size()), box_used(boxes.size());
  for (const Match& m : candidates) {
    if (label_used[m.label] || box_used[m.box]) continue;
    label_used[m.label] = box_used[m.box] = true;
    out.pairs.push_back(m);
  }
  return out;
}

inline nlohmann::json to_json(const Association& a, const std::string& scene_ref) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& m : a.pairs) pairs.push_back({{"label", m.label}, {"box", m.box}, {"iou", m.iou}});
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : a.skipped) skipped.push_back({{"box", s.box}, {"reason", s.reason}});
  return {{"scene_ref", scene_ref}, {"pairs", std::move(pairs)}, {"skipped", std::move(skipped)}};
}

} // namespace cubekit

#endif // CUBEKIT_ASSOC_HPP
