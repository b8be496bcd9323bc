// lidarup - temporal LIDAR upsampling from a mono camera
//
// Virtual LIDAR frame generation: every point of the previous frame is moved
// by its object's dynamic transform, or by the static transform otherwise.

#ifndef LIDARUP_SYNTHESIS_HPP
#define LIDARUP_SYNTHESIS_HPP

#include <map>
#include <string>
#include <vector>

#include "lidarup/error.hpp"
#include "lidarup/geometry.hpp"

namespace lidarup {

inline constexpr int kStaticLabel = -1;

struct FrameSynthesisPlan {
  PointCloud source_cloud;
  std::map<int, std::vector<std::size_t>> object_memberships;  // track id -> indices
  RigidTransform t_static;
  std::map<int, RigidTransform> t_dynamic;  // track id -> transform

  /// Memberships disjoint and in range; every member track has a transform.
  void validate() const {
    std::vector<char> owned(source_cloud.size(), 0);
    for (const auto& [id, idx] : object_memberships) {
      if (!t_dynamic.contains(id))
        throw Error(ErrorCode::kInvalidPlan,
                    "track " + std::to_string(id) + " has no transform");
      for (auto i : idx) {
        if (i >= source_cloud.size())
          throw Error(ErrorCode::kInvalidPlan,
                      "index " + std::to_string(i) + " out of range");
        if (owned[i])
          throw Error(ErrorCode::kInvalidPlan,
                      "index " + std::to_string(i) + " owned twice");
        owned[i] = 1;
      }
    }
  }
};

struct SynthesizedFrame {
  PointCloud cloud;
  std::vector<int> labels;  // kStaticLabel or the owning track id
};

[[nodiscard]] inline SynthesizedFrame synthesize_frame(
    const FrameSynthesisPlan& plan) {
  plan.validate();
  SynthesizedFrame out;
  out.labels.assign(plan.source_cloud.size(), kStaticLabel);
  for (const auto& [id, idx] : plan.object_memberships)
    for (auto i : idx) out.labels[i] = id;

  const auto& src = plan.source_cloud.points;
  out.cloud.points.resize(src.size());
  out.cloud.intensity = plan.source_cloud.intensity;
  for (std::size_t i = 0; i < src.size(); ++i)
    if (out.labels[i] == kStaticLabel)
      out.cloud.points[i] = plan.t_static.apply(src[i]);
  for (const auto& [id, idx] : plan.object_memberships) {
    const RigidTransform& t = plan.t_dynamic.at(id);
    for (auto i : idx) out.cloud.points[i] = t.apply(src[i]);
  }
  return out;
}

/// Indices of points with positive depth whose projection lies in the image.
[[nodiscard]] inline std::vector<std::size_t> camera_fov_indices(
    const PointCloud& cloud, const RigidTransform& t_lidar_to_cam,
    const CameraModel& cam) {
  std::vector<std::size_t> out;
  for (const auto& pp : project_cloud(cloud, t_lidar_to_cam, cam))
    out.push_back(pp.index);
  return out;
}

[[nodiscard]] inline PointCloud restrict_to_camera_fov(
    const PointCloud& cloud, const RigidTransform& t_lidar_to_cam,
    const CameraModel& cam) {
  return cloud.select(camera_fov_indices(cloud, t_lidar_to_cam, cam));
}

}  // namespace lidarup

#endif  // LIDARUP_SYNTHESIS_HPP
