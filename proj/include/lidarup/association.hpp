// lidarup - temporal LIDAR upsampling from a mono camera
//
// Binding 2D tracks to LIDAR points: MSAC ground plane, frustum selection,
// Euclidean cluster extraction and object-cluster election.

#ifndef LIDARUP_ASSOCIATION_HPP
#define LIDARUP_ASSOCIATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lidarup/error.hpp"
#include "lidarup/geometry.hpp"
#include "lidarup/random.hpp"
#include "lidarup/tracking2d.hpp"

namespace lidarup {

/// {p : normal . p + offset = 0}, |normal| = 1.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  [[nodiscard]] double signed_distance(const Vec3& p) const {
    return normal.dot(p) + offset;
  }
};

struct GroundFit {
  Plane plane;
  std::vector<std::size_t> inliers;
  double cost = 0.0;  // MSAC cost of the returned plane over the whole cloud
};

namespace detail {

inline double msac_cost(const std::vector<Vec3>& pts, const Plane& plane,
                        double th2, double bail_out) {
  double cost = 0.0;
  for (const auto& p : pts) {
    const double d = plane.signed_distance(p);
    cost += std::min(d * d, th2);
    if (cost >= bail_out) break;
  }
  return cost;
}

inline std::optional<Plane> plane_through(const Vec3& a, const Vec3& b,
                                          const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double scale = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(),
                                 1e-300});
  if (n.norm() <= 1e-9 * scale) return std::nullopt;
  const Vec3 unit = n.normalized();
  return Plane{unit, -unit.dot(a)};
}

/// Total least squares plane (centroid + smallest covariance eigenvector).
inline Plane fit_plane_lsq(const std::vector<Vec3>& pts,
                           const std::vector<std::size_t>& idx) {
  Vec3 c = Vec3::Zero();
  for (auto i : idx) c += pts[i];
  c /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (auto i : idx) {
    const Vec3 d = pts[i] - c;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 n = es.eigenvectors().col(0).normalized();
  return Plane{n, -n.dot(c)};
}

inline void orient_up(Plane& plane) {
  if (plane.normal.z() < 0.0) {
    plane.normal = -plane.normal;
    plane.offset = -plane.offset;
  }
}

}  // namespace detail

/// Points within `threshold` of the plane.
[[nodiscard]] inline std::vector<std::size_t> plane_inliers(
    const PointCloud& cloud, const Plane& plane, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (std::abs(plane.signed_distance(cloud.points[i])) <= threshold)
      out.push_back(i);
  return out;
}

/// MSAC plane fit with a truncated-quadratic cost, then a least-squares
/// refit over the winning plane's inliers. The normal points along +z.
/// Sampling stops early once `confidence` says an all-inlier triple has been
/// drawn (inlier ratio taken from the best plane so far); 1 disables that.
[[nodiscard]] inline GroundFit fit_ground_msac(const PointCloud& cloud,
                                               double dist_threshold,
                                               int max_iters,
                                               std::uint64_t seed,
                                               double confidence = 0.999) {
  if (cloud.size() < 3)
    throw Error(ErrorCode::kInvalidArgument, "need at least 3 points");
  if (!(dist_threshold > 0.0) || max_iters < 1 || !(confidence > 0.0) ||
      confidence > 1.0)
    throw Error(ErrorCode::kInvalidArgument, "bad MSAC parameters");

  const auto& pts = cloud.points;
  const double th2 = dist_threshold * dist_threshold;
  Rng rng(seed);
  std::optional<Plane> best;
  double best_cost = std::numeric_limits<double>::infinity();
  int needed = max_iters;
  for (int it = 0; it < std::min(max_iters, needed); ++it) {
    const auto s = rng.sample_distinct(pts.size(), 3);
    const auto plane = detail::plane_through(pts[s[0]], pts[s[1]], pts[s[2]]);
    if (!plane) continue;
    const double cost = detail::msac_cost(pts, *plane, th2, best_cost);
    if (cost < best_cost) {
      best_cost = cost;
      best = plane;
      if (confidence < 1.0) {
        std::size_t in = 0;
        for (const auto& p : pts) {
          const double d = plane->signed_distance(p);
          in += d * d < th2;
        }
        const double w = static_cast<double>(in) / static_cast<double>(pts.size());
        const double all_in = w * w * w;
        if (all_in >= 1.0)
          needed = 0;
        else if (all_in > 0.0)
          needed = static_cast<int>(std::min<double>(
              max_iters, std::ceil(std::log(1.0 - confidence) / std::log(1.0 - all_in))));
      }
    }
  }
  if (!best)
    throw Error(ErrorCode::kNoValidModel,
                "no non-degenerate plane sample after max_iters");

  GroundFit fit;
  fit.plane = *best;
  auto inliers = plane_inliers(cloud, fit.plane, dist_threshold);
  if (inliers.size() >= 3) {
    const Plane refined = detail::fit_plane_lsq(pts, inliers);
    const double refined_cost = detail::msac_cost(
        pts, refined, th2, std::numeric_limits<double>::infinity());
    if (refined_cost <= best_cost) {
      fit.plane = refined;
      best_cost = refined_cost;
      inliers = plane_inliers(cloud, fit.plane, dist_threshold);
    }
  }
  detail::orient_up(fit.plane);
  fit.inliers = std::move(inliers);
  fit.cost = best_cost;
  return fit;
}

/// Points with positive depth whose projection lies strictly inside the box.
[[nodiscard]] inline std::vector<std::size_t> frustum_select(
    const PointCloud& cloud, const BBox& bbox,
    const RigidTransform& t_lidar_to_cam, const CameraModel& cam) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto px = project(t_lidar_to_cam.apply(cloud.points[i]), cam);
    if (px && px->u > bbox.x_min && px->u < bbox.x_max && px->v > bbox.y_min &&
        px->v < bbox.y_max)
      out.push_back(i);
  }
  return out;
}

struct Cluster {
  std::vector<std::size_t> indices;  // sorted, unique
  Vec3 centroid = Vec3::Zero();
};

/// Connected components of the radius-`tolerance` neighbourhood graph over
/// the selected points, found through a uniform grid hash with cell edge
/// equal to the tolerance. Components below min_size are dropped; the rest
/// are ordered by size (descending), then by smallest member index.
[[nodiscard]] inline std::vector<Cluster> euclidean_cluster(
    const PointCloud& cloud, const std::vector<std::size_t>& indices,
    double tolerance, int min_size) {
  if (!(tolerance > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");

  auto cell_of = [&](const Vec3& p) {
    return Eigen::Vector3i(static_cast<int>(std::floor(p.x() / tolerance)),
                           static_cast<int>(std::floor(p.y() / tolerance)),
                           static_cast<int>(std::floor(p.z() / tolerance)));
  };
  auto key_of = [](const Eigen::Vector3i& c) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x()) & 0x1fffff) << 42) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.y()) & 0x1fffff) << 21) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.z()) & 0x1fffff));
  };

  std::vector<std::size_t> sel = indices;
  std::sort(sel.begin(), sel.end());
  sel.erase(std::unique(sel.begin(), sel.end()), sel.end());

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  grid.reserve(sel.size());
  for (std::size_t k = 0; k < sel.size(); ++k)
    grid[key_of(cell_of(cloud.points[sel[k]]))].push_back(k);

  const double tol2 = tolerance * tolerance;
  std::vector<char> visited(sel.size(), 0);
  std::vector<Cluster> clusters;
  std::vector<std::size_t> queue;
  for (std::size_t seed = 0; seed < sel.size(); ++seed) {
    if (visited[seed]) continue;
    visited[seed] = 1;
    queue.assign(1, seed);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Vec3& p = cloud.points[sel[queue[head]]];
      const Eigen::Vector3i c = cell_of(p);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            const auto it = grid.find(key_of(c + Eigen::Vector3i(dx, dy, dz)));
            if (it == grid.end()) continue;
            for (auto k : it->second) {
              if (visited[k]) continue;
              if ((cloud.points[sel[k]] - p).squaredNorm() <= tol2) {
                visited[k] = 1;
                queue.push_back(k);
              }
            }
          }
    }
    if (static_cast<int>(queue.size()) < min_size) continue;
    Cluster cl;
    cl.indices.reserve(queue.size());
    for (auto k : queue) cl.indices.push_back(sel[k]);
    std::sort(cl.indices.begin(), cl.indices.end());
    for (auto i : cl.indices) cl.centroid += cloud.points[i];
    cl.centroid /= static_cast<double>(cl.indices.size());
    clusters.push_back(std::move(cl));
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const Cluster& a, const Cluster& b) {
                     if (a.indices.size() != b.indices.size())
                       return a.indices.size() > b.indices.size();
                     return a.indices.front() < b.indices.front();
                   });
  return clusters;
}

enum class ElectionPolicy { kLargest, kNearest };

/// Largest cluster, ties broken by centroid distance to the sensor origin
/// (kLargest); or the nearest centroid, ties broken by size (kNearest).
[[nodiscard]] inline std::optional<Cluster> elect_object_cluster(
    const std::vector<Cluster>& clusters,
    ElectionPolicy policy = ElectionPolicy::kLargest) {
  if (clusters.empty()) return std::nullopt;
  auto better = [policy](const Cluster& a, const Cluster& b) {
    const double da = a.centroid.norm(), db = b.centroid.norm();
    if (policy == ElectionPolicy::kLargest) {
      if (a.indices.size() != b.indices.size())
        return a.indices.size() > b.indices.size();
      return da < db;
    }
    if (da != db) return da < db;
    return a.indices.size() > b.indices.size();
  };
  const Cluster* best = &clusters.front();
  for (const auto& c : clusters)
    if (better(c, *best)) best = &c;
  return *best;
}

struct AssociationParams {
  double ground_threshold = 0.2;
  int ground_iters = 200;
  double ground_confidence = 0.999;  // 1 = always run ground_iters
  double cluster_tolerance = 0.7;
  int cluster_min_size = 5;
  ElectionPolicy election = ElectionPolicy::kLargest;
};

/// Frustum -> drop ground -> cluster -> elect. Returns sorted indices of the
/// elected cluster, or nothing. Points flagged in `excluded` (one flag per
/// cloud point, or empty) are left out before clustering.
[[nodiscard]] inline std::vector<std::size_t> object_points_for_track(
    const PointCloud& cloud, const BBox& bbox, const Plane& ground,
    const RigidTransform& t_lidar_to_cam, const CameraModel& cam,
    const AssociationParams& params = {},
    const std::vector<char>& excluded = {}) {
  if (!excluded.empty() && excluded.size() != cloud.size())
    throw Error(ErrorCode::kSizeMismatch, "one exclusion flag per point");
  auto frustum = frustum_select(cloud, bbox, t_lidar_to_cam, cam);
  std::erase_if(frustum, [&](std::size_t i) {
    return (!excluded.empty() && excluded[i]) ||
           std::abs(ground.signed_distance(cloud.points[i])) <=
               params.ground_threshold;
  });
  const auto clusters = euclidean_cluster(cloud, frustum,
                                          params.cluster_tolerance,
                                          params.cluster_min_size);
  auto elected = elect_object_cluster(clusters, params.election);
  if (!elected) return {};
  return std::move(elected->indices);
}

}  // namespace lidarup

#endif  // LIDARUP_ASSOCIATION_HPP
