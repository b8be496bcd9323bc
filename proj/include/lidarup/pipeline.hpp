// lidarup - temporal LIDAR upsampling from a mono camera
//
// Frame-by-frame driver. A LIDAR frame becomes the anchor: its ground plane,
// per-track object clusters and their projections into the anchor image are
// stored. Each following camera-only frame chains the pixel tracks by one
// image, estimates every object's virtual camera pose against the anchor's
// 3D points, and synthesizes a virtual cloud from the anchor cloud.

#ifndef LIDARUP_PIPELINE_HPP
#define LIDARUP_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lidarup/association.hpp"
#include "lidarup/config.hpp"
#include "lidarup/geometry.hpp"
#include "lidarup/imaging.hpp"
#include "lidarup/pose.hpp"
#include "lidarup/random.hpp"
#include "lidarup/synthesis.hpp"
#include "lidarup/tracking2d.hpp"

namespace lidarup {

enum class ObjectStatus { kEstimated, kTooFewPoints, kPoseFailed };

[[nodiscard]] inline const char* to_string(ObjectStatus s) {
  switch (s) {
    case ObjectStatus::kEstimated: return "estimated";
    case ObjectStatus::kTooFewPoints: return "fallback_too_few_points";
    case ObjectStatus::kPoseFailed: return "fallback_pose_failed";
  }
  return "unknown";
}

struct ObjectMotionReport {
  int track_id = 0;
  std::size_t cluster_points = 0;
  std::size_t correspondences = 0;
  std::size_t inliers = 0;
  double mean_reprojection_error = 0.0;
  Vec3 anchor_centroid = Vec3::Zero();  // previous-LIDAR coordinates
  RigidTransform t_virtual;             // T_t,i
  RigidTransform t_motion;              // T_mov,i
  RigidTransform t_dynamic;             // T_D,i
  MotionLabel label = MotionLabel::kStatic;
  ObjectStatus status = ObjectStatus::kEstimated;
  std::string detail;
};

/// Wall-clock per stage, milliseconds.
struct StageTimings {
  double association = 0.0;
  double klt = 0.0;
  double pose = 0.0;
  double synthesis = 0.0;

  [[nodiscard]] double total() const { return association + klt + pose + synthesis; }
};

struct VirtualFrame {
  int frame = 0;
  int anchor_frame = 0;
  SynthesizedFrame synthesized;
  RigidTransform t_camera;  // T_t
  RigidTransform t_static;  // T_S
  std::vector<ObjectMotionReport> objects;  // by track id
  StageTimings timings;
};

namespace detail {

class Stopwatch {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct SeedCandidate {
  Pixel pixel;
  double depth = 0.0;  // camera z
};

/// Counter-clockwise convex hull (monotone chain); collinear points dropped.
inline std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> p) {
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, lo = k + 1; i-- > 0;) {
    while (k >= lo && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

/// Distance from q to the boundary of a CCW convex polygon, positive inside.
inline double hull_depth(const std::vector<Eigen::Vector2d>& hull,
                         const Eigen::Vector2d& q) {
  if (hull.size() < 3) return -std::numeric_limits<double>::infinity();
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Eigen::Vector2d& a = hull[i];
    const Eigen::Vector2d e = hull[(i + 1) % hull.size()] - a;
    const Eigen::Vector2d w = q - a;
    d = std::min(d, (e.x() * w.y() - e.y() * w.x()) / e.norm());
  }
  return d;
}

/// Picks KLT seeds among an object's projected points. A seed is interior
/// when its whole window lies inside the convex hull of the projections and
/// no nearer foreign point falls in it; such windows see only the object.
/// Interior seeds are used when there are at least `min_points` of them,
/// otherwise the `min_points` most interior ones. At most `max_points`
/// (0 = all) are returned, evenly spaced, as indices into `cand`.
inline std::vector<std::size_t> select_seeds(
    const std::vector<SeedCandidate>& cand,
    const std::vector<SeedCandidate>& foreign, int radius, int max_points,
    int min_points) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(cand.size());
  double max_depth = 0.0;
  for (const auto& c : cand) {
    pts.emplace_back(c.pixel.u, c.pixel.v);
    max_depth = std::max(max_depth, c.depth);
  }
  const auto hull = convex_hull(pts);
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  for (const auto& p : pts) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  std::vector<const SeedCandidate*> near;
  for (const auto& f : foreign)
    if (f.depth < max_depth && f.pixel.u >= lo.x() - radius && f.pixel.u <= hi.x() + radius &&
        f.pixel.v >= lo.y() - radius && f.pixel.v <= hi.y() + radius)
      near.push_back(&f);

  constexpr double kOccluderGap = 0.3;  // m in front of the seed
  std::vector<double> margin(cand.size());
  for (std::size_t j = 0; j < cand.size(); ++j) {
    const double u = cand[j].pixel.u, v = cand[j].pixel.v;
    double m = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 4; ++c)
      m = std::min(m, hull_depth(hull, {u + (c & 1 ? radius : -radius),
                                        v + (c & 2 ? radius : -radius)}));
    for (const auto* f : near)
      if (f->depth < cand[j].depth - kOccluderGap)
        m = std::min(m, std::max(std::abs(f->pixel.u - u), std::abs(f->pixel.v - v)) -
                            radius - 1.0);
    margin[j] = m;
  }

  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < cand.size(); ++j)
    if (margin[j] >= 0.0) pool.push_back(j);
  const std::size_t want_min = std::min<std::size_t>(
      cand.size(), static_cast<std::size_t>(std::max(min_points, 0)));
  if (pool.size() < want_min) {
    pool.resize(cand.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::stable_sort(pool.begin(), pool.end(),
                     [&](std::size_t a, std::size_t b) { return margin[a] > margin[b]; });
    pool.resize(want_min);
    std::sort(pool.begin(), pool.end());
  }
  const std::size_t keep =
      max_points > 0 ? std::min(pool.size(), static_cast<std::size_t>(max_points))
                     : pool.size();
  std::vector<std::size_t> out;
  out.reserve(keep);
  for (std::size_t j = 0; j < keep; ++j) out.push_back(pool[j * pool.size() / keep]);
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1, threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
}

}  // namespace detail

class UpsamplingPipeline {
 public:
  UpsamplingPipeline(CameraModel cam, RigidTransform t_lidar_to_cam,
                     PipelineConfig config)
      : cam_(std::move(cam)),
        t_lc_(std::move(t_lidar_to_cam)),
        config_(std::move(config)),
        tracker_(config_.tracker) {
    cam_.validate();
    config_.validate();
  }

  [[nodiscard]] const Tracker& tracker() const { return tracker_; }
  [[nodiscard]] bool has_anchor() const { return anchor_.has_value(); }
  [[nodiscard]] const PipelineConfig& config() const { return config_; }

  /// Forget the anchor, e.g. after an unreadable LIDAR frame.
  void drop_anchor() {
    anchor_.reset();
    prev_pyramid_.reset();
  }

  /// Ego pose inputs: world-from-LIDAR at this frame.
  StageTimings process_lidar_frame(int frame, const PointCloud& cloud,
                                   const GrayImage& image,
                                   const RigidTransform& world_from_lidar,
                                   const std::vector<BBox>& detections) {
    check_image(image);
    cloud.validate();
    detail::Stopwatch sw;
    tracker_.update(detections, frame);

    Anchor a;
    a.frame = frame;
    a.cloud = cloud;
    a.world_from_lidar = world_from_lidar;
    if (cloud.size() >= 3)
      a.ground = fit_ground_msac(cloud, config_.association.ground_threshold,
                                 config_.association.ground_iters,
                                 derive_seed(config_.seed, 0x67726f756e64ULL),
                                 config_.association.ground_confidence)
                     .plane;

    std::vector<ObjectTrack*> live;
    for (auto& t : tracker_.tracks())
      if (t.observed_at(frame)) live.push_back(&t);
    std::vector<std::vector<std::size_t>> clusters(live.size());
    detail::parallel_for(live.size(), config_.threads, [&](std::size_t k) {
      if (a.ground)
        clusters[k] = object_points_for_track(a.cloud, live[k]->last_box(),
                                              *a.ground, t_lc_, cam_,
                                              config_.association);
    });

    std::vector<std::optional<detail::SeedCandidate>> proj(a.cloud.size());
    for (std::size_t i = 0; i < a.cloud.size(); ++i) {
      const Vec3 pc = t_lc_.apply(a.cloud.points[i]);
      if (const auto px = project(pc, cam_)) proj[i] = detail::SeedCandidate{*px, pc.z()};
    }

    // An occluded object's frustum often elects the occluder. Tracks claim
    // points in order of how well the cluster's image extent fits their box;
    // a track whose cluster is already taken re-elects without those points.
    std::vector<double> fit(live.size(), 0.0);
    for (std::size_t k = 0; k < live.size(); ++k) {
      BBox ext{std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity()};
      for (auto i : clusters[k])
        if (proj[i]) {
          ext.x_min = std::min(ext.x_min, proj[i]->pixel.u);
          ext.y_min = std::min(ext.y_min, proj[i]->pixel.v);
          ext.x_max = std::max(ext.x_max, proj[i]->pixel.u);
          ext.y_max = std::max(ext.y_max, proj[i]->pixel.v);
        }
      if (ext.x_min < ext.x_max && ext.y_min < ext.y_max) fit[k] = iou(ext, live[k]->last_box());
    }
    std::vector<std::size_t> order(live.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return fit[x] > fit[y]; });
    constexpr int kUnowned = -1;
    std::vector<int> owner(a.cloud.size(), kUnowned);
    std::vector<char> claimed(a.cloud.size(), 0);
    for (auto k : order) {
      const bool clash = std::any_of(clusters[k].begin(), clusters[k].end(),
                                     [&](std::size_t i) { return claimed[i] != 0; });
      if (clash && a.ground)
        clusters[k] = object_points_for_track(a.cloud, live[k]->last_box(), *a.ground,
                                              t_lc_, cam_, config_.association, claimed);
      for (auto i : clusters[k]) {
        owner[i] = static_cast<int>(k);
        claimed[i] = 1;
      }
    }

    for (std::size_t k = 0; k < live.size(); ++k) {
      AnchorObject obj;
      obj.track_id = live[k]->track_id;
      for (auto i : clusters[k])
        if (owner[i] == static_cast<int>(k)) obj.indices.push_back(i);
      std::sort(obj.indices.begin(), obj.indices.end());
      live[k]->cluster_indices = obj.indices;
      live[k]->tracked_pixels.clear();
      if (obj.indices.empty()) continue;
      for (auto i : obj.indices) obj.centroid += a.cloud.points[i];
      obj.centroid /= static_cast<double>(obj.indices.size());

      std::vector<std::size_t> visible;
      std::vector<detail::SeedCandidate> cand;
      for (auto i : obj.indices)
        if (proj[i] && cam_.contains(proj[i]->pixel.u, proj[i]->pixel.v)) {
          visible.push_back(i);
          cand.push_back(*proj[i]);
        }
      std::vector<detail::SeedCandidate> foreign;
      for (std::size_t i = 0; i < a.cloud.size(); ++i)
        if (proj[i] && owner[i] != static_cast<int>(k)) foreign.push_back(*proj[i]);
      for (auto j : detail::select_seeds(cand, foreign, config_.klt.window / 2,
                                         config_.klt_max_points,
                                         config_.klt_min_points)) {
        obj.seed_points.push_back(visible[j]);
        obj.pixels.push_back(cand[j].pixel);
      }
      a.objects.push_back(std::move(obj));
    }
    anchor_ = std::move(a);
    prev_pyramid_ = build_pyramid(image, config_.klt.levels);

    StageTimings t;
    t.association = sw.lap_ms();
    return t;
  }

  /// Throws when no LIDAR frame has been seen yet.
  VirtualFrame process_camera_frame(int frame, const GrayImage& image,
                                    const RigidTransform& world_from_lidar,
                                    const std::vector<BBox>& detections) {
    check_image(image);
    if (!anchor_)
      throw Error(ErrorCode::kInvalidArgument,
                  "camera frame " + std::to_string(frame) + " precedes any LIDAR frame");
    detail::Stopwatch sw;
    tracker_.update(detections, frame);
    Anchor& a = *anchor_;

    VirtualFrame out;
    out.frame = frame;
    out.anchor_frame = a.frame;
    // Previous-LIDAR coordinates -> current camera, from known ego motion.
    out.t_camera = compose(t_lc_, compose(invert(world_from_lidar), a.world_from_lidar));
    out.t_static = static_transform(out.t_camera, t_lc_);
    out.timings.association = sw.lap_ms();

    Pyramid next = build_pyramid(image, config_.klt.levels);
    detail::parallel_for(a.objects.size(), config_.threads, [&](std::size_t k) {
      AnchorObject& obj = a.objects[k];
      const auto tracked = klt_track(*prev_pyramid_, next, obj.pixels, config_.klt);
      std::vector<std::size_t> seeds;
      std::vector<Pixel> pixels;
      for (std::size_t j = 0; j < tracked.size(); ++j)
        if (tracked[j].status == TrackStatus::kConverged) {
          seeds.push_back(obj.seed_points[j]);
          pixels.push_back(tracked[j].target);
        }
      obj.seed_points = std::move(seeds);
      obj.pixels = std::move(pixels);
      obj.last_tracked = tracked;
    });
    prev_pyramid_ = std::move(next);
    out.timings.klt = sw.lap_ms();

    for (auto& t : tracker_.tracks())
      for (const auto& obj : a.objects)
        if (obj.track_id == t.track_id) t.tracked_pixels = obj.last_tracked;

    out.objects.resize(a.objects.size());
    detail::parallel_for(a.objects.size(), config_.threads, [&](std::size_t k) {
      out.objects[k] = estimate_object(a, a.objects[k], out.t_camera, frame);
    });
    out.timings.pose = sw.lap_ms();

    FrameSynthesisPlan plan;
    plan.source_cloud = a.cloud;
    plan.t_static = out.t_static;
    for (std::size_t k = 0; k < a.objects.size(); ++k) {
      plan.object_memberships[a.objects[k].track_id] = a.objects[k].indices;
      plan.t_dynamic[a.objects[k].track_id] = out.objects[k].t_dynamic;
    }
    out.synthesized = synthesize_frame(plan);
    out.timings.synthesis = sw.lap_ms();
    return out;
  }

 private:
  struct AnchorObject {
    int track_id = 0;
    std::vector<std::size_t> indices;      // elected cluster, sorted
    Vec3 centroid = Vec3::Zero();
    std::vector<std::size_t> seed_points;  // cluster points still tracked
    std::vector<Pixel> pixels;             // their pixel on the latest image
    std::vector<TrackedPoint> last_tracked;
  };

  struct Anchor {
    int frame = 0;
    PointCloud cloud;
    RigidTransform world_from_lidar;
    std::optional<Plane> ground;
    std::vector<AnchorObject> objects;
  };

  void check_image(const GrayImage& image) const {
    if (image.width != cam_.width || image.height != cam_.height)
      throw Error(ErrorCode::kDimensionMismatch,
                  "image is " + std::to_string(image.width) + "x" +
                      std::to_string(image.height) + ", camera model expects " +
                      std::to_string(cam_.width) + "x" + std::to_string(cam_.height));
  }

  ObjectMotionReport estimate_object(const Anchor& a, const AnchorObject& obj,
                                     const RigidTransform& t_camera, int frame) const {
    ObjectMotionReport r;
    r.track_id = obj.track_id;
    r.cluster_points = obj.indices.size();
    r.correspondences = obj.seed_points.size();
    r.anchor_centroid = obj.centroid;
    r.t_virtual = t_camera;
    r.t_dynamic = static_transform(t_camera, t_lc_);
    r.status = ObjectStatus::kTooFewPoints;
    if (obj.seed_points.size() < kPnpMinimalSample) return r;

    std::vector<Correspondence> corrs;
    corrs.reserve(obj.seed_points.size());
    for (std::size_t j = 0; j < obj.seed_points.size(); ++j)
      corrs.push_back({a.cloud.points[obj.seed_points[j]], obj.pixels[j]});
    const std::uint64_t seed = derive_seed(
        derive_seed(config_.seed, static_cast<std::uint64_t>(obj.track_id)),
        static_cast<std::uint64_t>(frame));
    try {
      const PoseEstimate est = mlesac_pnp(corrs, cam_, config_.mlesac, seed);
      r.inliers = est.inlier_indices.size();
      r.mean_reprojection_error = est.mean_reprojection_error;
      r.t_virtual = est.transform;
      r.t_motion = object_motion(est.transform, t_camera);
      r.t_dynamic = dynamic_transform(est.transform, t_lc_);
      r.label = classify_motion(r.t_motion, config_.motion_translation_threshold,
                                config_.motion_rotation_threshold_deg);
      r.status = ObjectStatus::kEstimated;
    } catch (const Error& e) {
      r.status = ObjectStatus::kPoseFailed;
      r.detail = e.what();
    }
    return r;
  }

  CameraModel cam_;
  RigidTransform t_lc_;
  PipelineConfig config_;
  Tracker tracker_;
  std::optional<Anchor> anchor_;
  std::optional<Pyramid> prev_pyramid_;
};

}  // namespace lidarup

#endif  // LIDARUP_PIPELINE_HPP
