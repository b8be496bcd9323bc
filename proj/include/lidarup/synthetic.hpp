// lidarup - temporal LIDAR upsampling from a mono camera
//
// Procedural test worlds: a flat textured ground, textured boxes moving with
// constant velocity and yaw rate, an ego vehicle carrying a ray-cast LIDAR and
// a pinhole camera. Everything a sequence needs is generated, along with the
// exact virtual clouds and object motions a perfect upsampler would produce.
//
// World axes: x forward, y left, z up, ground at z = 0. The LIDAR shares the
// ego axes; the camera is x right, y down, z forward.

#ifndef LIDARUP_SYNTHETIC_HPP
#define LIDARUP_SYNTHETIC_HPP

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lidarup/config.hpp"
#include "lidarup/dataset_io.hpp"
#include "lidarup/error.hpp"
#include "lidarup/geometry.hpp"
#include "lidarup/imaging.hpp"
#include "lidarup/random.hpp"
#include "lidarup/synthesis.hpp"
#include "lidarup/tracking2d.hpp"

namespace lidarup {

struct SceneBox {
  Vec3 base = Vec3::Zero();  // bottom-face centre at t = 0
  double length = 4.0, width = 1.8, height = 1.5;
  double yaw_deg = 0.0;
  Vec3 velocity = Vec3::Zero();  // m/s, world
  double yaw_rate_deg = 0.0;     // deg/s
  bool detected = true;

  /// World-from-box at time t; box-local extent is
  /// [-l/2, l/2] x [-w/2, w/2] x [0, h].
  [[nodiscard]] RigidTransform pose_at(double t) const {
    return {rot_z(deg2rad(yaw_deg + yaw_rate_deg * t)), base + velocity * t};
  }

  [[nodiscard]] Vec3 half_extent() const { return {length / 2, width / 2, height}; }
};

struct SceneConfig {
  std::uint64_t seed = 0;
  int frames = 10;
  int rate_ratio = 3;  // camera frames per LIDAR frame
  double camera_rate = 30.0;
  double fx = 500, fy = 500, cx = 319.5, cy = 179.5;
  int width = 640, height = 360;
  Vec3 camera_offset{0.27, 0.0, -0.08};  // camera centre in LIDAR axes
  double lidar_height = 1.73;
  int lidar_beams = 64;
  double lidar_fov_down = -24.8, lidar_fov_up = 2.0;
  double lidar_azimuth_step = 0.2;
  double lidar_azimuth_fov = 120.0;  // centred on +x
  double lidar_range = 80.0;
  double lidar_noise = 0.0;  // range sigma, m
  double ego_speed = 0.0;
  double ego_yaw_rate_deg = 0.0;
  int render_supersample = 3;  // rays per pixel side
  double texture_blur = 1.0;   // scales the footprint used to fade fine texture
  std::vector<SceneBox> boxes;

  void validate() const {
    auto require = [](bool ok, const std::string& what) {
      if (!ok) throw Error(ErrorCode::kConfig, "scenario: " + what);
    };
    require(frames >= 1 && frames <= 100000, "frames out of range");
    require(rate_ratio >= 1, "rate_ratio must be >= 1");
    require(camera_rate > 0, "camera_rate must be positive");
    require(lidar_beams >= 1 && lidar_fov_up >= lidar_fov_down, "bad lidar beams");
    require(lidar_azimuth_step > 0 && lidar_azimuth_fov > 0 && lidar_azimuth_fov <= 360,
            "bad lidar azimuth");
    require(lidar_range > 0 && lidar_noise >= 0, "bad lidar range/noise");
    require(lidar_height > 0, "lidar_height must be positive");
    require(render_supersample >= 1 && render_supersample <= 8, "render_supersample in 1..8");
    require(texture_blur > 0, "texture_blur must be positive");
    for (const auto& b : boxes)
      require(b.length > 0 && b.width > 0 && b.height > 0 && b.base.z() >= 0,
              "box needs positive size and z_bottom >= 0");
    camera().validate();
  }

  [[nodiscard]] CameraModel camera() const {
    return CameraModel::from_params(fx, fy, cx, cy, width, height);
  }

  [[nodiscard]] bool has_lidar(int frame) const { return frame % rate_ratio == 0; }
  [[nodiscard]] double timestamp(int frame) const { return frame / camera_rate; }

  /// Camera-from-LIDAR.
  [[nodiscard]] RigidTransform lidar_to_camera() const {
    Mat3 r;
    r << 0, -1, 0, 0, 0, -1, 1, 0, 0;
    return {r, -(r * camera_offset)};
  }

  /// World-from-LIDAR; constant speed along a circular arc.
  [[nodiscard]] RigidTransform ego_pose(double t) const {
    const double w = deg2rad(ego_yaw_rate_deg);
    const double yaw = w * t;
    Vec3 p;
    if (std::abs(w) < 1e-12)
      p = {ego_speed * t, 0.0, lidar_height};
    else
      p = {ego_speed / w * std::sin(yaw), ego_speed / w * (1.0 - std::cos(yaw)),
           lidar_height};
    return {rot_z(yaw), p};
  }

  /// Anchor-LIDAR points of box `i` at frame `anchor` -> their position at
  /// `frame`, still in anchor-LIDAR coordinates.
  [[nodiscard]] RigidTransform object_motion(std::size_t i, int anchor, int frame) const {
    const RigidTransform w_l = ego_pose(timestamp(anchor));
    const RigidTransform move = compose(boxes[i].pose_at(timestamp(frame)),
                                        invert(boxes[i].pose_at(timestamp(anchor))));
    return compose(invert(w_l), compose(move, w_l));
  }

  /// Anchor-LIDAR -> LIDAR at `frame` for points of the static world.
  [[nodiscard]] RigidTransform static_motion(int anchor, int frame) const {
    return compose(invert(ego_pose(timestamp(frame))), ego_pose(timestamp(anchor)));
  }
};

/// Scenario text: the key = value format of the pipeline config.
///   box = x y z_bottom length width height yaw_deg vx vy yaw_rate_deg
///   structure = (same fields; static scenery that is never detected)
[[nodiscard]] inline SceneConfig parse_scene(const std::vector<KeyValue>& kvs) {
  SceneConfig s;
  for (const auto& kv : kvs) {
    std::istringstream ss(kv.value);
    std::vector<double> v;
    double x = 0;
    while (ss >> x) v.push_back(x);
    if (!ss.eof() || v.empty())
      throw Error(ErrorCode::kConfig,
                  "scenario line " + std::to_string(kv.line) + ": numbers expected");
    auto want = [&](std::size_t n) {
      if (v.size() != n)
        throw Error(ErrorCode::kConfig, "scenario line " + std::to_string(kv.line) +
                                            ": '" + kv.key + "' takes " +
                                            std::to_string(n) + " values");
    };
    auto integer = [&](double d) {
      if (d != std::floor(d) || std::abs(d) > 1e9)
        throw Error(ErrorCode::kConfig, "scenario line " + std::to_string(kv.line) +
                                            ": integer expected");
      return static_cast<int>(d);
    };
    const std::string& k = kv.key;
    if (k == "box" || k == "structure") {
      want(10);
      SceneBox b;
      b.base = {v[0], v[1], v[2]};
      b.length = v[3];
      b.width = v[4];
      b.height = v[5];
      b.yaw_deg = v[6];
      b.velocity = {v[7], v[8], 0.0};
      b.yaw_rate_deg = v[9];
      b.detected = k == "box";
      s.boxes.push_back(b);
      continue;
    }
    if (k == "camera") {
      want(6);
      s.fx = v[0], s.fy = v[1], s.cx = v[2], s.cy = v[3];
      s.width = integer(v[4]);
      s.height = integer(v[5]);
      continue;
    }
    if (k == "camera_offset") {
      want(3);
      s.camera_offset = {v[0], v[1], v[2]};
      continue;
    }
    if (k == "lidar_fov") {
      want(2);
      s.lidar_fov_down = v[0];
      s.lidar_fov_up = v[1];
      continue;
    }
    want(1);
    if (k == "seed") {
      if (v[0] < 0) throw Error(ErrorCode::kConfig, "scenario: seed must be >= 0");
      s.seed = static_cast<std::uint64_t>(integer(v[0]));
    } else if (k == "frames") {
      s.frames = integer(v[0]);
    } else if (k == "rate_ratio") {
      s.rate_ratio = integer(v[0]);
    } else if (k == "camera_rate") {
      s.camera_rate = v[0];
    } else if (k == "lidar_height") {
      s.lidar_height = v[0];
    } else if (k == "lidar_beams") {
      s.lidar_beams = integer(v[0]);
    } else if (k == "lidar_azimuth_step") {
      s.lidar_azimuth_step = v[0];
    } else if (k == "lidar_azimuth_fov") {
      s.lidar_azimuth_fov = v[0];
    } else if (k == "lidar_range") {
      s.lidar_range = v[0];
    } else if (k == "lidar_noise") {
      s.lidar_noise = v[0];
    } else if (k == "ego_speed") {
      s.ego_speed = v[0];
    } else if (k == "render_supersample") {
      s.render_supersample = integer(v[0]);
    } else if (k == "texture_blur") {
      s.texture_blur = v[0];
    } else if (k == "ego_yaw_rate") {
      s.ego_yaw_rate_deg = v[0];
    } else {
      throw Error(ErrorCode::kConfig, "scenario line " + std::to_string(kv.line) +
                                          ": unknown key '" + k + "'");
    }
  }
  s.validate();
  return s;
}

[[nodiscard]] inline SceneConfig read_scene(const std::string& path) {
  return parse_scene(read_key_value_file(path));
}

namespace detail {

inline constexpr int kGroundSurface = -1;
inline constexpr int kNoSurface = -2;

struct RayHit {
  double distance = std::numeric_limits<double>::infinity();
  int surface = kNoSurface;  // kGroundSurface or a box index
  Vec3 local = Vec3::Zero();  // hit point in the surface's own frame
  Vec3 normal = Vec3::UnitZ();  // world
};

/// Solid sinusoid texture; components finer than the pixel footprint fade out.
class SolidTexture {
 public:
  explicit SolidTexture(std::uint64_t seed) {
    Rng rng(seed);
    base_ = rng.uniform(0.35, 0.65);
    for (auto& w : waves_) {
      Vec3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
      dir.normalize();
      const double wavelength = std::exp(rng.uniform(std::log(0.12), std::log(1.6)));
      w.k = dir * (2.0 * kPi / wavelength);
      w.phase = rng.uniform(0.0, 2.0 * kPi);
      w.amplitude = rng.uniform(0.04, 0.09);
    }
  }

  [[nodiscard]] double eval(const Vec3& p, double footprint) const {
    double v = base_;
    for (const auto& w : waves_) {
      const double kf = w.k.norm() * footprint;
      v += w.amplitude * std::exp(-0.5 * kf * kf) * std::sin(w.k.dot(p) + w.phase);
    }
    return std::clamp(v, 0.0, 1.0);
  }

 private:
  struct Wave {
    Vec3 k;
    double phase = 0, amplitude = 0;
  };
  double base_ = 0.5;
  std::array<Wave, 12> waves_{};
};

/// Box poses of one instant, pre-inverted for ray tests.
struct SceneSnapshot {
  std::vector<RigidTransform> box_from_world;
  std::vector<Vec3> half;
  std::vector<Mat3> world_from_box_rot;

  SceneSnapshot(const SceneConfig& s, double t) {
    for (const auto& b : s.boxes) {
      const RigidTransform w = b.pose_at(t);
      box_from_world.push_back(invert(w));
      world_from_box_rot.push_back(w.rotation);
      half.push_back(b.half_extent());
    }
  }

  [[nodiscard]] RayHit cast(const Vec3& origin, const Vec3& dir, double max_t) const {
    RayHit hit;
    if (dir.z() < -1e-12) {
      const double t = -origin.z() / dir.z();
      if (t > 1e-9 && t < max_t) {
        hit.distance = t;
        hit.surface = kGroundSurface;
        hit.local = origin + t * dir;
        hit.normal = Vec3::UnitZ();
      }
    }
    for (std::size_t i = 0; i < half.size(); ++i) {
      const Vec3 o = box_from_world[i].apply(origin);
      const Vec3 d = box_from_world[i].rotation * dir;
      const Vec3 lo(-half[i].x(), -half[i].y(), 0.0);
      const Vec3 hi(half[i].x(), half[i].y(), half[i].z());
      double t0 = -std::numeric_limits<double>::infinity();
      double t1 = std::numeric_limits<double>::infinity();
      int axis = -1;
      double sign = 0;
      bool miss = false;
      for (int a = 0; a < 3 && !miss; ++a) {
        if (std::abs(d[a]) < 1e-15) {
          miss = o[a] < lo[a] || o[a] > hi[a];
          continue;
        }
        double ta = (lo[a] - o[a]) / d[a], tb = (hi[a] - o[a]) / d[a];
        double s = -1.0;
        if (ta > tb) {
          std::swap(ta, tb);
          s = 1.0;
        }
        if (ta > t0) {
          t0 = ta;
          axis = a;
          sign = s;
        }
        t1 = std::min(t1, tb);
        miss = t0 > t1;
      }
      if (miss || axis < 0 || t0 <= 1e-9 || t0 >= hit.distance || t0 >= max_t) continue;
      hit.distance = t0;
      hit.surface = static_cast<int>(i);
      hit.local = o + t0 * d;
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      hit.normal = world_from_box_rot[i] * n;
    }
    return hit;
  }
};

}  // namespace detail

/// World-from-camera at a frame.
[[nodiscard]] inline RigidTransform scene_camera_pose(const SceneConfig& s, int frame) {
  return compose(s.ego_pose(s.timestamp(frame)), invert(s.lidar_to_camera()));
}

[[nodiscard]] inline GrayImage render_image(const SceneConfig& s, int frame) {
  const detail::SceneSnapshot snap(s, s.timestamp(frame));
  const RigidTransform w_c = scene_camera_pose(s, frame);
  const CameraModel cam = s.camera();
  const Mat3 k_inv = cam.intrinsic.inverse();
  const detail::SolidTexture ground(derive_seed(s.seed, 0x9e3779b9ULL));
  std::vector<detail::SolidTexture> tex;
  for (std::size_t i = 0; i < s.boxes.size(); ++i)
    tex.emplace_back(derive_seed(s.seed, 1000 + i));
  constexpr double kSky = 0.85;

  GrayImage img;
  img.width = s.width;
  img.height = s.height;
  img.data.assign(static_cast<std::size_t>(s.width) * s.height, 0.0f);
  // Each pixel averages n x n rays over its area, like a sensor cell.
  const int n = s.render_supersample;
  for (int v = 0; v < s.height; ++v)
    for (int u = 0; u < s.width; ++u) {
      double sum = 0.0;
      for (int sv = 0; sv < n; ++sv)
        for (int su = 0; su < n; ++su) {
          const double pu = u + (su + 0.5) / n - 0.5, pv = v + (sv + 0.5) / n - 0.5;
          const Vec3 dir = w_c.rotation * (k_inv * Vec3(pu, pv, 1.0));  // depth-1 ray
          const auto hit = snap.cast(w_c.translation, dir, 1e4);
          if (hit.surface == detail::kNoSurface) {
            sum += kSky;
            continue;
          }
          const double cos_incidence =
              std::max(0.2, std::abs(hit.normal.dot(dir.normalized())));
          const double footprint = s.texture_blur * hit.distance / cam.fx() / cos_incidence;
          sum += hit.surface == detail::kGroundSurface
                     ? ground.eval(hit.local, footprint)
                     : tex[static_cast<std::size_t>(hit.surface)].eval(hit.local, footprint);
        }
      img.data[static_cast<std::size_t>(v) * s.width + u] =
          static_cast<float>(sum / (n * n));
    }
  return img;
}

struct SceneScan {
  PointCloud cloud;          // LIDAR coordinates
  std::vector<int> labels;   // box index, or kStaticLabel for ground/scenery
};

/// Ray-cast scan from the LIDAR at a frame; range noise is seeded per frame.
[[nodiscard]] inline SceneScan scan_lidar(const SceneConfig& s, int frame) {
  const detail::SceneSnapshot snap(s, s.timestamp(frame));
  const RigidTransform w_l = s.ego_pose(s.timestamp(frame));
  const RigidTransform l_w = invert(w_l);
  Rng rng(derive_seed(s.seed, 0x5ca9000ULL + static_cast<std::uint64_t>(frame)));
  const int n_az = std::max(1, static_cast<int>(std::floor(
                                   s.lidar_azimuth_fov / s.lidar_azimuth_step + 1e-9)));
  SceneScan out;
  for (int b = 0; b < s.lidar_beams; ++b) {
    const double el = deg2rad(
        s.lidar_beams == 1 ? s.lidar_fov_down
                           : s.lidar_fov_down + (s.lidar_fov_up - s.lidar_fov_down) * b /
                                                    (s.lidar_beams - 1));
    for (int a = 0; a < n_az; ++a) {
      const double az =
          deg2rad(-s.lidar_azimuth_fov / 2 + (a + 0.5) * s.lidar_azimuth_step);
      const Vec3 dir_l(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                       std::sin(el));
      const Vec3 dir = w_l.rotation * dir_l;
      const auto hit = snap.cast(w_l.translation, dir, s.lidar_range);
      if (hit.surface == detail::kNoSurface) continue;
      double range = hit.distance;
      if (s.lidar_noise > 0) range += s.lidar_noise * rng.gaussian();
      const Vec3 p = l_w.apply(w_l.translation + range * dir);
      const int label = hit.surface >= 0 && s.boxes[static_cast<std::size_t>(hit.surface)].detected
                            ? hit.surface
                            : kStaticLabel;
      out.cloud.push_back(p, static_cast<float>(std::min(range / s.lidar_range, 1.0)));
      out.labels.push_back(label);
    }
  }
  return out;
}

/// Detected boxes projected to the image; the result is the clipped hull of
/// the eight corners. Boxes partly behind the camera or off-image are skipped.
[[nodiscard]] inline std::vector<std::pair<std::size_t, BBox>> scene_detections(
    const SceneConfig& s, int frame) {
  const RigidTransform c_w = invert(scene_camera_pose(s, frame));
  const CameraModel cam = s.camera();
  std::vector<std::pair<std::size_t, BBox>> out;
  for (std::size_t i = 0; i < s.boxes.size(); ++i) {
    const SceneBox& b = s.boxes[i];
    if (!b.detected) continue;
    const RigidTransform w_b = b.pose_at(s.timestamp(frame));
    const Vec3 h = b.half_extent();
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    bool behind = false;
    for (int c = 0; c < 8; ++c) {
      const Vec3 local((c & 1 ? 1 : -1) * h.x(), (c & 2 ? 1 : -1) * h.y(),
                       c & 4 ? h.z() : 0.0);
      const Vec3 pc = c_w.apply(w_b.apply(local));
      if (pc.z() < 0.1) {
        behind = true;
        break;
      }
      const auto px = project(pc, cam);
      x0 = std::min(x0, px->u), x1 = std::max(x1, px->u);
      y0 = std::min(y0, px->v), y1 = std::max(y1, px->v);
    }
    if (behind) continue;
    x0 = std::max(x0, 0.0), y0 = std::max(y0, 0.0);
    x1 = std::min(x1, cam.width - 1.0), y1 = std::min(y1, cam.height - 1.0);
    if (x1 - x0 < 4 || y1 - y0 < 4) continue;
    out.push_back({i, BBox{x0, y0, x1, y1, 0, 1.0}});
  }
  return out;
}

struct SynthSummary {
  int frames = 0;
  int lidar_frames = 0;
  int virtual_frames = 0;
};

namespace detail {

inline std::string frame_name(int frame, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d%s", frame, ext);
  return buf;
}

inline nlohmann::json transform_json(const RigidTransform& t) {
  nlohmann::json a = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(t.rotation(r, c));
    a.push_back(t.translation[r]);
  }
  return a;
}

}  // namespace detail

/// Writes a complete sequence into `out_dir`:
///   manifest.txt poses.txt detections.txt images/ clouds/
///   gt/virtual/NNNNNN.bin   exact virtual cloud for each camera-only frame
///   gt/scans/NNNNNN.bin     what the LIDAR would really see at that frame
///   gt/labels/NNNNNN.txt    per-point box index of each LIDAR scan (-1 static)
///   gt/motions.json         exact T_S and per-box T_mov per camera-only frame
inline SynthSummary write_synthetic_sequence(const SceneConfig& s,
                                             const std::string& out_dir) {
  namespace fs = std::filesystem;
  s.validate();
  const fs::path root(out_dir);
  for (const char* d : {"images", "clouds", "gt/virtual", "gt/scans", "gt/labels"})
    fs::create_directories(root / d);

  std::vector<RigidTransform> poses;
  std::map<int, std::vector<BBox>> dets;
  SynthSummary summary;
  summary.frames = s.frames;
  nlohmann::json motions = nlohmann::json::array();

  std::optional<SceneScan> anchor;
  int anchor_frame = 0;
  std::ofstream manifest = detail::open_out((root / "manifest.txt").string(), false);
  manifest.precision(17);
  {
    const CameraModel cam = s.camera();
    const RigidTransform t = s.lidar_to_camera();
    manifest << "camera " << cam.fx() << ' ' << cam.fy() << ' ' << cam.cx() << ' '
             << cam.cy() << ' ' << cam.width << ' ' << cam.height << '\n'
             << "lidar_to_camera " << format_pose_line(t) << '\n'
             << "poses poses.txt\npose_frame lidar\ndetections detections.txt\n";
  }

  for (int f = 0; f < s.frames; ++f) {
    poses.push_back(s.ego_pose(s.timestamp(f)));
    write_pgm(render_image(s, f), (root / "images" / detail::frame_name(f, ".pgm")).string());
    for (const auto& [i, box] : scene_detections(s, f)) dets[f].push_back(box);

    SceneScan scan = scan_lidar(s, f);
    write_cloud_bin(scan.cloud, (root / "gt/scans" / detail::frame_name(f, ".bin")).string());
    std::string cloud_entry = "-";
    if (s.has_lidar(f)) {
      ++summary.lidar_frames;
      cloud_entry = "clouds/" + detail::frame_name(f, ".bin");
      write_cloud_bin(scan.cloud, (root / cloud_entry).string());
      std::ofstream lab = detail::open_out(
          (root / "gt/labels" / detail::frame_name(f, ".txt")).string(), false);
      for (int l : scan.labels) lab << l << '\n';
      anchor = std::move(scan);
      anchor_frame = f;
    } else if (anchor) {
      ++summary.virtual_frames;
      FrameSynthesisPlan plan;
      plan.source_cloud = anchor->cloud;
      plan.t_static = s.static_motion(anchor_frame, f);
      nlohmann::json objects = nlohmann::json::array();
      for (std::size_t i = 0; i < s.boxes.size(); ++i) {
        if (!s.boxes[i].detected) continue;
        std::vector<std::size_t> members;
        Vec3 centroid = Vec3::Zero();
        for (std::size_t p = 0; p < anchor->labels.size(); ++p)
          if (anchor->labels[p] == static_cast<int>(i)) {
            members.push_back(p);
            centroid += anchor->cloud.points[p];
          }
        const RigidTransform mov = s.object_motion(i, anchor_frame, f);
        if (!members.empty()) {
          centroid /= static_cast<double>(members.size());
          plan.object_memberships[static_cast<int>(i)] = members;
          plan.t_dynamic[static_cast<int>(i)] = compose(plan.t_static, mov);
        }
        objects.push_back({{"object", i},
                           {"n_points", members.size()},
                           {"anchor_centroid", {centroid.x(), centroid.y(), centroid.z()}},
                           {"t_mov", detail::transform_json(mov)},
                           {"translation", mov.translation.norm()},
                           {"rotation_deg", rad2deg(rotation_angle(mov.rotation))}});
      }
      write_cloud_bin(synthesize_frame(plan).cloud,
                      (root / "gt/virtual" / detail::frame_name(f, ".bin")).string());
      motions.push_back({{"frame", f},
                         {"anchor_frame", anchor_frame},
                         {"t_static", detail::transform_json(plan.t_static)},
                         {"objects", objects}});
    }
    manifest << s.timestamp(f) << " images/" << detail::frame_name(f, ".pgm") << ' '
             << cloud_entry << ' ' << f << '\n';
  }
  write_poses(poses, (root / "poses.txt").string());
  write_detections(dets, (root / "detections.txt").string());
  std::ofstream(root / "gt/motions.json") << motions.dump(1) << '\n';
  return summary;
}

}  // namespace lidarup

#endif  // LIDARUP_SYNTHETIC_HPP
