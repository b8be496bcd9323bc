// lidarup - temporal LIDAR upsampling from a mono camera
//
// File formats: KITTI-style float32 velodyne records, 3x4 pose lines,
// whitespace detection lists, binary PLY export and the sequence manifest.

#ifndef LIDARUP_DATASET_IO_HPP
#define LIDARUP_DATASET_IO_HPP

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lidarup/error.hpp"
#include "lidarup/geometry.hpp"
#include "lidarup/tracking2d.hpp"

namespace lidarup {

static_assert(std::endian::native == std::endian::little,
              "binary readers assume a little-endian host");

namespace detail {

inline std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline bool parse_double(const std::string& s, double& v) {
  try {
    std::size_t used = 0;
    v = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

inline std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

inline RigidTransform transform_from_12(const std::array<double, 12>& v,
                                        double drift_tol) {
  RigidTransform t;
  t.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
  t.translation << v[3], v[7], v[11];
  if (orthonormality_drift(t.rotation) > drift_tol)
    t.rotation = nearest_rotation(t.rotation);
  return t;
}

}  // namespace detail

/// Little-endian float32 (x, y, z, intensity) records.
[[nodiscard]] inline PointCloud read_cloud_bin(const std::string& path) {
  const auto buf = detail::slurp(path);
  if (buf.size() % 16 != 0)
    throw Error(ErrorCode::kMalformedLength,
                path + ": length " + std::to_string(buf.size()) +
                    " is not a multiple of 16");
  const std::size_t n = buf.size() / 16;
  PointCloud cloud;
  cloud.points.reserve(n);
  cloud.intensity.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float rec[4];
    std::memcpy(rec, buf.data() + 16 * i, 16);
    cloud.push_back(Vec3(rec[0], rec[1], rec[2]), rec[3]);
  }
  return cloud;
}

inline void write_cloud_bin(const PointCloud& cloud, const std::string& path) {
  auto out = detail::open_out(path, true);
  std::vector<float> buf;
  buf.reserve(4 * cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    buf.insert(buf.end(), {static_cast<float>(p.x()), static_cast<float>(p.y()),
                           static_cast<float>(p.z()),
                           cloud.has_intensity() ? cloud.intensity[i] : 0.0f});
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::kIo, "short write " + path);
}

/// One row-major 3x4 matrix (12 scalars) per line.
[[nodiscard]] inline std::vector<RigidTransform> read_poses(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<RigidTransform> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 12)
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(lineno) +
                                         ": expected 12 values, got " +
                                         std::to_string(tok.size()));
    std::array<double, 12> v{};
    for (std::size_t k = 0; k < 12; ++k)
      if (!detail::parse_double(tok[k], v[k]) || !std::isfinite(v[k]))
        throw Error(ErrorCode::kParse, path + ":" + std::to_string(lineno) +
                                           ": bad value '" + tok[k] + "'");
    out.push_back(detail::transform_from_12(v, 1e-6));
  }
  return out;
}

[[nodiscard]] inline std::string format_pose_line(const RigidTransform& t) {
  std::ostringstream os;
  os.precision(17);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) os << t.rotation(r, c) << ' ';
    os << t.translation[r] << (r < 2 ? " " : "");
  }
  return os.str();
}

inline void write_poses(const std::vector<RigidTransform>& poses,
                        const std::string& path) {
  auto out = detail::open_out(path, false);
  for (const auto& t : poses) out << format_pose_line(t) << '\n';
}

/// `frame_id class_id score x_min y_min x_max y_max` per line.
[[nodiscard]] inline std::map<int, std::vector<BBox>> read_detections(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::map<int, std::vector<BBox>> out;
  std::string line;
  int lineno = 0, last_frame = std::numeric_limits<int>::min();
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = detail::split_ws(detail::strip_comment(line));
    if (tok.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (tok.size() != 7)
      throw Error(ErrorCode::kParse, where + ": expected 7 fields");
    std::array<double, 7> v{};
    for (std::size_t k = 0; k < 7; ++k)
      if (!detail::parse_double(tok[k], v[k]) || !std::isfinite(v[k]))
        throw Error(ErrorCode::kParse, where + ": bad value '" + tok[k] + "'");
    if (v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
      throw Error(ErrorCode::kParse, where + ": frame and class must be integers");
    const int frame = static_cast<int>(v[0]);
    if (frame < last_frame)
      throw Error(ErrorCode::kParse, where + ": frame ids must be non-decreasing");
    last_frame = frame;
    BBox b{v[3], v[4], v[5], v[6], static_cast<int>(v[1]), v[2]};
    if (!b.is_valid())
      throw Error(ErrorCode::kInvalidArgument,
                  where + ": box needs x_min < x_max, y_min < y_max, score in [0,1]");
    out[frame].push_back(b);
  }
  return out;
}

inline void write_detections(const std::map<int, std::vector<BBox>>& dets,
                             const std::string& path) {
  auto out = detail::open_out(path, false);
  out.precision(10);
  for (const auto& [frame, boxes] : dets)
    for (const auto& b : boxes)
      out << frame << ' ' << b.class_id << ' ' << b.score << ' ' << b.x_min
          << ' ' << b.y_min << ' ' << b.x_max << ' ' << b.y_max << '\n';
}

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kStaticColor{0, 0, 0};
inline constexpr Rgb kVirtualMarkerColor{0, 255, 0};
/// Track colours cycle through this list (green is kept for overlays).
inline constexpr std::array<Rgb, 12> kTrackPalette{{{230, 25, 75},
                                                    {60, 120, 216},
                                                    {255, 225, 25},
                                                    {245, 130, 48},
                                                    {145, 30, 180},
                                                    {70, 240, 240},
                                                    {240, 50, 230},
                                                    {128, 0, 0},
                                                    {0, 0, 128},
                                                    {170, 110, 40},
                                                    {128, 128, 128},
                                                    {250, 190, 212}}};

[[nodiscard]] inline Rgb label_color(int label) {
  if (label < 0) return kStaticColor;
  return kTrackPalette[static_cast<std::size_t>(label) % kTrackPalette.size()];
}

/// binary_little_endian 1.0 PLY with float x,y,z and, when labels are given,
/// uchar red/green/blue from the provenance palette.
inline void write_cloud_ply(const PointCloud& cloud,
                            const std::vector<int>* labels,
                            const std::string& path) {
  if (labels && labels->size() != cloud.size())
    throw Error(ErrorCode::kSizeMismatch, "one label per point required");
  auto out = detail::open_out(path, true);
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (labels)
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  const std::size_t stride = labels ? 15 : 12;
  std::vector<char> buf(stride * cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.points[i].x()),
                          static_cast<float>(cloud.points[i].y()),
                          static_cast<float>(cloud.points[i].z())};
    std::memcpy(buf.data() + stride * i, xyz, 12);
    if (labels) {
      const Rgb c = label_color((*labels)[i]);
      std::memcpy(buf.data() + stride * i + 12, c.data(), 3);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write " + path);
}

struct PlyCloud {
  PointCloud cloud;
  std::vector<Rgb> colors;  // empty when the file has none
};

/// Reads the subset of PLY written by write_cloud_ply.
[[nodiscard]] inline PlyCloud read_cloud_ply(const std::string& path) {
  const auto buf = detail::slurp(path);
  const std::string marker = "end_header\n";
  const std::string head(buf.begin(),
                         buf.begin() + static_cast<std::ptrdiff_t>(
                                           std::min<std::size_t>(buf.size(), 4096)));
  const auto end = head.find(marker);
  if (head.rfind("ply\n", 0) != 0 || end == std::string::npos)
    throw Error(ErrorCode::kParse, path + ": not a PLY file");
  std::istringstream hs(head.substr(0, end));
  std::string line;
  std::size_t n = 0;
  std::vector<std::string> props;
  bool le = false;
  while (std::getline(hs, line)) {
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "format") le = tok.size() > 1 && tok[1] == "binary_little_endian";
    if (tok[0] == "element" && tok.size() == 3 && tok[1] == "vertex")
      n = std::stoull(tok[2]);
    if (tok[0] == "property" && tok.size() == 3) props.push_back(tok[1] + " " + tok[2]);
  }
  const std::vector<std::string> xyz{"float x", "float y", "float z"};
  const std::vector<std::string> xyzrgb{"float x", "float y", "float z",
                                        "uchar red", "uchar green", "uchar blue"};
  if (!le || (props != xyz && props != xyzrgb))
    throw Error(ErrorCode::kParse, path + ": unsupported PLY layout");
  const bool rgb = props == xyzrgb;
  const std::size_t stride = rgb ? 15 : 12;
  const std::size_t offset = end + marker.size();
  if (buf.size() - offset != stride * n)
    throw Error(ErrorCode::kMalformedLength, path + ": vertex data size mismatch");
  PlyCloud out;
  out.cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float p[3];
    std::memcpy(p, buf.data() + offset + stride * i, 12);
    out.cloud.points.emplace_back(p[0], p[1], p[2]);
    if (rgb) {
      Rgb c;
      std::memcpy(c.data(), buf.data() + offset + stride * i + 12, 3);
      out.colors.push_back(c);
    }
  }
  return out;
}

enum class PoseFrame { kLidar, kCamera };

struct ManifestFrame {
  double timestamp = 0.0;
  std::string image_path;                 // resolved
  std::optional<std::string> cloud_path;  // resolved; absent for camera-only
  int pose_index = 0;
  std::vector<BBox> detections;
};

/// A sequence: calibration, world-from-sensor poses and per-frame records.
///
/// Text format, one directive or frame per line, `#` starts a comment:
///   camera <fx> <fy> <cx> <cy> <width> <height>
///   lidar_to_camera <12 row-major values of [R|t]>
///   poses <path>                  world-from-sensor, one 3x4 per line
///   pose_frame lidar|camera       sensor the poses refer to (default lidar)
///   detections <path>             optional, frame ids = frame line order
///   <timestamp> <image_path> <cloud_path|-> <pose_line_index>
/// Relative paths are resolved against the manifest's directory.
struct SequenceManifest {
  CameraModel cam;
  RigidTransform t_lidar_to_cam;
  PoseFrame pose_frame = PoseFrame::kLidar;
  std::vector<RigidTransform> poses;
  std::vector<ManifestFrame> frames;
  std::string poses_path;
  std::string detections_path;

  /// World-from-LIDAR pose of a frame.
  [[nodiscard]] RigidTransform lidar_pose(const ManifestFrame& f) const {
    const RigidTransform& p = poses.at(static_cast<std::size_t>(f.pose_index));
    return pose_frame == PoseFrame::kLidar ? p : compose(p, t_lidar_to_cam);
  }

  void validate() const {
    for (std::size_t i = 1; i < frames.size(); ++i)
      if (!(frames[i].timestamp > frames[i - 1].timestamp))
        throw Error(ErrorCode::kNonMonotoneTimestamps,
                    "frame " + std::to_string(i) + " timestamp does not increase");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (frames[i].image_path.empty())
        throw Error(ErrorCode::kParse, "frame " + std::to_string(i) + " has no image");
      if (frames[i].pose_index < 0 ||
          static_cast<std::size_t>(frames[i].pose_index) >= poses.size())
        throw Error(ErrorCode::kParse,
                    "frame " + std::to_string(i) + " pose index out of range");
    }
  }
};

[[nodiscard]] inline SequenceManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path);
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return (fp.is_absolute() ? fp : base / fp).lexically_normal().string();
  };

  SequenceManifest m;
  bool have_cam = false, have_extr = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = detail::split_ws(detail::strip_comment(line));
    if (tok.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    auto nums = [&](std::size_t from, std::size_t count) {
      if (tok.size() != from + count)
        throw Error(ErrorCode::kParse, where + ": expected " +
                                           std::to_string(count) + " values");
      std::vector<double> v(count);
      for (std::size_t k = 0; k < count; ++k)
        if (!detail::parse_double(tok[from + k], v[k]) || !std::isfinite(v[k]))
          throw Error(ErrorCode::kParse, where + ": bad value '" + tok[from + k] + "'");
      return v;
    };
    double ts = 0.0;
    if (detail::parse_double(tok[0], ts)) {
      if (tok.size() != 4)
        throw Error(ErrorCode::kParse,
                    where + ": frame line is 'timestamp image cloud|- pose_index'");
      ManifestFrame f;
      f.timestamp = ts;
      if (tok[1] == "-")
        throw Error(ErrorCode::kParse, where + ": every frame needs an image");
      f.image_path = resolve(tok[1]);
      if (tok[2] != "-") f.cloud_path = resolve(tok[2]);
      double pi = 0.0;
      if (!detail::parse_double(tok[3], pi) || pi < 0 || pi != std::floor(pi))
        throw Error(ErrorCode::kParse, where + ": bad pose index");
      f.pose_index = static_cast<int>(pi);
      m.frames.push_back(std::move(f));
    } else if (tok[0] == "camera") {
      if (have_cam)
        throw Error(ErrorCode::kDuplicateCalibration, where + ": camera given twice");
      const auto v = nums(1, 6);
      if (v[4] != std::floor(v[4]) || v[5] != std::floor(v[5]))
        throw Error(ErrorCode::kParse, where + ": image size must be integral");
      m.cam = CameraModel::from_params(v[0], v[1], v[2], v[3],
                                       static_cast<int>(v[4]),
                                       static_cast<int>(v[5]));
      have_cam = true;
    } else if (tok[0] == "lidar_to_camera") {
      if (have_extr)
        throw Error(ErrorCode::kDuplicateCalibration,
                    where + ": lidar_to_camera given twice");
      const auto v = nums(1, 12);
      std::array<double, 12> a{};
      std::copy(v.begin(), v.end(), a.begin());
      m.t_lidar_to_cam = detail::transform_from_12(a, 1e-6);
      have_extr = true;
    } else if (tok[0] == "poses" && tok.size() == 2) {
      m.poses_path = resolve(tok[1]);
    } else if (tok[0] == "detections" && tok.size() == 2) {
      m.detections_path = resolve(tok[1]);
    } else if (tok[0] == "pose_frame" && tok.size() == 2 &&
               (tok[1] == "lidar" || tok[1] == "camera")) {
      m.pose_frame = tok[1] == "lidar" ? PoseFrame::kLidar : PoseFrame::kCamera;
    } else {
      throw Error(ErrorCode::kParse, where + ": unknown directive '" + tok[0] + "'");
    }
  }
  if (!have_cam || !have_extr)
    throw Error(ErrorCode::kMissingCalibration,
                path + ": needs exactly one 'camera' and one 'lidar_to_camera'");
  if (m.poses_path.empty())
    throw Error(ErrorCode::kParse, path + ": missing 'poses' directive");
  m.poses = read_poses(m.poses_path);
  if (!m.detections_path.empty()) {
    const auto dets = read_detections(m.detections_path);
    for (const auto& [frame, boxes] : dets) {
      if (frame < 0 || static_cast<std::size_t>(frame) >= m.frames.size())
        throw Error(ErrorCode::kParse, m.detections_path + ": frame " +
                                           std::to_string(frame) + " not in manifest");
      m.frames[static_cast<std::size_t>(frame)].detections = boxes;
    }
  }
  m.validate();
  return m;
}

}  // namespace lidarup

#endif  // LIDARUP_DATASET_IO_HPP
