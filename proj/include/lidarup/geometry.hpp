// lidarup - temporal LIDAR upsampling from a mono camera
//
// Rigid transforms, pinhole projection and the point-cloud container.
// Every transform in the pipeline (extrinsics, ego poses, per-object virtual
// camera poses, static/dynamic point transforms) is a RigidTransform.

#ifndef LIDARUP_GEOMETRY_HPP
#define LIDARUP_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "lidarup/error.hpp"

namespace lidarup {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

[[nodiscard]] inline double deg2rad(double deg) { return deg * kPi / 180.0; }
[[nodiscard]] inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Largest absolute entry of R^T R - I.
[[nodiscard]] inline double orthonormality_drift(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

/// Closest rotation (orthogonal polar factor with det +1).
[[nodiscard]] inline Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

[[nodiscard]] inline Mat3 rot_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

[[nodiscard]] inline Mat3 rot_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

[[nodiscard]] inline Mat3 rot_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

/// Rodrigues exponential of an axis-angle vector.
[[nodiscard]] inline Mat3 so3_exp(const Vec3& w) {
  const double theta = w.norm();
  Mat3 k;
  k << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  if (theta < 1e-12) return Mat3::Identity() + k;
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

/// Rotation angle in radians, robust near 0 and pi.
[[nodiscard]] inline double rotation_angle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const Vec3 s(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * s.norm(), c);
}

/// Rigid SE(3) transform stored as a (rotation, translation) pair.
/// Applied to a point p it yields rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  [[nodiscard]] static RigidTransform identity() { return {}; }

  [[nodiscard]] static RigidTransform from_translation(const Vec3& t) {
    return {Mat3::Identity(), t};
  }

  [[nodiscard]] Vec3 apply(const Vec3& p) const {
    return rotation * p + translation;
  }

  [[nodiscard]] bool is_valid(double tol = 1e-9) const {
    return rotation.allFinite() && translation.allFinite() &&
           orthonormality_drift(rotation) <= tol &&
           rotation.determinant() > 0.0;
  }
};

/// Result applies b first, then a.
[[nodiscard]] inline RigidTransform compose(const RigidTransform& a,
                                            const RigidTransform& b) {
  RigidTransform out{a.rotation * b.rotation,
                     a.rotation * b.translation + a.translation};
  if (orthonormality_drift(out.rotation) > 1e-9)
    out.rotation = nearest_rotation(out.rotation);
  return out;
}

[[nodiscard]] inline RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = t.rotation.transpose();
  return {rt, -rt * t.translation};
}

/// Max absolute entry difference between the rotations and translations.
[[nodiscard]] inline double max_abs_diff(const RigidTransform& a,
                                         const RigidTransform& b) {
  return std::max((a.rotation - b.rotation).cwiseAbs().maxCoeff(),
                  (a.translation - b.translation).cwiseAbs().maxCoeff());
}

/// Pinhole camera: 3x3 upper-triangular intrinsics plus image size.
struct CameraModel {
  Mat3 intrinsic = Mat3::Identity();
  int width = 0;
  int height = 0;

  [[nodiscard]] static CameraModel from_params(double fx, double fy, double cx,
                                               double cy, int width,
                                               int height) {
    CameraModel cam;
    cam.intrinsic << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    cam.width = width;
    cam.height = height;
    cam.validate();
    return cam;
  }

  [[nodiscard]] double fx() const { return intrinsic(0, 0); }
  [[nodiscard]] double fy() const { return intrinsic(1, 1); }
  [[nodiscard]] double cx() const { return intrinsic(0, 2); }
  [[nodiscard]] double cy() const { return intrinsic(1, 2); }
  [[nodiscard]] double skew() const { return intrinsic(0, 1); }

  void validate() const {
    if (!(fx() > 0.0) || !(fy() > 0.0) || intrinsic(2, 2) != 1.0 ||
        intrinsic(1, 0) != 0.0 || intrinsic(2, 0) != 0.0 ||
        intrinsic(2, 1) != 0.0 || !intrinsic.allFinite())
      throw Error(ErrorCode::kInvalidArgument, "malformed intrinsic matrix");
    if (width <= 0 || height <= 0)
      throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }

  [[nodiscard]] bool contains(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u < width && v < height;
  }
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Ordered 3D points with optional per-point intensity. An empty intensity
/// vector means "absent"; otherwise it has one entry per point.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<float> intensity;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }
  [[nodiscard]] bool has_intensity() const { return !intensity.empty(); }

  void validate() const {
    if (has_intensity() && intensity.size() != points.size())
      throw Error(ErrorCode::kSizeMismatch,
                  "intensity must have one entry per point");
    for (const auto& p : points)
      if (!p.allFinite())
        throw Error(ErrorCode::kInvalidArgument, "non-finite point");
  }

  void push_back(const Vec3& p, float i) {
    points.push_back(p);
    intensity.push_back(i);
  }

  /// Sub-cloud with the given indices, in the given order.
  [[nodiscard]] PointCloud select(const std::vector<std::size_t>& idx) const {
    PointCloud out;
    out.points.reserve(idx.size());
    for (auto i : idx) out.points.push_back(points[i]);
    if (has_intensity()) {
      out.intensity.reserve(idx.size());
      for (auto i : idx) out.intensity.push_back(intensity[i]);
    }
    return out;
  }
};

[[nodiscard]] inline PointCloud transform_points(const PointCloud& cloud,
                                                 const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  out.intensity = cloud.intensity;
  return out;
}

/// Pinhole projection of a camera-frame point; nullopt when Z <= 0.
[[nodiscard]] inline std::optional<Pixel> project(const Vec3& p,
                                                  const CameraModel& cam) {
  if (!(p.z() > 0.0)) return std::nullopt;
  const double x = p.x() / p.z();
  const double y = p.y() / p.z();
  return Pixel{cam.fx() * x + cam.skew() * y + cam.cx(), cam.fy() * y + cam.cy()};
}

struct ProjectedPoint {
  std::size_t index = 0;
  Pixel pixel;
};

/// Points with positive depth that land inside the image, in source order.
[[nodiscard]] inline std::vector<ProjectedPoint> project_cloud(
    const PointCloud& cloud, const RigidTransform& t_world_to_cam,
    const CameraModel& cam) {
  std::vector<ProjectedPoint> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto px = project(t_world_to_cam.apply(cloud.points[i]), cam);
    if (px && cam.contains(px->u, px->v)) out.push_back({i, *px});
  }
  return out;
}

}  // namespace lidarup

#endif  // LIDARUP_GEOMETRY_HPP
