// lidarup - temporal LIDAR upsampling from a mono camera
//
// Virtual camera pose per object from 3D (previous LIDAR frame) to 2D
// (current image) correspondences: linear PnP, Gauss-Newton refinement and
// an MLESAC consensus loop; plus the transform algebra turning the virtual
// pose into object motion, static and dynamic point transforms.

#ifndef LIDARUP_POSE_HPP
#define LIDARUP_POSE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "lidarup/error.hpp"
#include "lidarup/geometry.hpp"
#include "lidarup/random.hpp"

namespace lidarup {

struct Correspondence {
  Vec3 world;  // coordinates of the previous LIDAR frame
  Pixel pixel;  // observation on the current image
};

struct PoseEstimate {
  RigidTransform transform;  // previous-LIDAR coordinates -> current camera
  std::vector<std::size_t> inlier_indices;
  double mean_reprojection_error = 0.0;  // px, over inliers
  int iterations = 0;
  double inlier_ratio = 0.0;  // EM mixing coefficient of the best hypothesis
};

inline constexpr std::size_t kPnpMinimalSample = 6;

[[nodiscard]] inline double reprojection_error_sq(const RigidTransform& t,
                                                  const CameraModel& cam,
                                                  const Correspondence& c) {
  const Vec3 pc = t.apply(c.world);
  if (!(pc.z() > 0.0)) return std::numeric_limits<double>::infinity();
  const double x = pc.x() / pc.z(), y = pc.y() / pc.z();
  const double du = cam.fx() * x + cam.skew() * y + cam.cx() - c.pixel.u;
  const double dv = cam.fy() * y + cam.cy() - c.pixel.v;
  return du * du + dv * dv;
}

[[nodiscard]] inline double mean_reprojection_error(
    const RigidTransform& t, const CameraModel& cam,
    std::span<const Correspondence> corrs,
    std::span<const std::size_t> subset) {
  if (subset.empty()) return 0.0;
  double sum = 0.0;
  for (auto i : subset) sum += std::sqrt(reprojection_error_sq(t, cam, corrs[i]));
  return sum / static_cast<double>(subset.size());
}

namespace detail {

enum class DltCheck { kSvd, kFast };

// Least-squares translation for a fixed rotation: each correspondence gives
// (R X + t) x (x, y, 1) = 0, two equations linear in t.
inline std::optional<Vec3> refit_translation(std::span<const Correspondence> corrs,
                                             const CameraModel& cam, const Mat3& r) {
  const Mat3 kinv = cam.intrinsic.inverse();
  Mat3 ata = Mat3::Zero();
  Vec3 atb = Vec3::Zero();
  for (const auto& c : corrs) {
    const Vec3 h = kinv * Vec3(c.pixel.u, c.pixel.v, 1.0);
    const double x = h.x() / h.z(), y = h.y() / h.z();
    const Vec3 rx = r * c.world;
    const Vec3 a1(1.0, 0.0, -x), a2(0.0, 1.0, -y);
    ata += a1 * a1.transpose() + a2 * a2.transpose();
    atb += a1 * (x * rx.z() - rx.x()) + a2 * (y * rx.z() - rx.y());
  }
  const Vec3 t = ata.ldlt().solve(atb);
  if (!t.allFinite()) return std::nullopt;
  return t;
}

// Linear [R|t] in normalized camera coordinates. kSvd runs the full rank
// test on the design matrix; kFast solves the normal equations and is meant
// for minimal samples inside the consensus loop.
inline std::optional<RigidTransform> dlt_general(
    std::span<const Correspondence> corrs, const CameraModel& cam,
    DltCheck check, std::string* why = nullptr) {
  const std::size_t n = corrs.size();
  const Mat3 kinv = cam.intrinsic.inverse();

  Vec3 c3 = Vec3::Zero();
  Eigen::Vector2d c2 = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    c3 += corrs[i].world;
    const Vec3 h = kinv * Vec3(corrs[i].pixel.u, corrs[i].pixel.v, 1.0);
    xs[i] = h.head<2>() / h.z();
    c2 += xs[i];
  }
  c3 /= static_cast<double>(n);
  c2 /= static_cast<double>(n);
  double d3 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d3 += (corrs[i].world - c3).norm();
    d2 += (xs[i] - c2).norm();
  }
  d3 /= static_cast<double>(n);
  d2 /= static_cast<double>(n);
  if (!(d3 > 0.0) || !(d2 > 0.0)) {
    if (why) *why = "coincident points";
    return std::nullopt;
  }
  const double s3 = std::sqrt(3.0) / d3, s2 = std::sqrt(2.0) / d2;

  Eigen::Matrix<double, Eigen::Dynamic, 12> a(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector4d xw;
    xw << (corrs[i].world - c3) * s3, 1.0;
    const Eigen::Vector2d x = (xs[i] - c2) * s2;
    a.row(2 * i) << xw.transpose(), Eigen::RowVector4d::Zero(),
        -x.x() * xw.transpose();
    a.row(2 * i + 1) << Eigen::RowVector4d::Zero(), xw.transpose(),
        -x.y() * xw.transpose();
  }

  Eigen::Matrix<double, 12, 1> p;
  if (check == DltCheck::kSvd) {
    // Thin QR first so the SVD runs on a 12x12 factor with the same
    // singular values as the design matrix.
    Eigen::Matrix<double, 12, 12> r;
    if (a.rows() >= 12) {
      Eigen::HouseholderQR<Eigen::Matrix<double, Eigen::Dynamic, 12>> qr(a);
      r = qr.matrixQR().topRows<12>().triangularView<Eigen::Upper>();
    } else {
      r.setZero();
      r.topRows(a.rows()) = a;
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 12, 12>> svd(r, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(10) > 0.0) || sv(0) / sv(10) > 1e12) {
      if (why) *why = "rank-deficient design matrix";
      return std::nullopt;
    }
    p = svd.matrixV().col(11);
  } else {
    const Eigen::Matrix<double, 12, 12> ata = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 12, 12>> es(ata);
    const auto& ev = es.eigenvalues();
    if (!(ev(1) > 1e-14 * ev(11))) return std::nullopt;
    p = es.eigenvectors().col(0);
  }

  Eigen::Matrix<double, 3, 4> pn;
  pn.row(0) = p.segment<4>(0).transpose();
  pn.row(1) = p.segment<4>(4).transpose();
  pn.row(2) = p.segment<4>(8).transpose();

  // Undo the conditioning: P = T2^-1 * P' * T3.
  Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity();
  t3.topLeftCorner<3, 3>() *= s3;
  t3.topRightCorner<3, 1>() = -s3 * c3;
  Mat3 t2inv = Mat3::Identity();
  t2inv(0, 0) = t2inv(1, 1) = 1.0 / s2;
  t2inv(0, 2) = c2.x();
  t2inv(1, 2) = c2.y();
  Eigen::Matrix<double, 3, 4> pm = t2inv * pn * t3;

  int positive = 0;
  for (const auto& c : corrs)
    positive += (pm.row(2).head<3>().dot(c.world) + pm(2, 3)) > 0.0 ? 1 : -1;
  if (positive < 0) pm = -pm;

  const Mat3 m = pm.leftCols<3>();
  if (m.determinant() <= 0.0) {
    if (why) *why = "reflected solution";
    return std::nullopt;
  }
  RigidTransform out;
  out.rotation = nearest_rotation(m);
  const double scale = (out.rotation.transpose() * m).trace() / 3.0;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    if (why) *why = "degenerate scale";
    return std::nullopt;
  }
  // The projection onto SO(3) moves R; t is re-solved to match it.
  const auto t = refit_translation(corrs, cam, out.rotation);
  out.translation = t ? *t : Vec3(pm.col(3) / scale);
  return out;
}

// Pose from a plane-to-image homography, for coplanar points (a single
// visible face). The plane frame comes from the point scatter; the
// out-of-plane coordinate is dropped.
inline std::optional<RigidTransform> planar_pose(
    std::span<const Correspondence> corrs, const CameraModel& cam,
    const Vec3& centroid, const Mat3& axes, std::string* why = nullptr) {
  const std::size_t n = corrs.size();
  const Mat3 kinv = cam.intrinsic.inverse();
  std::vector<Eigen::Vector2d> q(n), xs(n);
  Eigen::Vector2d cq = Eigen::Vector2d::Zero(), cx = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = (axes.transpose() * (corrs[i].world - centroid)).head<2>();
    const Vec3 h = kinv * Vec3(corrs[i].pixel.u, corrs[i].pixel.v, 1.0);
    xs[i] = h.head<2>() / h.z();
    cq += q[i];
    cx += xs[i];
  }
  cq /= static_cast<double>(n);
  cx /= static_cast<double>(n);
  double dq = 0.0, dx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dq += (q[i] - cq).norm();
    dx += (xs[i] - cx).norm();
  }
  dq /= static_cast<double>(n);
  dx /= static_cast<double>(n);
  if (!(dq > 0.0) || !(dx > 0.0)) {
    if (why) *why = "coincident points";
    return std::nullopt;
  }
  const double sq = std::sqrt(2.0) / dq, sx = std::sqrt(2.0) / dx;

  Eigen::Matrix<double, Eigen::Dynamic, 9> a(std::max<std::size_t>(2 * n, 9), 9);
  a.setZero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 u((q[i].x() - cq.x()) * sq, (q[i].y() - cq.y()) * sq, 1.0);
    const Eigen::Vector2d x = (xs[i] - cx) * sx;
    a.row(2 * i) << u.transpose(), Eigen::RowVector3d::Zero(), -x.x() * u.transpose();
    a.row(2 * i + 1) << Eigen::RowVector3d::Zero(), u.transpose(), -x.y() * u.transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(7) > 0.0) || sv(0) / sv(7) > 1e12) {
    if (why) *why = "degenerate homography";
    return std::nullopt;
  }
  const Eigen::Matrix<double, 9, 1> hv = svd.matrixV().col(8);
  Mat3 hn;
  hn << hv.segment<3>(0).transpose(), hv.segment<3>(3).transpose(),
      hv.segment<3>(6).transpose();
  Mat3 tq = Mat3::Identity(), txinv = Mat3::Identity();
  tq(0, 0) = tq(1, 1) = sq;
  tq(0, 2) = -sq * cq.x();
  tq(1, 2) = -sq * cq.y();
  txinv(0, 0) = txinv(1, 1) = 1.0 / sx;
  txinv(0, 2) = cx.x();
  txinv(1, 2) = cx.y();
  Mat3 h = txinv * hn * tq;

  int positive = 0;
  for (std::size_t i = 0; i < n; ++i)
    positive += h.row(2).dot(Vec3(q[i].x(), q[i].y(), 1.0)) > 0.0 ? 1 : -1;
  if (positive < 0) h = -h;
  const double norm = 0.5 * (h.col(0).norm() + h.col(1).norm());
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    if (why) *why = "degenerate homography scale";
    return std::nullopt;
  }
  h /= norm;
  Mat3 r;
  r.col(0) = h.col(0);
  r.col(1) = h.col(1);
  r.col(2) = h.col(0).cross(h.col(1));
  RigidTransform plane_to_cam{nearest_rotation(r), h.col(2)};
  // world -> plane frame -> camera
  RigidTransform world_to_plane{axes.transpose(), -(axes.transpose() * centroid)};
  RigidTransform out = compose(plane_to_cam, world_to_plane);
  if (const auto t = refit_translation(corrs, cam, out.rotation)) out.translation = *t;
  return out;
}

// Dispatches on how flat the 3D points are: the general DLT needs depth
// spread, the homography path needs (near) coplanarity. In the overlap both
// run and the lower reprojection error wins.
inline std::optional<RigidTransform> dlt_linear(
    std::span<const Correspondence> corrs, const CameraModel& cam,
    DltCheck check, std::string* why = nullptr) {
  constexpr double kFlatForGeneral = 1e-3;
  constexpr double kFlatForPlanar = 0.1;
  const std::size_t n = corrs.size();
  if (n < 4) {
    if (why) *why = "too few points";
    return std::nullopt;
  }
  Vec3 c = Vec3::Zero();
  for (const auto& k : corrs) c += k.world;
  c /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (const auto& k : corrs) cov += (k.world - c) * (k.world - c).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 ev = es.eigenvalues().cwiseMax(0.0);
  if (!(ev(2) > 0.0)) {
    if (why) *why = "coincident points";
    return std::nullopt;
  }
  const double flat = std::sqrt(ev(0) / ev(2));

  std::optional<RigidTransform> general, planar;
  std::string why_general, why_planar;
  if (flat > kFlatForGeneral && n >= kPnpMinimalSample)
    general = dlt_general(corrs, cam, check, &why_general);
  if (flat < kFlatForPlanar && ev(1) > 1e-6 * ev(2)) {
    Mat3 axes;
    axes.col(0) = es.eigenvectors().col(2);
    axes.col(1) = es.eigenvectors().col(1);
    axes.col(2) = axes.col(0).cross(axes.col(1));
    planar = planar_pose(corrs, cam, c, axes, &why_planar);
  }
  if (general && planar) {
    auto sse = [&](const RigidTransform& t) {
      double s = 0.0;
      for (const auto& k : corrs) s += reprojection_error_sq(t, cam, k);
      return s;
    };
    return sse(*planar) < sse(*general) ? planar : general;
  }
  if (general) return general;
  if (planar) return planar;
  if (why) {
    *why = !why_general.empty() ? why_general
           : !why_planar.empty() ? why_planar
                                 : "collinear points";
  }
  return std::nullopt;
}

}  // namespace detail

/// Gauss-Newton on pixel reprojection error with a left-multiplicative
/// rotation update. Steps that raise the cost are halved (up to 8 times).
[[nodiscard]] inline RigidTransform refine_pose_gn(
    std::span<const Correspondence> corrs, const CameraModel& cam,
    RigidTransform pose, int max_iters = 10,
    std::span<const std::size_t> subset = {}) {
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(corrs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    subset = all;
  }
  auto cost_of = [&](const RigidTransform& t) {
    double s = 0.0;
    for (auto i : subset) s += reprojection_error_sq(t, cam, corrs[i]);
    return s;
  };
  double cost = cost_of(pose);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (auto i : subset) {
      const Vec3 rx = pose.rotation * corrs[i].world;
      const Vec3 pc = rx + pose.translation;
      if (!(pc.z() > 0.0)) continue;
      const double iz = 1.0 / pc.z();
      const double x = pc.x() * iz, y = pc.y() * iz;
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << cam.fx() * iz, cam.skew() * iz,
          -(cam.fx() * x + cam.skew() * y) * iz, 0.0, cam.fy() * iz,
          -cam.fy() * y * iz;
      Mat3 neg_skew;  // d(pc)/d(omega) = -[R X]_x
      neg_skew << 0, rx.z(), -rx.y(), -rx.z(), 0, rx.x(), rx.y(), -rx.x(), 0;
      Eigen::Matrix<double, 2, 6> j;
      j.leftCols<3>() = dproj * neg_skew;
      j.rightCols<3>() = dproj;
      const Eigen::Vector2d r(
          cam.fx() * x + cam.skew() * y + cam.cx() - corrs[i].pixel.u,
          cam.fy() * y + cam.cy() - corrs[i].pixel.v);
      h += j.transpose() * j;
      g += j.transpose() * r;
    }
    const Eigen::Matrix<double, 6, 1> delta = h.ldlt().solve(-g);
    if (!delta.allFinite()) break;
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 8; ++k, step *= 0.5) {
      RigidTransform cand;
      cand.rotation = so3_exp(step * delta.head<3>()) * pose.rotation;
      cand.translation = pose.translation + step * delta.tail<3>();
      const double c = cost_of(cand);
      if (c <= cost) {
        pose = cand;
        accepted = cost - c > 1e-15 * (cost + 1e-300) || c == 0.0;
        cost = c;
        break;
      }
    }
    if (!accepted || delta.norm() < 1e-12) break;
  }
  pose.rotation = nearest_rotation(pose.rotation);
  return pose;
}

/// Linear PnP on >= 6 correspondences followed by Gauss-Newton refinement.
[[nodiscard]] inline RigidTransform pnp_dlt(
    std::span<const Correspondence> corrs, const CameraModel& cam,
    int gn_iters = 10) {
  if (corrs.size() < kPnpMinimalSample)
    throw Error(ErrorCode::kInsufficientCorrespondences,
                "pnp_dlt needs at least 6 correspondences");
  std::string why;
  auto init = detail::dlt_linear(corrs, cam, detail::DltCheck::kSvd, &why);
  if (!init) throw Error(ErrorCode::kDegenerateConfiguration, why);
  return refine_pose_gn(corrs, cam, *init, gn_iters);
}

struct MlesacParams {
  double sigma = 2.0;    // px, inlier noise std
  int max_iters = 500;
  int min_iters = 30;
  double confidence = 0.999;  // adaptive stop once reached
  int em_steps = 5;
  double inlier_factor = 1.96;  // inlier iff error <= inlier_factor * sigma
  int refine_rounds = 3;
  // After consensus, the inlier gate shrinks to ~3 sigma of the residual
  // scale measured on the inliers themselves (never below trim_floor_px).
  bool adaptive_trim = true;
  double trim_floor_px = 0.05;
  // Each new best hypothesis is Gauss-Newton refined on its near inliers
  // before it is kept.
  bool local_optimization = true;
};

/// MLESAC over minimal 6-point DLT hypotheses. Each hypothesis is scored by
/// the negative log-likelihood of a Gaussian-inlier / uniform-outlier
/// mixture, the mixing weight re-estimated by a few EM steps. The winner's
/// inliers are re-fitted, and inliers re-selected, for `refine_rounds`.
[[nodiscard]] inline PoseEstimate mlesac_pnp(
    std::span<const Correspondence> corrs, const CameraModel& cam,
    const MlesacParams& params, std::uint64_t seed) {
  const std::size_t n = corrs.size();
  if (n < kPnpMinimalSample)
    throw Error(ErrorCode::kInsufficientCorrespondences,
                "need at least 6 correspondences, got " + std::to_string(n));

  const double s2 = params.sigma * params.sigma;
  const double pin_norm = 1.0 / (2.0 * kPi * s2);
  const double pout = 1.0 / (static_cast<double>(cam.width) * cam.height);
  const double inlier_th2 =
      params.inlier_factor * params.inlier_factor * s2;

  std::vector<double> pin(n);
  struct Score {
    double nll = 0.0, gamma = 0.0;
    std::size_t inliers = 0;
  };
  auto score = [&](const RigidTransform& t) {
    Score sc;
    for (std::size_t i = 0; i < n; ++i) {
      const double e2 = reprojection_error_sq(t, cam, corrs[i]);
      pin[i] = std::isfinite(e2) ? pin_norm * std::exp(-0.5 * e2 / s2) : 0.0;
      sc.inliers += e2 <= inlier_th2 ? 1 : 0;
    }
    double gamma = 0.5;
    for (int em = 0; em < params.em_steps; ++em) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = gamma * pin[i];
        acc += a / (a + (1.0 - gamma) * pout);
      }
      gamma = acc / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i)
      sc.nll -= std::log(gamma * pin[i] + (1.0 - gamma) * pout);
    sc.gamma = gamma;
    return sc;
  };

  Rng rng(seed);
  std::vector<Correspondence> sample(kPnpMinimalSample);
  double best_nll = std::numeric_limits<double>::infinity();
  RigidTransform best;
  double best_gamma = 0.0;
  bool found = false;
  int needed = params.max_iters;
  int it = 0;
  for (; it < params.max_iters && it < std::max(needed, params.min_iters); ++it) {
    const auto idx = rng.sample_distinct(n, kPnpMinimalSample);
    for (std::size_t k = 0; k < kPnpMinimalSample; ++k) sample[k] = corrs[idx[k]];
    const auto hyp = detail::dlt_linear(sample, cam, detail::DltCheck::kFast);
    if (!hyp) continue;

    Score sc = score(*hyp);
    if (!(sc.nll < best_nll)) continue;
    RigidTransform model = *hyp;
    if (params.local_optimization) {
      // Minimal noisy samples land near, not on, the answer: refit on the
      // points inside a gate that shrinks towards the inlier threshold.
      for (const double widen : {4.0, 2.0, 1.0}) {
        std::vector<std::size_t> near;
        for (std::size_t i = 0; i < n; ++i)
          if (reprojection_error_sq(model, cam, corrs[i]) <= widen * widen * inlier_th2)
            near.push_back(i);
        if (near.size() < kPnpMinimalSample) continue;
        const RigidTransform cand = refine_pose_gn(corrs, cam, model, 5, near);
        const Score cs = score(cand);
        if (cs.nll < sc.nll) {
          sc = cs;
          model = cand;
        }
      }
    }
    best_nll = sc.nll;
    best = model;
    best_gamma = sc.gamma;
    found = true;
    const double w = static_cast<double>(sc.inliers) / static_cast<double>(n);
    const double all_in = std::pow(w, static_cast<double>(kPnpMinimalSample));
    if (all_in >= 1.0) {
      needed = 0;
    } else if (all_in > 0.0) {
      const double k = std::log(1.0 - params.confidence) / std::log(1.0 - all_in);
      needed = static_cast<int>(std::min<double>(params.max_iters, std::ceil(k)));
    }
  }
  if (!found)
    throw Error(ErrorCode::kNoConsensus, "every sample was degenerate");

  auto select_inliers = [&](const RigidTransform& t) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < n; ++i)
      if (reprojection_error_sq(t, cam, corrs[i]) <= inlier_th2) in.push_back(i);
    return in;
  };

  PoseEstimate est;
  est.iterations = it;
  est.inlier_ratio = best_gamma;
  RigidTransform pose = best;
  std::vector<std::size_t> inliers = select_inliers(pose);
  for (int round = 0; round < params.refine_rounds; ++round) {
    if (inliers.size() < kPnpMinimalSample) break;
    // Gauss-Newton from the current pose; a fresh DLT on the inlier set is
    // kept instead when it reprojects better.
    RigidTransform refined = refine_pose_gn(corrs, cam, pose, 10, inliers);
    std::vector<Correspondence> in_corrs;
    in_corrs.reserve(inliers.size());
    for (auto i : inliers) in_corrs.push_back(corrs[i]);
    if (auto lin = detail::dlt_linear(in_corrs, cam, detail::DltCheck::kSvd)) {
      const RigidTransform alt = refine_pose_gn(in_corrs, cam, *lin, 10);
      if (mean_reprojection_error(alt, cam, corrs, inliers) <
          mean_reprojection_error(refined, cam, corrs, inliers))
        refined = alt;
    }
    pose = refined;
    auto next = select_inliers(pose);
    const bool stable = next == inliers;
    inliers = std::move(next);
    if (stable) break;
  }
  if (inliers.size() < kPnpMinimalSample)
    throw Error(ErrorCode::kNoConsensus,
                "best hypothesis has only " + std::to_string(inliers.size()) +
                    " inliers");
  for (int round = 0; params.adaptive_trim && round < params.refine_rounds; ++round) {
    std::vector<double> res;
    res.reserve(inliers.size());
    for (auto i : inliers) res.push_back(std::sqrt(reprojection_error_sq(pose, cam, corrs[i])));
    std::nth_element(res.begin(), res.begin() + static_cast<std::ptrdiff_t>(res.size() / 2),
                     res.end());
    // Error norms of isotropic 2D noise are Rayleigh: median = 1.1774 sigma,
    // 99th percentile = 3.035 sigma.
    const double gate = std::clamp(3.035 * res[res.size() / 2] / 1.1774,
                                   params.trim_floor_px, std::sqrt(inlier_th2));
    std::vector<std::size_t> kept;
    for (auto i : inliers)
      if (reprojection_error_sq(pose, cam, corrs[i]) <= gate * gate) kept.push_back(i);
    if (kept.size() < kPnpMinimalSample || kept == inliers) break;
    pose = refine_pose_gn(corrs, cam, pose, 10, kept);
    inliers = std::move(kept);
  }
  est.transform = pose;
  est.mean_reprojection_error =
      mean_reprojection_error(pose, cam, corrs, inliers);
  est.inlier_indices = std::move(inliers);
  return est;
}

/// T_t^-1 * T_t,i : the object's rigid motion in previous-LIDAR coordinates.
[[nodiscard]] inline RigidTransform object_motion(const RigidTransform& t_ti,
                                                  const RigidTransform& t_t) {
  return compose(invert(t_t), t_ti);
}

/// T_L,C^-1 * T_t : moves static points from the previous LIDAR frame into
/// the (virtual) current one.
[[nodiscard]] inline RigidTransform static_transform(
    const RigidTransform& t_t, const RigidTransform& t_lc) {
  return compose(invert(t_lc), t_t);
}

/// T_L,C^-1 * T_t,i : moves object i's points between LIDAR frames.
[[nodiscard]] inline RigidTransform dynamic_transform(
    const RigidTransform& t_ti, const RigidTransform& t_lc) {
  return compose(invert(t_lc), t_ti);
}

enum class MotionLabel { kStatic, kDynamic };

[[nodiscard]] inline MotionLabel classify_motion(
    const RigidTransform& t_mov, double translation_threshold = 0.05,
    double rotation_threshold_deg = 0.5) {
  return t_mov.translation.norm() > translation_threshold ||
                 rad2deg(rotation_angle(t_mov.rotation)) > rotation_threshold_deg
             ? MotionLabel::kDynamic
             : MotionLabel::kStatic;
}

}  // namespace lidarup

#endif  // LIDARUP_POSE_HPP
