// lidarup - temporal LIDAR upsampling from a mono camera
//
// Grayscale images, box-filter pyramids and pyramidal Lucas-Kanade tracking
// of individual pixels between two frames.

#ifndef LIDARUP_IMAGING_HPP
#define LIDARUP_IMAGING_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "lidarup/error.hpp"
#include "lidarup/geometry.hpp"

namespace lidarup {

/// Row-major luminance image with values in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  [[nodiscard]] float at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

[[nodiscard]] inline GrayImage to_gray(std::span<const std::uint8_t> rgb,
                                       int width, int height) {
  if (width <= 0 || height <= 0 ||
      rgb.size() != static_cast<std::size_t>(3) * width * height)
    throw Error(ErrorCode::kSizeMismatch, "rgb buffer length != 3*w*h");
  GrayImage img(width, height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double y = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] +
                     0.114 * rgb[3 * i + 2];
    img.data[i] = static_cast<float>(std::clamp(y / 255.0, 0.0, 1.0));
  }
  return img;
}

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace detail

/// Reads binary PGM ("P5") or PPM ("P6") with maxval <= 255.
[[nodiscard]] inline GrayImage read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open image " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6")
    throw Error(ErrorCode::kParse, path + ": unsupported image magic " + magic);
  int w = 0, h = 0, maxval = 0;
  detail::skip_pnm_space(in);
  in >> w;
  detail::skip_pnm_space(in);
  in >> h;
  detail::skip_pnm_space(in);
  in >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw Error(ErrorCode::kParse, path + ": bad image header");
  in.get();
  const int channels = magic == "P6" ? 3 : 1;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw Error(ErrorCode::kMalformedLength, path + ": truncated pixel data");
  if (maxval != 255)
    for (auto& b : buf) b = static_cast<std::uint8_t>(
        std::min(255, static_cast<int>(std::lround(b * 255.0 / maxval))));
  if (channels == 3) return to_gray(buf, w, h);
  GrayImage img(w, h);
  for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0f;
  return img;
}

inline void write_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write image " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> buf(img.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write " + path);
}

/// Level 0 is full resolution; level k+1 is a 2x2 box-filtered half of k.
struct Pyramid {
  std::vector<GrayImage> levels;
};

inline constexpr int kMinPyramidSide = 16;

[[nodiscard]] inline Pyramid build_pyramid(const GrayImage& img,
                                           int max_levels) {
  if (max_levels < 1)
    throw Error(ErrorCode::kInvalidArgument, "max_levels must be >= 1");
  Pyramid pyr;
  pyr.levels.push_back(img);
  while (static_cast<int>(pyr.levels.size()) < max_levels) {
    const GrayImage& src = pyr.levels.back();
    const int w = src.width / 2, h = src.height / 2;
    if (w < kMinPyramidSide || h < kMinPyramidSide) break;
    GrayImage dst(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        dst.at(x, y) = 0.25f * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) +
                                src.at(2 * x, 2 * y + 1) +
                                src.at(2 * x + 1, 2 * y + 1));
    pyr.levels.push_back(std::move(dst));
  }
  return pyr;
}

enum class TrackStatus { kConverged, kLost, kOutOfBounds };

struct TrackedPoint {
  Pixel source;
  Pixel target;
  TrackStatus status = TrackStatus::kLost;
  double residual = 0.0;  // mean absolute intensity difference over the window
};

struct KltParams {
  int window = 21;
  int levels = 3;
  int max_iters = 30;
  double eps = 0.01;          // px, per-iteration update norm to stop
  double min_eigen = 1e-4;    // smaller eigenvalue of G / window area
  double max_residual = 0.1;  // above this a converged track is demoted to lost
  // Final affine pass on the finest level. Removes the bias the translation
  // model picks up when the window also scales or shears between frames.
  bool affine_refine = true;
};

namespace detail {

// Bilinear sampling weights shared by every pixel of an integer-offset window.
struct Bilinear {
  int x0 = 0, y0 = 0;
  float w00 = 0, w10 = 0, w01 = 0, w11 = 0;

  Bilinear(double x, double y) {
    x0 = static_cast<int>(std::floor(x));
    y0 = static_cast<int>(std::floor(y));
    const float ax = static_cast<float>(x - x0), ay = static_cast<float>(y - y0);
    w00 = (1 - ax) * (1 - ay);
    w10 = ax * (1 - ay);
    w01 = (1 - ax) * ay;
    w11 = ax * ay;
  }

  [[nodiscard]] float sample(const GrayImage& img, int dx, int dy) const {
    const float* row = img.data.data() +
                       static_cast<std::size_t>(y0 + dy) * img.width + (x0 + dx);
    return w00 * row[0] + w10 * row[1] + w01 * row[img.width] +
           w11 * row[img.width + 1];
  }
};

// Window of radius r (plus `margin` extra pixels) fits for bilinear sampling.
inline bool window_inside(const GrayImage& img, double x, double y, int r,
                          int margin) {
  const int reach = r + margin;
  return x - reach >= 0.0 && y - reach >= 0.0 && x + reach < img.width - 1 &&
         y + reach < img.height - 1;
}

inline float sample_at(const GrayImage& img, double x, double y) {
  return Bilinear(x, y).sample(img, 0, 0);
}

// Forward-additive affine alignment of the template window `ival` (centre
// x, y in i0, gradients gx, gy) onto i1, starting from translation (tx, ty).
// The Hessian uses the template gradients, so it is built once. Returns the
// new centre, or nothing when the warp leaves the image or grows implausible.
inline std::optional<Pixel> affine_refine(const GrayImage& i1,
                                          const std::vector<float>& ival,
                                          const std::vector<float>& gx,
                                          const std::vector<float>& gy, int r,
                                          double tx, double ty, int max_iters,
                                          double eps) {
  Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
  std::size_t k = 0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx, ++k) {
      Eigen::Matrix<double, 6, 1> j;
      j << gx[k], gy[k], gx[k] * dx, gx[k] * dy, gy[k] * dx, gy[k] * dy;
      h += j * j.transpose();
    }
  const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> solver(h);
  if (solver.info() != Eigen::Success) return std::nullopt;

  double a11 = 1, a12 = 0, a21 = 0, a22 = 1;
  for (int it = 0; it < max_iters; ++it) {
    const double reach = r * (std::abs(a11) + std::abs(a12) + std::abs(a21) + std::abs(a22));
    if (tx - reach < 0 || ty - reach < 0 || tx + reach >= i1.width - 1 ||
        ty + reach >= i1.height - 1)
      return std::nullopt;
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
    k = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx, ++k) {
        const double e = ival[k] - sample_at(i1, tx + a11 * dx + a12 * dy,
                                             ty + a21 * dx + a22 * dy);
        b(0) += gx[k] * e;
        b(1) += gy[k] * e;
        b(2) += gx[k] * dx * e;
        b(3) += gx[k] * dy * e;
        b(4) += gy[k] * dx * e;
        b(5) += gy[k] * dy * e;
      }
    const Eigen::Matrix<double, 6, 1> d = solver.solve(b);
    if (!d.allFinite()) return std::nullopt;
    tx += d(0);
    ty += d(1);
    a11 += d(2);
    a12 += d(3);
    a21 += d(4);
    a22 += d(5);
    if (std::abs(a11 - 1) + std::abs(a12) + std::abs(a21) + std::abs(a22 - 1) > 0.5)
      return std::nullopt;
    if (std::hypot(d(0), d(1)) < eps && d.tail<4>().cwiseAbs().maxCoeff() * r < eps)
      return Pixel{tx, ty};
  }
  return std::nullopt;
}

// Pixel-centre convention: level-(k+1) pixel x covers level-k pixels 2x, 2x+1.
inline double to_level(double v0, int level) {
  return (v0 + 0.5) / static_cast<double>(1 << level) - 0.5;
}

inline TrackedPoint track_one(const Pyramid& prev, const Pyramid& next,
                              const Pixel& src, const KltParams& p) {
  TrackedPoint out{src, src, TrackStatus::kLost, 0.0};
  const int r = p.window / 2;
  const int side = 2 * r + 1;
  const std::size_t n = static_cast<std::size_t>(side) * side;
  std::vector<float> ival(n), gx(n), gy(n);
  const int top = static_cast<int>(prev.levels.size()) - 1;

  double gux = 0.0, guy = 0.0;  // displacement guess at the current level
  for (int level = top; level >= 0; --level) {
    const GrayImage& i0 = prev.levels[level];
    const GrayImage& i1 = next.levels[level];
    const double x = to_level(src.u, level), y = to_level(src.v, level);
    const bool finest = level == 0;

    if (!window_inside(i0, x, y, r, 1)) {
      if (finest) {
        out.status = TrackStatus::kOutOfBounds;
        return out;
      }
      gux *= 2.0;
      guy *= 2.0;
      continue;
    }

    const Bilinear b0(x, y);
    double gxx = 0, gxy = 0, gyy = 0;
    std::size_t k = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx, ++k) {
        ival[k] = b0.sample(i0, dx, dy);
        gx[k] = 0.5f * (b0.sample(i0, dx + 1, dy) - b0.sample(i0, dx - 1, dy));
        gy[k] = 0.5f * (b0.sample(i0, dx, dy + 1) - b0.sample(i0, dx, dy - 1));
        gxx += gx[k] * gx[k];
        gxy += gx[k] * gy[k];
        gyy += gy[k] * gy[k];
      }
    const double det = gxx * gyy - gxy * gxy;
    const double min_eig =
        0.5 * (gxx + gyy - std::sqrt((gxx - gyy) * (gxx - gyy) + 4 * gxy * gxy));
    if (min_eig / static_cast<double>(n) < p.min_eigen || det <= 0.0) {
      if (finest) return out;  // lost: not enough texture
      gux *= 2.0;
      guy *= 2.0;
      continue;
    }

    double nux = 0.0, nuy = 0.0, last_step = 0.0;
    bool converged = false;
    for (int it = 0; it < p.max_iters; ++it) {
      const double qx = x + gux + nux, qy = y + guy + nuy;
      if (!window_inside(i1, qx, qy, r, 0)) {
        if (finest) {
          out.status = TrackStatus::kOutOfBounds;
          out.target = {src.u + gux + nux, src.v + guy + nuy};
          return out;
        }
        break;
      }
      const Bilinear b1(qx, qy);
      double bx = 0, by = 0;
      k = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx, ++k) {
          const double diff = ival[k] - b1.sample(i1, dx, dy);
          bx += diff * gx[k];
          by += diff * gy[k];
        }
      const double ex = (gyy * bx - gxy * by) / det;
      const double ey = (gxx * by - gxy * bx) / det;
      nux += ex;
      nuy += ey;
      last_step = std::hypot(ex, ey);
      if (last_step < p.eps) {
        converged = true;
        break;
      }
    }
    if (std::hypot(nux, nuy) > 2.0 * side) {  // runaway iteration
      if (finest) return out;
      nux = nuy = 0.0;
    }

    if (!finest) {
      gux = 2.0 * (gux + nux);
      guy = 2.0 * (guy + nuy);
      continue;
    }

    out.target = {src.u + gux + nux, src.v + guy + nuy};
    if (!converged && last_step > 0.5) return out;
    double qx = x + gux + nux, qy = y + guy + nuy;
    if (p.affine_refine)
      if (const auto a = affine_refine(i1, ival, gx, gy, r, qx, qy, p.max_iters,
                                       0.1 * p.eps)) {
        if (std::hypot(a->u - qx, a->v - qy) < 1.0) {
          qx = a->u;
          qy = a->v;
          out.target = {qx, qy};
        }
      }
    if (!window_inside(i1, qx, qy, r, 0)) {
      out.status = TrackStatus::kOutOfBounds;
      return out;
    }
    const Bilinear b1(qx, qy);
    double resid = 0.0;
    k = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx, ++k)
        resid += std::abs(ival[k] - b1.sample(i1, dx, dy));
    out.residual = resid / static_cast<double>(n);
    out.status = out.residual < p.max_residual ? TrackStatus::kConverged
                                               : TrackStatus::kLost;
  }
  return out;
}

}  // namespace detail

/// Pyramidal Lucas-Kanade: per point, solves G d = b coarse to fine, where
/// G is the windowed gradient structure tensor of `prev` and b the
/// gradient-weighted temporal difference. Points are independent.
[[nodiscard]] inline std::vector<TrackedPoint> klt_track(
    const Pyramid& prev, const Pyramid& next, std::span<const Pixel> points,
    const KltParams& params = {}) {
  if (prev.levels.empty() || prev.levels.size() != next.levels.size())
    throw Error(ErrorCode::kDimensionMismatch, "pyramid level counts differ");
  for (std::size_t l = 0; l < prev.levels.size(); ++l)
    if (prev.levels[l].width != next.levels[l].width ||
        prev.levels[l].height != next.levels[l].height)
      throw Error(ErrorCode::kDimensionMismatch, "pyramid level sizes differ");
  if (params.window < 5 || params.window % 2 == 0)
    throw Error(ErrorCode::kInvalidArgument, "window must be odd and >= 5");

  std::vector<TrackedPoint> out;
  out.reserve(points.size());
  for (const auto& px : points)
    out.push_back(detail::track_one(prev, next, px, params));
  return out;
}

}  // namespace lidarup

#endif  // LIDARUP_IMAGING_HPP
