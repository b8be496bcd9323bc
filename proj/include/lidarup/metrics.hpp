// lidarup - temporal LIDAR upsampling from a mono camera
//
// Point-set evaluation: Chamfer distance, Earth Mover's Distance through an
// epsilon-scaled auction, depth error, evaluation protocols (ground removal,
// crop, seeded downsampling) and a Tukey outlier fence.

#ifndef LIDARUP_METRICS_HPP
#define LIDARUP_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lidarup/association.hpp"
#include "lidarup/error.hpp"
#include "lidarup/geometry.hpp"
#include "lidarup/kdtree.hpp"
#include "lidarup/random.hpp"

namespace lidarup {

/// Seeded uniform sample of `n` points without replacement, source order kept.
[[nodiscard]] inline PointCloud random_downsample(const PointCloud& cloud,
                                                  std::size_t n,
                                                  std::uint64_t seed) {
  if (cloud.size() <= n) return cloud;
  Rng rng(seed);
  auto idx = rng.choose(cloud.size(), n);
  std::sort(idx.begin(), idx.end());
  return cloud.select(idx);
}

/// (1/|a|) sum over a of squared distance to the nearest point of b.
[[nodiscard]] inline double nearest_sq_mean(const PointCloud& a,
                                            const PointCloud& b) {
  const KdTree3 tree(b.points);
  double sum = 0.0;
  for (const auto& p : a.points) sum += tree.nearest(p).sq_distance;
  return sum / static_cast<double>(a.size());
}

/// Symmetric Chamfer distance in m^2. Clouds of unequal size are first
/// brought to N = min(|a|, |b|) by seeded random downsampling of the denser.
[[nodiscard]] inline double chamfer(const PointCloud& a, const PointCloud& b,
                                    std::uint64_t seed = 0) {
  if (a.empty() || b.empty())
    throw Error(ErrorCode::kEmptyCloud, "chamfer needs nonempty clouds");
  const std::size_t n = std::min(a.size(), b.size());
  const PointCloud da = random_downsample(a, n, seed);
  const PointCloud db = random_downsample(b, n, seed);
  return nearest_sq_mean(da, db) + nearest_sq_mean(db, da);
}

struct AuctionResult {
  std::vector<std::size_t> assignment;  // a-index -> b-index
  double total_cost = 0.0;              // sum of squared distances
  int phases = 0;
  std::size_t bids = 0;
};

/// Forward Gauss-Seidel auction on squared-distance costs with epsilon
/// scaling: eps starts at max_cost / 2 and is divided by 4 each phase; a
/// last phase runs at `epsilon` exactly, so the total cost is within
/// N * epsilon of the optimal assignment.
[[nodiscard]] inline AuctionResult auction_assignment(const PointCloud& a,
                                                      const PointCloud& b,
                                                      double epsilon) {
  if (a.empty() || b.empty())
    throw Error(ErrorCode::kEmptyCloud, "EMD needs nonempty clouds");
  if (a.size() != b.size())
    throw Error(ErrorCode::kSizeMismatch, "EMD needs equal-size clouds");
  if (!(epsilon > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");

  const std::size_t n = a.size();
  const auto& pa = a.points;
  const auto& pb = b.points;
  AuctionResult res;
  res.assignment.assign(n, 0);
  if (n == 1) {
    res.total_cost = (pa[0] - pb[0]).squaredNorm();
    return res;
  }

  // Upper bound on every pairwise cost from the bounding boxes.
  Vec3 lo = pa[0], hi = pa[0];
  for (const auto& p : pa) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  for (const auto& p : pb) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  const double max_cost = (hi - lo).squaredNorm();
  if (max_cost == 0.0) {
    for (std::size_t i = 0; i < n; ++i) res.assignment[i] = i;
    return res;
  }

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> owner(n), person_obj(n);
  std::vector<std::size_t> queue;
  queue.reserve(n);

  auto run_phase = [&](double eps) {
    std::fill(owner.begin(), owner.end(), kNone);
    std::fill(person_obj.begin(), person_obj.end(), kNone);
    queue.clear();
    for (std::size_t i = n; i-- > 0;) queue.push_back(i);
    while (!queue.empty()) {
      const std::size_t i = queue.back();
      queue.pop_back();
      double best = std::numeric_limits<double>::infinity(), second = best;
      std::size_t best_j = 0;
      const Vec3& p = pa[i];
      for (std::size_t j = 0; j < n; ++j) {
        const double v = (p - pb[j]).squaredNorm() + price[j];
        if (v < best) {
          second = best;
          best = v;
          best_j = j;
        } else if (v < second) {
          second = v;
        }
      }
      price[best_j] += (second - best) + eps;
      const std::size_t prev = owner[best_j];
      owner[best_j] = i;
      person_obj[i] = best_j;
      if (prev != kNone) {
        person_obj[prev] = kNone;
        queue.push_back(prev);
      }
      ++res.bids;
    }
    ++res.phases;
  };

  for (double eps = max_cost / 2.0; eps > epsilon; eps /= 4.0) run_phase(eps);
  run_phase(epsilon);

  res.assignment = person_obj;
  for (std::size_t i = 0; i < n; ++i)
    res.total_cost += (pa[i] - pb[res.assignment[i]]).squaredNorm();
  return res;
}

/// Mean squared distance under the auction's bijection, m^2.
[[nodiscard]] inline double emd_auction(const PointCloud& a,
                                        const PointCloud& b, double epsilon) {
  const auto res = auction_assignment(a, b, epsilon);
  return res.total_cost / static_cast<double>(a.size());
}

[[nodiscard]] inline double depth_error_percent(double estimated_depth,
                                                double true_depth) {
  if (!(true_depth > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "true depth must be positive");
  return 100.0 * std::abs(estimated_depth - true_depth) / true_depth;
}

/// Axis-aligned box; infinite bounds allowed.
struct CropBox {
  Vec3 min = Vec3::Constant(-std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(std::numeric_limits<double>::infinity());

  [[nodiscard]] bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct EvalProtocol {
  std::optional<CropBox> crop;
  std::optional<std::size_t> target_points;
  bool remove_ground = false;
  double ground_threshold = 0.2;
  std::uint64_t seed = 0;
  bool fov_before_downsample = true;  // used by evaluation drivers

  void validate() const {
    if (target_points && *target_points == 0)
      throw Error(ErrorCode::kInvalidArgument, "target_points must be > 0");
    if (crop)
      for (int k = 0; k < 3; ++k)
        if (!(crop->min[k] < crop->max[k]))
          throw Error(ErrorCode::kInvalidArgument, "crop min must be < max");
  }

  /// Canonical `key=value;...` form, accepted back by parse_protocol.
  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (crop) {
      os << "crop=";
      for (int k = 0; k < 3; ++k)
        os << (k ? "," : "") << crop->min[k] << "," << crop->max[k];
      os << ";";
    }
    if (target_points) os << "points=" << *target_points << ";";
    os << "ground=" << (remove_ground ? 1 : 0) << ";seed=" << seed
       << ";fov=" << (fov_before_downsample ? "first" : "last");
    return os.str();
  }
};

/// Presets: "none", "full" (16384 points), "vehicle" (ground removed,
/// x in [-32,32], y in [-8,8], z <= 2, 2048 points); or `key=value;...` with
/// keys crop (six numbers, inf allowed), points, ground, seed, fov.
[[nodiscard]] inline EvalProtocol parse_protocol(const std::string& text) {
  EvalProtocol p;
  if (text.empty() || text == "none") return p;
  if (text == "full") {
    p.target_points = 16384;
    return p;
  }
  if (text == "vehicle") {
    p.remove_ground = true;
    p.crop = CropBox{Vec3(-32, -8, -std::numeric_limits<double>::infinity()),
                     Vec3(32, 8, 2)};
    p.target_points = 2048;
    return p;
  }
  std::stringstream ss(text);
  std::string item;
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "protocol: bad number '" + s + "'");
    }
  };
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kParse, "protocol: expected key=value in '" + item + "'");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    if (key == "crop") {
      std::vector<double> v;
      std::stringstream vs(val);
      std::string tok;
      while (std::getline(vs, tok, ',')) v.push_back(num(tok));
      if (v.size() != 6)
        throw Error(ErrorCode::kParse, "protocol: crop needs six numbers");
      p.crop = CropBox{Vec3(v[0], v[2], v[4]), Vec3(v[1], v[3], v[5])};
    } else if (key == "points") {
      const double v = num(val);
      if (v < 1 || v != std::floor(v))
        throw Error(ErrorCode::kParse, "protocol: points must be a positive integer");
      p.target_points = static_cast<std::size_t>(v);
    } else if (key == "ground") {
      p.remove_ground = num(val) != 0.0;
    } else if (key == "ground_threshold") {
      p.ground_threshold = num(val);
    } else if (key == "seed") {
      p.seed = static_cast<std::uint64_t>(num(val));
    } else if (key == "fov") {
      if (val != "first" && val != "last")
        throw Error(ErrorCode::kParse, "protocol: fov must be first or last");
      p.fov_before_downsample = val == "first";
    } else {
      throw Error(ErrorCode::kParse, "protocol: unknown key '" + key + "'");
    }
  }
  p.validate();
  return p;
}

/// Ground removal (when requested and a plane is given), then crop, then
/// seeded downsampling to target_points.
[[nodiscard]] inline PointCloud apply_protocol(const PointCloud& cloud,
                                               const EvalProtocol& protocol,
                                               const std::optional<Plane>& ground) {
  protocol.validate();
  std::vector<std::size_t> keep;
  keep.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (protocol.remove_ground && ground &&
        std::abs(ground->signed_distance(p)) <= protocol.ground_threshold)
      continue;
    if (protocol.crop && !protocol.crop->contains(p)) continue;
    keep.push_back(i);
  }
  PointCloud out = cloud.select(keep);
  if (protocol.target_points)
    out = random_downsample(out, *protocol.target_points, protocol.seed);
  return out;
}

/// Tukey fence: entries above Q3 + 1.5 IQR (quartiles by linear
/// interpolation between order statistics).
[[nodiscard]] inline std::vector<bool> outlier_mask(
    const std::vector<double>& errors) {
  if (errors.empty())
    throw Error(ErrorCode::kInvalidArgument, "outlier_mask needs data");
  std::vector<double> s = errors;
  std::sort(s.begin(), s.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  const double q1 = quantile(0.25), q3 = quantile(0.75);
  const double fence = q3 + 1.5 * (q3 - q1);
  std::vector<bool> mask(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) mask[i] = errors[i] > fence;
  return mask;
}

struct MetricReport {
  double cd = 0.0;   // m^2
  double emd = 0.0;  // m^2
  std::size_t n_points_a = 0;
  std::size_t n_points_b = 0;
  std::optional<std::vector<bool>> outlier_mask;
};

}  // namespace lidarup

#endif  // LIDARUP_METRICS_HPP
