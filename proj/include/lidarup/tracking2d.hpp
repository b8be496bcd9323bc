// lidarup - temporal LIDAR upsampling from a mono camera
//
// 2D object tracking: IoU cost, Hungarian assignment and a gated
// track-management loop over per-frame detections.

#ifndef LIDARUP_TRACKING2D_HPP
#define LIDARUP_TRACKING2D_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lidarup/error.hpp"
#include "lidarup/imaging.hpp"

namespace lidarup {

struct BBox {
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
  int class_id = 0;
  double score = 1.0;

  [[nodiscard]] double area() const {
    return std::max(0.0, x_max - x_min) * std::max(0.0, y_max - y_min);
  }
  [[nodiscard]] bool is_valid() const {
    return x_min < x_max && y_min < y_max && score >= 0.0 && score <= 1.0;
  }
};

[[nodiscard]] inline double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

using CostMatrix = Eigen::MatrixXd;

/// Minimum-cost matching of size min(rows, cols), pairs sorted by row.
///
/// Shortest-augmenting-path Hungarian method with row/column potentials,
/// O(n^2 m). Rows are inserted in index order and columns are scanned in
/// ascending order with strict comparisons, so among equal-cost choices the
/// lower row and then the lower column win; the result is deterministic.
[[nodiscard]] inline std::vector<std::pair<int, int>> hungarian_assign(
    const CostMatrix& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) return {};
  if (!cost.allFinite())
    throw Error(ErrorCode::kInvalidArgument, "cost matrix must be finite");

  const bool transposed = cost.rows() > cost.cols();
  const CostMatrix c = transposed ? CostMatrix(cost.transpose()) : cost;
  const int n = static_cast<int>(c.rows());
  const int m = static_cast<int>(c.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based: p[j] is the row matched to column j, column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<double> minv(m + 1);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::pair<int, int>> out;
  out.reserve(n);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) {
      if (transposed)
        out.emplace_back(j - 1, p[j] - 1);
      else
        out.emplace_back(p[j] - 1, j - 1);
    }
  std::sort(out.begin(), out.end());
  return out;
}

[[nodiscard]] inline double assignment_cost(
    const CostMatrix& cost, const std::vector<std::pair<int, int>>& pairs) {
  double total = 0.0;
  for (const auto& [r, c] : pairs) total += cost(r, c);
  return total;
}

struct ObjectTrack {
  int track_id = 0;
  std::vector<std::pair<int, BBox>> bbox_history;  // (frame index, box)
  std::vector<std::size_t> cluster_indices;       // into the anchor cloud
  std::vector<TrackedPoint> tracked_pixels;
  int age = 1;
  int missed = 0;

  [[nodiscard]] int last_frame() const { return bbox_history.back().first; }
  [[nodiscard]] const BBox& last_box() const { return bbox_history.back().second; }
  /// True when this track was matched (or born) at `frame`.
  [[nodiscard]] bool observed_at(int frame) const {
    return !bbox_history.empty() && last_frame() == frame;
  }
};

struct TrackerParams {
  double iou_gate = 0.3;
  int max_missed = 2;
};

struct TrackUpdateReport {
  std::vector<std::pair<int, int>> matches;  // (track_id, detection index)
  std::vector<int> born;                     // track ids
  std::vector<int> terminated;               // track ids
  std::vector<int> detection_owner;          // detection index -> track_id
};

/// Owns the live track set; ids increase monotonically and are never reused.
class Tracker {
 public:
  explicit Tracker(TrackerParams params = {}) : params_(params) {}

  [[nodiscard]] const std::vector<ObjectTrack>& tracks() const { return tracks_; }
  std::vector<ObjectTrack>& tracks() { return tracks_; }

  [[nodiscard]] ObjectTrack* find(int track_id) {
    for (auto& t : tracks_)
      if (t.track_id == track_id) return &t;
    return nullptr;
  }

  TrackUpdateReport update(const std::vector<BBox>& detections, int frame) {
    return update_tracks(tracks_, next_id_, detections, frame, params_);
  }

  /// Cost 1 - IoU, gated at iou_gate; unmatched detections spawn tracks and
  /// tracks unmatched for more than max_missed frames are dropped.
  static TrackUpdateReport update_tracks(std::vector<ObjectTrack>& tracks,
                                         int& next_id,
                                         const std::vector<BBox>& detections,
                                         int frame, const TrackerParams& p) {
    for (const auto& t : tracks)
      if (!t.bbox_history.empty() && t.last_frame() >= frame)
        throw Error(ErrorCode::kInvalidArgument,
                    "frame must increase past every track's last frame");

    TrackUpdateReport report;
    report.detection_owner.assign(detections.size(), -1);
    std::vector<char> track_matched(tracks.size(), 0);

    if (!tracks.empty() && !detections.empty()) {
      CostMatrix cost(tracks.size(), detections.size());
      for (std::size_t t = 0; t < tracks.size(); ++t)
        for (std::size_t d = 0; d < detections.size(); ++d)
          cost(t, d) = 1.0 - iou(tracks[t].last_box(), detections[d]);
      for (const auto& [t, d] : hungarian_assign(cost)) {
        if (1.0 - cost(t, d) < p.iou_gate) continue;
        auto& track = tracks[t];
        track.bbox_history.emplace_back(frame, detections[d]);
        ++track.age;
        track.missed = 0;
        track_matched[t] = 1;
        report.matches.emplace_back(track.track_id, d);
        report.detection_owner[d] = track.track_id;
      }
    }

    std::vector<ObjectTrack> kept;
    kept.reserve(tracks.size() + detections.size());
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      auto& track = tracks[t];
      if (!track_matched[t]) {
        ++track.missed;
        ++track.age;
        if (track.missed > p.max_missed) {
          report.terminated.push_back(track.track_id);
          continue;
        }
      }
      kept.push_back(std::move(track));
    }
    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (report.detection_owner[d] != -1) continue;
      ObjectTrack track;
      track.track_id = next_id++;
      track.bbox_history.emplace_back(frame, detections[d]);
      report.born.push_back(track.track_id);
      report.detection_owner[d] = track.track_id;
      kept.push_back(std::move(track));
    }
    tracks = std::move(kept);
    return report;
  }

 private:
  TrackerParams params_;
  std::vector<ObjectTrack> tracks_;
  int next_id_ = 0;
};

}  // namespace lidarup

#endif  // LIDARUP_TRACKING2D_HPP
