// lidarup - temporal LIDAR upsampling from a mono camera
//
// Static 3D k-d tree for exact nearest-neighbour queries.

#ifndef LIDARUP_KDTREE_HPP
#define LIDARUP_KDTREE_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "lidarup/geometry.hpp"

namespace lidarup {

class KdTree3 {
 public:
  struct Hit {
    std::size_t index = 0;
    double sq_distance = std::numeric_limits<double>::infinity();
  };

  explicit KdTree3(const std::vector<Vec3>& points) : pts_(points) {
    order_.resize(pts_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(pts_.size() / kLeafSize * 2 + 2);
    if (!pts_.empty()) build(0, pts_.size());
  }

  [[nodiscard]] Hit nearest(const Vec3& q) const {
    Hit best;
    if (!nodes_.empty()) search(0, q, best);
    return best;
  }

 private:
  static constexpr std::size_t kLeafSize = 12;

  struct Node {
    std::size_t begin = 0, end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = pts_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(pts_[order_[i]]);
      hi = hi.cwiseMax(pts_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return pts_[a][axis] < pts_[b][axis];
                     });
    const double split = pts_[order_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::int32_t id, const Vec3& q, Hit& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const double d = (pts_[idx] - q).squaredNorm();
        if (d < best.sq_distance || (d == best.sq_distance && idx < best.index))
          best = {idx, d};
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const auto near = diff < 0.0 ? node.left : node.right;
    const auto far = diff < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff <= best.sq_distance) search(far, q, best);
  }

  const std::vector<Vec3>& pts_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace lidarup

#endif  // LIDARUP_KDTREE_HPP
