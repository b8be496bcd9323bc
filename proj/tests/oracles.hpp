// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the algorithms it checks.

#ifndef LIDARUP_TESTS_ORACLES_HPP
#define LIDARUP_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "lidarup/geometry.hpp"

namespace oracle {

using lidarup::Vec3;

// O(N^2) symmetric Chamfer on two clouds of any size.
inline double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  auto one_way = [](const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
    double sum = 0.0;
    for (const auto& x : p) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : q) best = std::min(best, (x - y).squaredNorm());
      sum += best;
    }
    return sum / static_cast<double>(p.size());
  };
  return one_way(a, b) + one_way(b, a);
}

// Minimum-cost perfect matching on a square matrix as a min-cost flow:
// successive shortest paths with Dijkstra on reduced costs over an explicit
// residual graph (source -> rows -> cols -> sink).
inline double min_cost_matching(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  const int V = 2 * n + 2, s = 2 * n, t = 2 * n + 1;
  struct Edge {
    int to, rev;
    int cap;
    double cost;
  };
  std::vector<std::vector<Edge>> g(V);
  auto add = [&](int u, int v, double w) {
    g[u].push_back({v, static_cast<int>(g[v].size()), 1, w});
    g[v].push_back({u, static_cast<int>(g[u].size()) - 1, 0, -w});
  };
  for (int i = 0; i < n; ++i) add(s, i, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) add(i, n + j, c(i, j));
  for (int j = 0; j < n; ++j) add(n + j, t, 0.0);

  std::vector<double> pot(V, 0.0), dist(V);
  std::vector<int> pv(V), pe(V);
  // Initial potentials by Bellman-Ford order: all forward costs from rows.
  for (int j = 0; j < n; ++j) pot[n + j] = c.col(j).minCoeff();
  pot[t] = *std::min_element(pot.begin() + n, pot.begin() + 2 * n);
  double total = 0.0;
  for (int flow = 0; flow < n; ++flow) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::vector<char> done(V, 0);
    dist[s] = 0.0;
    for (int it = 0; it < V; ++it) {
      int u = -1;
      for (int v = 0; v < V; ++v)
        if (!done[v] && (u < 0 || dist[v] < dist[u])) u = v;
      if (u < 0 || dist[u] == std::numeric_limits<double>::infinity()) break;
      done[u] = 1;
      for (int k = 0; k < static_cast<int>(g[u].size()); ++k) {
        const Edge& e = g[u][k];
        if (e.cap <= 0) continue;
        const double nd = dist[u] + e.cost + pot[u] - pot[e.to];
        if (nd < dist[e.to] - 1e-15) {
          dist[e.to] = nd;
          pv[e.to] = u;
          pe[e.to] = k;
        }
      }
    }
    for (int v = 0; v < V; ++v)
      if (dist[v] < std::numeric_limits<double>::infinity()) pot[v] += dist[v];
    for (int v = t; v != s; v = pv[v]) {
      Edge& e = g[pv[v]][pe[v]];
      e.cap -= 1;
      g[v][e.rev].cap += 1;
      total += e.cost;
    }
  }
  return total;
}

// Every injective row->column (or column->row) map; returns the minimum cost.
inline double brute_assignment(const Eigen::MatrixXd& c) {
  const bool flip = c.rows() > c.cols();
  const Eigen::MatrixXd m = flip ? Eigen::MatrixXd(c.transpose()) : c;
  const int r = static_cast<int>(m.rows()), k = static_cast<int>(m.cols());
  std::vector<int> cols(k);
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  // Permutations of all columns cover every injection of the first r slots.
  do {
    double sum = 0.0;
    for (int i = 0; i < r; ++i) sum += m(i, cols[i]);
    best = std::min(best, sum);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

// Connected components of the radius graph by O(N^2) union-find; components
// as sorted index sets.
inline std::set<std::vector<std::size_t>> radius_components(
    const std::vector<Vec3>& pts, const std::vector<std::size_t>& sel,
    double tol, std::size_t min_size) {
  std::vector<std::size_t> parent(sel.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < sel.size(); ++i)
    for (std::size_t j = i + 1; j < sel.size(); ++j)
      if ((pts[sel[i]] - pts[sel[j]]).squaredNorm() <= tol * tol)
        parent[find(i)] = find(j);
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < sel.size(); ++i) groups[find(i)].push_back(sel[i]);
  std::set<std::vector<std::size_t>> out;
  for (auto& [root, g] : groups) {
    if (g.size() < min_size) continue;
    std::sort(g.begin(), g.end());
    out.insert(g);
  }
  return out;
}

inline Eigen::Matrix4d homogeneous(const lidarup::RigidTransform& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = t.rotation;
  m.topRightCorner<3, 1>() = t.translation;
  return m;
}

// Uniform random rotation from a unit quaternion (Shoemake).
template <class Gen>
lidarup::Mat3 random_rotation(Gen& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double u1 = u(gen), u2 = u(gen), u3 = u(gen);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const Eigen::Quaterniond q(a * std::sin(2 * M_PI * u2), a * std::cos(2 * M_PI * u2),
                             b * std::sin(2 * M_PI * u3), b * std::cos(2 * M_PI * u3));
  return q.normalized().toRotationMatrix();
}

template <class Gen>
lidarup::RigidTransform random_transform(Gen& gen, double max_translation = 10.0) {
  std::uniform_real_distribution<double> u(-max_translation, max_translation);
  return {random_rotation(gen), Vec3(u(gen), u(gen), u(gen))};
}

// Angle between two rotations, degrees, from the quaternion dot product.
inline double rotation_error_deg(const lidarup::Mat3& a, const lidarup::Mat3& b) {
  const Eigen::Quaterniond qa(a), qb(b);
  const double d = std::min(1.0, std::abs(qa.dot(qb)));
  return 2.0 * std::acos(d) * 180.0 / M_PI;
}

// Smooth band-limited texture in [0, 1], defined everywhere in the plane.
struct Texture {
  std::vector<Eigen::Vector4d> waves;  // kx, ky, phase, amplitude

  template <class Gen>
  explicit Texture(Gen& gen, int count = 14) {
    std::uniform_real_distribution<double> ang(0.0, 2 * M_PI), per(6.0, 28.0);
    double sum = 0.0;
    for (int i = 0; i < count; ++i) {
      const double th = ang(gen), k = 2 * M_PI / per(gen);
      waves.emplace_back(k * std::cos(th), k * std::sin(th), ang(gen), 1.0);
      sum += 1.0;
    }
    for (auto& w : waves) w[3] = 0.45 / sum;
  }

  [[nodiscard]] double operator()(double x, double y) const {
    double v = 0.5;
    for (const auto& w : waves) v += w[3] * std::sin(w[0] * x + w[1] * y + w[2]);
    return v;
  }
};

}  // namespace oracle

#endif  // LIDARUP_TESTS_ORACLES_HPP
