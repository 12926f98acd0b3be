#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dynfl/error.hpp"

namespace dynfl {

inline constexpr double kTriangleTolerance = 1e-9;

// Finite metric over points 0..n-1. Two representations:
//  - Dense: explicit row-major distance matrix.
//  - Star: center point 0 plus k leaves, dist(center, leaf) = eps,
//    dist(leaf, leaf') = 2*eps. Kept symbolic so large star instances never
//    materialize an O(n^2) matrix.
class MetricSpace {
 public:
  static MetricSpace from_matrix(const std::vector<std::vector<double>>& d) {
    const std::size_t n = d.size();
    if (n == 0) throw Error(ErrorCode::InvalidMetric, "metric has no points");
    Dense rep;
    rep.n = static_cast<int>(n);
    rep.d.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i].size() != n)
        throw Error(ErrorCode::InvalidMetric,
                    "distance matrix is not square at row " + std::to_string(i));
      for (std::size_t j = 0; j < n; ++j) rep.d[i * n + j] = d[i][j];
    }
    MetricSpace m;
    m.rep_ = std::move(rep);
    m.validate();
    return m;
  }

  // Star with k leaves at distance eps from the center; leaf pairs are at
  // distance 2*eps by the shortest path through the center.
  static MetricSpace star(int leaves, double eps) {
    if (leaves < 1)
      throw Error(ErrorCode::InvalidMetric, "star needs at least one leaf");
    if (!(eps > 0.0) || !std::isfinite(eps))
      throw Error(ErrorCode::InvalidMetric, "star arm length must be positive");
    MetricSpace m;
    m.rep_ = Star{leaves, eps};
    return m;
  }

  int size() const {
    if (const Dense* d = std::get_if<Dense>(&rep_)) return d->n;
    return std::get<Star>(rep_).k + 1;
  }

  double dist(int a, int b) const {
    if (const Dense* d = std::get_if<Dense>(&rep_))
      return d->d[static_cast<std::size_t>(a) * d->n + b];
    if (a == b) return 0.0;
    const Star& s = std::get<Star>(rep_);
    return (a == 0 || b == 0) ? s.eps : 2.0 * s.eps;
  }

  double diameter() const {
    if (const Star* s = std::get_if<Star>(&rep_))
      return s->k >= 2 ? 2.0 * s->eps : s->eps;
    const Dense& d = std::get<Dense>(rep_);
    return *std::max_element(d.d.begin(), d.d.end());
  }

  // Smallest nonzero pairwise distance; 0 for a single point.
  double min_positive_distance() const {
    if (const Star* s = std::get_if<Star>(&rep_)) return s->eps;
    const Dense& d = std::get<Dense>(rep_);
    double best = 0.0;
    for (double v : d.d)
      if (v > 0.0 && (best == 0.0 || v < best)) best = v;
    return best;
  }

  bool is_star() const { return std::holds_alternative<Star>(rep_); }
  int star_leaves() const { return std::get<Star>(rep_).k; }
  double star_eps() const { return std::get<Star>(rep_).eps; }

  std::vector<std::vector<double>> to_matrix() const {
    const int n = size();
    std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i][j] = dist(i, j);
    return out;
  }

 private:
  // No member initializers here: the variant below needs Dense to be
  // default constructible while MetricSpace itself is still incomplete.
  struct Dense {
    int n;
    std::vector<double> d;  // row-major n*n
  };
  struct Star {
    int k;
    double eps;
  };

  MetricSpace() = default;

  void validate() const {
    const Dense& m = std::get<Dense>(rep_);
    const int n = m.n;
    auto at = [&](int i, int j) { return m.d[static_cast<std::size_t>(i) * n + j]; };
    for (int i = 0; i < n; ++i) {
      if (at(i, i) != 0.0)
        throw Error(ErrorCode::InvalidMetric,
                    "nonzero self-distance at point " + std::to_string(i));
      for (int j = 0; j < n; ++j) {
        const double v = at(i, j);
        if (!(v >= 0.0) || !std::isfinite(v))
          throw Error(ErrorCode::InvalidMetric,
                      "negative or non-finite distance at (" + std::to_string(i) +
                          "," + std::to_string(j) + ")");
        if (v != at(j, i))
          throw Error(ErrorCode::InvalidMetric,
                      "asymmetric distance at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      }
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double dij = at(i, j);
        for (int k = 0; k < n; ++k)
          if (dij > at(i, k) + at(k, j) + kTriangleTolerance)
            throw Error(ErrorCode::InvalidMetric,
                        "triangle inequality violated for (" + std::to_string(i) +
                            "," + std::to_string(j) + "," + std::to_string(k) + ")");
      }
  }

  std::variant<Dense, Star> rep_;
};

// Metric rescaled to diameter 1 with distinct points pushed apart to at
// least 1/upsilon. The result feeds tree embedding; costs are always reported
// in the original metric.
struct NormalizedMetric {
  MetricSpace base;
  int upsilon = 0;
};

inline NormalizedMetric normalize(const MetricSpace& m, int upsilon) {
  if (upsilon < 1)
    throw Error(ErrorCode::InvalidConfig, "upsilon must be at least 1");
  const int n = m.size();
  if (n == 1) return NormalizedMetric{m, upsilon};

  const double floor_dist = 1.0 / static_cast<double>(upsilon);
  if (m.is_star()) {
    const int k = m.star_leaves();
    // Once scaled to diameter 1 a star is fully determined by its arm length:
    // 1/2 when leaf pairs realize the diameter, 1 for the single-leaf case.
    const double arm = k >= 2 ? 0.5 : 1.0;
    if (arm >= floor_dist)
      return NormalizedMetric{MetricSpace::star(k, arm), upsilon};
    // Tiny upsilon: the clamp bends leaf-leaf distances away from the star
    // shape, so fall through to the dense path.
  }

  auto d = m.to_matrix();
  const double diam = m.diameter();
  for (auto& row : d)
    for (double& v : row) {
      if (diam > 0.0) v /= diam;
      if (v > 0.0 && v < floor_dist) v = floor_dist;
    }
  return NormalizedMetric{MetricSpace::from_matrix(d), upsilon};
}

}  // namespace dynfl
