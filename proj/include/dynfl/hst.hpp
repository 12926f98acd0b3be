#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "dynfl/error.hpp"
#include "dynfl/metric.hpp"
#include "dynfl/rng.hpp"

namespace dynfl {

inline int ceil_log2(int x) {
  int t = 0;
  while ((1LL << t) < x) ++t;
  return t;
}

// 2-HST over a normalized metric (diameter 1, distinct distances >= 1/upsilon).
// Depth h = max(1, ceil(log2 upsilon)); every point gets its own leaf at depth
// h; the edge from depth i to depth i+1 has length 2^-i, so two leaves whose
// lowest common ancestor sits at depth j are at tree distance 2^(2-j) - 2^(2-h).
//
// Randomization follows the classic single-permutation scheme: one permutation
// pi and one beta ~ U[1,2) drive every level. The depth-i partition groups each
// parent cluster by the first point in pi order within beta * 2^-(i+1) of the
// member, which makes the tree distance dominate the metric distance by
// construction. Build still verifies dominance (exhaustively for small inputs,
// sampled for large ones) and retries with a derived seed before giving up.
class Hst {
 public:
  struct Node {
    int parent = -1;
    int depth = 0;
    int point = -1;   // leaf payload, -1 for internal nodes
    int center = -1;  // cluster center that formed this node
    std::vector<int> children;
  };

  static Hst build(const NormalizedMetric& nm, std::uint64_t seed) {
    constexpr int kMaxAttempts = 8;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Hst t = build_once(nm, derive_seed(seed, static_cast<std::uint64_t>(attempt)));
      if (t.verify_dominance(nm.base)) return t;
    }
    throw Error(ErrorCode::Internal, "tree embedding failed dominance check");
  }

  int depth() const { return h_; }
  int size() const { return n_; }
  int root() const { return 0; }
  double beta() const { return beta_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int leaf_of(int point) const { return leaf_of_[point]; }

  int ancestor(int point, int depth) const {
    return anc_[static_cast<std::size_t>(point) * (h_ + 1) + depth];
  }

  // Depth of the lowest common ancestor of two distinct points' leaves.
  // Always in [0, h-1].
  int bucket(int u, int v) const {
    if (u == v)
      throw Error(ErrorCode::InvalidConfig, "bucket needs two distinct points");
    const std::size_t stride = static_cast<std::size_t>(h_) + 1;
    const int* au = anc_.data() + stride * u;
    const int* av = anc_.data() + stride * v;
    int j = 0;
    for (int d = 1; d <= h_; ++d) {
      if (au[d] != av[d]) break;
      j = d;
    }
    return j;
  }

  double tree_dist(int u, int v) const {
    if (u == v) return 0.0;
    const int j = bucket(u, v);
    return std::ldexp(1.0, 2 - j) - std::ldexp(1.0, 2 - h_);
  }

  // floor(-log2(tree_dist)); audit quantity only, bucketing uses LCA depth.
  int distlog(int u, int v) const {
    return static_cast<int>(std::floor(-std::log2(tree_dist(u, v))));
  }

  void dump_text(std::ostream& os) const {
    dump_node(os, 0, 0);
  }

 private:
  Hst() = default;

  static Hst build_once(const NormalizedMetric& nm, std::uint64_t seed) {
    const MetricSpace& m = nm.base;
    const int n = m.size();
    Hst t;
    t.n_ = n;
    t.h_ = std::max(1, ceil_log2(nm.upsilon));

    Rng rng(seed);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    t.beta_ = 1.0 + rng.u01();

    // Staircase per point: prefix minima of dist(x, pi[t]) down to 0 at the
    // point itself. The center for any radius is the first entry at or below
    // that radius, so one O(n) walk answers every level at once.
    struct Step {
      int pos;
      int point;
      double dist;
    };
    std::vector<std::vector<Step>> stairs(n);
    for (int x = 0; x < n; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int pos = 0; pos < n; ++pos) {
        const double d = m.dist(x, perm[pos]);
        if (d < best) {
          best = d;
          stairs[x].push_back({pos, perm[pos], d});
          if (best == 0.0) break;
        }
      }
    }

    auto center_at = [&](int x, double radius) -> const Step& {
      for (const Step& s : stairs[x])
        if (s.dist <= radius) return s;
      return stairs[x].back();  // unreachable: the 0-distance step qualifies
    };

    t.nodes_.push_back(Node{-1, 0, -1, -1, {}});
    std::vector<std::vector<int>> members;  // per current-level node id offset
    std::vector<int> level_nodes{0};
    members.emplace_back(n);
    std::iota(members[0].begin(), members[0].end(), 0);

    for (int depth = 1; depth < t.h_; ++depth) {
      const double radius = t.beta_ * std::ldexp(1.0, -(depth + 1));
      std::vector<int> next_nodes;
      std::vector<std::vector<int>> next_members;
      for (std::size_t c = 0; c < level_nodes.size(); ++c) {
        std::map<int, std::vector<int>> groups;  // center pi-position -> members
        for (int x : members[c]) groups[center_at(x, radius).pos].push_back(x);
        for (auto& [pos, pts] : groups) {
          const int id = static_cast<int>(t.nodes_.size());
          t.nodes_.push_back(Node{level_nodes[c], depth, -1, perm[pos], {}});
          t.nodes_[level_nodes[c]].children.push_back(id);
          next_nodes.push_back(id);
          next_members.push_back(std::move(pts));
        }
      }
      level_nodes = std::move(next_nodes);
      members = std::move(next_members);
    }

    t.leaf_of_.assign(n, -1);
    for (std::size_t c = 0; c < level_nodes.size(); ++c) {
      std::vector<int> pts = members[c];
      std::sort(pts.begin(), pts.end());
      for (int x : pts) {
        const int id = static_cast<int>(t.nodes_.size());
        t.nodes_.push_back(Node{level_nodes[c], t.h_, x, x, {}});
        t.nodes_[level_nodes[c]].children.push_back(id);
        t.leaf_of_[x] = id;
      }
    }

    t.anc_.assign(static_cast<std::size_t>(n) * (t.h_ + 1), -1);
    for (int x = 0; x < n; ++x) {
      int node = t.leaf_of_[x];
      for (int d = t.h_; d >= 0; --d) {
        t.anc_[static_cast<std::size_t>(x) * (t.h_ + 1) + d] = node;
        node = t.nodes_[node].parent;
      }
    }
    return t;
  }

  bool verify_dominance(const MetricSpace& m) const {
    if (n_ <= 512) {
      for (int u = 0; u < n_; ++u)
        for (int v = u + 1; v < n_; ++v)
          if (m.dist(u, v) > tree_dist(u, v)) return false;
      return true;
    }
    Rng rng(derive_seed(0x646f6dULL, static_cast<std::uint64_t>(n_)));
    for (int i = 0; i < 4096; ++i) {
      const int u = static_cast<int>(rng.below(n_));
      const int v = static_cast<int>(rng.below(n_));
      if (u != v && m.dist(u, v) > tree_dist(u, v)) return false;
    }
    return true;
  }

  void dump_node(std::ostream& os, int id, int indent) const {
    const Node& nd = nodes_[id];
    os << std::string(static_cast<std::size_t>(indent) * 2, ' ');
    if (nd.point >= 0)
      os << "leaf point=" << nd.point << "\n";
    else
      os << "node depth=" << nd.depth << " center=" << nd.center
         << " children=" << nd.children.size() << "\n";
    for (int c : nd.children) dump_node(os, c, indent + 1);
  }

  int h_ = 1;
  int n_ = 0;
  double beta_ = 1.0;
  std::vector<Node> nodes_;
  std::vector<int> leaf_of_;
  std::vector<int> anc_;
};

// Distinct clients can share a point and hence a leaf; treat them as meeting
// at the deepest internal level.
inline int client_bucket(const Hst& t, int pu, int pv) {
  return pu == pv ? t.depth() - 1 : t.bucket(pu, pv);
}

inline double client_tree_dist(const Hst& t, int pu, int pv) {
  return pu == pv ? 0.0 : t.tree_dist(pu, pv);
}

}  // namespace dynfl
