#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dynfl/error.hpp"
#include "dynfl/events.hpp"
#include "dynfl/metric.hpp"

namespace dynfl {

// Exhaustive-search limits. 2^20 subsets with incremental distance
// maintenance stay sub-second; the capacitated search solves a transportation
// problem per subset, hence the lower cap.
inline constexpr int kOracleUncapLimit = 20;
inline constexpr int kOracleCapLimit = 14;

// Final active client set of a stream, the offline side of the ratio.
struct OfflineInstance {
  std::vector<int> clients;    // ids, ascending
  std::vector<int> locations;  // parallel to clients
  const MetricSpace* metric = nullptr;

  static OfflineInstance from(const Instance& inst) {
    OfflineInstance out;
    out.metric = &inst.metric;
    for (const auto& [id, loc] : inst.stream.final_active()) {
      out.clients.push_back(id);
      out.locations.push_back(loc);
    }
    return out;
  }

  int size() const { return static_cast<int>(clients.size()); }
  double dist(int i, int j) const {
    return metric->dist(locations[i], locations[j]);
  }
};

struct OptResult {
  double cost = 0.0;
  std::vector<int> facilities;  // client ids
  std::vector<int> assignment;  // per client index: index into `facilities`
};

namespace detail {

inline void check_oracle_size(const OfflineInstance& inst, int limit,
                              const char* which) {
  if (inst.size() < 1)
    throw Error(ErrorCode::InvalidConfig, "offline instance has no clients");
  if (inst.size() > limit)
    throw Error(ErrorCode::OracleLimit,
                std::string(which) + " handles at most " +
                    std::to_string(limit) +
                    " clients; use opt_bounds for larger instances");
}

// Transportation problem: every client ships one unit to an open facility,
// each facility accepts at most `capacity` units (the facility's own client
// is routed like any other and counts against it). Successive shortest paths
// with Dijkstra over reduced costs; node potentials keep the reduced costs
// non-negative, so the predecessor array is a tree. (Plain Bellman-Ford
// predecessors can form zero-cost cycles through used reverse arcs, which
// turns the path walk into an infinite loop.)
inline double transport(const OfflineInstance& inst,
                        const std::vector<int>& open, int capacity,
                        std::vector<int>* assignment_out) {
  const int n = inst.size();
  const int f = static_cast<int>(open.size());
  const int src = 0, sink = 1 + n + f;
  const int nodes = sink + 1;

  struct Edge {
    int to;
    int cap;
    double cost;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adj(nodes);
  auto add_edge = [&](int a, int b, int cap, double cost) {
    adj[a].push_back(static_cast<int>(edges.size()));
    edges.push_back({b, cap, cost});
    adj[b].push_back(static_cast<int>(edges.size()));
    edges.push_back({a, 0, -cost});
  };

  for (int i = 0; i < n; ++i) add_edge(src, 1 + i, 1, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j)
      add_edge(1 + i, 1 + n + j, 1, inst.dist(i, open[j]));
  for (int j = 0; j < f; ++j) add_edge(1 + n + j, sink, capacity, 0.0);

  std::vector<double> pot(nodes, 0.0);
  double total = 0.0;
  for (int unit = 0; unit < n; ++unit) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(nodes, inf);
    std::vector<int> via(nodes, -1);
    std::vector<char> done(nodes, 0);
    dist[src] = 0.0;
    for (;;) {
      int a = -1;
      for (int v = 0; v < nodes; ++v)
        if (!done[v] && std::isfinite(dist[v]) && (a < 0 || dist[v] < dist[a]))
          a = v;
      if (a < 0) break;
      done[a] = 1;
      for (int idx : adj[a]) {
        const Edge& e = edges[idx];
        if (e.cap <= 0 || done[e.to]) continue;
        // Rounding can push a reduced cost a hair below zero; clamp it.
        const double w = std::max(0.0, e.cost + pot[a] - pot[e.to]);
        if (dist[a] + w < dist[e.to]) {
          dist[e.to] = dist[a] + w;
          via[e.to] = idx;
        }
      }
    }
    if (!std::isfinite(dist[sink]))
      throw Error(ErrorCode::Internal, "transportation instance infeasible");
    for (int v = 0; v < nodes; ++v)
      if (std::isfinite(dist[v])) pot[v] += dist[v];
    for (int node = sink; node != src;) {
      const int idx = via[node];
      --edges[idx].cap;
      ++edges[idx ^ 1].cap;
      total += edges[idx].cost;
      node = edges[idx ^ 1].to;
    }
  }

  if (assignment_out) {
    assignment_out->assign(n, -1);
    for (int i = 0; i < n; ++i)
      for (int idx : adj[1 + i]) {
        const Edge& e = edges[idx];
        // A consumed client->facility edge holds its unit on the reverse arc.
        if ((idx & 1) == 0 && e.to > n && e.to < sink && e.cap == 0 &&
            edges[idx ^ 1].cap == 1)
          (*assignment_out)[i] = e.to - 1 - n;
      }
  }
  return total;
}

}  // namespace detail

// Minimum of |F| + sum of nearest-facility distances over all non-empty
// facility sets F drawn from the client locations. Exhaustive with
// incremental nearest-distance maintenance; smallest subset mask wins ties.
inline OptResult opt_uncap(const OfflineInstance& inst) {
  detail::check_oracle_size(inst, kOracleUncapLimit, "opt_uncap");
  const int n = inst.size();

  std::vector<double> current(n, std::numeric_limits<double>::infinity());
  double best_cost = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  std::uint32_t mask = 0;

  auto leaf = [&](int open_count) {
    if (open_count == 0) return;
    double cost = open_count;
    for (double d : current) cost += d;
    if (cost < best_cost || (cost == best_cost && mask < best_mask)) {
      best_cost = cost;
      best_mask = mask;
    }
  };

  auto rec = [&](auto&& self, int idx, int open_count) -> void {
    if (idx == n) {
      leaf(open_count);
      return;
    }
    self(self, idx + 1, open_count);  // idx closed
    std::vector<double> saved = current;
    for (int i = 0; i < n; ++i)
      current[i] = std::min(current[i], inst.dist(i, idx));
    mask |= 1u << idx;
    self(self, idx + 1, open_count + 1);
    mask &= ~(1u << idx);
    current = std::move(saved);
  };
  rec(rec, 0, 0);

  OptResult out;
  out.cost = best_cost;
  for (int i = 0; i < n; ++i)
    if (best_mask & (1u << i)) out.facilities.push_back(inst.clients[i]);
  out.assignment.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < out.facilities.size(); ++j) {
      const int fi = static_cast<int>(
          std::lower_bound(inst.clients.begin(), inst.clients.end(),
                           out.facilities[j]) -
          inst.clients.begin());
      const double d = inst.dist(i, fi);
      if (d < best) {
        best = d;
        out.assignment[i] = static_cast<int>(j);
      }
    }
  }
  return out;
}

// Capacitated optimum: facility sets of size at least ceil(n / upsilon), each
// evaluated by an exact transportation solve (self-service counts against
// the capacity).
inline OptResult opt_cap(const OfflineInstance& inst, int upsilon) {
  detail::check_oracle_size(inst, kOracleCapLimit, "opt_cap");
  if (upsilon < 1)
    throw Error(ErrorCode::InvalidConfig, "opt_cap needs upsilon >= 1");
  const int n = inst.size();
  const int min_open = (n + upsilon - 1) / upsilon;

  double best_cost = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) < min_open) continue;
    std::vector<int> open;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) open.push_back(i);
    const double cost = static_cast<double>(open.size()) +
                        detail::transport(inst, open, upsilon, nullptr);
    if (cost < best_cost || (cost == best_cost && mask < best_mask)) {
      best_cost = cost;
      best_mask = mask;
    }
  }

  std::vector<int> open;
  for (int i = 0; i < n; ++i)
    if (best_mask & (1u << i)) open.push_back(i);
  OptResult out;
  out.cost = best_cost;
  std::vector<int> assignment;
  detail::transport(inst, open, upsilon, &assignment);
  for (int i : open) out.facilities.push_back(inst.clients[i]);
  out.assignment = std::move(assignment);
  return out;
}

struct OptBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Certified envelope for instances beyond the exhaustive limits.
// upsilon = 0 means uncapacitated.
inline OptBounds opt_bounds(const OfflineInstance& inst, int upsilon = 0) {
  const int n = inst.size();
  if (n < 1)
    throw Error(ErrorCode::InvalidConfig, "offline instance has no clients");
  if (n == 1) return {1.0, 1.0};

  const int cap = upsilon > 0 ? upsilon : n;
  const int min_open = (n + cap - 1) / cap;

  // Lower: any solution opens s >= min_open facilities and the n - s cheapest
  // possible connections are each at least the client's nearest-neighbor
  // distance.
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) nn[i] = std::min(nn[i], inst.dist(i, j));
  std::sort(nn.begin(), nn.end());
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + nn[i];
  double lower = std::numeric_limits<double>::infinity();
  for (int s = min_open; s <= n; ++s)
    lower = std::min(lower, s + prefix[n - s]);
  lower = std::max(lower, static_cast<double>(min_open));
  lower = std::max(lower, 1.0);

  // Upper: cheapest of a few feasible solutions. Chunks of `cap` consecutive
  // clients each served by their first member; everyone open; one facility
  // serving everybody when capacity allows.
  double chunked = 0.0;
  for (int start = 0; start < n; start += cap) {
    chunked += 1.0;
    for (int i = start + 1; i < std::min(n, start + cap); ++i)
      chunked += inst.dist(i, start);
  }
  double upper = std::min(chunked, static_cast<double>(n));
  if (cap >= n) {
    for (int y = 0; y < n; ++y) {
      double cost = 1.0;
      for (int i = 0; i < n; ++i) cost += inst.dist(i, y);
      upper = std::min(upper, cost);
    }
  }
  return {lower, upper};
}

}  // namespace dynfl
