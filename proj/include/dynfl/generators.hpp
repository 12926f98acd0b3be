#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dynfl/error.hpp"
#include "dynfl/events.hpp"
#include "dynfl/metric.hpp"
#include "dynfl/rng.hpp"

namespace dynfl {

// Star with k leaves at arm length 1/k. Clients 0..k^2-1 arrive at the
// center, then one client lands on each leaf, then all center clients but the
// last are deleted. The surviving set is one center client plus the k leaf
// clients, whose offline optimum is a single center facility of total cost 2.
// Facility deletions under FIFO reassignment repeatedly reprocess the center
// crowd, which is what drives reassignment-naive policies to Omega(k) cost.
inline Instance gen_claim3(int k) {
  if (k < 2) throw Error(ErrorCode::InvalidConfig, "claim3 needs k >= 2");
  Instance inst{MetricSpace::star(k, 1.0 / k), {}, ReassignOrder::Fifo};
  const int kk = k * k;
  auto& ev = inst.stream.events;
  ev.reserve(2 * kk + k - 1);
  for (int i = 0; i < kk; ++i)
    ev.push_back({Event::Kind::Insert, i, 0});
  for (int i = 0; i < k; ++i)
    ev.push_back({Event::Kind::Insert, kk + i, 1 + i});
  for (int i = 0; i < kk - 1; ++i)
    ev.push_back({Event::Kind::Delete, i, -1});
  return inst;
}

// Ids of the leaf clients of gen_claim3(k).
inline std::vector<int> claim3_leaf_clients(int k) {
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(k * k + i);
  return out;
}

// Star with 10*upsilon^2 leaves at arm length 1/2. Each round inserts one
// client at the center and 10*upsilon clients on fresh leaves (cycling once
// through all leaves over upsilon rounds); afterwards every leaf client is
// deleted. Only the `rounds` center clients survive; one facility at the
// center covers them all, so the offline optimum is exactly 1 whenever
// rounds <= upsilon.
inline Instance gen_claim2cap(int upsilon, int rounds = 0) {
  if (upsilon < 2)
    throw Error(ErrorCode::InvalidConfig, "claim2cap needs upsilon >= 2");
  if (rounds <= 0) rounds = upsilon;
  const int leaves = 10 * upsilon * upsilon;
  const int per_round = 10 * upsilon;

  Instance inst{MetricSpace::star(leaves, 0.5), {}, std::nullopt};
  auto& ev = inst.stream.events;
  std::vector<int> leaf_clients;
  int next_id = 0;
  for (int r = 0; r < rounds; ++r) {
    ev.push_back({Event::Kind::Insert, next_id++, 0});
    for (int j = 0; j < per_round; ++j) {
      const int leaf = (r * per_round + j) % leaves;
      leaf_clients.push_back(next_id);
      ev.push_back({Event::Kind::Insert, next_id++, 1 + leaf});
    }
  }
  for (int id : leaf_clients) ev.push_back({Event::Kind::Delete, id, -1});
  return inst;
}

enum class MetricKind { UnitSquare, ShortestPath };

// Random fully dynamic stream: each event deletes a uniformly random active
// client with probability p_delete (when any exists), otherwise inserts a new
// client at a uniformly random point.
inline Instance gen_random(int n_points, int n_events, double p_delete,
                           MetricKind kind, std::uint64_t seed) {
  if (n_points < 1)
    throw Error(ErrorCode::InvalidConfig, "random instance needs points");
  if (n_events < 0 || p_delete < 0.0 || p_delete >= 1.0)
    throw Error(ErrorCode::InvalidConfig,
                "random instance needs n_events >= 0 and 0 <= p_delete < 1");

  Rng rng(derive_seed(seed, 0x6e57ULL));
  std::vector<std::vector<double>> d(n_points, std::vector<double>(n_points, 0.0));
  if (kind == MetricKind::UnitSquare) {
    std::vector<std::pair<double, double>> pts(n_points);
    for (auto& [x, y] : pts) {
      x = rng.u01();
      y = rng.u01();
    }
    for (int i = 0; i < n_points; ++i)
      for (int j = i + 1; j < n_points; ++j) {
        const double v = std::hypot(pts[i].first - pts[j].first,
                                    pts[i].second - pts[j].second);
        d[i][j] = d[j][i] = v;
      }
  } else {
    for (int i = 0; i < n_points; ++i)
      for (int j = i + 1; j < n_points; ++j)
        d[i][j] = d[j][i] = 0.1 + 0.9 * rng.u01();
    // Shortest-path closure turns an arbitrary symmetric weighting into a
    // metric.
    for (int k = 0; k < n_points; ++k)
      for (int i = 0; i < n_points; ++i)
        for (int j = 0; j < n_points; ++j)
          d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  }

  Instance inst{MetricSpace::from_matrix(d), {}, std::nullopt};
  std::vector<int> active;
  int next_id = 0;
  for (int e = 0; e < n_events; ++e) {
    if (!active.empty() && rng.u01() < p_delete) {
      const std::size_t idx = static_cast<std::size_t>(rng.below(active.size()));
      inst.stream.events.push_back({Event::Kind::Delete, active[idx], -1});
      active[idx] = active.back();
      active.pop_back();
    } else {
      inst.stream.events.push_back(
          {Event::Kind::Insert, next_id, static_cast<int>(rng.below(n_points))});
      active.push_back(next_id);
      ++next_id;
    }
  }
  return inst;
}

}  // namespace dynfl
