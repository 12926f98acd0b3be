#pragma once

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "dynfl/error.hpp"

namespace dynfl {

struct ClientRecord {
  int location = -1;
  int facility = -1;         // assigned facility's client id; own id for facilities
  double assigned_dist = 0;  // original-metric distance to the assigned facility
  int assigned_bucket = -1;  // tree policies: bucket the connection was charged to
  double memory = 0;         // remembered flip probability (policies with memory)
  bool has_memory = false;
};

struct FacilityRecord {
  int client = -1;
  int location = -1;
  int residual = 0;          // scalar-capacity policies: external slots left
  std::vector<int> caps;     // tree policy: per-bucket slots left
  std::vector<int> served;   // append-only log of clients assigned here
};

// Clients plus open facilities. Facilities are kept sorted by client id so
// scans are deterministic; `served` lists are append-only and filtered lazily
// against the live assignment when a facility closes.
class SolutionState {
 public:
  std::unordered_map<int, ClientRecord> clients;
  std::vector<FacilityRecord> facilities;

  bool has_client(int id) const { return clients.count(id) > 0; }

  ClientRecord& client(int id) {
    auto it = clients.find(id);
    if (it == clients.end())
      throw Error(ErrorCode::Internal, "unknown client " + std::to_string(id));
    return it->second;
  }
  const ClientRecord& client(int id) const {
    return const_cast<SolutionState*>(this)->client(id);
  }

  int facility_index(int id) const {
    auto it = std::lower_bound(
        facilities.begin(), facilities.end(), id,
        [](const FacilityRecord& f, int v) { return f.client < v; });
    if (it == facilities.end() || it->client != id) return -1;
    return static_cast<int>(it - facilities.begin());
  }

  bool is_facility(int id) const { return facility_index(id) >= 0; }

  FacilityRecord& add_facility(FacilityRecord rec) {
    auto it = std::lower_bound(
        facilities.begin(), facilities.end(), rec.client,
        [](const FacilityRecord& f, int v) { return f.client < v; });
    return *facilities.insert(it, std::move(rec));
  }

  void remove_facility(int id) {
    const int idx = facility_index(id);
    if (idx < 0)
      throw Error(ErrorCode::Internal, "unknown facility " + std::to_string(id));
    facilities.erase(facilities.begin() + idx);
  }

  // Summed in id order so the result is bit-identical across runs regardless
  // of hash-map layout.
  double connection_cost() const {
    std::vector<std::pair<int, double>> terms;
    terms.reserve(clients.size());
    for (const auto& [id, c] : clients)
      if (c.facility != id) terms.emplace_back(id, c.assigned_dist);
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (const auto& [id, d] : terms) sum += d;
    return sum;
  }

  int active_clients() const { return static_cast<int>(clients.size()); }
  int open_facilities() const { return static_cast<int>(facilities.size()); }
};

}  // namespace dynfl
