#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dynfl/error.hpp"
#include "dynfl/metric.hpp"

namespace dynfl {

enum class ReassignOrder { Fifo, Lifo, Random };

struct Event {
  enum class Kind { Insert, Delete };
  Kind kind = Kind::Insert;
  int client = -1;
  int location = -1;  // inserts only
};

// Fully dynamic request stream. A client id is inserted at most once over the
// whole stream and deleted at most once, after its insertion.
struct EventStream {
  std::vector<Event> events;

  int length() const { return static_cast<int>(events.size()); }

  void validate(int n_points) const {
    std::unordered_map<int, int> state;  // 0 = inserted, 1 = deleted
    for (std::size_t i = 0; i < events.size(); ++i) {
      const Event& e = events[i];
      if (e.client < 0)
        throw Error(ErrorCode::InvalidStream,
                    "negative client id at event " + std::to_string(i));
      if (e.kind == Event::Kind::Insert) {
        if (e.location < 0 || e.location >= n_points)
          throw Error(ErrorCode::InvalidStream,
                      "insert location out of range at event " + std::to_string(i));
        if (!state.emplace(e.client, 0).second)
          throw Error(ErrorCode::InvalidStream,
                      "client " + std::to_string(e.client) + " inserted twice");
      } else {
        auto it = state.find(e.client);
        if (it == state.end())
          throw Error(ErrorCode::InvalidStream,
                      "delete of never-inserted client " + std::to_string(e.client));
        if (it->second == 1)
          throw Error(ErrorCode::InvalidStream,
                      "client " + std::to_string(e.client) + " deleted twice");
        it->second = 1;
      }
    }
  }

  // Clients still active after the last event, sorted by id.
  std::vector<std::pair<int, int>> final_active() const {
    std::unordered_map<int, int> loc;
    for (const Event& e : events) {
      if (e.kind == Event::Kind::Insert)
        loc.emplace(e.client, e.location);
      else
        loc.erase(e.client);
    }
    std::vector<std::pair<int, int>> out(loc.begin(), loc.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  int final_count() const { return static_cast<int>(final_active().size()); }
};

struct Instance {
  MetricSpace metric;
  EventStream stream;
  std::optional<ReassignOrder> reassign_hint;
};

}  // namespace dynfl
