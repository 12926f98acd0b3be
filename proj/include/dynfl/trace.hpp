#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dynfl/events.hpp"

namespace dynfl {

// One record per externally observable decision. Full traces are replayable:
// Flip records carry the probability and outcome, Cascade records carry the
// exact order orphans were reprocessed in.
struct TraceRecord {
  enum class Kind {
    Event,    // stream event about to be processed
    Flip,     // coin toss by `client` with probability `p`
    Open,     // `client` becomes a facility
    Connect,  // `client` assigned to facility `facility`
    Remove,   // non-facility `client` leaves
    Close,    // facility `facility` deleted
    Cascade,  // orphans of `facility` queued for reprocessing, in order
    Restore,  // capacity freed at `facility` (bucket >= 0 for tree policies)
  };

  Kind kind = Kind::Event;
  int event_index = -1;
  int client = -1;
  int facility = -1;
  int bucket = -1;
  double p = 0.0;
  bool heads = false;
  double dist = 0.0;       // Connect: distance in the original metric
  double tree_dist = -1.0; // Connect: tree distance (tree policies only)
  Event::Kind event_kind = Event::Kind::Insert;  // Event records
  int location = -1;                             // Event inserts
  std::vector<int> cascade_order;                // Cascade records

  friend bool operator==(const TraceRecord& a, const TraceRecord& b) {
    return a.kind == b.kind && a.event_index == b.event_index &&
           a.client == b.client && a.facility == b.facility &&
           a.bucket == b.bucket && a.p == b.p && a.heads == b.heads &&
           a.dist == b.dist && a.tree_dist == b.tree_dist &&
           a.event_kind == b.event_kind && a.location == b.location &&
           a.cascade_order == b.cascade_order;
  }
};

struct TraceCounters {
  long long flips = 0;
  long long openings = 0;
  long long connects = 0;
  long long cascades = 0;
  long long reassignments = 0;
  long long max_cascade = 0;

  friend bool operator==(const TraceCounters&, const TraceCounters&) = default;
};

class Trace {
 public:
  explicit Trace(bool full = true) : full_(full) {}

  void emit(TraceRecord rec) {
    switch (rec.kind) {
      case TraceRecord::Kind::Flip:
        ++counters_.flips;
        break;
      case TraceRecord::Kind::Open:
        ++counters_.openings;
        break;
      case TraceRecord::Kind::Connect:
        ++counters_.connects;
        break;
      case TraceRecord::Kind::Cascade: {
        ++counters_.cascades;
        const long long len = static_cast<long long>(rec.cascade_order.size());
        counters_.reassignments += len;
        if (len > counters_.max_cascade) counters_.max_cascade = len;
        break;
      }
      default:
        break;
    }
    if (full_) records_.push_back(std::move(rec));
  }

  bool full() const { return full_; }
  const std::vector<TraceRecord>& records() const { return records_; }
  const TraceCounters& counters() const { return counters_; }

 private:
  bool full_;
  std::vector<TraceRecord> records_;
  TraceCounters counters_;
};

struct CostReport {
  double opening_cost = 0.0;
  double connection_cost = 0.0;
  double total = 0.0;
  int facilities = 0;
  int active_clients = 0;
  TraceCounters counters;
};

}  // namespace dynfl
