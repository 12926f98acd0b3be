#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dynfl/error.hpp"
#include "dynfl/events.hpp"
#include "dynfl/hst.hpp"
#include "dynfl/metric.hpp"
#include "dynfl/rng.hpp"
#include "dynfl/state.hpp"
#include "dynfl/trace.hpp"

namespace dynfl {

enum class Algorithm { M, MStar, Alg1, CapMeyerson, NaiveCap, Alg2 };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::M: return "m";
    case Algorithm::MStar: return "mstar";
    case Algorithm::Alg1: return "alg1";
    case Algorithm::CapMeyerson: return "capmey";
    case Algorithm::NaiveCap: return "naive";
    case Algorithm::Alg2: return "alg2";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::M, Algorithm::MStar, Algorithm::Alg1,
                      Algorithm::CapMeyerson, Algorithm::NaiveCap, Algorithm::Alg2})
    if (s == algorithm_name(a)) return a;
  return std::nullopt;
}

struct PolicyConfig {
  Algorithm algorithm = Algorithm::MStar;
  int upsilon = 0;           // capacity per facility; capacitated policies only
  long long declared_q = 0;  // alg2 probability formula; 0 = filled from stream
  ReassignOrder reassign = ReassignOrder::Fifo;
};

inline bool is_capacitated(Algorithm a) {
  return a == Algorithm::CapMeyerson || a == Algorithm::NaiveCap ||
         a == Algorithm::Alg2;
}

// Per-bucket slot count of the tree policy.
inline int bucket_capacity(int upsilon, int depth) { return upsilon / depth; }

// Additive slack in the tree policy's connection probability.
inline double alg2_additive(int depth, long long q, int upsilon) {
  return 12.0 * depth * std::log(static_cast<double>(q)) / upsilon;
}

inline double alg2_probability(double tree_dist, int depth, long long q, int upsilon) {
  return std::min(1.0, tree_dist + alg2_additive(depth, q, upsilon));
}

// Randomness feed. p <= 0 and p >= 1 are answered without consuming draws, so
// forced flips never perturb the stream.
class CoinSource {
 public:
  virtual ~CoinSource() = default;
  virtual bool flip(double p) = 0;
};

class RngCoin final : public CoinSource {
 public:
  explicit RngCoin(Rng& rng) : rng_(&rng) {}
  bool flip(double p) override { return rng_->bernoulli(p); }

 private:
  Rng* rng_;
};

class ScriptedCoin final : public CoinSource {
 public:
  explicit ScriptedCoin(std::vector<bool> outcomes)
      : outcomes_(std::move(outcomes)) {}
  bool flip(double p) override {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    if (next_ >= outcomes_.size())
      throw Error(ErrorCode::Internal, "scripted coin exhausted");
    return outcomes_[next_++];
  }

 private:
  std::vector<bool> outcomes_;
  std::size_t next_ = 0;
};

// Decides the order orphaned clients are reprocessed in after their facility
// closes. Live runs apply the configured order; replay forces recorded orders.
class CascadePlanner {
 public:
  virtual ~CascadePlanner() = default;
  virtual void order(std::vector<int>& orphans) = 0;
};

class ConfiguredPlanner final : public CascadePlanner {
 public:
  ConfiguredPlanner(ReassignOrder order, Rng& rng) : order_(order), rng_(&rng) {}
  void order(std::vector<int>& orphans) override {
    switch (order_) {
      case ReassignOrder::Fifo:
        break;
      case ReassignOrder::Lifo:
        std::reverse(orphans.begin(), orphans.end());
        break;
      case ReassignOrder::Random:
        rng_->shuffle(orphans);
        break;
    }
  }

 private:
  ReassignOrder order_;
  Rng* rng_;
};

struct PolicyContext {
  const MetricSpace* metric = nullptr;  // original metric, used for all costs
  Trace* trace = nullptr;
  CoinSource* coin = nullptr;
  CascadePlanner* planner = nullptr;
  const Hst* hst = nullptr;  // tree policy only
};

class Policy {
 public:
  static std::unique_ptr<Policy> make(const PolicyConfig& cfg,
                                      const PolicyContext& ctx);

  virtual ~Policy() = default;

  void process(const Event& e, int event_index) {
    event_ = event_index;
    if (e.kind == Event::Kind::Insert) {
      if (state_.has_client(e.client))
        throw Error(ErrorCode::InvalidStream,
                    "client " + std::to_string(e.client) + " already active");
      state_.clients.emplace(e.client, ClientRecord{e.location});
      on_insert(e.client);
    } else {
      if (!state_.has_client(e.client))
        throw Error(ErrorCode::InvalidStream,
                    "delete of inactive client " + std::to_string(e.client));
      on_delete(e.client);
    }
  }

  const SolutionState& state() const { return state_; }
  virtual bool supports_deletion() const { return true; }

  CostReport cost_report() const {
    CostReport r;
    r.opening_cost = static_cast<double>(state_.open_facilities());
    r.connection_cost = state_.connection_cost();
    r.total = r.opening_cost + r.connection_cost;
    r.facilities = state_.open_facilities();
    r.active_clients = state_.active_clients();
    r.counters = ctx_.trace->counters();
    return r;
  }

 protected:
  Policy(const PolicyConfig& cfg, const PolicyContext& ctx) : cfg_(cfg), ctx_(ctx) {
    if (!ctx.metric || !ctx.trace || !ctx.coin || !ctx.planner)
      throw Error(ErrorCode::InvalidConfig, "policy context is incomplete");
    if (is_capacitated(cfg.algorithm) && cfg.upsilon < 1)
      throw Error(ErrorCode::InvalidConfig,
                  "capacitated policy needs upsilon >= 1");
  }

  virtual void on_insert(int client) = 0;
  virtual void on_delete(int client) = 0;

  double dist(int a_loc, int b_loc) const { return ctx_.metric->dist(a_loc, b_loc); }

  bool flip(int client, double p) {
    const bool heads = ctx_.coin->flip(p);
    TraceRecord rec;
    rec.kind = TraceRecord::Kind::Flip;
    rec.event_index = event_;
    rec.client = client;
    rec.p = p;
    rec.heads = heads;
    ctx_.trace->emit(std::move(rec));
    return heads;
  }

  FacilityRecord& open_facility(int client, FacilityRecord rec) {
    rec.client = client;
    rec.location = state_.client(client).location;
    ClientRecord& c = state_.client(client);
    c.facility = client;
    c.assigned_dist = 0.0;
    c.assigned_bucket = -1;
    TraceRecord tr;
    tr.kind = TraceRecord::Kind::Open;
    tr.event_index = event_;
    tr.client = client;
    ctx_.trace->emit(std::move(tr));
    return state_.add_facility(std::move(rec));
  }

  void connect(int client, int facility, int bucket, double tree_dist) {
    ClientRecord& c = state_.client(client);
    const int fidx = state_.facility_index(facility);
    FacilityRecord& f = state_.facilities[fidx];
    c.facility = facility;
    c.assigned_dist = dist(c.location, f.location);
    c.assigned_bucket = bucket;
    f.served.push_back(client);
    TraceRecord tr;
    tr.kind = TraceRecord::Kind::Connect;
    tr.event_index = event_;
    tr.client = client;
    tr.facility = facility;
    tr.bucket = bucket;
    tr.dist = c.assigned_dist;
    tr.tree_dist = tree_dist;
    ctx_.trace->emit(std::move(tr));
  }

  void emit_remove(int client) {
    TraceRecord tr;
    tr.kind = TraceRecord::Kind::Remove;
    tr.event_index = event_;
    tr.client = client;
    ctx_.trace->emit(std::move(tr));
  }

  void emit_restore(int facility, int bucket) {
    TraceRecord tr;
    tr.kind = TraceRecord::Kind::Restore;
    tr.event_index = event_;
    tr.facility = facility;
    tr.bucket = bucket;
    ctx_.trace->emit(std::move(tr));
  }

  // Deletes the facility opened by `client` and reprocesses every client it
  // served through reassign(). Orphans are collected in the order they were
  // first assigned to this facility, then reordered by the planner.
  void close_and_cascade(int client) {
    const int fidx = state_.facility_index(client);
    std::vector<int> orphans;
    std::unordered_set<int> seen;
    for (int cand : state_.facilities[fidx].served) {
      if (cand == client || !state_.has_client(cand)) continue;
      if (state_.client(cand).facility != client) continue;
      if (seen.insert(cand).second) orphans.push_back(cand);
    }
    ctx_.planner->order(orphans);

    TraceRecord closed;
    closed.kind = TraceRecord::Kind::Close;
    closed.event_index = event_;
    closed.facility = client;
    ctx_.trace->emit(std::move(closed));

    state_.remove_facility(client);
    state_.clients.erase(client);

    if (orphans.empty()) return;
    TraceRecord casc;
    casc.kind = TraceRecord::Kind::Cascade;
    casc.event_index = event_;
    casc.facility = client;
    casc.cascade_order = orphans;
    ctx_.trace->emit(std::move(casc));

    for (int orphan : orphans) {
      ClientRecord& c = state_.client(orphan);
      const int old_bucket = c.assigned_bucket;
      c.facility = -1;
      c.assigned_dist = 0.0;
      c.assigned_bucket = -1;
      on_unassign(orphan, client, old_bucket);
      reassign(orphan);
    }
  }

  // Reprocess one orphan after its facility closed.
  virtual void reassign(int client) {
    throw Error(ErrorCode::Internal, "policy cannot reassign clients");
  }

  // Called when a cascade detaches an orphan from its closed facility.
  virtual void on_unassign(int client, int facility, int bucket) {}

  // Nearest open facility by original-metric distance, smallest id on ties.
  std::pair<int, double> nearest_facility(int location) const {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const FacilityRecord& f : state_.facilities) {
      const double d = dist(location, f.location);
      if (d < best_d) {
        best_d = d;
        best = f.client;
      }
    }
    return {best, best_d};
  }

  std::pair<int, double> nearest_unsaturated(int location) const {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const FacilityRecord& f : state_.facilities) {
      if (f.residual <= 0) continue;
      const double d = dist(location, f.location);
      if (d < best_d) {
        best_d = d;
        best = f.client;
      }
    }
    return {best, best_d};
  }

  PolicyConfig cfg_;
  PolicyContext ctx_;
  SolutionState state_;
  int event_ = -1;
};

// Insertion-only uniform facility location: a fresh client opens with
// probability min(dist to nearest facility, 1), otherwise connects there.
class MeyersonPolicy : public Policy {
 public:
  MeyersonPolicy(const PolicyConfig& cfg, const PolicyContext& ctx)
      : Policy(cfg, ctx) {}

  bool supports_deletion() const override { return false; }

 protected:
  void on_insert(int client) override { meyerson_step(client); }

  void on_delete(int client) override {
    throw Error(ErrorCode::InvalidConfig,
                "policy m does not support deletions");
  }

  // Shared by the insertion paths of every uncapacitated policy so that
  // deletion-free streams produce identical traces across them.
  void meyerson_step(int client) {
    const int loc = state_.client(client).location;
    auto [fac, d] = nearest_facility(loc);
    const double p = fac < 0 ? 1.0 : std::min(d, 1.0);
    state_.client(client).memory = p;
    state_.client(client).has_memory = true;
    if (flip(client, p))
      open_facility(client, FacilityRecord{});
    else
      connect(client, fac, -1, -1.0);
  }
};

// Meyerson plus deletion handling: deleting a facility reprocesses its
// clients as fresh arrivals.
class MeyersonReassignPolicy : public MeyersonPolicy {
 public:
  using MeyersonPolicy::MeyersonPolicy;
  bool supports_deletion() const override { return true; }

 protected:
  void on_delete(int client) override {
    if (state_.is_facility(client)) {
      close_and_cascade(client);
    } else {
      state_.clients.erase(client);
      emit_remove(client);
    }
  }

  void reassign(int client) override { meyerson_step(client); }
};

// Meyerson with remembered flip probability: a reassigned client whose fresh
// probability is within twice its remembered one connects deterministically,
// otherwise it flips again and lowers its memory on tails.
class MemoryPolicy : public MeyersonReassignPolicy {
 public:
  using MeyersonReassignPolicy::MeyersonReassignPolicy;

 protected:
  void reassign(int client) override {
    const int loc = state_.client(client).location;
    auto [fac, d] = nearest_facility(loc);
    const double p = fac < 0 ? 1.0 : std::min(d, 1.0);
    ClientRecord& c = state_.client(client);
    if (fac >= 0 && c.has_memory && p <= 2.0 * c.memory) {
      connect(client, fac, -1, -1.0);
      return;
    }
    if (flip(client, p)) {
      open_facility(client, FacilityRecord{});
    } else {
      c.memory = p;
      connect(client, fac, -1, -1.0);
    }
  }
};

// Insertion-only Meyerson against capacity upsilon: the nearest facility with
// a free slot plays the role of the nearest facility. A facility serves its
// opener plus upsilon - 1 externals.
class CapMeyersonPolicy : public Policy {
 public:
  CapMeyersonPolicy(const PolicyConfig& cfg, const PolicyContext& ctx)
      : Policy(cfg, ctx) {}

  bool supports_deletion() const override { return false; }

 protected:
  void on_insert(int client) override {
    const int loc = state_.client(client).location;
    auto [fac, d] = nearest_unsaturated(loc);
    const double p = fac < 0 ? 1.0 : std::min(d, 1.0);
    if (flip(client, p)) {
      FacilityRecord rec;
      rec.residual = cfg_.upsilon - 1;
      open_facility(client, std::move(rec));
    } else {
      const int fidx = state_.facility_index(fac);
      --state_.facilities[fidx].residual;
      connect(client, fac, -1, -1.0);
    }
  }

  void on_delete(int client) override {
    throw Error(ErrorCode::InvalidConfig,
                "policy capmey does not support deletions");
  }
};

// Fully dynamic capacitated baseline: flip probability
// min(max(dist to nearest free facility, 10/upsilon), 1), remembered-
// probability reassignment, slot restored when a client leaves.
class NaiveCapPolicy : public Policy {
 public:
  NaiveCapPolicy(const PolicyConfig& cfg, const PolicyContext& ctx)
      : Policy(cfg, ctx) {}

 protected:
  void on_insert(int client) override { step(client, false); }

  void on_delete(int client) override {
    if (state_.is_facility(client)) {
      close_and_cascade(client);
      return;
    }
    ClientRecord& c = state_.client(client);
    const int fac = c.facility;
    state_.clients.erase(client);
    emit_remove(client);
    const int fidx = state_.facility_index(fac);
    ++state_.facilities[fidx].residual;
    emit_restore(fac, -1);
  }

  void reassign(int client) override { step(client, true); }

 private:
  double probability(int fac, double d) const {
    if (fac < 0) return 1.0;
    const double floor_p = 10.0 / cfg_.upsilon;
    return std::min(std::max(d, floor_p), 1.0);
  }

  void step(int client, bool reassigning) {
    const int loc = state_.client(client).location;
    auto [fac, d] = nearest_unsaturated(loc);
    const double p = probability(fac, d);
    ClientRecord& c = state_.client(client);
    if (reassigning && fac >= 0 && c.has_memory && p <= 2.0 * c.memory) {
      take_slot(fac);
      connect(client, fac, -1, -1.0);
      return;
    }
    if (!reassigning) {
      c.memory = p;
      c.has_memory = true;
    }
    if (flip(client, p)) {
      FacilityRecord rec;
      rec.residual = cfg_.upsilon - 1;
      open_facility(client, std::move(rec));
    } else {
      if (reassigning) c.memory = p;
      take_slot(fac);
      connect(client, fac, -1, -1.0);
    }
  }

  void take_slot(int fac) {
    const int fidx = state_.facility_index(fac);
    --state_.facilities[fidx].residual;
  }
};

// Fully dynamic capacitated policy on a 2-HST. Capacity upsilon is split into
// floor(upsilon / h) slots per ancestor depth; a client may only take a slot
// at the depth of its lowest common ancestor with the facility. Connection
// probability is min(1, tree_dist + 12 h ln(q) / upsilon) and each client
// remembers the largest probability it ever flipped at: anything at or below
// twice that connects deterministically.
class TreeCapPolicy : public Policy {
 public:
  TreeCapPolicy(const PolicyConfig& cfg, const PolicyContext& ctx)
      : Policy(cfg, ctx) {
    if (!ctx.hst)
      throw Error(ErrorCode::InvalidConfig, "policy alg2 needs a tree embedding");
    if (cfg.declared_q < 1)
      throw Error(ErrorCode::InvalidConfig, "policy alg2 needs q >= 1");
    depth_ = ctx.hst->depth();
    slots_ = bucket_capacity(cfg.upsilon, depth_);
    if (slots_ < 1)
      throw Error(ErrorCode::InvalidConfig,
                  "upsilon too small for tree depth: no slots per bucket");
    additive_ = alg2_additive(depth_, cfg.declared_q, cfg.upsilon);
  }

 protected:
  void on_insert(int client) override { step(client); }

  void on_delete(int client) override {
    if (state_.is_facility(client)) {
      close_and_cascade(client);
      return;
    }
    ClientRecord& c = state_.client(client);
    const int fac = c.facility;
    const int bucket = c.assigned_bucket;
    state_.clients.erase(client);
    emit_remove(client);
    const int fidx = state_.facility_index(fac);
    ++state_.facilities[fidx].caps[bucket];
    --live_connects_;
    emit_restore(fac, bucket);
  }

  void reassign(int client) override { step(client); }

  void on_unassign(int client, int facility, int bucket) override {
    --live_connects_;
  }

 private:
  struct Candidate {
    int id = -1;
    int bucket = -1;
    double tdist = 0.0;
  };

  std::optional<Candidate> nearest_with_slot(int location) const {
    Candidate best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const FacilityRecord& f : state_.facilities) {
      const int b = client_bucket(*ctx_.hst, location, f.location);
      if (f.caps[b] <= 0) continue;
      const double td = client_tree_dist(*ctx_.hst, location, f.location);
      if (td < best_d) {
        best_d = td;
        best = Candidate{f.client, b, td};
      }
    }
    if (best.id < 0) return std::nullopt;
    return best;
  }

  void step(int client) {
    ClientRecord& c = state_.client(client);

    // With additive slack >= 1 every computed probability is exactly 1, so
    // any candidate leads to the same flip record and a forced opening; no
    // connection can ever have happened, so every bucket is still full and
    // any open facility certifies a candidate exists. Skipping the scan is
    // then observationally identical and keeps degenerate configurations
    // (small upsilon, long streams) from costing a full facility sweep per
    // event.
    if (additive_ >= 1.0 && live_connects_ == 0 && !state_.facilities.empty()) {
      c.memory = 1.0;
      c.has_memory = true;
      flip(client, 1.0);
      open_facility(client, tree_facility());
      return;
    }

    auto cand = nearest_with_slot(c.location);
    if (!cand) {
      open_facility(client, tree_facility());
      return;
    }
    const double p = std::min(1.0, cand->tdist + additive_);
    if (p > 2.0 * c.memory) {
      c.memory = p;
      c.has_memory = true;
      if (flip(client, p)) {
        open_facility(client, tree_facility());
        return;
      }
    }
    take_slot(cand->id, cand->bucket);
    connect(client, cand->id, cand->bucket, cand->tdist);
    ++live_connects_;
  }

  FacilityRecord tree_facility() const {
    FacilityRecord rec;
    rec.caps.assign(depth_, slots_);
    return rec;
  }

  void take_slot(int fac, int bucket) {
    const int fidx = state_.facility_index(fac);
    --state_.facilities[fidx].caps[bucket];
  }

  int depth_ = 1;
  int slots_ = 0;
  double additive_ = 0.0;
  long long live_connects_ = 0;
};

inline std::unique_ptr<Policy> Policy::make(const PolicyConfig& cfg,
                                            const PolicyContext& ctx) {
  switch (cfg.algorithm) {
    case Algorithm::M:
      return std::make_unique<MeyersonPolicy>(cfg, ctx);
    case Algorithm::MStar:
      return std::make_unique<MeyersonReassignPolicy>(cfg, ctx);
    case Algorithm::Alg1:
      return std::make_unique<MemoryPolicy>(cfg, ctx);
    case Algorithm::CapMeyerson:
      return std::make_unique<CapMeyersonPolicy>(cfg, ctx);
    case Algorithm::NaiveCap:
      return std::make_unique<NaiveCapPolicy>(cfg, ctx);
    case Algorithm::Alg2:
      return std::make_unique<TreeCapPolicy>(cfg, ctx);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown algorithm");
}

}  // namespace dynfl
