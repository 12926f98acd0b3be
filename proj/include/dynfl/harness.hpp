#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dynfl/error.hpp"
#include "dynfl/events.hpp"
#include "dynfl/hst.hpp"
#include "dynfl/metric.hpp"
#include "dynfl/policies.hpp"
#include "dynfl/rng.hpp"
#include "dynfl/state.hpp"
#include "dynfl/trace.hpp"

namespace dynfl {

struct RunOptions {
  bool full_trace = true;
  bool check_invariants = false;  // validate the full state after every event
};

struct RunResult {
  CostReport report;
  Trace trace{true};
  SolutionState final_state;
  std::optional<Hst> hst;  // tree policy only
  PolicyConfig config;     // declared_q resolved
  std::uint64_t seed = 0;
};

// Validates that the state a policy reached is internally consistent:
// assignment totality, exact stored distances, capacity conservation and
// bucket discipline. Throws on the first violation.
inline void check_state_invariants(const SolutionState& st,
                                   const PolicyConfig& cfg,
                                   const MetricSpace& metric, const Hst* hst) {
  for (const FacilityRecord& f : st.facilities) {
    auto it = st.clients.find(f.client);
    if (it == st.clients.end())
      throw Error(ErrorCode::InvariantViolation,
                  "facility " + std::to_string(f.client) + " is not active");
    if (it->second.facility != f.client)
      throw Error(ErrorCode::InvariantViolation,
                  "facility " + std::to_string(f.client) + " not self-assigned");
    if (it->second.location != f.location)
      throw Error(ErrorCode::InvariantViolation,
                  "facility " + std::to_string(f.client) + " location mismatch");
  }

  const bool tree_cap = cfg.algorithm == Algorithm::Alg2;
  if (tree_cap && !hst)
    throw Error(ErrorCode::InvariantViolation, "tree policy without a tree");
  const int depth = tree_cap ? hst->depth() : 0;
  const std::size_t nfac = st.facilities.size();
  std::vector<int> external_count(nfac, 0);
  std::vector<int> bucket_count(tree_cap ? nfac * depth : 0, 0);
  for (const auto& [id, c] : st.clients) {
    if (c.location < 0 || c.location >= metric.size())
      throw Error(ErrorCode::InvariantViolation,
                  "client " + std::to_string(id) + " has invalid location");
    if (c.facility == id) continue;  // facility client
    const int fidx = st.facility_index(c.facility);
    if (fidx < 0)
      throw Error(ErrorCode::InvariantViolation,
                  "client " + std::to_string(id) + " assigned to closed facility");
    const FacilityRecord& f = st.facilities[fidx];
    const double want = metric.dist(c.location, f.location);
    if (c.assigned_dist != want)
      throw Error(ErrorCode::InvariantViolation,
                  "client " + std::to_string(id) + " stored distance mismatch");
    ++external_count[fidx];
    if (tree_cap) {
      const int want_bucket = client_bucket(*hst, c.location, f.location);
      if (c.assigned_bucket != want_bucket)
        throw Error(ErrorCode::InvariantViolation,
                    "client " + std::to_string(id) + " bucket mismatch");
      ++bucket_count[static_cast<std::size_t>(fidx) * depth + c.assigned_bucket];
    }
  }

  const bool scalar_cap = cfg.algorithm == Algorithm::CapMeyerson ||
                          cfg.algorithm == Algorithm::NaiveCap;
  for (std::size_t i = 0; i < nfac; ++i) {
    const FacilityRecord& f = st.facilities[i];
    const int externals = external_count[i];
    if (scalar_cap) {
      if (f.residual < 0)
        throw Error(ErrorCode::InvariantViolation,
                    "facility " + std::to_string(f.client) + " negative residual");
      if (f.residual != cfg.upsilon - 1 - externals)
        throw Error(ErrorCode::InvariantViolation,
                    "facility " + std::to_string(f.client) +
                        " residual out of conservation");
    }
    if (tree_cap) {
      const int slots = bucket_capacity(cfg.upsilon, depth);
      for (int b = 0; b < depth; ++b) {
        if (f.caps[b] < 0)
          throw Error(ErrorCode::InvariantViolation,
                      "facility " + std::to_string(f.client) +
                          " negative capacity in bucket " + std::to_string(b));
        if (f.caps[b] != slots - bucket_count[i * depth + b])
          throw Error(ErrorCode::InvariantViolation,
                      "facility " + std::to_string(f.client) +
                          " capacity out of conservation in bucket " +
                          std::to_string(b));
      }
    }
  }
}

namespace detail {

inline void emit_event_record(Trace& trace, const Event& e, int index) {
  TraceRecord rec;
  rec.kind = TraceRecord::Kind::Event;
  rec.event_index = index;
  rec.client = e.client;
  rec.event_kind = e.kind;
  rec.location = e.kind == Event::Kind::Insert ? e.location : -1;
  trace.emit(std::move(rec));
}

inline PolicyConfig resolve_config(const Instance& inst, PolicyConfig cfg) {
  if (cfg.algorithm == Algorithm::Alg2 && cfg.declared_q == 0)
    cfg.declared_q = std::max(1, inst.stream.length());
  return cfg;
}

struct RunPieces {
  std::optional<NormalizedMetric> normalized;
  std::optional<Hst> hst;
};

inline RunPieces prepare_tree(const Instance& inst, const PolicyConfig& cfg,
                              std::uint64_t seed) {
  RunPieces pieces;
  if (cfg.algorithm != Algorithm::Alg2) return pieces;
  if (cfg.upsilon < 2)
    throw Error(ErrorCode::InvalidConfig, "policy alg2 needs upsilon >= 2");
  pieces.normalized = normalize(inst.metric, cfg.upsilon);
  pieces.hst = Hst::build(*pieces.normalized, derive_seed(seed, 0xb75eULL));
  return pieces;
}

template <typename MakeCoin, typename MakePlanner>
RunResult run_impl(const Instance& inst, PolicyConfig cfg, std::uint64_t seed,
                   const RunOptions& opt, MakeCoin&& make_coin,
                   MakePlanner&& make_planner, const Hst* fixed_tree) {
  inst.stream.validate(inst.metric.size());
  cfg = resolve_config(inst, cfg);

  RunResult out;
  out.config = cfg;
  out.seed = seed;
  out.trace = Trace(opt.full_trace);

  RunPieces pieces;
  if (fixed_tree) {
    out.hst = *fixed_tree;
  } else {
    pieces = prepare_tree(inst, cfg, seed);
    out.hst = std::move(pieces.hst);
  }

  Rng rng(derive_seed(seed, 0x5117ULL));
  auto coin = make_coin(rng);
  auto planner = make_planner(rng);

  PolicyContext ctx;
  ctx.metric = &inst.metric;
  ctx.trace = &out.trace;
  ctx.coin = coin.get();
  ctx.planner = planner.get();
  ctx.hst = out.hst ? &*out.hst : nullptr;

  auto policy = Policy::make(cfg, ctx);
  if (!policy->supports_deletion())
    for (const Event& e : inst.stream.events)
      if (e.kind == Event::Kind::Delete)
        throw Error(ErrorCode::InvalidConfig,
                    std::string("policy ") + algorithm_name(cfg.algorithm) +
                        " does not support deletions");
  if (cfg.algorithm == Algorithm::Alg2 &&
      cfg.declared_q < inst.stream.length())
    throw Error(ErrorCode::InvalidConfig,
                "declared q is smaller than the stream length");

  for (int i = 0; i < inst.stream.length(); ++i) {
    const Event& e = inst.stream.events[i];
    emit_event_record(out.trace, e, i);
    policy->process(e, i);
    if (opt.check_invariants)
      check_state_invariants(policy->state(), cfg, inst.metric,
                             out.hst ? &*out.hst : nullptr);
  }

  out.report = policy->cost_report();
  out.final_state = policy->state();
  return out;
}

}  // namespace detail

inline RunResult run(const Instance& inst, const PolicyConfig& cfg,
                     std::uint64_t seed, const RunOptions& opt = {}) {
  return detail::run_impl(
      inst, cfg, seed, opt,
      [](Rng& rng) { return std::make_unique<RngCoin>(rng); },
      [&](Rng& rng) {
        return std::make_unique<ConfiguredPlanner>(cfg.reassign, rng);
      },
      nullptr);
}

// Feeds recorded flip outcomes back, validating that probabilities match.
class ReplayCoin final : public CoinSource {
 public:
  explicit ReplayCoin(const std::vector<TraceRecord>& records)
      : records_(&records) {}

  bool flip(double p) override {
    while (next_ < records_->size() &&
           (*records_)[next_].kind != TraceRecord::Kind::Flip)
      ++next_;
    if (next_ >= records_->size())
      throw Error(ErrorCode::InvariantViolation, "replay ran out of flips");
    const TraceRecord& rec = (*records_)[next_++];
    if (std::abs(rec.p - p) > 1e-12)
      throw Error(ErrorCode::InvariantViolation,
                  "replay flip probability diverged");
    return rec.heads;
  }

 private:
  const std::vector<TraceRecord>* records_;
  std::size_t next_ = 0;
};

// Forces recorded cascade orders, validating the orphan sets agree.
class ReplayPlanner final : public CascadePlanner {
 public:
  explicit ReplayPlanner(const std::vector<TraceRecord>& records)
      : records_(&records) {}

  void order(std::vector<int>& orphans) override {
    if (orphans.empty()) return;
    while (next_ < records_->size() &&
           (*records_)[next_].kind != TraceRecord::Kind::Cascade)
      ++next_;
    if (next_ >= records_->size())
      throw Error(ErrorCode::InvariantViolation, "replay ran out of cascades");
    const TraceRecord& rec = (*records_)[next_++];
    std::vector<int> a = orphans, b = rec.cascade_order;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
      throw Error(ErrorCode::InvariantViolation, "replay orphan set diverged");
    orphans = rec.cascade_order;
  }

 private:
  const std::vector<TraceRecord>* records_;
  std::size_t next_ = 0;
};

// Re-runs a recorded trace with forced coins and cascade orders. The result
// must match the original record-for-record; used as the replay invariant.
inline RunResult replay(const Instance& inst, const RunResult& prior,
                        const RunOptions& opt = {}) {
  if (!prior.trace.full())
    throw Error(ErrorCode::InvalidConfig, "cannot replay a counters-only trace");
  return detail::run_impl(
      inst, prior.config, prior.seed, opt,
      [&](Rng&) { return std::make_unique<ReplayCoin>(prior.trace.records()); },
      [&](Rng&) {
        return std::make_unique<ReplayPlanner>(prior.trace.records());
      },
      prior.hst ? &*prior.hst : nullptr);
}

// Sum of recorded flip probabilities of cluster members, truncated at (and
// including) the first heads within the cluster.
inline double martingale_probe(const Trace& trace,
                               const std::unordered_set<int>& cluster) {
  if (!trace.full())
    throw Error(ErrorCode::InvalidConfig, "probe needs a full trace");
  double sum = 0.0;
  for (const TraceRecord& rec : trace.records()) {
    if (rec.kind != TraceRecord::Kind::Flip || !cluster.count(rec.client))
      continue;
    sum += rec.p;
    if (rec.heads) break;
  }
  return sum;
}

struct AvailabilityReport {
  long long probed = 0;                 // post-t0 connects examined
  std::vector<std::size_t> violations;  // record indices lacking a candidate
};

// Replays the capacitated facility states of a tree-policy trace and checks,
// for every connect after facility `v` opened, that some open facility no
// farther (in tree distance) than v still had a free slot at the matching
// bucket. `v` must never be deleted in the trace.
inline AvailabilityReport availability_probe(const Trace& trace, const Hst& t,
                                             int upsilon, int v) {
  if (!trace.full())
    throw Error(ErrorCode::InvalidConfig, "probe needs a full trace");
  const int h = t.depth();
  const int slots = bucket_capacity(upsilon, h);

  std::unordered_map<int, int> location;           // client -> point
  std::unordered_map<int, std::vector<int>> caps;  // facility -> per bucket
  bool v_open = false;
  int v_location = -1;
  AvailabilityReport out;

  const auto& recs = trace.records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const TraceRecord& rec = recs[i];
    switch (rec.kind) {
      case TraceRecord::Kind::Event:
        if (rec.event_kind == Event::Kind::Insert)
          location[rec.client] = rec.location;
        break;
      case TraceRecord::Kind::Open:
        caps.emplace(rec.client, std::vector<int>(h, slots));
        if (rec.client == v) {
          v_open = true;
          v_location = location.at(v);
        }
        break;
      case TraceRecord::Kind::Close:
        if (rec.facility == v)
          throw Error(ErrorCode::InvalidConfig,
                      "availability probe target was deleted");
        caps.erase(rec.facility);
        break;
      case TraceRecord::Kind::Restore:
        if (rec.bucket >= 0) ++caps.at(rec.facility)[rec.bucket];
        break;
      case TraceRecord::Kind::Connect: {
        if (rec.bucket < 0)
          throw Error(ErrorCode::InvalidConfig,
                      "availability probe needs a tree-policy trace");
        if (v_open && rec.client != v) {
          ++out.probed;
          const int u_loc = location.at(rec.client);
          const double bound = client_tree_dist(t, u_loc, v_location);
          bool found = false;
          for (const auto& [fac, fcaps] : caps) {
            const int f_loc = location.at(fac);
            if (client_tree_dist(t, u_loc, f_loc) > bound) continue;
            if (fcaps[client_bucket(t, u_loc, f_loc)] > 0) {
              found = true;
              break;
            }
          }
          if (!found) out.violations.push_back(i);
        }
        --caps.at(rec.facility)[rec.bucket];
        break;
      }
      default:
        break;
    }
  }
  if (!v_open)
    throw Error(ErrorCode::InvalidConfig,
                "availability probe target never opened");
  return out;
}

// First facility opened in the trace that is never closed; -1 if none.
inline int first_persistent_facility(const Trace& trace) {
  std::unordered_set<int> closed;
  for (const TraceRecord& rec : trace.records())
    if (rec.kind == TraceRecord::Kind::Close) closed.insert(rec.facility);
  for (const TraceRecord& rec : trace.records())
    if (rec.kind == TraceRecord::Kind::Open && !closed.count(rec.client))
      return rec.client;
  return -1;
}

}  // namespace dynfl
