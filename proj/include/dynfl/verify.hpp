#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dynfl/experiment.hpp"
#include "dynfl/generators.hpp"
#include "dynfl/harness.hpp"
#include "dynfl/oracle.hpp"

namespace dynfl {

// Deliberately independent implementations of the offline optima, used only
// to cross-check the primary oracles. Kept simple and slow on purpose.
namespace reference {

inline double opt_uncap_bruteforce(const OfflineInstance& inst) {
  const int n = inst.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double cost = static_cast<double>(std::popcount(mask));
    for (int i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j)
        if (mask & (1u << j)) nearest = std::min(nearest, inst.dist(i, j));
      cost += nearest;
    }
    best = std::min(best, cost);
  }
  return best;
}

inline double opt_cap_bruteforce(const OfflineInstance& inst, int upsilon) {
  const int n = inst.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> open;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) open.push_back(j);
    if (static_cast<int>(open.size()) * upsilon < n) continue;
    std::vector<int> load(open.size(), 0);
    double best_assign = std::numeric_limits<double>::infinity();
    auto rec = [&](auto&& self, int i, double acc) -> void {
      if (acc >= best_assign) return;
      if (i == n) {
        best_assign = acc;
        return;
      }
      for (std::size_t j = 0; j < open.size(); ++j) {
        if (load[j] == upsilon) continue;
        ++load[j];
        self(self, i + 1, acc + inst.dist(i, open[j]));
        --load[j];
      }
    };
    rec(rec, 0, 0.0);
    best = std::min(best, open.size() + best_assign);
  }
  return best;
}

}  // namespace reference

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace checks {

// Every Connect decrement must target the bucket of the (client, facility)
// pair; recomputed here from the trace alone.
inline bool bucket_discipline(const Trace& trace, const Hst& t,
                              std::string* why) {
  std::unordered_map<int, int> location;
  for (const TraceRecord& rec : trace.records()) {
    if (rec.kind == TraceRecord::Kind::Event &&
        rec.event_kind == Event::Kind::Insert)
      location[rec.client] = rec.location;
    if (rec.kind != TraceRecord::Kind::Connect) continue;
    const int want =
        client_bucket(t, location.at(rec.client), location.at(rec.facility));
    if (rec.bucket != want) {
      if (why)
        *why = "connect of client " + std::to_string(rec.client) +
               " charged bucket " + std::to_string(rec.bucket) + ", expected " +
               std::to_string(want);
      return false;
    }
  }
  return true;
}

// Successive flip probabilities of one client grow by more than a factor of
// two. Probability-1 flips are exempt for policies with a forced-opening
// no-facility path.
inline bool monotone_flip_memory(const Trace& trace, bool allow_forced_one,
                                 std::string* why) {
  std::unordered_map<int, double> last;
  for (const TraceRecord& rec : trace.records()) {
    if (rec.kind == TraceRecord::Kind::Event &&
        rec.event_kind == Event::Kind::Delete)
      last.erase(rec.client);
    if (rec.kind != TraceRecord::Kind::Flip) continue;
    auto it = last.find(rec.client);
    if (it != last.end()) {
      const bool forced = allow_forced_one && rec.p == 1.0;
      if (!forced && !(rec.p > 2.0 * it->second)) {
        if (why)
          *why = "client " + std::to_string(rec.client) + " flipped at " +
                 std::to_string(rec.p) + " after " + std::to_string(it->second);
        return false;
      }
    }
    last[rec.client] = rec.p;
  }
  return true;
}

inline bool traces_equal(const Trace& a, const Trace& b) {
  return a.records() == b.records() && a.counters() == b.counters();
}

// Claim-4 style ultrametric inequality plus the bucket/tree-distance
// correspondence, exhaustively over all triples.
inline bool ultrametric_buckets(const Hst& t, std::string* why) {
  const int n = t.size();
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      for (int w = 0; w < n; ++w) {
        if (u == v || v == w || u == w) continue;
        if (t.bucket(u, w) < std::min(t.bucket(u, v), t.bucket(v, w))) {
          if (why)
            *why = "triple (" + std::to_string(u) + "," + std::to_string(v) +
                   "," + std::to_string(w) + ") violates the bucket inequality";
          return false;
        }
      }
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      const double want =
          std::ldexp(1.0, 2 - t.bucket(u, v)) - std::ldexp(1.0, 2 - t.depth());
      if (t.tree_dist(u, v) != want) {
        if (why) *why = "tree distance disagrees with bucket closed form";
        return false;
      }
    }
  return true;
}

inline bool dominance_exhaustive(const Hst& t, const MetricSpace& normalized,
                                 std::string* why) {
  for (int u = 0; u < t.size(); ++u)
    for (int v = u + 1; v < t.size(); ++v)
      if (normalized.dist(u, v) > t.tree_dist(u, v)) {
        if (why)
          *why = "pair (" + std::to_string(u) + "," + std::to_string(v) +
                 ") not dominated";
        return false;
      }
  return true;
}

}  // namespace checks

// Fast end-to-end battery behind `dynfl verify`. Exercises determinism,
// replay, state invariants, trace-level properties, the probes, the tree
// structure, and the oracle cross-checks at reduced sizes.
inline std::vector<VerifyCheck> verify_battery(std::uint64_t master_seed,
                                               int trials) {
  std::vector<VerifyCheck> out;
  const int mart_trials = std::max(trials, 200);

  auto add = [&](const std::string& name, bool ok, const std::string& detail) {
    out.push_back({name, ok, detail});
  };

  struct Setup {
    PolicyConfig cfg;
    Instance inst;
  };
  std::vector<Setup> setups;
  {
    const Instance dyn = gen_random(16, 400, 0.3, MetricKind::UnitSquare,
                                    derive_seed(master_seed, 1));
    const Instance ins = gen_random(16, 400, 0.0, MetricKind::UnitSquare,
                                    derive_seed(master_seed, 2));
    setups.push_back({{Algorithm::M}, ins});
    setups.push_back({{Algorithm::MStar}, dyn});
    setups.push_back({{Algorithm::Alg1}, dyn});
    setups.push_back({{Algorithm::CapMeyerson, 8}, ins});
    setups.push_back({{Algorithm::NaiveCap, 64}, dyn});
    setups.push_back({{Algorithm::Alg2, 2048}, dyn});
  }

  // Determinism, replay, per-event invariants, policy-specific trace checks.
  bool det_ok = true, replay_ok = true, inv_ok = true;
  std::string det_why, replay_why, inv_why;
  for (const Setup& s : setups) {
    for (int t = 0; t < 3; ++t) {
      const std::uint64_t seed = trial_seed(master_seed, 100 + t);
      try {
        RunOptions opt{true, true};
        const RunResult a = run(s.inst, s.cfg, seed, opt);
        const RunResult b = run(s.inst, s.cfg, seed, opt);
        if (!checks::traces_equal(a.trace, b.trace)) {
          det_ok = false;
          det_why = std::string("policy ") + algorithm_name(s.cfg.algorithm);
        }
        const RunResult r = replay(s.inst, a, RunOptions{true, false});
        if (!checks::traces_equal(a.trace, r.trace) ||
            r.report.total != a.report.total) {
          replay_ok = false;
          replay_why = std::string("policy ") + algorithm_name(s.cfg.algorithm);
        }
        if (s.cfg.algorithm == Algorithm::Alg2) {
          std::string why;
          if (!checks::bucket_discipline(a.trace, *a.hst, &why)) {
            inv_ok = false;
            inv_why = why;
          }
          if (!checks::monotone_flip_memory(a.trace, false, &why)) {
            inv_ok = false;
            inv_why = why;
          }
        }
        if (s.cfg.algorithm == Algorithm::Alg1) {
          std::string why;
          if (!checks::monotone_flip_memory(a.trace, true, &why)) {
            inv_ok = false;
            inv_why = why;
          }
        }
      } catch (const Error& e) {
        inv_ok = false;
        inv_why = std::string(algorithm_name(s.cfg.algorithm)) + ": " + e.what();
      }
    }
  }
  add("determinism", det_ok, det_ok ? "identical traces across reruns" : det_why);
  add("trace-replay", replay_ok,
      replay_ok ? "replay reproduces traces and costs" : replay_why);
  add("state-invariants", inv_ok,
      inv_ok ? "totality, conservation, discipline, memory monotone" : inv_why);

  // Martingale probe.
  {
    const Instance inst = gen_claim3(8);
    const std::vector<int> leaf_ids = claim3_leaf_clients(8);
    const std::unordered_set<int> cluster(leaf_ids.begin(), leaf_ids.end());
    std::vector<double> sums;
    for (int t = 0; t < mart_trials; ++t) {
      const RunResult r = run(inst, PolicyConfig{Algorithm::Alg1},
                              trial_seed(master_seed, 1000 + t));
      sums.push_back(martingale_probe(r.trace, cluster));
    }
    const MeanSe ms = mean_and_se(sums);
    const bool ok = ms.mean <= 1.0 + 3.0 * ms.se;
    std::ostringstream os;
    os << "mean " << ms.mean << " vs bound 1 + 3*" << ms.se << " over "
       << mart_trials << " trials";
    add("martingale-probe", ok, os.str());
  }

  // Availability probe: the prescribed degenerate regime plus a draining one.
  {
    long long probed = 0, violations = 0;
    for (int t = 0; t < 10; ++t) {
      const RunResult r = run(gen_claim2cap(8), PolicyConfig{Algorithm::Alg2, 8},
                              trial_seed(master_seed, 2000 + t));
      const int v = first_persistent_facility(r.trace);
      if (v < 0) continue;
      const AvailabilityReport rep =
          availability_probe(r.trace, *r.hst, 8, v);
      probed += rep.probed;
      violations += static_cast<long long>(rep.violations.size());
    }
    const Instance drain = gen_random(2, 2000, 0.15, MetricKind::UnitSquare,
                                      derive_seed(master_seed, 3));
    for (int t = 0; t < 10; ++t) {
      const RunResult r = run(drain, PolicyConfig{Algorithm::Alg2, 2048},
                              trial_seed(master_seed, 3000 + t));
      const int v = first_persistent_facility(r.trace);
      if (v < 0) continue;
      const AvailabilityReport rep =
          availability_probe(r.trace, *r.hst, 2048, v);
      probed += rep.probed;
      violations += static_cast<long long>(rep.violations.size());
    }
    const bool ok =
        violations * 100 <= probed;  // <= 1% of probed connects
    std::ostringstream os;
    os << violations << " violations / " << probed << " probed connects";
    add("availability-probe", ok, os.str());
  }

  // Tree structure: dominance, bucket inequality, closed forms.
  {
    bool ok = true;
    std::string why = "dominance and bucket inequality on random and star trees";
    for (int t = 0; t < 5 && ok; ++t) {
      const Instance inst = gen_random(24, 0, 0.0, MetricKind::UnitSquare,
                                       derive_seed(master_seed, 4000 + t));
      const NormalizedMetric nm = normalize(inst.metric, 64);
      const Hst tree = Hst::build(nm, trial_seed(master_seed, 4100 + t));
      ok = checks::dominance_exhaustive(tree, nm.base, &why) &&
           checks::ultrametric_buckets(tree, &why);
    }
    if (ok) {
      const NormalizedMetric nm = normalize(gen_claim3(6).metric, 16);
      const Hst tree = Hst::build(nm, trial_seed(master_seed, 4200));
      ok = checks::dominance_exhaustive(tree, nm.base, &why) &&
           checks::ultrametric_buckets(tree, &why);
    }
    add("hst-structure", ok, why);
  }

  // Oracle cross-checks at reduced size.
  {
    bool ok = true;
    std::string why = "primary oracles match independent enumerations";
    for (int t = 0; t < 10 && ok; ++t) {
      Instance inst = gen_random(6, 10, 0.2, MetricKind::ShortestPath,
                                 derive_seed(master_seed, 5000 + t));
      const OfflineInstance off = OfflineInstance::from(inst);
      if (off.size() < 1) continue;
      const double a = opt_uncap(off).cost;
      const double b = reference::opt_uncap_bruteforce(off);
      if (std::abs(a - b) > 1e-9) {
        ok = false;
        why = "opt_uncap mismatch: " + std::to_string(a) + " vs " +
              std::to_string(b);
        break;
      }
      const int ups = 1 + t % 3;
      const double c = opt_cap(off, ups).cost;
      const double d = reference::opt_cap_bruteforce(off, ups);
      if (std::abs(c - d) > 1e-9) {
        ok = false;
        why = "opt_cap mismatch: " + std::to_string(c) + " vs " +
              std::to_string(d);
        break;
      }
      const double e = opt_cap(off, off.size()).cost;
      if (std::abs(e - a) > 1e-9) {
        ok = false;
        why = "opt_cap at upsilon >= n disagrees with opt_uncap";
        break;
      }
      const OptBounds bounds = opt_bounds(off, ups);
      if (!(bounds.lower - 1e-9 <= c && c <= bounds.upper + 1e-9)) {
        ok = false;
        why = "opt bounds do not bracket the capacitated optimum";
        break;
      }
    }
    add("oracle-cross-check", ok, why);
  }

  // Insertion-only equivalence of the uncapacitated policies.
  {
    bool ok = true;
    std::string why = "m, mstar, alg1 traces identical on deletion-free streams";
    for (int t = 0; t < 10 && ok; ++t) {
      const Instance inst = gen_random(12, 60, 0.0, MetricKind::UnitSquare,
                                       derive_seed(master_seed, 6000 + t));
      const std::uint64_t seed = trial_seed(master_seed, 6100 + t);
      const RunResult a = run(inst, PolicyConfig{Algorithm::M}, seed);
      const RunResult b = run(inst, PolicyConfig{Algorithm::MStar}, seed);
      const RunResult c = run(inst, PolicyConfig{Algorithm::Alg1}, seed);
      if (!checks::traces_equal(a.trace, b.trace) ||
          !checks::traces_equal(a.trace, c.trace)) {
        ok = false;
        why = "trace divergence at stream " + std::to_string(t);
      }
    }
    add("insertion-equivalence", ok, why);
  }

  return out;
}

}  // namespace dynfl
