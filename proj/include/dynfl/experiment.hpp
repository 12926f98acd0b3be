#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynfl/error.hpp"
#include "dynfl/events.hpp"
#include "dynfl/generators.hpp"
#include "dynfl/harness.hpp"
#include "dynfl/oracle.hpp"
#include "dynfl/policies.hpp"

namespace dynfl {

// Instance source for runs and sweeps. Exactly one parameter may carry a
// list; that list is the sweep grid (singletons mean a single instance).
struct GeneratorSpec {
  enum class Kind { Claim3, Claim2Cap, Random };
  Kind kind = Kind::Claim3;
  std::vector<int> k = {16};         // claim3
  std::vector<int> upsilon = {8};    // claim2cap
  int rounds = 0;                    // claim2cap; 0 = upsilon
  std::vector<int> n_points = {32};  // random
  std::vector<int> n_events = {200}; // random
  double p_delete = 0.3;             // random
  MetricKind metric_kind = MetricKind::UnitSquare;
  std::uint64_t gen_seed = 0;        // random; 0 = derive from master seed
};

// Format: kind[:key=v[,v...][,key=v...]]. Keys: k (claim3); upsilon|u, rounds
// (claim2cap); n, q, pdel, metric=unitsquare|shortestpath, seed (random).
// Comma-separated bare values extend the previous key's list.
inline GeneratorSpec parse_generator_spec(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  GeneratorSpec spec;
  if (kind == "claim3")
    spec.kind = GeneratorSpec::Kind::Claim3;
  else if (kind == "claim2cap")
    spec.kind = GeneratorSpec::Kind::Claim2Cap;
  else if (kind == "random")
    spec.kind = GeneratorSpec::Kind::Random;
  else
    throw Error(ErrorCode::InvalidConfig, "unknown generator \"" + kind + "\"");

  if (colon == std::string::npos) return spec;
  std::string rest = text.substr(colon + 1);
  std::vector<std::pair<std::string, std::vector<std::string>>> pairs;
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    auto comma = rest.find(',', pos);
    if (comma == std::string::npos) comma = rest.size();
    const std::string token = rest.substr(pos, comma - pos);
    pos = comma + 1;
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      if (pairs.empty())
        throw Error(ErrorCode::InvalidConfig,
                    "generator parameter \"" + token + "\" has no key");
      pairs.back().second.push_back(token);
    } else {
      pairs.push_back({token.substr(0, eq), {token.substr(eq + 1)}});
    }
  }

  auto as_ints = [](const std::vector<std::string>& vs) {
    std::vector<int> out;
    for (const auto& v : vs) out.push_back(std::stoi(v));
    return out;
  };
  for (const auto& [key, values] : pairs) {
    if (key == "k")
      spec.k = as_ints(values);
    else if (key == "upsilon" || key == "u")
      spec.upsilon = as_ints(values);
    else if (key == "rounds")
      spec.rounds = std::stoi(values.at(0));
    else if (key == "n")
      spec.n_points = as_ints(values);
    else if (key == "q")
      spec.n_events = as_ints(values);
    else if (key == "pdel")
      spec.p_delete = std::stod(values.at(0));
    else if (key == "seed")
      spec.gen_seed = std::stoull(values.at(0));
    else if (key == "metric") {
      const std::string& m = values.at(0);
      if (m == "unitsquare")
        spec.metric_kind = MetricKind::UnitSquare;
      else if (m == "shortestpath")
        spec.metric_kind = MetricKind::ShortestPath;
      else
        throw Error(ErrorCode::InvalidConfig, "unknown metric kind \"" + m + "\"");
    } else {
      throw Error(ErrorCode::InvalidConfig,
                  "unknown generator parameter \"" + key + "\"");
    }
  }
  return spec;
}

inline std::string grid_parameter_name(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorSpec::Kind::Claim3:
      return "k";
    case GeneratorSpec::Kind::Claim2Cap:
      return "upsilon";
    case GeneratorSpec::Kind::Random:
      return spec.n_points.size() > 1 ? "n" : "q";
  }
  return "?";
}

inline std::vector<int> grid_values(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorSpec::Kind::Claim3:
      return spec.k;
    case GeneratorSpec::Kind::Claim2Cap:
      return spec.upsilon;
    case GeneratorSpec::Kind::Random:
      if (spec.n_points.size() > 1 && spec.n_events.size() > 1)
        throw Error(ErrorCode::InvalidConfig,
                    "random sweep may vary only one of n and q");
      return spec.n_points.size() > 1 ? spec.n_points : spec.n_events;
  }
  return {};
}

inline Instance make_instance(const GeneratorSpec& spec, int grid_index,
                              std::uint64_t master_seed) {
  switch (spec.kind) {
    case GeneratorSpec::Kind::Claim3:
      return gen_claim3(spec.k.at(grid_index));
    case GeneratorSpec::Kind::Claim2Cap:
      return gen_claim2cap(spec.upsilon.at(grid_index), spec.rounds);
    case GeneratorSpec::Kind::Random: {
      const int n = spec.n_points.size() > 1 ? spec.n_points.at(grid_index)
                                             : spec.n_points.at(0);
      const int q = spec.n_points.size() > 1 ? spec.n_events.at(0)
                                             : spec.n_events.at(grid_index);
      const std::uint64_t base =
          spec.gen_seed != 0 ? spec.gen_seed : derive_seed(master_seed, 0xa11ceULL);
      return gen_random(n, q, spec.p_delete, spec.metric_kind,
                        derive_seed(base, static_cast<std::uint64_t>(grid_index)));
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unknown generator kind");
}

// The swept capacity also parameterizes capacitated policies.
inline PolicyConfig config_for_instance(PolicyConfig cfg,
                                        const GeneratorSpec& spec,
                                        int grid_index) {
  if (spec.kind == GeneratorSpec::Kind::Claim2Cap &&
      is_capacitated(cfg.algorithm))
    cfg.upsilon = spec.upsilon.at(grid_index);
  return cfg;
}

struct TrialRow {
  std::string policy;
  std::uint64_t seed = 0;
  CostReport report;
};

enum class OracleMode { Auto, Exact, Bounds };

struct RatioEstimate {
  std::string policy;
  int trials = 0;
  double mean_cost = 0.0;
  double std_error = 0.0;
  std::optional<double> opt;
  std::optional<OptBounds> bounds;
  std::optional<double> ratio;  // mean / OPT (also set when bounds are tight)
  std::optional<std::pair<double, double>> ratio_interval;
  std::string error;  // nonempty when the policy rejected the instance
};

inline std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return derive_seed(master, static_cast<std::uint64_t>(trial));
}

inline std::vector<TrialRow> run_trials(const Instance& inst,
                                        const PolicyConfig& cfg, int trials,
                                        std::uint64_t master_seed,
                                        const RunOptions& opt = {false, false}) {
  std::vector<TrialRow> rows;
  rows.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = trial_seed(master_seed, t);
    RunResult r = run(inst, cfg, seed, opt);
    rows.push_back({algorithm_name(cfg.algorithm), seed, r.report});
  }
  return rows;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_and_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

// Oracle denominator for one policy family; upsilon = 0 means uncapacitated.
inline void attach_oracle(RatioEstimate& est, const OfflineInstance& off,
                          int upsilon, OracleMode mode) {
  const int limit = upsilon > 0 ? kOracleCapLimit : kOracleUncapLimit;
  const bool exact_ok = off.size() >= 1 && off.size() <= limit;
  if (mode == OracleMode::Exact && !exact_ok)
    throw Error(ErrorCode::OracleLimit,
                "exact oracle unavailable for " + std::to_string(off.size()) +
                    " clients");
  if (mode == OracleMode::Exact || (mode == OracleMode::Auto && exact_ok)) {
    est.opt = upsilon > 0 ? opt_cap(off, upsilon).cost : opt_uncap(off).cost;
    est.ratio = est.mean_cost / *est.opt;
    return;
  }
  const OptBounds b = opt_bounds(off, upsilon);
  est.bounds = b;
  est.ratio_interval = {est.mean_cost / b.upper, est.mean_cost / b.lower};
  if (b.lower == b.upper) est.ratio = est.mean_cost / b.lower;
}

struct ExperimentResult {
  std::vector<TrialRow> rows;
  std::vector<RatioEstimate> estimates;
};

inline ExperimentResult run_experiment(const Instance& inst,
                                       const std::vector<PolicyConfig>& policies,
                                       int trials, std::uint64_t master_seed,
                                       OracleMode mode = OracleMode::Auto) {
  if (trials < 1)
    throw Error(ErrorCode::InvalidConfig, "trials must be at least 1");
  ExperimentResult out;
  const OfflineInstance off = OfflineInstance::from(inst);
  std::map<int, std::pair<std::optional<double>, std::optional<OptBounds>>> cache;

  for (const PolicyConfig& cfg : policies) {
    RatioEstimate est;
    est.policy = algorithm_name(cfg.algorithm);
    est.trials = trials;
    std::vector<TrialRow> rows;
    try {
      rows = run_trials(inst, cfg, trials, master_seed);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OracleLimit) throw;
      est.error = e.what();
      out.estimates.push_back(std::move(est));
      continue;
    }
    std::vector<double> totals;
    totals.reserve(rows.size());
    for (const TrialRow& r : rows) totals.push_back(r.report.total);
    const MeanSe ms = mean_and_se(totals);
    est.mean_cost = ms.mean;
    est.std_error = ms.se;
    if (off.size() >= 1)
      attach_oracle(est, off, is_capacitated(cfg.algorithm) ? cfg.upsilon : 0,
                    mode);
    out.estimates.push_back(std::move(est));
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

// Least-squares slope of ln(y) against ln(x).
inline double loglog_slope(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 2)
    throw Error(ErrorCode::InvalidConfig, "slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : xy) {
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(xy.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct SweepPoint {
  int param = 0;
  std::vector<RatioEstimate> estimates;
};

struct SweepResult {
  std::string param_name;
  std::vector<SweepPoint> points;
  std::vector<std::pair<std::string, double>> slopes;  // per policy
  std::vector<TrialRow> rows;
};

inline SweepResult run_sweep(const GeneratorSpec& spec,
                             const std::vector<PolicyConfig>& policies,
                             int trials, std::uint64_t master_seed,
                             OracleMode mode = OracleMode::Auto) {
  const std::vector<int> grid = grid_values(spec);
  if (grid.empty())
    throw Error(ErrorCode::InvalidConfig, "sweep grid is empty");
  SweepResult out;
  out.param_name = grid_parameter_name(spec);
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    const Instance inst = make_instance(spec, i, master_seed);
    std::vector<PolicyConfig> cfgs;
    for (const PolicyConfig& cfg : policies)
      cfgs.push_back(config_for_instance(cfg, spec, i));
    ExperimentResult r = run_experiment(
        inst, cfgs, trials, derive_seed(master_seed, 0x9f1dULL + i), mode);
    out.points.push_back({grid[i], std::move(r.estimates)});
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
  }
  for (std::size_t p = 0; p < policies.size(); ++p) {
    std::vector<std::pair<double, double>> xy;
    for (const SweepPoint& pt : out.points) {
      const RatioEstimate& est = pt.estimates.at(p);
      if (est.error.empty() && est.mean_cost > 0)
        xy.push_back({static_cast<double>(pt.param), est.mean_cost});
    }
    if (xy.size() >= 2)
      out.slopes.push_back(
          {algorithm_name(policies[p].algorithm), loglog_slope(xy)});
  }
  return out;
}

}  // namespace dynfl
