// Command-line front end: run seeded simulations, sweep generator grids, or
// run the verification battery. See --help for the CSV schema and generator
// spec syntax.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynfl/error.hpp"
#include "dynfl/experiment.hpp"
#include "dynfl/io.hpp"
#include "dynfl/verify.hpp"

namespace {

using dynfl::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitOracleLimit = 3;

int exit_code_for(const dynfl::Error& e) {
  switch (e.code()) {
    case dynfl::ErrorCode::OracleLimit:
      return kExitOracleLimit;
    case dynfl::ErrorCode::InvariantViolation:
    case dynfl::ErrorCode::Internal:
      return kExitInvariant;
    default:
      return kExitUsage;
  }
}

struct CommonOptions {
  std::string instance_path;
  std::string gen_spec;
  std::string policies = "mstar";
  int trials = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string format = "csv";
  int upsilon = 0;
  long long declared_q = 0;
  std::string reassign;
  std::string trace_mode = "counters";
  std::string oracle_mode = "auto";
  std::string emit_path;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool wants_instance) {
  if (wants_instance) {
    cmd->add_option("--instance", o.instance_path, "instance JSON file");
    cmd->add_option("--gen", o.gen_spec,
                    "generator spec: claim3[:k=...], claim2cap[:upsilon=...,"
                    "rounds=...], random[:n=...,q=...,pdel=...,metric="
                    "unitsquare|shortestpath,seed=...]; comma lists form sweep "
                    "grids");
    cmd->add_option("--policy", o.policies,
                    "comma-separated: m,mstar,alg1,capmey,naive,alg2");
    cmd->add_option("--upsilon", o.upsilon, "capacity for capacitated policies");
    cmd->add_option("--q", o.declared_q,
                    "declared horizon for alg2 (default: stream length)");
    cmd->add_option("--reassign", o.reassign, "fifo|lifo|random")
        ->check(CLI::IsMember({"fifo", "lifo", "random"}));
    cmd->add_option("--emit", o.emit_path, "write the generated instance JSON");
  }
  cmd->add_option("--trials", o.trials, "seeded trials per policy");
  cmd->add_option("--seed", o.seed, "master seed (fallback: env DYNFL_SEED)")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--out", o.out, "output path prefix");
  cmd->add_option("--format", o.format, "trial table format")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--trace", o.trace_mode,
                  "full: dump per-policy trial-0 traces next to --out")
      ->check(CLI::IsMember({"full", "counters"}));
  cmd->add_option("--oracle", o.oracle_mode, "ratio denominator source")
      ->check(CLI::IsMember({"auto", "exact", "bounds"}));
}

std::uint64_t resolve_seed(const CommonOptions& o) {
  if (o.seed_set) return o.seed;
  if (const char* env = std::getenv("DYNFL_SEED")) return std::stoull(env);
  return 1;
}

dynfl::OracleMode resolve_oracle(const CommonOptions& o) {
  if (o.oracle_mode == "exact") return dynfl::OracleMode::Exact;
  if (o.oracle_mode == "bounds") return dynfl::OracleMode::Bounds;
  return dynfl::OracleMode::Auto;
}

std::optional<dynfl::ReassignOrder> resolve_reassign_flag(const CommonOptions& o) {
  if (o.reassign == "fifo") return dynfl::ReassignOrder::Fifo;
  if (o.reassign == "lifo") return dynfl::ReassignOrder::Lifo;
  if (o.reassign == "random") return dynfl::ReassignOrder::Random;
  return std::nullopt;
}

std::vector<dynfl::PolicyConfig> resolve_policies(const CommonOptions& o,
                                                  const dynfl::Instance& inst) {
  std::vector<dynfl::PolicyConfig> out;
  std::size_t pos = 0;
  const std::string& s = o.policies;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string name = s.substr(pos, comma - pos);
    pos = comma + 1;
    if (name.empty()) continue;
    const auto alg = dynfl::parse_algorithm(name);
    if (!alg)
      throw dynfl::Error(dynfl::ErrorCode::InvalidConfig,
                         "unknown policy \"" + name + "\"");
    dynfl::PolicyConfig cfg;
    cfg.algorithm = *alg;
    cfg.upsilon = o.upsilon;
    cfg.declared_q = o.declared_q;
    if (auto flag = resolve_reassign_flag(o))
      cfg.reassign = *flag;
    else if (inst.reassign_hint)
      cfg.reassign = *inst.reassign_hint;
    out.push_back(cfg);
  }
  if (out.empty())
    throw dynfl::Error(dynfl::ErrorCode::InvalidConfig, "no policies given");
  return out;
}

json estimate_to_json(const dynfl::RatioEstimate& est) {
  json j{{"policy", est.policy}, {"trials", est.trials}};
  if (!est.error.empty()) {
    j["error"] = est.error;
    return j;
  }
  j["mean_cost"] = est.mean_cost;
  j["std_error"] = est.std_error;
  if (est.opt) j["opt"] = *est.opt;
  if (est.bounds) j["opt_bounds"] = {est.bounds->lower, est.bounds->upper};
  if (est.ratio) j["ratio"] = *est.ratio;
  if (est.ratio_interval)
    j["ratio_interval"] = {est.ratio_interval->first, est.ratio_interval->second};
  return j;
}

constexpr const char* kCsvHeader =
    "policy,seed,opening_cost,connection_cost,total,facilities,active_clients,"
    "flips,openings,connects,cascades,reassignments,max_cascade";

void write_rows_csv(std::ostream& os, const std::vector<dynfl::TrialRow>& rows) {
  os << kCsvHeader << "\n";
  for (const auto& r : rows) {
    const auto& c = r.report.counters;
    os << r.policy << ',' << r.seed << ',' << r.report.opening_cost << ','
       << r.report.connection_cost << ',' << r.report.total << ','
       << r.report.facilities << ',' << r.report.active_clients << ','
       << c.flips << ',' << c.openings << ',' << c.connects << ','
       << c.cascades << ',' << c.reassignments << ',' << c.max_cascade << "\n";
  }
}

json rows_to_json(const std::vector<dynfl::TrialRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    const auto& c = r.report.counters;
    out.push_back({{"policy", r.policy},
                   {"seed", r.seed},
                   {"opening_cost", r.report.opening_cost},
                   {"connection_cost", r.report.connection_cost},
                   {"total", r.report.total},
                   {"facilities", r.report.facilities},
                   {"active_clients", r.report.active_clients},
                   {"flips", c.flips},
                   {"openings", c.openings},
                   {"connects", c.connects},
                   {"cascades", c.cascades},
                   {"reassignments", c.reassignments},
                   {"max_cascade", c.max_cascade}});
  }
  return out;
}

void write_outputs(const CommonOptions& o, const std::vector<dynfl::TrialRow>& rows,
                   const json& summary) {
  if (o.out.empty()) {
    std::cout << summary.dump(2) << "\n";
    return;
  }
  const std::string table_path =
      o.out + (o.format == "csv" ? ".csv" : ".trials.json");
  std::ofstream table(table_path);
  if (!table)
    throw dynfl::Error(dynfl::ErrorCode::InvalidConfig,
                       "cannot write " + table_path);
  if (o.format == "csv")
    write_rows_csv(table, rows);
  else
    table << rows_to_json(rows).dump(2) << "\n";
  std::ofstream sum(o.out + ".summary.json");
  if (!sum)
    throw dynfl::Error(dynfl::ErrorCode::InvalidConfig,
                       "cannot write " + o.out + ".summary.json");
  sum << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
}

dynfl::Instance load_or_generate(const CommonOptions& o, std::uint64_t seed,
                                 bool* generated) {
  if (!o.instance_path.empty() && !o.gen_spec.empty())
    throw dynfl::Error(dynfl::ErrorCode::InvalidConfig,
                       "--instance and --gen are mutually exclusive");
  if (!o.instance_path.empty()) {
    *generated = false;
    return dynfl::load_instance(o.instance_path);
  }
  if (o.gen_spec.empty())
    throw dynfl::Error(dynfl::ErrorCode::InvalidConfig,
                       "one of --instance or --gen is required");
  *generated = true;
  const dynfl::GeneratorSpec spec = dynfl::parse_generator_spec(o.gen_spec);
  if (dynfl::grid_values(spec).size() != 1)
    throw dynfl::Error(dynfl::ErrorCode::InvalidConfig,
                       "run takes a single instance; use sweep for grids");
  return dynfl::make_instance(spec, 0, seed);
}

int cmd_run(const CommonOptions& o) {
  const std::uint64_t seed = resolve_seed(o);
  bool generated = false;
  const dynfl::Instance inst = load_or_generate(o, seed, &generated);
  if (!o.emit_path.empty()) dynfl::save_instance(inst, o.emit_path);

  const auto policies = resolve_policies(o, inst);
  dynfl::ExperimentResult result = dynfl::run_experiment(
      inst, policies, o.trials, seed, resolve_oracle(o));

  if (o.trace_mode == "full" && !o.out.empty()) {
    for (const auto& cfg : policies) {
      try {
        const dynfl::RunResult r =
            dynfl::run(inst, cfg, dynfl::trial_seed(seed, 0));
        std::ofstream ts(o.out + "." + dynfl::algorithm_name(cfg.algorithm) +
                         ".trace.jsonl");
        dynfl::dump_trace(r.trace, ts);
      } catch (const dynfl::Error&) {
        // incompatibilities already reported in the summary
      }
    }
  }

  json summary{{"command", "run"},
               {"seed", seed},
               {"trials", o.trials},
               {"q", inst.stream.length()},
               {"n_fin", inst.stream.final_count()},
               {"policies", json::array()}};
  if (!o.gen_spec.empty()) summary["gen"] = o.gen_spec;
  if (!o.instance_path.empty()) summary["instance"] = o.instance_path;
  bool any_ran = false;
  for (const auto& est : result.estimates) {
    any_ran = any_ran || est.error.empty();
    summary["policies"].push_back(estimate_to_json(est));
  }
  write_outputs(o, result.rows, summary);
  // Per-policy incompatibilities are reported inline so one bad policy does
  // not hide results for the others, but a run where nothing executed is a
  // usage error.
  if (!any_ran)
    throw dynfl::Error(dynfl::ErrorCode::InvalidConfig,
                       result.estimates.empty()
                           ? "no policies selected"
                           : result.estimates.front().error);
  return kExitOk;
}

int cmd_sweep(const CommonOptions& o) {
  if (o.gen_spec.empty())
    throw dynfl::Error(dynfl::ErrorCode::InvalidConfig,
                       "sweep needs --gen with a value list");
  const std::uint64_t seed = resolve_seed(o);
  const dynfl::GeneratorSpec spec = dynfl::parse_generator_spec(o.gen_spec);

  // Policies resolve against the first grid instance (hints are uniform).
  const dynfl::Instance first = dynfl::make_instance(spec, 0, seed);
  const auto policies = resolve_policies(o, first);

  dynfl::SweepResult sweep =
      dynfl::run_sweep(spec, policies, o.trials, seed, resolve_oracle(o));

  json points = json::array();
  for (const auto& pt : sweep.points) {
    json p{{sweep.param_name, pt.param}, {"policies", json::array()}};
    for (const auto& est : pt.estimates)
      p["policies"].push_back(estimate_to_json(est));
    points.push_back(std::move(p));
  }
  json slopes = json::object();
  for (const auto& [name, slope] : sweep.slopes) slopes[name] = slope;
  json summary{{"command", "sweep"},
               {"gen", o.gen_spec},
               {"seed", seed},
               {"trials", o.trials},
               {"param", sweep.param_name},
               {"points", std::move(points)},
               {"loglog_slopes", std::move(slopes)}};
  write_outputs(o, sweep.rows, summary);
  return kExitOk;
}

int cmd_verify(const CommonOptions& o) {
  const std::uint64_t seed = resolve_seed(o);
  const auto checks = dynfl::verify_battery(seed, o.trials);
  bool all_ok = true;
  json report = json::array();
  for (const auto& c : checks) {
    all_ok = all_ok && c.passed;
    std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail
              << "\n";
    report.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  if (!o.out.empty()) {
    std::ofstream out(o.out + ".verify.json");
    out << json{{"command", "verify"}, {"seed", seed}, {"checks", report}}.dump(2)
        << "\n";
  }
  return all_ok ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dynfl: simulation laboratory for fully dynamic online facility "
      "location.\n"
      "CSV schema: " +
      std::string(kCsvHeader)};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, verify_opts;
  CLI::App* run_cmd =
      app.add_subcommand("run", "run seeded trials on one instance");
  add_common(run_cmd, run_opts, true);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run a generator grid and fit slopes");
  add_common(sweep_cmd, sweep_opts, true);
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "run the invariant and probe battery");
  add_common(verify_cmd, verify_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts);
    return cmd_verify(verify_opts);
  } catch (const dynfl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
