#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynfl/error.hpp"
#include "dynfl/events.hpp"
#include "dynfl/hst.hpp"
#include "dynfl/metric.hpp"
#include "dynfl/trace.hpp"

namespace dynfl {

using json = nlohmann::json;

inline json metric_to_json(const MetricSpace& m) {
  if (m.is_star())
    return json{{"star", {{"k", m.star_leaves()}, {"eps", m.star_eps()}}}};
  return json{{"n", m.size()}, {"dist", m.to_matrix()}};
}

inline MetricSpace metric_from_json(const json& j) {
  if (j.contains("star")) {
    const auto& s = j.at("star");
    return MetricSpace::star(s.at("k").get<int>(), s.at("eps").get<double>());
  }
  if (!j.contains("dist"))
    throw Error(ErrorCode::InvalidMetric,
                "metric JSON needs either \"star\" or \"dist\"");
  auto d = j.at("dist").get<std::vector<std::vector<double>>>();
  if (j.contains("n") && j.at("n").get<int>() != static_cast<int>(d.size()))
    throw Error(ErrorCode::InvalidMetric, "metric JSON \"n\" mismatches matrix");
  return MetricSpace::from_matrix(d);
}

inline json instance_to_json(const Instance& inst) {
  json events = json::array();
  for (const Event& e : inst.stream.events) {
    if (e.kind == Event::Kind::Insert)
      events.push_back({{"op", "ins"}, {"id", e.client}, {"at", e.location}});
    else
      events.push_back({{"op", "del"}, {"id", e.client}});
  }
  json out{{"metric", metric_to_json(inst.metric)},
           {"events", std::move(events)},
           {"q", inst.stream.length()}};
  if (inst.reassign_hint) {
    const char* name = *inst.reassign_hint == ReassignOrder::Fifo    ? "fifo"
                       : *inst.reassign_hint == ReassignOrder::Lifo ? "lifo"
                                                                    : "random";
    out["reassign"] = name;
  }
  return out;
}

inline Instance instance_from_json(const json& j) {
  Instance inst{metric_from_json(j.at("metric")), {}, std::nullopt};
  for (const auto& e : j.at("events")) {
    const std::string op = e.at("op").get<std::string>();
    if (op == "ins")
      inst.stream.events.push_back(
          {Event::Kind::Insert, e.at("id").get<int>(), e.at("at").get<int>()});
    else if (op == "del")
      inst.stream.events.push_back({Event::Kind::Delete, e.at("id").get<int>(), -1});
    else
      throw Error(ErrorCode::InvalidStream, "unknown event op \"" + op + "\"");
  }
  if (j.contains("q") &&
      j.at("q").get<int>() != inst.stream.length())
    throw Error(ErrorCode::InvalidStream, "instance q mismatches event count");
  if (j.contains("reassign")) {
    const std::string r = j.at("reassign").get<std::string>();
    if (r == "fifo")
      inst.reassign_hint = ReassignOrder::Fifo;
    else if (r == "lifo")
      inst.reassign_hint = ReassignOrder::Lifo;
    else if (r == "random")
      inst.reassign_hint = ReassignOrder::Random;
    else
      throw Error(ErrorCode::InvalidStream, "unknown reassign order \"" + r + "\"");
  }
  inst.stream.validate(inst.metric.size());
  return inst;
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::InvalidConfig, "cannot open instance file " + path);
  json j;
  in >> j;
  return instance_from_json(j);
}

inline void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::InvalidConfig, "cannot write instance file " + path);
  out << instance_to_json(inst).dump(2) << "\n";
}

inline const char* trace_kind_name(TraceRecord::Kind k) {
  switch (k) {
    case TraceRecord::Kind::Event: return "event";
    case TraceRecord::Kind::Flip: return "flip";
    case TraceRecord::Kind::Open: return "open";
    case TraceRecord::Kind::Connect: return "connect";
    case TraceRecord::Kind::Remove: return "remove";
    case TraceRecord::Kind::Close: return "close";
    case TraceRecord::Kind::Cascade: return "cascade";
    case TraceRecord::Kind::Restore: return "restore";
  }
  return "?";
}

// One JSON object per line.
inline void dump_trace(const Trace& trace, std::ostream& os) {
  for (const TraceRecord& r : trace.records()) {
    json j{{"kind", trace_kind_name(r.kind)}, {"event", r.event_index}};
    switch (r.kind) {
      case TraceRecord::Kind::Event:
        j["op"] = r.event_kind == Event::Kind::Insert ? "ins" : "del";
        j["id"] = r.client;
        if (r.event_kind == Event::Kind::Insert) j["at"] = r.location;
        break;
      case TraceRecord::Kind::Flip:
        j["client"] = r.client;
        j["p"] = r.p;
        j["heads"] = r.heads;
        break;
      case TraceRecord::Kind::Open:
        j["client"] = r.client;
        break;
      case TraceRecord::Kind::Connect:
        j["client"] = r.client;
        j["facility"] = r.facility;
        j["dist"] = r.dist;
        if (r.bucket >= 0) {
          j["bucket"] = r.bucket;
          j["tree_dist"] = r.tree_dist;
        }
        break;
      case TraceRecord::Kind::Remove:
        j["client"] = r.client;
        break;
      case TraceRecord::Kind::Close:
        j["facility"] = r.facility;
        break;
      case TraceRecord::Kind::Cascade:
        j["facility"] = r.facility;
        j["order"] = r.cascade_order;
        break;
      case TraceRecord::Kind::Restore:
        j["facility"] = r.facility;
        if (r.bucket >= 0) j["bucket"] = r.bucket;
        break;
    }
    os << j.dump() << "\n";
  }
}

inline json hst_to_json(const Hst& t) {
  json nodes = json::array();
  for (const auto& nd : t.nodes()) {
    json n{{"depth", nd.depth}, {"parent", nd.parent}};
    if (nd.point >= 0) n["point"] = nd.point;
    if (!nd.children.empty()) n["children"] = nd.children;
    nodes.push_back(std::move(n));
  }
  return json{{"depth", t.depth()}, {"points", t.size()}, {"nodes", std::move(nodes)}};
}

}  // namespace dynfl
